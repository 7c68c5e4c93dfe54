#pragma once

#include <stdexcept>
#include <string>

namespace premir {

// Error taxonomy maps onto the CLI exit codes: validation 1, I/O 2, internal 3.

/// Bad user input: malformed files, out-of-range options, incompatible data.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Filesystem trouble: missing paths, unreadable or unwritable files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// A broken internal invariant (a bug, not a user mistake).
class InternalError : public std::logic_error {
 public:
  explicit InternalError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace premir
