#pragma once

#include <stdexcept>
#include <string>

namespace circcal {

/// Broad failure classes. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kInvalidParameter,  // validation: bad argument, index out of range, bad config
  kNumeric,           // degenerate geometry, behind-camera, non-finite objective
  kIo,                // unreadable/unwritable files, malformed file contents
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error InvalidParameter(const std::string& what) { return {ErrorKind::kInvalidParameter, what}; }
inline Error NumericError(const std::string& what) { return {ErrorKind::kNumeric, what}; }
inline Error IoError(const std::string& what) { return {ErrorKind::kIo, what}; }

}  // namespace circcal
