#pragma once

#include <stdexcept>
#include <string>

namespace lidkit {

enum class ErrorKind {
  kSpec,        // invalid manifold / config specification
  kDomain,      // argument outside the mathematical domain (e.g. sigma <= 0)
  kShape,       // dimension mismatch
  kCapability,  // score field lacks a required evaluation mode
  kParam,       // invalid estimator parameter
  kDegenerate,  // neighborhood or spectrum carries no information
  kDiverged,    // training blew up
  kIo,          // file read/write or format error
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace lidkit
