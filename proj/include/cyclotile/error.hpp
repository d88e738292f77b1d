#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cyclotile {

enum class ErrorCode {
  invalid_argument,
  modulus_mismatch,
  not_a_divisor,
  not_a_set,
  zero_multiset,
  cardinality_mismatch,
  precondition_failed,
  not_a_tiling,
  decomposition_failed,
  cap_exceeded,
  parse_error,
  io_error,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::modulus_mismatch: return "modulus_mismatch";
    case ErrorCode::not_a_divisor: return "not_a_divisor";
    case ErrorCode::not_a_set: return "not_a_set";
    case ErrorCode::zero_multiset: return "zero_multiset";
    case ErrorCode::cardinality_mismatch: return "cardinality_mismatch";
    case ErrorCode::precondition_failed: return "precondition_failed";
    case ErrorCode::not_a_tiling: return "not_a_tiling";
    case ErrorCode::decomposition_failed: return "decomposition_failed";
    case ErrorCode::cap_exceeded: return "cap_exceeded";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::io_error: return "io_error";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw Error(code, what);
}

}  // namespace cyclotile
