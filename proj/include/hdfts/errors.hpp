#pragma once

#include <stdexcept>
#include <string>

namespace hdfts {

enum class errc {
  invalid_domain,
  degenerate_triangle,
  out_of_domain,
  out_of_triangle,
  unsupported_smoothness,
  grid_mismatch,
  insufficient_data,
  invalid_config,
  inconsistent_config,
  numeric_error,
  io_error,
};

/// Library error carrying a machine-readable code alongside the message.
class error : public std::runtime_error {
 public:
  error(errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

inline const char* errc_name(errc c) {
  switch (c) {
    case errc::invalid_domain: return "invalid_domain";
    case errc::degenerate_triangle: return "degenerate_triangle";
    case errc::out_of_domain: return "out_of_domain";
    case errc::out_of_triangle: return "out_of_triangle";
    case errc::unsupported_smoothness: return "unsupported_smoothness";
    case errc::grid_mismatch: return "grid_mismatch";
    case errc::insufficient_data: return "insufficient_data";
    case errc::invalid_config: return "invalid_config";
    case errc::inconsistent_config: return "inconsistent_config";
    case errc::numeric_error: return "numeric_error";
    case errc::io_error: return "io_error";
  }
  return "unknown";
}

}  // namespace hdfts
