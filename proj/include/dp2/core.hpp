#pragma once

// Shared vocabulary: error codes, the system constants and pointwise field values.

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dp2 {

enum class Errc {
  InvalidArgument,
  NonPositiveA0,
  StepCollapse,
  UnsupportedKappa,
  NoTouchdown,
  OutsideInterior,
  InvalidBranch,
  BeyondBlowup,
  HorizonExceeded,
  WrongBranch,
  InsufficientGrids,
  EmptyHistory,
  NonFinite,
};

inline constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::NonPositiveA0: return "NonPositiveA0";
    case Errc::StepCollapse: return "StepCollapse";
    case Errc::UnsupportedKappa: return "UnsupportedKappa";
    case Errc::NoTouchdown: return "NoTouchdown";
    case Errc::OutsideInterior: return "OutsideInterior";
    case Errc::InvalidBranch: return "InvalidBranch";
    case Errc::BeyondBlowup: return "BeyondBlowup";
    case Errc::HorizonExceeded: return "HorizonExceeded";
    case Errc::WrongBranch: return "WrongBranch";
    case Errc::InsufficientGrids: return "InsufficientGrids";
    case Errc::EmptyHistory: return "EmptyHistory";
    case Errc::NonFinite: return "NonFinite";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code and, for validation failures,
/// the name of the offending parameter.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string key, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        key_(std::move(key)) {}

  Errc code() const noexcept { return code_; }
  const std::string& key() const noexcept { return key_; }

  /// Validation problems as opposed to numerical breakdown.
  bool is_validation() const noexcept {
    return code_ != Errc::StepCollapse && code_ != Errc::NonFinite;
  }

 private:
  Errc code_;
  std::string key_;
};

namespace detail {

inline void require(bool ok, Errc code, std::string_view key, const std::string& what) {
  if (!ok) throw Error(code, std::string(key), what);
}

inline void require_finite(double v, std::string_view key) {
  require(std::isfinite(v), Errc::InvalidArgument, key, std::string(key) + " must be finite");
}

}  // namespace detail

/// Constants k1, k2, k3 of the two-component system
///   rho_t + k2 u rho_x + (k1 + k2) rho u_x = 0
///   u_t - u_xxt + 4 u u_x - 3 u_x u_xx - u u_xxx + k3 rho rho_x = 0.
struct SystemParams {
  double k1 = 1.0;
  double k2 = 1.0;
  double k3 = 1.0;

  /// Emden exponent of the self-similar reduction.
  constexpr double kappa() const noexcept { return k1 / 2.0 + k2 - 1.0; }

  void validate() const {
    detail::require_finite(k1, "k1");
    detail::require_finite(k2, "k2");
    detail::require_finite(k3, "k3");
    detail::require(k2 > 0.0, Errc::InvalidArgument, "k2", "k2 must be positive");
  }
};

struct FieldValue {
  double rho = 0.0;
  double u = 0.0;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  constexpr double width() const noexcept { return hi - lo; }
  constexpr bool contains(double x) const noexcept { return lo <= x && x <= hi; }
};

}  // namespace dp2
