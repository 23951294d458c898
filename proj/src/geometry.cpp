#include "linbc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace linbc {

WarpProfile warp_preset(const std::string& name) {
  if (name == "flat") {
    return {name, [](double) { return 1.0; }, [](double) { return 0.0; }};
  }
  if (name == "exp") {
    return {name, [](double s) { return std::exp(-s); }, [](double s) { return -std::exp(-s); }};
  }
  if (name == "quad01") {
    return {name, [](double s) { return 1.0 + 0.1 * s * s; }, [](double s) { return 0.2 * s; }};
  }
  throw InvalidParameterError("unknown warp preset '" + name + "'");
}

GeometrySpec::GeometrySpec(GeometryKind kind, double half_width, std::array<double, 3> periods,
                           WarpProfile warp)
    : kind_(kind), half_width_(half_width), periods_(periods), warp_(std::move(warp)) {}

namespace {

void check_box(double half_width, const std::array<double, 3>& periods) {
  if (!(half_width > 0.0) || !std::isfinite(half_width)) {
    throw InvalidParameterError("half-width T must be positive");
  }
  for (double period : periods) {
    if (!(period > 0.0) || !std::isfinite(period)) {
      throw InvalidParameterError("torus periods must be positive");
    }
  }
}

}  // namespace

GeometrySpec make_flat_torus_product(double half_width, const std::array<double, 3>& periods) {
  check_box(half_width, periods);
  return GeometrySpec(GeometryKind::FlatTorusProduct, half_width, periods, warp_preset("flat"));
}

GeometrySpec make_warped_torus_product(double half_width, const std::array<double, 3>& periods,
                                       WarpProfile warp) {
  check_box(half_width, periods);
  if (!warp.value || !warp.derivative) {
    throw InvalidParameterError("warp profile needs both a(s) and a'(s)");
  }
  // Positivity is checked on a fine sample of [-T, T].
  constexpr int kSamples = 1024;
  for (int j = 0; j <= kSamples; ++j) {
    const double s = -half_width + 2.0 * half_width * j / kSamples;
    if (!(warp.value(s) > 0.0)) {
      throw InvalidParameterError("warp a(s) must be positive on [-T, T]");
    }
  }
  return GeometrySpec(GeometryKind::WarpedTorusProduct, half_width, periods, std::move(warp));
}

SliceData slice_data(const GeometrySpec& geom, double s) {
  const double T = geom.half_width();
  if (!(std::abs(s) <= T * (1.0 + 1e-12))) {
    throw DomainError("slice_data: s outside [-T, T]");
  }
  const double a = geom.warp().value(s);
  const double da = geom.warp().derivative(s);
  SliceData out;
  out.s = s;
  out.gamma = a * a * Mat3::Identity();
  out.k = -a * da * Mat3::Identity();
  out.trace_k = -3.0 * da / a;
  return out;
}

double min_nonzero_frequency(const GeometrySpec& geom) {
  const auto& L = geom.periods();
  return 2.0 * std::numbers::pi / std::max({L[0], L[1], L[2]});
}

}  // namespace linbc
