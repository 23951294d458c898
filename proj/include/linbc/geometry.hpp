#pragma once

#include <array>
#include <functional>
#include <string>

#include "linbc/types.hpp"

namespace linbc {

enum class GeometryKind { FlatTorusProduct, WarpedTorusProduct };

/// Scalar warp a(s) of the slice metric gamma_s = a(s)^2 * delta, with its
/// derivative supplied in closed form.
struct WarpProfile {
  std::string name;
  std::function<double(double)> value;
  std::function<double(double)> derivative;
};

/// Named presets: "flat" (a = 1), "exp" (a = e^{-s}), "quad01" (a = 1 + 0.1 s^2).
WarpProfile warp_preset(const std::string& name);

/// Background Omega = [-T, T] x T^3 with metric ds^2 + a(s)^2 delta.
/// Immutable once built; use the make_* factories.
class GeometrySpec {
 public:
  GeometryKind kind() const { return kind_; }
  bool is_flat() const { return kind_ == GeometryKind::FlatTorusProduct; }
  double half_width() const { return half_width_; }
  const std::array<double, 3>& periods() const { return periods_; }
  const WarpProfile& warp() const { return warp_; }
  double cosmological_constant() const { return cosmological_constant_; }
  double torus_volume() const { return periods_[0] * periods_[1] * periods_[2]; }

 private:
  friend GeometrySpec make_flat_torus_product(double, const std::array<double, 3>&);
  friend GeometrySpec make_warped_torus_product(double, const std::array<double, 3>&,
                                                WarpProfile);
  GeometrySpec(GeometryKind kind, double half_width, std::array<double, 3> periods,
               WarpProfile warp);

  GeometryKind kind_;
  double half_width_;
  std::array<double, 3> periods_;
  WarpProfile warp_;
  double cosmological_constant_ = 0.0;
};

GeometrySpec make_flat_torus_product(double half_width, const std::array<double, 3>& periods);

/// Throws InvalidParameterError unless a(s) > 0 on [-T, T].
GeometrySpec make_warped_torus_product(double half_width, const std::array<double, 3>& periods,
                                       WarpProfile warp);

/// Slice metric, second fundamental form k = -(1/2) d_s gamma_s and its trace.
struct SliceData {
  double s = 0.0;
  Mat3 gamma = Mat3::Identity();
  Mat3 k = Mat3::Zero();
  double trace_k = 0.0;
};

SliceData slice_data(const GeometrySpec& geom, double s);

/// Smallest nonzero |xi| over the dual lattice of the torus.
double min_nonzero_frequency(const GeometrySpec& geom);

}  // namespace linbc
