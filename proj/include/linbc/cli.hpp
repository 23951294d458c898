#pragma once

// Command-line front end. Subcommands: sl-check, sl-scan, spectrum,
// gauge-check, linearise-check, intertwine-check.
//
// Exit codes: 0 pass, 1 property violated, 2 config error, 3 invalid or
// degenerate boundary spec.

#include <array>
#include <iosfwd>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "linbc/boundary.hpp"

namespace linbc::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitViolated = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitDegenerate = 3;

inline constexpr int kMaxGrid = 2000;
inline constexpr int kMaxModeCutoff = 8;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GeometryConfig {
  std::string kind = "flat";  // flat | warped
  double T = 1.0;
  std::array<double, 3> L{2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi};
  std::string warp = "flat";
};

struct BoundaryConfig {
  std::string kind = "anderson";  // dirichlet | anderson | general
  ConformalCoefficients lower;
  ConformalCoefficients upper;
};

struct NumericsConfig {
  int grid = 201;
  int modes = 0;
  int count = 10;
  int jobs = 1;
  double kernel_tolerance = 1e-8;
  double gauge_tolerance = 1e-6;
  double linearise_tolerance = 1e-6;
  double rate_tolerance = 0.2;
  unsigned long long seed = 12345;
};

struct OutputConfig {
  std::string directory = ".";
  bool csv = true;
  bool json = true;
  bool plot = false;
};

struct RunConfig {
  GeometryConfig geometry;
  BoundaryConfig boundary;
  NumericsConfig numerics;
  OutputConfig output;

  /// Throws ConfigError on out-of-range values.
  void validate() const;
  GeometrySpec geometry_spec() const;
  /// Builds the spec; InvalidSpecError surfaces only when it is used.
  BoundaryConditionSpec boundary_spec() const;
};

/// INI file with sections [geometry], [boundary], [numerics], [output]. Missing
/// keys keep their defaults. Throws ConfigError.
RunConfig load_config(const std::string& path);

/// Reads only the [boundary] section of an INI file.
BoundaryConfig load_boundary_file(const std::string& path);

/// Comma or whitespace separated reals. Throws ConfigError.
std::vector<double> parse_reals(const std::string& text);

/// "zero" or 6 reals in the order 11, 22, 33, 12, 13, 23.
Mat3 parse_symmetric(const std::string& text);

/// dirichlet | anderson | general:<file>.
BoundaryConfig parse_bc_argument(const std::string& text);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace linbc::cli
