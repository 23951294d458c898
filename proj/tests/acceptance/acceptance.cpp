#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "linbc/ellipticity.hpp"
#include "linbc/gauge.hpp"
#include "linbc/linearise.hpp"
#include "linbc/spectral.hpp"

using namespace linbc;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

GeometrySpec box() { return make_flat_torus_product(1.0, {kTwoPi, kTwoPi, kTwoPi}); }

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Detail {
 public:
  Detail() { s_.precision(8); }
  template <typename T>
  Detail& operator<<(const T& v) {
    s_ << v;
    return *this;
  }
  std::string str() const { return s_.str(); }

 private:
  std::ostringstream s_;
};

double rate(double coarse, double fine) { return std::log2(coarse / fine); }

bool near(double value, double target, double tol) { return std::abs(value - target) <= tol; }

Mat3 random_symmetric(std::mt19937_64& rng, double scale) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Mat3 s;
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) s(i, j) = s(j, i) = u(rng);
  }
  return s;
}

Vec3 random_direction(std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  return Vec3(n(rng), n(rng), n(rng)).normalized();
}

Outcome sl_ellipticity() {
  Outcome o;
  const SLVerdict a = sl_check(1.0, Mat3::Zero());
  const SLVerdict z = sl_check(0.0, Mat3::Zero());
  o.pass = a.elliptic && a.margin == 2.0 && !z.elliptic;

  std::mt19937_64 rng(1001);
  int disagreements = 0, non_elliptic = 0;
  for (int t = 0; t < 1000; ++t) {
    ConformalCoefficients co;
    co.c2 = std::uniform_real_distribution<double>(-1.0, 1.0)(rng);
    co.s = random_symmetric(rng, 1.5);
    const SLVerdict v = sl_check(co.c2, co.s);
    non_elliptic += v.elliptic ? 0 : 1;
    const BoundaryConditionSpec spec = BoundaryConditionSpec::general(co);
    bool trivial = true;
    for (int d = 0; d < 50; ++d) {
      trivial = trivial && half_space_kernel(spec, random_direction(rng)).dimension == 0;
    }
    if (v.witness) trivial = trivial && half_space_kernel(spec, *v.witness).dimension == 0;
    if (trivial != v.elliptic) ++disagreements;
  }
  o.pass = o.pass && disagreements == 0;
  o.detail = (Detail() << "margin(1,0)=" << a.margin << " elliptic(0,0)=" << z.elliptic
                       << " disagreements=" << disagreements << "/1000 (non-elliptic "
                       << non_elliptic << ")")
                 .str();
  return o;
}

Outcome half_space() {
  Outcome o;
  std::mt19937_64 rng(1002);
  double worst = 0.0;
  int bad_dim = 0, anderson_dim = 0;
  for (int t = 0; t < 20; ++t) {
    const Vec3 xi = (0.5 + t * 0.2) * random_direction(rng);
    const Vec3 dir = xi.normalized();
    const HalfSpaceKernel k = half_space_kernel(BoundaryConditionSpec::general({}), xi);
    anderson_dim += half_space_kernel(BoundaryConditionSpec::anderson(), xi).dimension;
    if (k.dimension != 1) {
      ++bad_dim;
      continue;
    }
    Eigen::Matrix<cplx, 10, 1> c = k.basis[0];
    c /= (c[k11] + c[k22] + c[k33]);
    Eigen::Matrix<cplx, 10, 1> want = Eigen::Matrix<cplx, 10, 1>::Zero();
    want[kSS] = -1.0 / 3.0;
    for (int i = 0; i < 3; ++i) want[s_component(i)] = kI * dir[i] / 3.0;
    want[k11] = want[k22] = want[k33] = 1.0 / 3.0;
    worst = std::max(worst, (c - want).norm());
  }
  o.pass = bad_dim == 0 && anderson_dim == 0 && worst <= 1e-10;
  o.detail = (Detail() << "degenerate dim!=1: " << bad_dim << "/20, basis error " << worst
                       << ", anderson total dim " << anderson_dim)
                 .str();
  return o;
}

Outcome anderson_kernel() {
  Outcome o;
  const GeometrySpec g = box();
  const KernelReport r =
      kernel_report(g, BoundaryConditionSpec::anderson(), mode_box(2), 201, 10, 1);
  double angle = 1.0;
  bool converged = true;
  for (const SpectralResult& s : r.results) {
    converged = converged && s.converged;
    if (s.mode.n == std::array<int, 3>{0, 0, 0}) {
      angle = subspace_distance(s.kernel_basis, analytic_zero_modes(Grid1D(1.0, 201)));
    }
  }
  const bool only_zero =
      r.kernel_modes.size() == 1 && r.kernel_modes[0] == std::array<int, 3>{0, 0, 0};
  o.pass = r.total_kernel_dim == 5 && only_zero && angle <= 1e-8 && converged;
  o.detail = (Detail() << "modes " << r.results.size() << ", kernel dim " << r.total_kernel_dim
                       << (only_zero ? " (n=0 only)" : " (not only n=0)") << ", angle " << angle
                       << ", converged " << converged)
                 .str();
  return o;
}

Outcome dirichlet_gap() {
  Outcome o;
  const GeometrySpec g = box();
  const double target = std::pow(std::numbers::pi / 2.0, 2);
  const KernelReport r =
      kernel_report(g, BoundaryConditionSpec::dirichlet(), mode_box(2), 201, 10, 1);
  std::vector<double> errs;
  for (int M : {101, 201, 401}) {
    const ModeOperator op = assemble_mode_operator(g, BoundaryConditionSpec::dirichlet(),
                                                   make_mode(g, {0, 0, 0}), Grid1D(1.0, M));
    const SpectralResult s = mode_spectrum(op, 12);
    errs.push_back(std::abs(std::abs(s.eigenvalues.front()) - target));
  }
  const double r1 = rate(errs[0], errs[1]), r2 = rate(errs[1], errs[2]);
  o.pass = r.total_kernel_dim == 0 && near(r.gap, target, 0.01 * target) && near(r1, 2.0, 0.2) &&
           near(r2, 2.0, 0.2);
  o.detail = (Detail() << "kernel dim " << r.total_kernel_dim << ", gap " << r.gap << " (target "
                       << target << "), rates " << r1 << ", " << r2)
                 .str();
  return o;
}

Outcome gauge_invariance() {
  Outcome o;
  const GeometrySpec g = box();
  std::mt19937_64 rng(1005);
  std::vector<BoundaryConditionSpec> specs;
  for (int k = 0; k < 200; ++k) specs.push_back(random_general_spec(g, rng));
  std::uniform_int_distribution<int> n(-2, 2);
  std::vector<std::array<int, 3>> modes;
  std::vector<unsigned long long> seeds;
  for (int f = 0; f < 20; ++f) {
    modes.push_back({n(rng), n(rng), n(rng)});
    seeds.push_back(rng());
  }
  std::vector<double> worst;
  for (int M : {100, 200, 400}) {
    const Grid1D grid(1.0, M);
    double w = 0.0;
    for (int f = 0; f < 20; ++f) {
      std::mt19937_64 local(seeds[f]);
      const GaugeField field = random_collar_field(make_mode(g, modes[f]), g, grid, local);
      for (const BoundaryConditionSpec& spec : specs) {
        w = std::max(w, gauge_invariance_residual(field, spec, g, grid));
      }
    }
    worst.push_back(w);
  }
  const double r1 = rate(worst[0], worst[1]), r2 = rate(worst[1], worst[2]);

  double quartic_d = 0.0, quartic_a = 0.0;
  for (int M : {100, 200, 400}) {
    const Grid1D grid(1.0, M);
    const GaugeField q = make_quartic_gauge_field(make_mode(g, {0, 0, 0}), grid);
    quartic_d = std::max(
        quartic_d,
        std::abs(gauge_invariance_residual(q, BoundaryConditionSpec::anderson(), g, grid) - 16.0));
    const Eq2Report eq2 = eq2_check(q, g, grid);
    for (int side = 0; side < 2; ++side) {
      quartic_a = std::max(quartic_a, std::abs(std::abs(eq2.res_a[side]) - 4.0));
    }
  }
  o.pass = worst[2] <= 1e-6 && near(r1, 2.0, 0.2) && near(r2, 2.0, 0.2) && quartic_d <= 1e-6 &&
           quartic_a <= 1e-6;
  o.detail = (Detail() << "max residual M=400 " << worst[2] << ", rates " << r1 << ", " << r2
                       << ", quartic |(d)-16| " << quartic_d << ", |(a)-4| " << quartic_a)
                 .str();
  return o;
}

Outcome linearisation() {
  Outcome o;
  const GeometrySpec g =
      make_warped_torus_product(1.0, {1.0, 1.0, 1.0}, warp_preset("quad01"));
  const Perturbation h = Perturbation::from_blocks(1.0, Vec3::Zero(), Mat3::Zero());
  const std::vector<double> lambdas{1e-2, 1e-3, 1e-4};
  const LinearisationReport full = fd_linearisation_check(g, h, 1.0, lambdas);
  const LinearisationReport dropped = fd_linearisation_check(g, h, 1.0, lambdas, false);
  o.pass = near(full.richardson_limit, 3.0 / 11.0, 1e-6) && full.discrepancy <= 1e-6 &&
           near(dropped.discrepancy, 3.0 / 11.0, 1e-4);
  o.detail = (Detail() << "richardson " << full.richardson_limit << ", formula "
                       << full.formula_value << ", discrepancy " << full.discrepancy
                       << ", dropped-term discrepancy " << dropped.discrepancy)
                 .str();
  return o;
}

Outcome operator_identities() {
  Outcome o;
  const GeometrySpec g = box();
  std::mt19937_64 rng(1007);
  std::uniform_int_distribution<int> n(-2, 2);
  std::vector<ModeIndex> modes;
  std::vector<unsigned long long> seeds;
  for (int k = 0; k < 50; ++k) {
    modes.push_back(make_mode(g, {n(rng), n(rng), n(rng)}));
    seeds.push_back(rng());
  }
  std::vector<double> delta_k, k_d1, defect;
  double involution = 0.0;
  for (int M : {101, 201, 401}) {
    const Grid1D grid(1.0, M);
    double dk = 0.0, kd = 0.0;
    for (std::size_t k = 0; k < modes.size(); ++k) {
      std::mt19937_64 local(seeds[k]);
      const ModeTensor1 omega = random_smooth_covector(grid, local);
      const IntertwiningErrors e = intertwining_errors(omega, modes[k], grid, g);
      dk = std::max(dk, e.delta_k);
      kd = std::max(kd, e.k_d1);
      const ModeTensor2 u = gauge_potential(omega, modes[k], grid);
      involution = std::max(involution, (trace_reverse(trace_reverse(u)) - u).max_abs() /
                                            std::max(1.0, u.max_abs()));
    }
    delta_k.push_back(dk);
    k_d1.push_back(kd);
    const ModeOperator op = assemble_mode_operator(g, BoundaryConditionSpec::anderson(),
                                                   make_mode(g, {1, 0, 0}), grid);
    defect.push_back(symmetry_defect(op, g, constrained_samples(op, 6, 1007)));
  }
  const double dk1 = rate(delta_k[0], delta_k[1]), dk2 = rate(delta_k[1], delta_k[2]);
  const double kd1 = rate(k_d1[0], k_d1[1]), kd2 = rate(k_d1[1], k_d1[2]);
  const double df1 = rate(defect[0], defect[1]), df2 = rate(defect[1], defect[2]);
  const double k_d1_max = *std::max_element(k_d1.begin(), k_d1.end());
  o.pass = near(dk1, 2.0, 0.2) && near(dk2, 2.0, 0.2) && near(kd1, 2.0, 0.2) &&
           near(kd2, 2.0, 0.2) && involution <= 1e-14 && near(df1, 1.0, 0.2) &&
           near(df2, 1.0, 0.2);
  o.detail = (Detail() << "delta_K rates " << dk1 << ", " << dk2 << "; K_D1 rates " << kd1 << ", "
                       << kd2 << " (max error " << k_d1_max << "); involution " << involution
                       << "; defect ratios " << std::exp2(df1) << ", " << std::exp2(df2))
                 .str();
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "SL ellipticity", 5.0, sl_ellipticity},
      {2, "half-space kernel", 1.0, half_space},
      {3, "Anderson kernel on the torus", 120.0, anderson_kernel},
      {4, "Dirichlet gap", 120.0, dirichlet_gap},
      {5, "gauge invariance", 60.0, gauge_invariance},
      {6, "linearised mean curvature", 1.0, linearisation},
      {7, "operator identities", 30.0, operator_identities},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("criterion %d %s  %s: %s; %.2f s (budget %.0f s)\n", c.id, pass ? "PASS" : "FAIL",
                c.name, o.detail.c_str(), secs, c.budget);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
