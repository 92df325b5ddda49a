#pragma once

// Poincare-Lindstedt construction of doubly periodic standing waves of
//
//     phi_tt - phi_xx + m^2 phi + eps phi^3 = 0,   0 <= x <= 2 pi,
//
// in the rescaled time tau = omega t, with phi = phi_0 + eps phi_1 + ... and
// omega = omega_0 + eps omega_1 + ...  The resonant (m = 0) case uses
// omega_0 = 1 and phi_0 = sum_n a_n sin(n x) sin(n tau); the first-order
// equation is  D phi_1 = 2 omega_1 d^2_tau phi_0 + phi_0^3  with D as in
// series_core.hpp, so phi_1 exists as a doubly periodic function only if the
// diagonal (n, n) components of the right side vanish.  Those components are
// the resonance system solved here for (a, omega_1).
//
// The amplitude vector is truncated to N modes and only the resonance
// equations n = 1..N are imposed; components N < n <= 3N are reported as
// truncation diagnostics and dropped from phi_1.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "breatherlab/error.hpp"
#include "breatherlab/series_core.hpp"

namespace breatherlab::lindstedt {

struct LindstedtSolution {
  std::vector<SineSeries2D> orders;        // phi_0, phi_1, ...
  std::vector<double> omega_corrections;   // omega_1, omega_2, ...
  double epsilon = 0.0;
  double mass = 0.0;
  // Diagonal source components above the retained band, (n, value) pairs.
  // Not serialized.
  std::vector<std::pair<int, double>> truncation_residual;

  /// omega_0 read off phi_0: sqrt(k^2 + m^2) / l for its first nonzero
  /// coefficient (1 for diagonal phi_0 with m = 0), sqrt(1 + m^2) if phi_0 = 0.
  double base_frequency() const {
    if (!orders.empty()) {
      const auto& p0 = orders.front();
      for (int k = 1; k <= p0.kmax(); ++k)
        for (int l = 1; l <= p0.lmax(); ++l)
          if (p0(k, l) != 0.0)
            return std::sqrt(static_cast<double>(k) * k + mass * mass) / l;
    }
    return std::sqrt(1.0 + mass * mass);
  }

  double omega() const {
    double w = base_frequency();
    double e = 1.0;
    for (double wn : omega_corrections) {
      e *= epsilon;
      w += e * wn;
    }
    return w;
  }

  double period() const { return 2.0 * kPi / omega(); }

  /// sum_n eps^n phi_n on the smallest truncation holding every order.
  SineSeries2D combined() const {
    int kk = 1, ll = 1;
    for (const auto& s : orders) {
      kk = std::max(kk, s.kmax());
      ll = std::max(ll, s.lmax());
    }
    SineSeries2D sum(kk, ll);
    double e = 1.0;
    for (const auto& s : orders) {
      sum += e * s.resized(kk, ll);
      e *= epsilon;
    }
    return sum;
  }
};

struct Normalization {
  enum class Kind { fix_a1, fix_norm };
  Kind kind = Kind::fix_a1;
  double value = 1.0;

  static Normalization fix_a1(double v) { return {Kind::fix_a1, v}; }
  static Normalization fix_norm(double v) { return {Kind::fix_norm, v}; }
};

struct ResonanceProblem {
  int n_modes = 1;
  Normalization normalization = Normalization::fix_a1(1.0);
  double tol = 1e-12;
  int max_iterations = 100;
  int max_halvings = 30;

  void validate() const {
    if (n_modes < 1 || 3 * n_modes > kMaxSeriesIndex)
      throw DomainError("ResonanceProblem: n_modes must lie in [1, 170]");
    if (!(tol > 0.0)) throw DomainError("ResonanceProblem: tol must be > 0");
    if (normalization.kind == Normalization::Kind::fix_norm &&
        !(normalization.value >= 0.0))
      throw DomainError("ResonanceProblem: norm must be >= 0");
    if (max_iterations < 1) throw DomainError("ResonanceProblem: max_iterations < 1");
  }
};

struct ResonanceSolution {
  std::vector<double> a;
  double omega1 = 0.0;
  int iterations = 0;
  double residual_norm = 0.0;  // max-norm over retained equations
  // Diagonal source components n = N+1 .. 3N at the root.
  std::vector<std::pair<int, double>> truncation_residual;
};

namespace detail {

inline void require_diagonal(const SineSeries2D& phi0) {
  if (!phi0.is_diagonal())
    throw DomainError("first_order_rhs: phi0 must be diagonal-only");
}

// Source of the first-order equation for a general base frequency:
// 2 omega_0 omega_1 d^2_tau phi_0 + phi_0^3, truncated to 3x the input.
inline SineSeries2D first_order_source(const SineSeries2D& phi0, double omega0,
                                       double omega1) {
  SineSeries2D rhs = cube_project(phi0);
  for (int k = 1; k <= phi0.kmax(); ++k)
    for (int l = 1; l <= phi0.lmax(); ++l)
      rhs(k, l) += 2.0 * omega0 * omega1 * (-static_cast<double>(l) * l) * phi0(k, l);
  return rhs;
}

}  // namespace detail

/// 2 omega_1 d^2_tau phi_0 + phi_0^3 for a diagonal phi_0, on a 3x truncation.
inline SineSeries2D first_order_rhs(const SineSeries2D& phi0, double omega1) {
  detail::require_diagonal(phi0);
  return detail::first_order_source(phi0, 1.0, omega1);
}

/// Diagonal components (n, n), n = 1..3N, of first_order_rhs.
inline std::vector<double> resonance_residual(std::span<const double> a,
                                              double omega1) {
  if (a.empty()) return {};
  const int n = static_cast<int>(a.size());
  const auto rhs = first_order_rhs(SineSeries2D::diagonal(a), omega1);
  std::vector<double> out(static_cast<std::size_t>(3 * n));
  for (int i = 1; i <= 3 * n; ++i) out[static_cast<std::size_t>(i - 1)] = rhs.at(i, i);
  return out;
}

namespace detail {

// Retained resonance equations and their analytic Jacobian.
//   d r_n / d a_j     = -2 omega_1 n^2 delta_nj + 3 P_nn[phi_0^2 sin(jx) sin(j tau)]
//   d r_n / d omega_1 = -2 n^2 a_n
class ResonanceSystem {
 public:
  explicit ResonanceSystem(int n)
      : n_(n),
        sampler_(series_detail_points(n), series_detail_points(n)),
        basis_(static_cast<std::size_t>(n)) {
    for (int j = 1; j <= n; ++j) {
      SineSeries2D e(n, n);
      e(j, j) = 1.0;
      basis_[static_cast<std::size_t>(j - 1)] = sampler_.synthesize(e);
    }
  }

  int size() const { return n_; }

  Eigen::VectorXd residual(std::span<const double> a, double omega1) const {
    auto grid = sampler_.synthesize(SineSeries2D::diagonal(a, n_, n_));
    for (double& v : grid) v = v * v * v;
    const auto cube = sampler_.analyze(std::move(grid), n_, n_);
    Eigen::VectorXd r(n_);
    for (int i = 1; i <= n_; ++i)
      r(i - 1) = cube(i, i) - 2.0 * omega1 * i * i * a[static_cast<std::size_t>(i - 1)];
    return r;
  }

  // Columns 0..n-1: d/d a_j; column n: d/d omega_1.
  Eigen::MatrixXd jacobian(std::span<const double> a, double omega1) const {
    const auto phi = sampler_.synthesize(SineSeries2D::diagonal(a, n_, n_));
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n_, n_ + 1);
    std::vector<double> prod(phi.size());
    for (int j = 1; j <= n_; ++j) {
      const auto& e = basis_[static_cast<std::size_t>(j - 1)];
      for (std::size_t p = 0; p < phi.size(); ++p) prod[p] = 3.0 * phi[p] * phi[p] * e[p];
      const auto proj = sampler_.analyze(prod, n_, n_);
      for (int i = 1; i <= n_; ++i) jac(i - 1, j - 1) = proj(i, i);
      jac(j - 1, j - 1) -= 2.0 * omega1 * j * j;
    }
    for (int i = 1; i <= n_; ++i)
      jac(i - 1, n_) = -2.0 * i * i * a[static_cast<std::size_t>(i - 1)];
    return jac;
  }

 private:
  static int series_detail_points(int n) {
    return breatherlab::detail::alias_free_points(3 * n, n);
  }

  int n_;
  breatherlab::detail::SineSampler sampler_;
  std::vector<std::vector<double>> basis_;
};

}  // namespace detail

/// Damped Newton iteration on the retained resonance equations with the scale
/// fixed by `problem.normalization`.  Step lengths are halved until the
/// residual 2-norm decreases.
inline ResonanceSolution solve_resonance_system(
    const ResonanceProblem& problem, std::span<const double> a_guess,
    double omega1_guess) {
  problem.validate();
  const int n = problem.n_modes;
  if (static_cast<int>(a_guess.size()) != n)
    throw DimensionMismatchError("solve_resonance_system: guess has " +
                                 std::to_string(a_guess.size()) + " amplitudes, expected " +
                                 std::to_string(n));
  for (double v : a_guess)
    if (!std::isfinite(v)) throw DomainError("solve_resonance_system: non-finite guess");
  if (!std::isfinite(omega1_guess))
    throw DomainError("solve_resonance_system: non-finite guess");

  const bool pin_a1 = problem.normalization.kind == Normalization::Kind::fix_a1;
  const double target = problem.normalization.value;

  ResonanceSolution out;
  if (!pin_a1 && target == 0.0) {
    out.a.assign(static_cast<std::size_t>(n), 0.0);
    out.omega1 = omega1_guess;
    out.truncation_residual.clear();
    for (int i = n + 1; i <= 3 * n; ++i) out.truncation_residual.emplace_back(i, 0.0);
    return out;
  }

  const detail::ResonanceSystem system(n);
  std::vector<double> a(a_guess.begin(), a_guess.end());
  double omega1 = omega1_guess;
  if (pin_a1) a[0] = target;

  // Unknown vector z: pin_a1 -> (a_2..a_N, w1); fix_norm -> (a_1..a_N, w1).
  const int first = pin_a1 ? 1 : 0;
  const int nz = n - first + 1;

  auto unpack = [&](const Eigen::VectorXd& z, std::vector<double>& av, double& w) {
    for (int i = first; i < n; ++i) av[static_cast<std::size_t>(i)] = z(i - first);
    w = z(nz - 1);
  };
  auto equations = [&](const std::vector<double>& av, double w) {
    Eigen::VectorXd r = system.residual(av, w);
    if (pin_a1) return r;
    Eigen::VectorXd f(n + 1);
    f.head(n) = r;
    double s = 0.0;
    for (double v : av) s += v * v;
    f(n) = s - target * target;
    return f;
  };

  Eigen::VectorXd z(nz);
  for (int i = first; i < n; ++i) z(i - first) = a[static_cast<std::size_t>(i)];
  z(nz - 1) = omega1;

  Eigen::VectorXd f = equations(a, omega1);
  int it = 0;
  for (;; ++it) {
    if (f.lpNorm<Eigen::Infinity>() < problem.tol) break;
    if (it >= problem.max_iterations)
      throw NonConvergenceError("solve_resonance_system: no convergence after " +
                                std::to_string(problem.max_iterations) +
                                " iterations (residual " +
                                std::to_string(f.lpNorm<Eigen::Infinity>()) + ")");

    const Eigen::MatrixXd full = system.jacobian(a, omega1);
    Eigen::MatrixXd jac(nz, nz);
    if (pin_a1) {
      jac = full.rightCols(nz);
    } else {
      jac.topRows(n) = full;
      for (int j = 0; j < n; ++j) jac(n, j) = 2.0 * a[static_cast<std::size_t>(j)];
      jac(n, n) = 0.0;
    }
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
    if (lu.rank() < nz || lu.rcond() < 1e-14)
      throw SingularJacobianError("solve_resonance_system: singular Jacobian (rcond " +
                                  std::to_string(lu.rcond()) + ")");
    const Eigen::VectorXd step = lu.solve(f);

    const double norm0 = f.norm();
    double lambda = 1.0;
    bool accepted = false;
    for (int h = 0; h <= problem.max_halvings; ++h, lambda *= 0.5) {
      const Eigen::VectorXd trial = z - lambda * step;
      std::vector<double> at = a;
      double wt = omega1;
      unpack(trial, at, wt);
      Eigen::VectorXd ft = equations(at, wt);
      if (ft.allFinite() && ft.norm() < norm0) {
        z = trial;
        a = std::move(at);
        omega1 = wt;
        f = std::move(ft);
        accepted = true;
        break;
      }
    }
    if (!accepted)
      throw NonConvergenceError(
          "solve_resonance_system: line search stalled at residual " +
          std::to_string(f.lpNorm<Eigen::Infinity>()));
  }

  out.a = a;
  out.omega1 = omega1;
  out.iterations = it;
  out.residual_norm = system.residual(a, omega1).lpNorm<Eigen::Infinity>();
  const auto full = resonance_residual(a, omega1);
  for (int i = n + 1; i <= 3 * n; ++i)
    out.truncation_residual.emplace_back(i, full[static_cast<std::size_t>(i - 1)]);
  return out;
}

/// phi_0 from `a`, phi_1 = D^{-1}(first_order_rhs) and omega = 1 + eps omega_1.
/// Diagonal sources n <= N must be below tol; those above the band are
/// recorded in `truncation_residual` and dropped.
inline LindstedtSolution build_solution(std::span<const double> a, double omega1,
                                        double epsilon, double tol) {
  if (a.empty()) throw DomainError("build_solution: empty amplitude vector");
  if (!std::isfinite(epsilon) || !std::isfinite(omega1))
    throw DomainError("build_solution: non-finite epsilon or omega1");
  const int n = static_cast<int>(a.size());
  const auto phi0 = SineSeries2D::diagonal(a);
  auto rhs = first_order_rhs(phi0, omega1);

  LindstedtSolution sol;
  for (int i = 1; i <= n; ++i) {
    if (std::abs(rhs(i, i)) > tol)
      throw ResonantSourceError("build_solution: resonance equation " + std::to_string(i) +
                                " not satisfied (residual " +
                                std::to_string(std::abs(rhs(i, i))) + ")");
    rhs(i, i) = 0.0;
  }
  for (int i = n + 1; i <= std::min(rhs.kmax(), rhs.lmax()); ++i) {
    sol.truncation_residual.emplace_back(i, rhs(i, i));
    rhs(i, i) = 0.0;
  }
  sol.orders = {phi0, invert_dalembert(rhs, tol)};
  sol.omega_corrections = {omega1};
  sol.epsilon = epsilon;
  sol.mass = 0.0;
  if (!(sol.omega() > 0.0))
    throw DomainError("build_solution: omega = 1 + eps omega_1 must be positive");
  return sol;
}

/// Massive (non-resonant) first-order solution seeded by the single mode
/// phi_0 = A sin(k0 x) sin(tau), omega_0 = sqrt(k0^2 + m^2).  The only secular
/// component is (k0, 1), which fixes omega_1 = 9 A^2 / (32 omega_0); every
/// other mode is divided by omega_0^2 l^2 - k^2 - m^2.
inline LindstedtSolution build_nonresonant_solution(double amplitude, double mass,
                                                    double epsilon, int harmonic = 1,
                                                    double divisor_floor = 1e-8) {
  if (!(mass > 0.0)) throw DomainError("build_nonresonant_solution: mass must be > 0");
  if (harmonic < 1 || 3 * harmonic > kMaxSeriesIndex)
    throw DomainError("build_nonresonant_solution: harmonic out of range");
  if (!std::isfinite(amplitude) || !std::isfinite(epsilon))
    throw DomainError("build_nonresonant_solution: non-finite input");

  const double omega0 = std::sqrt(static_cast<double>(harmonic) * harmonic + mass * mass);
  const double omega1 = 9.0 * amplitude * amplitude / (32.0 * omega0);
  SineSeries2D phi0(harmonic, 1);
  phi0(harmonic, 1) = amplitude;
  const auto rhs = detail::first_order_source(phi0, omega0, omega1);

  SineSeries2D phi1(rhs.kmax(), rhs.lmax());
  for (int k = 1; k <= rhs.kmax(); ++k) {
    for (int l = 1; l <= rhs.lmax(); ++l) {
      if (k == harmonic && l == 1) continue;  // eliminated by omega_1
      const double src = rhs(k, l);
      if (src == 0.0) continue;
      const double den = omega0 * omega0 * l * l - static_cast<double>(k) * k - mass * mass;
      if (std::abs(den) < divisor_floor)
        throw SmallDivisorError("build_nonresonant_solution: divisor " + std::to_string(den) +
                                " at mode (" + std::to_string(k) + "," + std::to_string(l) +
                                ")");
      phi1(k, l) = src / den;
    }
  }

  LindstedtSolution sol;
  sol.orders = {phi0, phi1};
  sol.omega_corrections = {omega1};
  sol.epsilon = epsilon;
  sol.mass = mass;
  if (!(sol.omega() > 0.0)) throw DomainError("build_nonresonant_solution: omega <= 0");
  return sol;
}

/// Uniform grid of n points on [0, length).
inline std::vector<double> uniform_grid(int n, double length) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = length * i / n;
  return g;
}

/// max over a grid_n x grid_n grid on [0, 2pi) x [0, T) of
/// |phi_tt - phi_xx + m^2 phi + eps phi^3|, derivatives taken mode-wise.
inline double pde_residual(const LindstedtSolution& sol, int grid_n) {
  if (grid_n < 16) throw DomainError("pde_residual: grid_n must be >= 16");
  const double w = sol.omega();
  const auto total = sol.combined();
  const auto xs = uniform_grid(grid_n, 2.0 * kPi);
  auto taus = uniform_grid(grid_n, 2.0 * kPi / w);
  for (double& t : taus) t *= w;

  const Eigen::MatrixXd phi = eval_grid(total, xs, taus);
  const Eigen::MatrixXd phi_tt =
      eval_grid(total, xs, taus, [w](int, int l) { return -w * w * l * l; });
  const Eigen::MatrixXd phi_xx =
      eval_grid(total, xs, taus, [](int k, int) { return -static_cast<double>(k) * k; });
  const double m2 = sol.mass * sol.mass;
  const Eigen::MatrixXd r =
      phi_tt - phi_xx + m2 * phi + sol.epsilon * phi.array().cube().matrix();
  return r.lpNorm<Eigen::Infinity>();
}

/// (phi, phi_t) of the assembled solution at physical time t.
inline std::pair<std::vector<double>, std::vector<double>> sample(
    const LindstedtSolution& sol, std::span<const double> xs, double t) {
  const double w = sol.omega();
  const auto total = sol.combined();
  const double tau[1] = {w * t};
  const Eigen::MatrixXd phi = eval_grid(total, xs, tau);
  std::vector<double> p(xs.size()), pt(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    p[i] = phi(static_cast<Eigen::Index>(i), 0);
    double acc = 0.0;
    for (int k = 1; k <= total.kmax(); ++k) {
      double row = 0.0;
      for (int l = 1; l <= total.lmax(); ++l)
        row += total(k, l) * l * w * std::cos(l * w * t);
      acc += std::sin(k * xs[i]) * row;
    }
    pt[i] = acc;
  }
  return {std::move(p), std::move(pt)};
}

inline void to_json(nlohmann::json& j, const LindstedtSolution& s) {
  j = nlohmann::json{{"epsilon", s.epsilon},
                     {"mass", s.mass},
                     {"omega", s.omega_corrections},
                     {"orders", s.orders}};
}

inline void from_json(const nlohmann::json& j, LindstedtSolution& s) {
  s = LindstedtSolution{};
  s.epsilon = j.at("epsilon").get<double>();
  s.mass = j.at("mass").get<double>();
  s.omega_corrections = j.at("omega").get<std::vector<double>>();
  s.orders = j.at("orders").get<std::vector<SineSeries2D>>();
  if (s.orders.empty()) throw DomainError("LindstedtSolution: no orders");
  if (!(s.mass >= 0.0)) throw DomainError("LindstedtSolution: mass must be >= 0");
  if (!(s.omega() > 0.0)) throw DomainError("LindstedtSolution: omega must be > 0");
}

}  // namespace breatherlab::lindstedt
