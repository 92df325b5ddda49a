#pragma once

// Fluctuations about a classical background.  Writing the field as
// phi = g v + u, the term of the Hamiltonian linear in u vanishes exactly when
// v solves the background equation
//
//     v_tt - v_xx + m^2 v + W = 0,      W = eps v^3  (point-dimer limit).
//
// Coupling bookkeeping: the physical field g v carries the self-coupling
// eps / g^2, so the equation for v carries eps itself (eps g^2 = 1 in units
// where eps = 1).  The classical energy H_{-2} is the energy of g v divided by
// g^2.  The quadratic part gives the linearization
//
//     u_tt = u_xx - m^2 u - 3 eps v(x, t)^2 u,
//
// a time-periodic linear Hamiltonian system.  Its monodromy over one
// background period is computed by Galerkin projection onto n spatial modes,
// and the translation zero modes d_x v, d_t v are checked by evolving them
// with the full grid linearization.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <thread>
#include <variant>
#include <vector>

#include "breatherlab/dynamics.hpp"
#include "breatherlab/elliptic.hpp"
#include "breatherlab/error.hpp"
#include "breatherlab/lindstedt.hpp"
#include "breatherlab/series_core.hpp"

namespace breatherlab::fluctuation {

using dynamics::Boundary;
using elliptic::TravelingWaveProfile;
using lindstedt::LindstedtSolution;

struct BackgroundSample {
  std::vector<double> v, v_t, v_tt, v_x, v_xx, v_xt;
};

class Background {
 public:
  using Source = std::variant<LindstedtSolution, TravelingWaveProfile>;

  /// Period defaults to 2 pi / omega.
  static Background from_lindstedt(LindstedtSolution sol, double coupling = 1.0,
                                   std::optional<double> period = std::nullopt) {
    const double t = period.value_or(sol.period());
    return Background(Source(std::move(sol)), coupling, t);
  }

  /// Period defaults to 2 pi / (n |v|).
  static Background from_twave(TravelingWaveProfile p, double coupling = 1.0,
                               std::optional<double> period = std::nullopt) {
    const double t = period.value_or(p.period());
    return Background(Source(std::move(p)), coupling, t);
  }

  const Source& source() const { return source_; }
  bool is_lindstedt() const { return std::holds_alternative<LindstedtSolution>(source_); }
  double coupling() const { return coupling_; }
  double period() const { return period_; }

  double mass() const {
    return std::visit([](const auto& s) { return mass_of(s); }, source_);
  }
  double epsilon() const {
    return std::visit([](const auto& s) { return s.epsilon; }, source_);
  }
  /// Natural boundary condition of the source: sine basis for standing waves.
  Boundary boundary() const {
    return is_lindstedt() ? Boundary::dirichlet_sine : Boundary::periodic;
  }

  /// v and its first and second derivatives at (xs, t), analytic.
  BackgroundSample sample(std::span<const double> xs, double t) const {
    BackgroundSample out;
    const auto n = xs.size();
    for (auto* vec : {&out.v, &out.v_t, &out.v_tt, &out.v_x, &out.v_xx, &out.v_xt})
      vec->assign(n, 0.0);
    if (const auto* p = std::get_if<TravelingWaveProfile>(&source_)) {
      const double c = p->velocity;
      for (std::size_t i = 0; i < n; ++i) {
        const auto d = elliptic::profile_derivatives(*p, xs[i] - c * t);
        out.v[i] = d.value;
        out.v_x[i] = d.d1;
        out.v_xx[i] = d.d2;
        out.v_t[i] = -c * d.d1;
        out.v_tt[i] = c * c * d.d2;
        out.v_xt[i] = -c * d.d2;
      }
      return out;
    }
    const double w = omega_;
    const int kk = series_.kmax(), ll = series_.lmax();
    std::vector<double> a(static_cast<std::size_t>(kk)), b(a.size()), cc(a.size());
    for (int k = 1; k <= kk; ++k) {
      double sa = 0.0, sb = 0.0, sc = 0.0;
      for (int l = 1; l <= ll; ++l) {
        const double coef = series_(k, l);
        if (coef == 0.0) continue;
        const double s = std::sin(l * w * t), co = std::cos(l * w * t);
        sa += coef * s;
        sb += coef * l * w * co;
        sc -= coef * l * l * w * w * s;
      }
      a[static_cast<std::size_t>(k - 1)] = sa;
      b[static_cast<std::size_t>(k - 1)] = sb;
      cc[static_cast<std::size_t>(k - 1)] = sc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 1; k <= kk; ++k) {
        const auto u = static_cast<std::size_t>(k - 1);
        const double s = std::sin(k * xs[i]), co = std::cos(k * xs[i]);
        out.v[i] += s * a[u];
        out.v_t[i] += s * b[u];
        out.v_tt[i] += s * cc[u];
        out.v_x[i] += k * co * a[u];
        out.v_xx[i] -= static_cast<double>(k) * k * s * a[u];
        out.v_xt[i] += k * co * b[u];
      }
    }
    return out;
  }

  std::vector<double> values(std::span<const double> xs, double t) const {
    if (const auto* p = std::get_if<TravelingWaveProfile>(&source_)) {
      std::vector<double> v(xs.size());
      for (std::size_t i = 0; i < xs.size(); ++i) v[i] = elliptic::profile_eval(*p, xs[i], t);
      return v;
    }
    std::vector<double> a(static_cast<std::size_t>(series_.kmax()), 0.0);
    for (int k = 1; k <= series_.kmax(); ++k)
      for (int l = 1; l <= series_.lmax(); ++l)
        a[static_cast<std::size_t>(k - 1)] += series_(k, l) * std::sin(l * omega_ * t);
    std::vector<double> v(xs.size(), 0.0);
    for (std::size_t i = 0; i < xs.size(); ++i)
      for (int k = 1; k <= series_.kmax(); ++k)
        v[i] += std::sin(k * xs[i]) * a[static_cast<std::size_t>(k - 1)];
    return v;
  }

  /// Highest spatial wavenumber present (0 for a traveling wave, whose
  /// content is not band-limited).
  int spatial_band() const { return is_lindstedt() ? series_.kmax() : 0; }

 private:
  Background(Source src, double coupling, double period)
      : source_(std::move(src)), coupling_(coupling), period_(period) {
    if (!(coupling_ > 0.0) || !std::isfinite(coupling_))
      throw DomainError("Background: coupling g must be > 0");
    if (!(period_ > 0.0) || !std::isfinite(period_))
      throw DomainError("Background: period must be > 0");
    if (const auto* sol = std::get_if<LindstedtSolution>(&source_)) {
      series_ = sol->combined();
      omega_ = sol->omega();
    }
  }

  static double mass_of(const LindstedtSolution& s) { return s.mass; }
  static double mass_of(const TravelingWaveProfile& p) { return p.mass; }

  Source source_;
  double coupling_;
  double period_;
  SineSeries2D series_;
  double omega_ = 1.0;
};

namespace detail {

inline std::vector<double> background_residual(const BackgroundSample& s, double mass,
                                               double epsilon) {
  std::vector<double> r(s.v.size());
  const double m2 = mass * mass;
  for (std::size_t i = 0; i < r.size(); ++i)
    r[i] = s.v_tt[i] - s.v_xx[i] + m2 * s.v[i] + epsilon * s.v[i] * s.v[i] * s.v[i];
  return r;
}

}  // namespace detail

/// max_x |v_tt - v_xx + m^2 v + eps v^3| at time t on grid_n points of
/// [0, 2 pi): the coefficient of the term linear in the fluctuation.
inline double h_minus1_residual(const Background& bg, int grid_n, double t) {
  if (grid_n < 1) throw DomainError("h_minus1_residual: grid_n must be >= 1");
  const auto xs = dynamics::grid_points(grid_n);
  const auto r = detail::background_residual(bg.sample(xs, t), bg.mass(), bg.epsilon());
  double worst = 0.0;
  for (double v : r) worst = std::max(worst, std::abs(v));
  return worst;
}

struct HamiltonianExpansion {
  double h_minus2 = 0.0;                     // classical energy, coefficient of g^2
  double h_minus1_norm = 0.0;                // L2 norm of the linear-form coefficient
  std::vector<double> linearized_mass_term;  // 3 eps v^2 on the grid
};

inline HamiltonianExpansion expand(const Background& bg, int grid_n, double t = 0.0) {
  const auto xs = dynamics::grid_points(grid_n);
  const auto s = bg.sample(xs, t);
  const double g = bg.coupling();

  dynamics::FieldState phys =
      dynamics::FieldState::zeros(grid_n, bg.boundary(), bg.mass(), bg.epsilon() / (g * g));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    phys.phi[i] = g * s.v[i];
    phys.pi[i] = g * s.v_t[i];
  }
  phys.time = t;

  HamiltonianExpansion out;
  out.h_minus2 = dynamics::energy(phys) / (g * g);

  const dynamics::SpectralGrid grid(grid_n, bg.boundary());
  const auto r = detail::background_residual(s, bg.mass(), bg.epsilon());
  std::vector<double> r2(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) r2[i] = r[i] * r[i];
  out.h_minus1_norm = std::sqrt(grid.integrate(grid.extend(r2)));

  out.linearized_mass_term.resize(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    out.linearized_mass_term[i] = 3.0 * bg.epsilon() * s.v[i] * s.v[i];
  return out;
}

/// -u_xx + m^2 u + 3 eps v(x, t)^2 u on the background's grid (size of u).
inline std::vector<double> linearized_apply(const Background& bg, std::span<const double> u,
                                            double t) {
  const int n = static_cast<int>(u.size());
  for (double v : u)
    if (!std::isfinite(v)) throw DomainError("linearized_apply: non-finite input");
  const dynamics::SpectralGrid grid(n, bg.boundary());
  if (bg.boundary() == Boundary::dirichlet_sine && u[0] != 0.0)
    throw DomainError("linearized_apply: u must vanish at x = 0");
  const auto xs = dynamics::grid_points(n);
  const auto v = bg.values(xs, t);
  const auto uxx = grid.second_derivative(u);
  const double m2 = bg.mass() * bg.mass();
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i)
    out[i] = -uxx[i] + m2 * u[i] + 3.0 * bg.epsilon() * v[i] * v[i] * u[i];
  return out;
}

struct ZeroModeResidual {
  double r_x = 0.0;
  double r_t = 0.0;
  bool degenerate_x = false;  // d_x v vanishes identically
  bool degenerate_t = false;  // d_t v vanishes identically
  bool degenerate() const { return degenerate_x && degenerate_t; }
};

/// Evolves d_x v and d_t v with the grid linearization (periodic grid, exact
/// linear flow, midpoint potential kick) over one background period and
/// returns the relative phase-space error of (u, u_t) against (d v, d v_t)
/// at T.  The step is dt_factor * dx,
/// so refining the grid refines time too.
inline ZeroModeResidual zero_mode_residual(const Background& bg, int grid_n,
                                           double dt_factor = 0.05) {
  if (!(dt_factor > 0.0 && dt_factor <= 0.5))
    throw DomainError("zero_mode_residual: dt_factor must lie in (0, 0.5]");
  const dynamics::SpectralGrid grid(grid_n, Boundary::periodic);
  const auto xs = dynamics::grid_points(grid_n);
  const double period = bg.period();
  const auto steps = static_cast<long>(std::ceil(period / (dt_factor * grid.dx()) - 1e-9));
  const double h = period / static_cast<double>(steps);
  const dynamics::LinearPropagator half(grid, bg.mass(), 0.5 * h);
  const double eps3 = 3.0 * bg.epsilon();

  const auto s0 = bg.sample(xs, 0.0);
  std::vector<double> ux = s0.v_x, px = s0.v_xt;
  std::vector<double> ut = s0.v_t, pt = s0.v_tt;
  for (long i = 0; i < steps; ++i) {
    half.apply(ux, px);
    half.apply(ut, pt);
    const auto v = bg.values(xs, (static_cast<double>(i) + 0.5) * h);
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double w = h * eps3 * v[j] * v[j];
      px[j] -= w * ux[j];
      pt[j] -= w * ut[j];
    }
    half.apply(ux, px);
    half.apply(ut, pt);
  }

  // Compare (u, u_t) as a phase-space pair: a standing wave vanishes at t = T,
  // so the field part alone can be zero there.
  const auto s1 = bg.sample(xs, period);
  auto rel = [](const std::vector<double>& q, const std::vector<double>& p,
                const std::vector<double>& wq, const std::vector<double>& wp, bool& degen) {
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < q.size(); ++j) {
      num += (q[j] - wq[j]) * (q[j] - wq[j]) + (p[j] - wp[j]) * (p[j] - wp[j]);
      den += wq[j] * wq[j] + wp[j] * wp[j];
    }
    degen = den == 0.0;
    return degen ? 0.0 : std::sqrt(num / den);
  };
  ZeroModeResidual out;
  out.r_x = rel(ux, px, s1.v_x, s1.v_xt, out.degenerate_x);
  out.r_t = rel(ut, pt, s1.v_t, s1.v_tt, out.degenerate_t);
  return out;
}

struct MonodromyOptions {
  int threads = 1;
  int zero_mode_grid = 128;
  double zero_mode_dt_factor = 0.05;
  int quadrature_points = 0;  // 0: chosen from the background's band
};

struct FloquetReport {
  std::vector<std::complex<double>> multipliers;
  ZeroModeResidual zero_mode;
  int truncation = 0;
  double period = 0.0;
  long steps = 0;
  Eigen::MatrixXd monodromy;
};

namespace detail {

// Orthonormal (trapezoid-weighted) spatial basis with its linear frequencies.
//   sine basis:     sin(i x) / sqrt(pi), i = 1..n
//   Fourier basis:  1 / sqrt(2 pi), cos(x) / sqrt(pi), sin(x) / sqrt(pi), cos(2x), ...
struct ModalBasis {
  Eigen::MatrixXd values;    // quadrature points x modes
  Eigen::VectorXd omegas;    // sqrt(k^2 + m^2)
  std::vector<double> xs;
  double weight = 0.0;

  ModalBasis(Boundary b, int n_modes, int points, double mass) {
    xs = dynamics::grid_points(points);
    weight = 2.0 * kPi / points;
    values.resize(points, n_modes);
    omegas.resize(n_modes);
    for (int i = 0; i < n_modes; ++i) {
      int k = 0;
      bool is_sin = true;
      if (b == Boundary::dirichlet_sine) {
        k = i + 1;
      } else {
        k = (i + 1) / 2;
        is_sin = i > 0 && i % 2 == 0;
      }
      const double norm = k == 0 ? 1.0 / std::sqrt(2.0 * kPi) : 1.0 / std::sqrt(kPi);
      for (int p = 0; p < points; ++p) {
        const double x = xs[static_cast<std::size_t>(p)];
        values(p, i) = norm * (k == 0 ? 1.0 : (is_sin ? std::sin(k * x) : std::cos(k * x)));
      }
      omegas(i) = std::sqrt(static_cast<double>(k) * k + mass * mass);
    }
  }
};

inline void rotate(const Eigen::VectorXd& omegas, double h, Eigen::MatrixXd& q,
                   Eigen::MatrixXd& p) {
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const double w = omegas(i);
    double cqq = 1.0, cqp = h, cpq = 0.0;
    if (w != 0.0) {
      cqq = std::cos(w * h);
      cqp = std::sin(w * h) / w;
      cpq = -w * std::sin(w * h);
    }
    const Eigen::RowVectorXd qi = q.row(i);
    q.row(i) = cqq * qi + cqp * p.row(i);
    p.row(i) = cpq * qi + cqq * p.row(i);
  }
}

// Evolves initial conditions q0, p0 (columns) over one period.
inline void evolve_block(const Background& bg, const ModalBasis& basis, long steps, double h,
                         Eigen::MatrixXd& q, Eigen::MatrixXd& p) {
  const double eps3 = 3.0 * bg.epsilon();
  Eigen::VectorXd w(basis.values.rows());
  for (long s = 0; s < steps; ++s) {
    rotate(basis.omegas, 0.5 * h, q, p);
    if (eps3 != 0.0) {
      const auto v = bg.values(basis.xs, (static_cast<double>(s) + 0.5) * h);
      for (Eigen::Index j = 0; j < w.size(); ++j)
        w(j) = basis.weight * v[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
      const Eigen::MatrixXd pot = basis.values.transpose() * w.asDiagonal() * basis.values;
      p.noalias() -= (h * eps3) * (pot * q);
    }
    rotate(basis.omegas, 0.5 * h, q, p);
  }
}

}  // namespace detail

/// Monodromy of the Galerkin-projected linearization over one period.
/// Multipliers are sorted by phase, then modulus.
inline FloquetReport monodromy(const Background& bg, int n_modes, double dt,
                               const MonodromyOptions& opts = {}) {
  if (n_modes < 1) throw DomainError("monodromy: n_modes must be >= 1");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw StabilityError("monodromy: dt must be > 0");
  if (opts.threads < 1) throw DomainError("monodromy: threads must be >= 1");

  int points = opts.quadrature_points;
  if (points <= 0) {
    const int band = bg.spatial_band();
    points = band > 0 ? std::max(64, 2 * (2 * band + 2 * n_modes) + 2)
                      : std::max(256, 8 * n_modes);
    points += points % 2;
  }
  // Every retained mode must be resolved by the quadrature grid.
  if (points <= 2 * n_modes + 2) throw DomainError("monodromy: too few quadrature points");

  const detail::ModalBasis basis(bg.boundary(), n_modes, points, bg.mass());
  const double period = bg.period();
  const auto steps = std::max(1L, static_cast<long>(std::ceil(period / dt - 1e-9)));
  const double h = period / static_cast<double>(steps);
  // Fast modes need the kick to be resolved; the exact rotation has no CFL limit.
  if (h * basis.omegas.maxCoeff() > kPi && bg.epsilon() != 0.0)
    throw StabilityError("monodromy: dt too large for the highest retained mode");

  const int dim = 2 * n_modes;
  Eigen::MatrixXd mono(dim, dim);
  const int nthreads = std::min(opts.threads, dim);
  std::vector<std::pair<int, int>> blocks;
  for (int b = 0; b < nthreads; ++b)
    blocks.emplace_back(b * dim / nthreads, (b + 1) * dim / nthreads);

  auto run = [&](int c0, int c1) {
    Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n_modes, c1 - c0);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n_modes, c1 - c0);
    for (int c = c0; c < c1; ++c) {
      if (c < n_modes) q(c, c - c0) = 1.0; else p(c - n_modes, c - c0) = 1.0;
    }
    detail::evolve_block(bg, basis, steps, h, q, p);
    mono.block(0, c0, n_modes, c1 - c0) = q;
    mono.block(n_modes, c0, n_modes, c1 - c0) = p;
  };
  if (nthreads == 1) {
    run(0, dim);
  } else {
    std::vector<std::thread> pool;
    for (const auto& [c0, c1] : blocks) pool.emplace_back(run, c0, c1);
    for (auto& t : pool) t.join();
  }

  FloquetReport out;
  const Eigen::EigenSolver<Eigen::MatrixXd> eig(mono, false);
  if (eig.info() != Eigen::Success) throw NumericalError("monodromy: eigen-solver failed");
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    out.multipliers.push_back(eig.eigenvalues()(i));
  std::sort(out.multipliers.begin(), out.multipliers.end(), [](auto a, auto b) {
    const double pa = std::arg(a), pb = std::arg(b);
    if (pa != pb) return pa < pb;
    return std::abs(a) < std::abs(b);
  });
  out.zero_mode = zero_mode_residual(bg, opts.zero_mode_grid, opts.zero_mode_dt_factor);
  out.truncation = n_modes;
  out.period = period;
  out.steps = steps;
  out.monodromy = std::move(mono);
  return out;
}

inline void to_json(nlohmann::json& j, const FloquetReport& r) {
  nlohmann::json mults = nlohmann::json::array();
  for (const auto& m : r.multipliers) mults.push_back({m.real(), m.imag()});
  j = nlohmann::json{{"multipliers", mults},
                     {"zero_mode", {r.zero_mode.r_x, r.zero_mode.r_t}},
                     {"n_modes", r.truncation}};
}

}  // namespace breatherlab::fluctuation
