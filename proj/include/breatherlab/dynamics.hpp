#pragma once

// Conservative evolution of the scalar field
//
//     phi_tt - phi_xx + m^2 phi + eps phi^3 = 0
//
// and of the coupled field-dimer (polaron) system with action
//
//     S = 1/2 int (phi_t^2 - phi_x^2 - m^2 phi^2)
//       + g^2 int (|Psi_t|^2 - |Psi_x|^2 - M^2 |Psi|^2) - g int |Psi|^2 phi^2 .
//
// Varying S with respect to phi and Psi^* (and adding the scalar
// self-interaction eps phi^4 / 4, absent from S when eps = 0) gives
//
//     phi_tt - phi_xx + m^2 phi + eps phi^3 + 2 g |Psi|^2 phi = 0
//     g^2 (Psi_tt - Psi_xx + M^2 Psi) + g phi^2 Psi = 0
//
// whose conserved energy and momentum are
//
//     H = int [ 1/2 (pi^2 + phi_x^2 + m^2 phi^2) + eps/4 phi^4
//             + g^2 (|Psi_t|^2 + |Psi_x|^2 + M^2 |Psi|^2) + g |Psi|^2 phi^2 ] dx
//     P = int [ pi phi_x + g^2 (Psi_t^* Psi_x + Psi_x^* Psi_t) ] dx ,   pi = phi_t.
//
// Every term of H enters with a plus sign; that is the convention under which
// dH/dt = 0 for the equations above.  P is conserved on the periodic domain.
//
// Grids have grid_n points x_j = 2 pi j / grid_n.  Two boundary conditions:
//   periodic        full Fourier basis, wavenumbers 0 .. grid_n / 2
//   dirichlet_sine  phi(0) = phi(2 pi) = 0, sine basis sin(q x / 2),
//                   q = 1 .. grid_n - 1, on the interior points
// The integrator is Strang splitting: half kick by the local force, exact
// linear flow in the transform basis, half kick.  Both pieces are exact flows,
// so the step is symmetric and time-reversible.  Stable for |dt| <= dx / 2.
//
// Integrals use the trapezoid rule on the grid (for dirichlet_sine the point
// x = 2 pi is included); derivatives are spectral.

#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <tuple>
#include <string>
#include <vector>

#include "breatherlab/elliptic.hpp"
#include "breatherlab/error.hpp"
#include "breatherlab/fft.hpp"
#include "breatherlab/lindstedt.hpp"
#include "breatherlab/series_core.hpp"

namespace breatherlab::dynamics {

enum class Boundary { dirichlet_sine, periodic };

inline std::string to_string(Boundary b) {
  return b == Boundary::periodic ? "periodic" : "dirichlet_sine";
}

inline Boundary boundary_from_string(const std::string& s) {
  if (s == "periodic") return Boundary::periodic;
  if (s == "dirichlet_sine") return Boundary::dirichlet_sine;
  throw DomainError("unknown boundary '" + s + "'");
}

inline std::vector<double> grid_points(int n) {
  std::vector<double> x(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) x[static_cast<std::size_t>(j)] = 2.0 * kPi * j / n;
  return x;
}

struct FieldState {
  int grid_n = 0;
  Boundary boundary = Boundary::periodic;
  std::vector<double> phi;
  std::vector<double> pi;  // phi_t
  double time = 0.0;
  double mass = 0.0;
  double epsilon = 0.0;

  double dx() const { return 2.0 * kPi / grid_n; }

  void validate() const {
    if (grid_n < 4) throw DomainError("FieldState: grid_n must be >= 4");
    if (boundary == Boundary::periodic && grid_n % 2 != 0)
      throw DomainError("FieldState: periodic grids need an even grid_n");
    if (phi.size() != static_cast<std::size_t>(grid_n) ||
        pi.size() != static_cast<std::size_t>(grid_n))
      throw DimensionMismatchError("FieldState: arrays must have grid_n entries");
    for (std::size_t i = 0; i < phi.size(); ++i)
      if (!std::isfinite(phi[i]) || !std::isfinite(pi[i]))
        throw DomainError("FieldState: non-finite sample");
    if (!std::isfinite(time) || !std::isfinite(mass) || !std::isfinite(epsilon))
      throw DomainError("FieldState: non-finite parameter");
    if (boundary == Boundary::dirichlet_sine && (phi[0] != 0.0 || pi[0] != 0.0))
      throw DomainError("FieldState: dirichlet_sine endpoint samples must be 0");
  }

  static FieldState zeros(int n, Boundary b, double mass = 0.0, double epsilon = 0.0) {
    FieldState s;
    s.grid_n = n;
    s.boundary = b;
    s.phi.assign(static_cast<std::size_t>(n), 0.0);
    s.pi.assign(static_cast<std::size_t>(n), 0.0);
    s.mass = mass;
    s.epsilon = epsilon;
    return s;
  }
};

struct PolaronState {
  FieldState field;
  std::vector<std::complex<double>> psi;
  std::vector<std::complex<double>> psi_t;
  double coupling = 1.0;    // g
  double dimer_mass = 0.0;  // M

  void validate() const {
    field.validate();
    const auto n = static_cast<std::size_t>(field.grid_n);
    if (psi.size() != n || psi_t.size() != n)
      throw DimensionMismatchError("PolaronState: psi arrays must have grid_n entries");
    for (std::size_t i = 0; i < n; ++i)
      if (!std::isfinite(psi[i].real()) || !std::isfinite(psi[i].imag()) ||
          !std::isfinite(psi_t[i].real()) || !std::isfinite(psi_t[i].imag()))
        throw DomainError("PolaronState: non-finite sample");
    if (!(coupling > 0.0)) throw DomainError("PolaronState: coupling g must be > 0");
    if (!std::isfinite(dimer_mass)) throw DomainError("PolaronState: non-finite dimer mass");
    if (field.boundary == Boundary::dirichlet_sine && (psi[0] != 0.0 || psi_t[0] != 0.0))
      throw DomainError("PolaronState: dirichlet_sine endpoint samples must be 0");
  }
};

struct ConservedQuantities {
  double energy = 0.0;
  double momentum = 0.0;
};

/// Transforms, derivatives and quadrature on one grid.
class SpectralGrid {
 public:
  SpectralGrid(int n, Boundary b) : n_(n), boundary_(b) {
    if (n < 4) throw DomainError("SpectralGrid: grid_n must be >= 4");
    if (b == Boundary::periodic) {
      if (n % 2 != 0) throw DomainError("SpectralGrid: periodic grids need an even grid_n");
      dft_ = fft::RealDft(n);
    } else {
      dst_ = fft::R2r(n - 1, FFTW_RODFT00);
      dct_ = fft::R2r(n + 1, FFTW_REDFT00);
    }
  }

  int size() const { return n_; }
  Boundary boundary() const { return boundary_; }
  double dx() const { return 2.0 * kPi / n_; }
  /// Number of points the trapezoid rule uses (x = 2 pi included for Dirichlet).
  int quadrature_size() const { return boundary_ == Boundary::periodic ? n_ : n_ + 1; }

  /// Wavenumber of mode index q (0..n/2 periodic, 1..n-1 Dirichlet).
  double wavenumber(int q) const {
    return boundary_ == Boundary::periodic ? static_cast<double>(q) : 0.5 * q;
  }

  /// Real sine coefficients b_q, q = 1..n-1, with f_j = sum_q b_q sin(pi j q / n).
  std::vector<double> sine_coefficients(std::span<const double> f) const {
    std::vector<double> b(f.begin() + 1, f.end());
    dst_(b, b);
    for (double& v : b) v /= n_;
    return b;
  }
  std::vector<double> sine_synthesis(std::vector<double> b) const {
    dst_(b, b);
    std::vector<double> f(static_cast<std::size_t>(n_));
    for (int j = 1; j < n_; ++j) f[static_cast<std::size_t>(j)] = 0.5 * b[static_cast<std::size_t>(j - 1)];
    return f;
  }

  std::vector<std::complex<double>> fourier_coefficients(std::span<const double> f) const {
    std::vector<std::complex<double>> c(static_cast<std::size_t>(dft_.spectrum_size()));
    dft_.forward(f, c);
    return c;
  }
  std::vector<double> fourier_synthesis(std::vector<std::complex<double>> c) const {
    std::vector<double> f(static_cast<std::size_t>(n_));
    dft_.backward(c, f);
    for (double& v : f) v /= n_;
    return f;
  }

  /// f_x on the quadrature points.
  std::vector<double> derivative(std::span<const double> f) const {
    if (boundary_ == Boundary::periodic) {
      auto c = fourier_coefficients(f);
      for (std::size_t q = 0; q < c.size(); ++q) c[q] *= std::complex<double>(0.0, wavenumber(static_cast<int>(q)));
      c.back() = 0.0;  // Nyquist
      return fourier_synthesis(std::move(c));
    }
    const auto b = sine_coefficients(f);
    std::vector<double> x(static_cast<std::size_t>(n_ + 1), 0.0);
    for (int q = 1; q < n_; ++q) x[static_cast<std::size_t>(q)] = b[static_cast<std::size_t>(q - 1)] * wavenumber(q);
    dct_(x, x);
    for (double& v : x) v *= 0.5;
    return x;
  }

  /// f_xx on the grid points.
  std::vector<double> second_derivative(std::span<const double> f) const {
    if (boundary_ == Boundary::periodic) {
      auto c = fourier_coefficients(f);
      for (std::size_t q = 0; q < c.size(); ++q) {
        const double kq = wavenumber(static_cast<int>(q));
        c[q] *= -kq * kq;
      }
      c.back() = 0.0;
      return fourier_synthesis(std::move(c));
    }
    auto b = sine_coefficients(f);
    for (int q = 1; q < n_; ++q) {
      const double kq = wavenumber(q);
      b[static_cast<std::size_t>(q - 1)] *= -kq * kq;
    }
    return sine_synthesis(std::move(b));
  }

  /// Grid samples extended to the quadrature points (x = 2 pi -> 0 for Dirichlet).
  std::vector<double> extend(std::span<const double> f) const {
    std::vector<double> out(f.begin(), f.end());
    if (boundary_ == Boundary::dirichlet_sine) out.push_back(0.0);
    return out;
  }

  /// Trapezoid rule over quadrature-point samples.
  double integrate(std::span<const double> g) const {
    if (static_cast<int>(g.size()) != quadrature_size())
      throw DimensionMismatchError("SpectralGrid::integrate: wrong sample count");
    double sum = 0.0;
    if (boundary_ == Boundary::periodic) {
      for (double v : g) sum += v;
    } else {
      sum = 0.5 * (g.front() + g.back());
      for (std::size_t j = 1; j + 1 < g.size(); ++j) sum += g[j];
    }
    return sum * dx();
  }

 private:
  int n_;
  Boundary boundary_;
  fft::RealDft dft_;
  fft::R2r dst_;
  fft::R2r dct_;
};

/// Exact flow of q_tt = q_xx - m^2 q over a time h, applied in the transform
/// basis to (q, p = q_t).
class LinearPropagator {
 public:
  LinearPropagator(const SpectralGrid& grid, double mass, double h) : grid_(&grid) {
    const int modes = grid.boundary() == Boundary::periodic ? grid.size() / 2 + 1 : grid.size() - 1;
    const int first = grid.boundary() == Boundary::periodic ? 0 : 1;
    cqq_.resize(static_cast<std::size_t>(modes));
    cqp_.resize(cqq_.size());
    cpq_.resize(cqq_.size());
    for (int i = 0; i < modes; ++i) {
      const double kq = grid.wavenumber(i + first);
      const double w = std::sqrt(kq * kq + mass * mass);
      const auto u = static_cast<std::size_t>(i);
      if (w == 0.0) {
        cqq_[u] = 1.0;
        cqp_[u] = h;
        cpq_[u] = 0.0;
      } else {
        cqq_[u] = std::cos(w * h);
        cqp_[u] = std::sin(w * h) / w;
        cpq_[u] = -w * std::sin(w * h);
      }
    }
  }

  void apply(std::vector<double>& q, std::vector<double>& p) const {
    if (grid_->boundary() == Boundary::periodic) {
      auto cq = grid_->fourier_coefficients(q);
      auto cp = grid_->fourier_coefficients(p);
      rotate(cq, cp);
      q = grid_->fourier_synthesis(std::move(cq));
      p = grid_->fourier_synthesis(std::move(cp));
    } else {
      auto bq = grid_->sine_coefficients(q);
      auto bp = grid_->sine_coefficients(p);
      rotate(bq, bp);
      q = grid_->sine_synthesis(std::move(bq));
      p = grid_->sine_synthesis(std::move(bp));
    }
  }

 private:
  template <class T>
  void rotate(std::vector<T>& a, std::vector<T>& b) const {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const T qa = a[i];
      const T pb = b[i];
      a[i] = cqq_[i] * qa + cqp_[i] * pb;
      b[i] = cpq_[i] * qa + cqq_[i] * pb;
    }
  }

  const SpectralGrid* grid_;
  std::vector<double> cqq_, cqp_, cpq_;
};

inline void check_time_step(double dt, double dx) {
  if (!std::isfinite(dt) || dt == 0.0) throw StabilityError("time step must be finite and nonzero");
  if (std::abs(dt) > 0.5 * dx * (1.0 + 1e-12))
    throw StabilityError("time step " + std::to_string(dt) + " exceeds stability bound dx/2 = " +
                         std::to_string(0.5 * dx));
}

class KleinGordonStepper {
 public:
  KleinGordonStepper(int grid_n, Boundary b) : grid_(grid_n, b) {}

  const SpectralGrid& grid() const { return grid_; }

  void step(FieldState& s, double dt) {
    if (s.grid_n != grid_.size() || s.boundary != grid_.boundary())
      throw DimensionMismatchError("KleinGordonStepper: state does not match grid");
    check_time_step(dt, grid_.dx());
    const LinearPropagator& lin = propagator(s.mass, dt);
    kick(s, 0.5 * dt);
    lin.apply(s.phi, s.pi);
    kick(s, 0.5 * dt);
    s.time += dt;
  }

 private:
  static void kick(FieldState& s, double h) {
    if (s.epsilon == 0.0) return;
    for (std::size_t j = 0; j < s.phi.size(); ++j) {
      const double f = s.phi[j];
      s.pi[j] -= h * s.epsilon * f * f * f;
    }
  }

  const LinearPropagator& propagator(double mass, double dt) {
    if (!cache_ || cached_mass_ != mass || cached_dt_ != dt) {
      cache_.emplace(grid_, mass, dt);
      cached_mass_ = mass;
      cached_dt_ = dt;
    }
    return *cache_;
  }

  SpectralGrid grid_;
  std::optional<LinearPropagator> cache_;
  double cached_mass_ = 0.0;
  double cached_dt_ = 0.0;
};

class PolaronStepper {
 public:
  PolaronStepper(int grid_n, Boundary b) : grid_(grid_n, b) {}

  const SpectralGrid& grid() const { return grid_; }

  void step(PolaronState& s, double dt) {
    FieldState& f = s.field;
    if (f.grid_n != grid_.size() || f.boundary != grid_.boundary())
      throw DimensionMismatchError("PolaronStepper: state does not match grid");
    check_time_step(dt, grid_.dx());
    if (!field_ || cached_dt_ != dt || m_ != f.mass || big_m_ != s.dimer_mass) {
      field_.emplace(grid_, f.mass, dt);
      dimer_.emplace(grid_, s.dimer_mass, dt);
      cached_dt_ = dt;
      m_ = f.mass;
      big_m_ = s.dimer_mass;
    }
    kick(s, 0.5 * dt);
    field_->apply(f.phi, f.pi);
    split(s);
    dimer_->apply(re_, re_t_);
    dimer_->apply(im_, im_t_);
    join(s);
    kick(s, 0.5 * dt);
    f.time += dt;
  }

 private:
  static void kick(PolaronState& s, double h) {
    FieldState& f = s.field;
    const double g = s.coupling;
    for (std::size_t j = 0; j < f.phi.size(); ++j) {
      const double p = f.phi[j];
      const double rho = std::norm(s.psi[j]);
      f.pi[j] -= h * (f.epsilon * p * p * p + 2.0 * g * rho * p);
      s.psi_t[j] -= h * (p * p / g) * s.psi[j];
    }
  }
  void split(const PolaronState& s) {
    const auto n = s.psi.size();
    re_.resize(n); im_.resize(n); re_t_.resize(n); im_t_.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
      re_[j] = s.psi[j].real();
      im_[j] = s.psi[j].imag();
      re_t_[j] = s.psi_t[j].real();
      im_t_[j] = s.psi_t[j].imag();
    }
  }
  void join(PolaronState& s) const {
    for (std::size_t j = 0; j < s.psi.size(); ++j) {
      s.psi[j] = {re_[j], im_[j]};
      s.psi_t[j] = {re_t_[j], im_t_[j]};
    }
  }

  SpectralGrid grid_;
  std::optional<LinearPropagator> field_;
  std::optional<LinearPropagator> dimer_;
  double cached_dt_ = 0.0, m_ = 0.0, big_m_ = 0.0;
  std::vector<double> re_, im_, re_t_, im_t_;
};

inline FieldState step_kg(FieldState state, double dt) {
  state.validate();
  KleinGordonStepper(state.grid_n, state.boundary).step(state, dt);
  return state;
}

inline PolaronState step_polaron(PolaronState state, double dt) {
  state.validate();
  PolaronStepper(state.field.grid_n, state.field.boundary).step(state, dt);
  return state;
}

namespace detail {

inline double field_energy(const SpectralGrid& grid, const FieldState& s) {
  const auto phi = grid.extend(s.phi);
  const auto pi = grid.extend(s.pi);
  const auto phi_x = grid.derivative(s.phi);
  const double m2 = s.mass * s.mass;
  std::vector<double> e(phi.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double f2 = phi[j] * phi[j];
    e[j] = 0.5 * (pi[j] * pi[j] + phi_x[j] * phi_x[j] + m2 * f2) + 0.25 * s.epsilon * f2 * f2;
  }
  return grid.integrate(e);
}

inline double field_momentum(const SpectralGrid& grid, const FieldState& s) {
  const auto pi = grid.extend(s.pi);
  const auto phi_x = grid.derivative(s.phi);
  std::vector<double> p(pi.size());
  for (std::size_t j = 0; j < p.size(); ++j) p[j] = pi[j] * phi_x[j];
  return grid.integrate(p);
}

struct ComplexParts {
  std::vector<double> re, im;
};

inline ComplexParts parts(std::span<const std::complex<double>> z) {
  ComplexParts out{std::vector<double>(z.size()), std::vector<double>(z.size())};
  for (std::size_t j = 0; j < z.size(); ++j) {
    out.re[j] = z[j].real();
    out.im[j] = z[j].imag();
  }
  return out;
}

}  // namespace detail

inline double energy(const FieldState& s) {
  s.validate();
  return detail::field_energy(SpectralGrid(s.grid_n, s.boundary), s);
}

inline double momentum(const FieldState& s) {
  s.validate();
  return detail::field_momentum(SpectralGrid(s.grid_n, s.boundary), s);
}

inline double energy(const PolaronState& s) {
  s.validate();
  const SpectralGrid grid(s.field.grid_n, s.field.boundary);
  const double g = s.coupling;
  const double M2 = s.dimer_mass * s.dimer_mass;
  const auto psi = detail::parts(s.psi);
  const auto psi_t = detail::parts(s.psi_t);
  const auto re_x = grid.derivative(psi.re);
  const auto im_x = grid.derivative(psi.im);
  const auto re = grid.extend(psi.re), im = grid.extend(psi.im);
  const auto re_t = grid.extend(psi_t.re), im_t = grid.extend(psi_t.im);
  const auto phi = grid.extend(s.field.phi);
  std::vector<double> e(re.size());
  for (std::size_t j = 0; j < e.size(); ++j) {
    const double rho = re[j] * re[j] + im[j] * im[j];
    e[j] = g * g * (re_t[j] * re_t[j] + im_t[j] * im_t[j] + re_x[j] * re_x[j] +
                    im_x[j] * im_x[j] + M2 * rho) +
           g * rho * phi[j] * phi[j];
  }
  return detail::field_energy(grid, s.field) + grid.integrate(e);
}

inline double momentum(const PolaronState& s) {
  s.validate();
  const SpectralGrid grid(s.field.grid_n, s.field.boundary);
  const double g = s.coupling;
  const auto psi = detail::parts(s.psi);
  const auto psi_t = detail::parts(s.psi_t);
  const auto re_x = grid.derivative(psi.re);
  const auto im_x = grid.derivative(psi.im);
  const auto re_t = grid.extend(psi_t.re), im_t = grid.extend(psi_t.im);
  std::vector<double> p(re_t.size());
  // Psi_t^* Psi_x + Psi_x^* Psi_t = 2 Re(Psi_t^* Psi_x)
  for (std::size_t j = 0; j < p.size(); ++j)
    p[j] = 2.0 * g * g * (re_t[j] * re_x[j] + im_t[j] * im_x[j]);
  return detail::field_momentum(grid, s.field) + grid.integrate(p);
}

struct DiagnosticRecord {
  std::int64_t step = 0;
  double time = 0.0;
  double energy = 0.0;
  double momentum = 0.0;
};

template <class State>
struct Evolution {
  std::vector<DiagnosticRecord> records;
  State state;
};

namespace detail {
inline double state_time(const FieldState& s) { return s.time; }
inline double state_time(const PolaronState& s) { return s.field.time; }
inline KleinGordonStepper make_stepper(const FieldState& s) {
  return KleinGordonStepper(s.grid_n, s.boundary);
}
inline PolaronStepper make_stepper(const PolaronState& s) {
  return PolaronStepper(s.field.grid_n, s.field.boundary);
}
}  // namespace detail

/// Runs n_steps steps, recording H and P at step 0 and every record_every
/// steps thereafter (nothing is recorded when n_steps == 0).
template <class State>
Evolution<State> evolve_with_diagnostics(State state, double dt, std::int64_t n_steps,
                                         std::int64_t record_every) {
  if (record_every < 1) throw DomainError("evolve: record_every must be >= 1");
  if (n_steps < 0) throw DomainError("evolve: n_steps must be >= 0");
  state.validate();
  Evolution<State> out;
  if (n_steps == 0) {
    out.state = std::move(state);
    return out;
  }
  auto stepper = detail::make_stepper(state);
  auto record = [&](std::int64_t step) {
    out.records.push_back({step, detail::state_time(state), energy(state), momentum(state)});
  };
  record(0);
  for (std::int64_t i = 1; i <= n_steps; ++i) {
    stepper.step(state, dt);
    if (i % record_every == 0) record(i);
  }
  out.state = std::move(state);
  return out;
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline void write_diagnostics_csv(std::ostream& os, std::span<const DiagnosticRecord> records) {
  os << "step,time,energy,momentum\n";
  for (const auto& r : records)
    os << r.step << ',' << format_double(r.time) << ',' << format_double(r.energy) << ','
       << format_double(r.momentum) << '\n';
}

/// State sampled from a standing-wave solution at time t.  Sine modes with
/// integer wavenumbers are also 2 pi periodic, so either boundary is valid.
inline FieldState initial_state(const lindstedt::LindstedtSolution& sol, int grid_n,
                                double t = 0.0,
                                Boundary boundary = Boundary::dirichlet_sine) {
  int kmax = 1;
  for (const auto& o : sol.orders) kmax = std::max(kmax, o.kmax());
  if (grid_n - 1 < 2 * kmax)
    throw DomainError("initial_state: grid_n = " + std::to_string(grid_n) +
                      " cannot resolve spatial mode " + std::to_string(kmax));
  FieldState s;
  s.grid_n = grid_n;
  s.boundary = boundary;
  const auto xs = grid_points(grid_n);
  std::tie(s.phi, s.pi) = lindstedt::sample(sol, xs, t);
  s.phi[0] = 0.0;
  s.pi[0] = 0.0;
  s.time = t;
  s.mass = sol.mass;
  s.epsilon = sol.epsilon;
  return s;
}

/// Periodic state sampled from a traveling wave at time t.
inline FieldState initial_state(const elliptic::TravelingWaveProfile& p, int grid_n,
                                double t = 0.0) {
  FieldState s = FieldState::zeros(grid_n, Boundary::periodic, p.mass, p.epsilon);
  const auto xs = grid_points(grid_n);
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const auto d = elliptic::profile_derivatives(p, xs[j] - p.velocity * t);
    s.phi[j] = d.value;
    s.pi[j] = -p.velocity * d.d1;
  }
  s.time = t;
  return s;
}

inline void to_json(nlohmann::json& j, const FieldState& s) {
  j = nlohmann::json{{"grid_n", s.grid_n}, {"boundary", to_string(s.boundary)},
                     {"time", s.time},     {"mass", s.mass},
                     {"epsilon", s.epsilon}, {"phi", s.phi},
                     {"pi", s.pi}};
}

inline void from_json(const nlohmann::json& j, FieldState& s) {
  s.grid_n = j.at("grid_n").get<int>();
  s.boundary = boundary_from_string(j.at("boundary").get<std::string>());
  s.time = j.at("time").get<double>();
  s.mass = j.at("mass").get<double>();
  s.epsilon = j.at("epsilon").get<double>();
  s.phi = j.at("phi").get<std::vector<double>>();
  s.pi = j.at("pi").get<std::vector<double>>();
  s.validate();
}

inline void to_json(nlohmann::json& j, const PolaronState& s) {
  to_json(j, s.field);
  const auto psi = detail::parts(s.psi);
  const auto psi_t = detail::parts(s.psi_t);
  j["coupling"] = s.coupling;
  j["dimer_mass"] = s.dimer_mass;
  j["psi_re"] = psi.re;
  j["psi_im"] = psi.im;
  j["psi_t_re"] = psi_t.re;
  j["psi_t_im"] = psi_t.im;
}

inline void from_json(const nlohmann::json& j, PolaronState& s) {
  from_json(j, s.field);
  s.coupling = j.at("coupling").get<double>();
  s.dimer_mass = j.at("dimer_mass").get<double>();
  const auto re = j.at("psi_re").get<std::vector<double>>();
  const auto im = j.at("psi_im").get<std::vector<double>>();
  const auto re_t = j.at("psi_t_re").get<std::vector<double>>();
  const auto im_t = j.at("psi_t_im").get<std::vector<double>>();
  if (re.size() != im.size() || re_t.size() != im_t.size() || re.size() != re_t.size())
    throw DimensionMismatchError("PolaronState: psi component sizes differ");
  s.psi.resize(re.size());
  s.psi_t.resize(re.size());
  for (std::size_t i = 0; i < re.size(); ++i) {
    s.psi[i] = {re[i], im[i]};
    s.psi_t[i] = {re_t[i], im_t[i]};
  }
  s.validate();
}

}  // namespace breatherlab::dynamics
