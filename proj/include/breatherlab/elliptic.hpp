#pragma once

// Traveling waves phi(x, t) = f(x - v t) of the nonlinear Klein-Gordon
// equation.  Substituting xi = x - v t gives the Duffing equation
//
//     (v^2 - 1) f'' + m^2 f + eps f^3 = 0,   i.e.  f'' + alpha f + gamma f^3 = 0
//
// with alpha = m^2 / (v^2 - 1), gamma = eps / (v^2 - 1).  Using
//     cn'' = (2k^2 - 1) cn - 2k^2 cn^3,     sn'' = -(1 + k^2) sn + 2k^2 sn^3
// (derivatives in the argument, k the modulus) and matching the linear and
// cubic coefficients of f = A cn(beta xi, k) or f = A sn(beta xi, k):
//
//   gamma > 0 (cn):  alpha = beta^2 (1 - 2k^2),   A^2 =  2 k^2 beta^2 / gamma
//   gamma < 0 (sn):  alpha = beta^2 (1 + k^2),    A^2 = -2 k^2 beta^2 / gamma
//
// Spatial period 2 pi / n on the periodic domain [0, 2 pi] requires
// 4 K(k) / beta = 2 pi / n, i.e. beta = 2 n K(k) / pi, which leaves one scalar
// equation in k.  beta(k)^2 (1 - 2k^2) is strictly decreasing and
// beta(k)^2 (1 + k^2) strictly increasing on [0, 1), so bisection finds the
// unique root when it is bracketed.  As k -> 0 both forms reduce to
// A sin / cos (n xi) with v^2 = 1 + m^2 / n^2, the linear dispersion relation.
//
// `k` is always the modulus, never the parameter k^2.

#include <nlohmann/json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "breatherlab/error.hpp"
#include "breatherlab/series_core.hpp"

namespace breatherlab::elliptic {

inline void check_modulus(double k) {
  if (!(k >= 0.0 && k < 1.0))
    throw DomainError("elliptic: modulus must lie in [0, 1), got " + std::to_string(k));
}

/// Complete elliptic integral of the first kind, K(k) = pi / (2 AGM(1, k')).
inline double elliptic_K(double k) {
  check_modulus(k);
  double a = 1.0;
  double b = std::sqrt((1.0 - k) * (1.0 + k));
  for (int i = 0; i < 64 && std::abs(a - b) > 1e-16 * a; ++i) {
    const double an = 0.5 * (a + b);
    b = std::sqrt(a * b);
    a = an;
  }
  return kPi / (a + b);
}

struct JacobiValues {
  double cn;
  double sn;
  double dn;
};

/// Jacobi elliptic functions by the descending AGM / Landen scheme.
inline JacobiValues jacobi_cn_sn_dn(double u, double k) {
  check_modulus(k);
  if (!std::isfinite(u)) throw DomainError("jacobi_cn_sn_dn: non-finite argument");
  if (k == 0.0) return {std::cos(u), std::sin(u), 1.0};

  // Reduce modulo the real period 4K to keep the amplified angle small.
  const double period = 4.0 * elliptic_K(k);
  u = std::remainder(u, period);

  constexpr int kMaxLevels = 16;
  double a[kMaxLevels + 1];
  double c[kMaxLevels + 1];
  a[0] = 1.0;
  double b = std::sqrt((1.0 - k) * (1.0 + k));
  c[0] = k;
  int n = 0;
  while (std::abs(c[n]) > 1e-16 && n < kMaxLevels) {
    a[n + 1] = 0.5 * (a[n] + b);
    c[n + 1] = 0.5 * (a[n] - b);
    b = std::sqrt(a[n] * b);
    ++n;
  }
  double phi = std::ldexp(a[n] * u, n);
  for (int i = n; i > 0; --i) phi = 0.5 * (phi + std::asin(c[i] / a[i] * std::sin(phi)));
  const double sn = std::sin(phi);
  const double cn = std::cos(phi);
  const double dn = std::sqrt(1.0 - k * k * sn * sn);
  return {cn, sn, dn};
}

enum class WaveForm { cn, sn };

struct TravelingWaveProfile {
  double velocity = 0.0;
  double mass = 0.0;
  double epsilon = 0.0;
  int harmonic = 1;
  double amplitude = 0.0;
  double modulus = 0.0;
  double scale = 1.0;

  /// cn for eps / (v^2 - 1) >= 0, sn otherwise.
  WaveForm form() const {
    return epsilon / (velocity * velocity - 1.0) >= 0.0 ? WaveForm::cn : WaveForm::sn;
  }
  double wavelength() const { return 4.0 * elliptic_K(modulus) / scale; }
  /// Time for the profile to advance one wavelength.
  double period() const { return 2.0 * kPi / (harmonic * std::abs(velocity)); }
};

struct ProfileDerivatives {
  double value;
  double d1;  // d/dxi
  double d2;  // d^2/dxi^2
};

/// f, f', f'' at xi, the derivatives built from cn, sn, dn directly
/// (d sn = cn dn, d cn = -sn dn, d dn = -k^2 sn cn).
inline ProfileDerivatives profile_derivatives(const TravelingWaveProfile& p, double xi) {
  const double k = p.modulus;
  const double b = p.scale;
  const auto j = jacobi_cn_sn_dn(b * xi, k);
  if (p.form() == WaveForm::cn) {
    return {p.amplitude * j.cn, -p.amplitude * b * j.sn * j.dn,
            p.amplitude * b * b * (-j.cn * j.dn * j.dn + k * k * j.sn * j.sn * j.cn)};
  }
  return {p.amplitude * j.sn, p.amplitude * b * j.cn * j.dn,
          p.amplitude * b * b * (-j.sn * j.dn * j.dn - k * k * j.sn * j.cn * j.cn)};
}

inline double profile_eval(const TravelingWaveProfile& p, double x, double t) {
  return profile_derivatives(p, x - p.velocity * t).value;
}

/// max |(v^2 - 1) f'' + m^2 f + eps f^3| over `points` collocation points
/// spanning one wavelength.
inline double ode_residual(const TravelingWaveProfile& p, int points = 1024) {
  const double s = p.velocity * p.velocity - 1.0;
  const double len = p.wavelength();
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const auto d = profile_derivatives(p, len * i / points);
    const double r = s * d.d2 + p.mass * p.mass * d.value + p.epsilon * d.value * d.value * d.value;
    worst = std::max(worst, std::abs(r));
  }
  return worst;
}

namespace detail {

inline void check_wave_inputs(double m, double epsilon, double velocity, int harmonic) {
  if (!std::isfinite(m) || !std::isfinite(epsilon) || !std::isfinite(velocity))
    throw DomainError("traveling wave: non-finite parameter");
  if (m < 0.0) throw DomainError("traveling wave: mass must be >= 0");
  if (harmonic < 1) throw DomainError("traveling wave: harmonic must be >= 1");
  if (std::abs(velocity * velocity - 1.0) < 1e-14)
    throw LightConeError("light-cone degenerate velocity");
}

inline double wave_scale(int harmonic, double k) { return 2.0 * harmonic * elliptic_K(k) / kPi; }

// Root of a monotone g on [0, k_hi]; `increasing` gives the sign convention.
template <class G>
double bisect_modulus(G&& g, bool increasing) {
  constexpr double k_hi = 1.0 - 1e-15;
  const double g_lo = g(0.0);
  const double g_hi = g(k_hi);
  if (g_lo == 0.0) return 0.0;
  const bool bracketed = increasing ? (g_lo < 0.0 && g_hi > 0.0) : (g_lo > 0.0 && g_hi < 0.0);
  if (!bracketed) throw NoPeriodicOrbitError("traveling wave: no real periodic orbit");
  double lo = 0.0, hi = k_hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const double gm = g(mid);
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == increasing) lo = mid; else hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

/// Periodic traveling wave with spatial period 2 pi / harmonic.
inline TravelingWaveProfile fit_periodic_wave(double m, double epsilon, double velocity,
                                              int harmonic) {
  detail::check_wave_inputs(m, epsilon, velocity, harmonic);
  if (epsilon == 0.0)
    throw NoPeriodicOrbitError("traveling wave: amplitude undetermined for eps = 0");
  const double s = velocity * velocity - 1.0;
  const double alpha = m * m / s;
  const double gamma = epsilon / s;

  TravelingWaveProfile p;
  p.velocity = velocity;
  p.mass = m;
  p.epsilon = epsilon;
  p.harmonic = harmonic;
  if (gamma > 0.0) {
    p.modulus = detail::bisect_modulus(
        [&](double k) {
          const double b = detail::wave_scale(harmonic, k);
          return b * b * (1.0 - 2.0 * k * k) - alpha;
        },
        false);
  } else {
    p.modulus = detail::bisect_modulus(
        [&](double k) {
          const double b = detail::wave_scale(harmonic, k);
          return b * b * (1.0 + k * k) - alpha;
        },
        true);
  }
  p.scale = detail::wave_scale(harmonic, p.modulus);
  p.amplitude = std::sqrt(2.0 * p.modulus * p.modulus * p.scale * p.scale / std::abs(gamma));
  return p;
}

/// Velocity of the periodic wave with given peak amplitude (the nonlinear
/// dispersion relation).  Closed form obtained by eliminating v from the
/// coefficient relations above:
///   cn:  k^2 =  eps A^2 / (2 (m^2 + eps A^2)),  v^2 - 1 = (m^2 + eps A^2) / beta^2
///   sn:  k^2 = -eps A^2 / (2 m^2 + eps A^2),    v^2 - 1 = m^2 / (beta^2 (1 + k^2))
/// The sn branch (super-luminal, softening) applies for -m^2 < eps A^2 < 0.
inline double dispersion_velocity(double m, double epsilon, double amplitude, int harmonic) {
  if (!std::isfinite(m) || !std::isfinite(epsilon) || !std::isfinite(amplitude) || m < 0.0 ||
      harmonic < 1)
    throw DomainError("dispersion_velocity: invalid parameters");
  const double ea = epsilon * amplitude * amplitude;
  double s = 0.0;
  if (ea >= 0.0 || ea < -2.0 * m * m) {
    const double denom = 2.0 * (m * m + ea);
    const double k2 = denom == 0.0 ? 0.0 : ea / denom;
    if (!(k2 >= 0.0 && k2 < 1.0)) throw NoPeriodicOrbitError("dispersion_velocity: no orbit");
    const double b = detail::wave_scale(harmonic, std::sqrt(k2));
    s = (m * m + ea) / (b * b);
  } else if (ea > -m * m) {
    const double k2 = -ea / (2.0 * m * m + ea);
    const double b = detail::wave_scale(harmonic, std::sqrt(k2));
    s = m * m / (b * b * (1.0 + k2));
  } else {
    throw NoPeriodicOrbitError("dispersion_velocity: no orbit");
  }
  if (1.0 + s <= 0.0) throw NoPeriodicOrbitError("dispersion_velocity: no orbit");
  if (s == 0.0) throw LightConeError("light-cone degenerate velocity");
  return std::sqrt(1.0 + s);
}

inline void to_json(nlohmann::json& j, const TravelingWaveProfile& p) {
  j = nlohmann::json{{"v", p.velocity},       {"m", p.mass},       {"epsilon", p.epsilon},
                     {"n", p.harmonic},       {"A", p.amplitude},  {"k", p.modulus},
                     {"beta", p.scale}};
}

inline void from_json(const nlohmann::json& j, TravelingWaveProfile& p) {
  p.velocity = j.at("v").get<double>();
  p.mass = j.at("m").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.harmonic = j.at("n").get<int>();
  p.amplitude = j.at("A").get<double>();
  p.modulus = j.at("k").get<double>();
  p.scale = j.at("beta").get<double>();
  check_modulus(p.modulus);
  if (p.harmonic < 1 || !(p.scale > 0.0))
    throw DomainError("TravelingWaveProfile: invalid harmonic or scale");
}

}  // namespace breatherlab::elliptic
