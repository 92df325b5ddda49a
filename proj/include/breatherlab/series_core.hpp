#pragma once

// Truncated double sine series  f(x, tau) = sum_{k,l} C_kl sin(k x) sin(l tau)
// on [0, 2pi] x R, and the exact coefficient-space algebra the standing-wave
// construction needs.
//
// Sign convention for the wave operator.  Throughout this library
//
//     D = d^2/dx^2 - d^2/dtau^2,      D[sin(kx) sin(l tau)] = (l^2 - k^2) sin sin.
//
// With this sign the first-order standing-wave equation reads
// D phi_1 = 2 w_1 d^2_tau phi_0 + phi_0^3, i.e. the source returned by
// lindstedt::first_order_rhs is inverted as is, and
// invert_dalembert(dalembert_apply(s)) == s on every series with zero diagonal.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "breatherlab/error.hpp"
#include "breatherlab/fft.hpp"

namespace breatherlab {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr int kMaxSeriesIndex = 512;

class SineSeries2D {
 public:
  SineSeries2D() : SineSeries2D(1, 1) {}

  SineSeries2D(int kmax, int lmax) : kmax_(kmax), lmax_(lmax) {
    if (kmax < 1 || lmax < 1 || kmax > kMaxSeriesIndex ||
        lmax > kMaxSeriesIndex) {
      throw DomainError("SineSeries2D: truncation must lie in [1, 512], got " +
                        std::to_string(kmax) + "x" + std::to_string(lmax));
    }
    coeffs_.assign(static_cast<std::size_t>(kmax) * lmax, 0.0);
  }

  SineSeries2D(int kmax, int lmax, std::vector<double> coeffs)
      : SineSeries2D(kmax, lmax) {
    if (coeffs.size() != coeffs_.size()) {
      throw DimensionMismatchError("SineSeries2D: expected " +
                                   std::to_string(coeffs_.size()) +
                                   " coefficients, got " +
                                   std::to_string(coeffs.size()));
    }
    for (double c : coeffs) {
      if (!std::isfinite(c)) {
        throw DomainError("SineSeries2D: non-finite coefficient");
      }
    }
    coeffs_ = std::move(coeffs);
  }

  /// Diagonal-only series with C_nn = a[n-1].
  static SineSeries2D diagonal(std::span<const double> a, int kmax = 0,
                               int lmax = 0) {
    const int n = static_cast<int>(a.size());
    SineSeries2D s(std::max(kmax, std::max(n, 1)), std::max(lmax, std::max(n, 1)));
    for (int i = 1; i <= n; ++i) s(i, i) = a[i - 1];
    return s;
  }

  int kmax() const { return kmax_; }
  int lmax() const { return lmax_; }

  // 1-based mode indices.
  double operator()(int k, int l) const { return coeffs_[index(k, l)]; }
  double& operator()(int k, int l) { return coeffs_[index(k, l)]; }

  /// Zero outside the stored truncation.
  double at(int k, int l) const {
    if (k < 1 || l < 1 || k > kmax_ || l > lmax_) return 0.0;
    return (*this)(k, l);
  }

  std::span<const double> coeffs() const { return coeffs_; }

  /// Copy into a (possibly different) truncation, dropping or zero-padding.
  SineSeries2D resized(int kmax, int lmax) const {
    SineSeries2D out(kmax, lmax);
    for (int k = 1; k <= std::min(kmax, kmax_); ++k)
      for (int l = 1; l <= std::min(lmax, lmax_); ++l) out(k, l) = (*this)(k, l);
    return out;
  }

  double max_abs() const {
    double m = 0.0;
    for (double c : coeffs_) m = std::max(m, std::abs(c));
    return m;
  }

  double max_abs_diagonal() const {
    double m = 0.0;
    for (int n = 1; n <= std::min(kmax_, lmax_); ++n)
      m = std::max(m, std::abs((*this)(n, n)));
    return m;
  }

  bool is_diagonal() const {
    for (int k = 1; k <= kmax_; ++k)
      for (int l = 1; l <= lmax_; ++l)
        if (k != l && (*this)(k, l) != 0.0) return false;
    return true;
  }

  SineSeries2D& operator+=(const SineSeries2D& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < coeffs_.size(); ++i) coeffs_[i] += o.coeffs_[i];
    return *this;
  }
  SineSeries2D& operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
  }
  friend SineSeries2D operator+(SineSeries2D a, const SineSeries2D& b) {
    return a += b;
  }
  friend SineSeries2D operator*(double s, SineSeries2D a) { return a *= s; }

  friend bool operator==(const SineSeries2D&, const SineSeries2D&) = default;

  /// Coefficients as a kmax x lmax matrix (row k-1, column l-1).
  Eigen::MatrixXd matrix() const {
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                          Eigen::RowMajor>>(coeffs_.data(),
                                                            kmax_, lmax_);
  }

 private:
  std::size_t index(int k, int l) const {
    return static_cast<std::size_t>(k - 1) * lmax_ + (l - 1);
  }
  void require_same_shape(const SineSeries2D& o) const {
    if (o.kmax_ != kmax_ || o.lmax_ != lmax_) {
      throw DimensionMismatchError("SineSeries2D: truncation mismatch");
    }
  }

  int kmax_;
  int lmax_;
  std::vector<double> coeffs_;
};

/// Omega_l = sqrt(l^2 + m^2): the linear (epsilon = 0) temporal frequencies.
struct LinearSpectrum {
  double mass = 0.0;
  std::vector<double> frequencies;

  LinearSpectrum(double m, int lmax) : mass(m) {
    if (!(m >= 0.0)) throw DomainError("LinearSpectrum: mass must be >= 0");
    frequencies.reserve(static_cast<std::size_t>(std::max(lmax, 0)));
    for (int l = 1; l <= lmax; ++l)
      frequencies.push_back(std::sqrt(static_cast<double>(l) * l + m * m));
  }

  double omega(int l) const { return frequencies.at(static_cast<std::size_t>(l - 1)); }
};

inline double eval(const SineSeries2D& s, double x, double tau) {
  double sum = 0.0;
  for (int k = 1; k <= s.kmax(); ++k) {
    const double sx = std::sin(k * x);
    double row = 0.0;
    for (int l = 1; l <= s.lmax(); ++l) row += s(k, l) * std::sin(l * tau);
    sum += sx * row;
  }
  return sum;
}

/// Values on a tensor grid: result(i, j) = f(xs[i], taus[j]).  The
/// coefficient matrix is optionally weighted mode-wise first, which is how
/// analytic derivatives are taken (e.g. weight = -l^2 for d^2/dtau^2).
template <class Weight>
Eigen::MatrixXd eval_grid(const SineSeries2D& s, std::span<const double> xs,
                          std::span<const double> taus, Weight&& weight) {
  Eigen::MatrixXd sx(static_cast<Eigen::Index>(xs.size()), s.kmax());
  for (Eigen::Index i = 0; i < sx.rows(); ++i)
    for (int k = 1; k <= s.kmax(); ++k) sx(i, k - 1) = std::sin(k * xs[i]);
  Eigen::MatrixXd st(s.lmax(), static_cast<Eigen::Index>(taus.size()));
  for (int l = 1; l <= s.lmax(); ++l)
    for (Eigen::Index j = 0; j < st.cols(); ++j) st(l - 1, j) = std::sin(l * taus[j]);
  Eigen::MatrixXd c = s.matrix();
  for (int k = 1; k <= s.kmax(); ++k)
    for (int l = 1; l <= s.lmax(); ++l) c(k - 1, l - 1) *= weight(k, l);
  return sx * c * st;
}

inline Eigen::MatrixXd eval_grid(const SineSeries2D& s, std::span<const double> xs,
                                 std::span<const double> taus) {
  return eval_grid(s, xs, taus, [](int, int) { return 1.0; });
}

namespace detail {

// Interior grid of a DST-I of size P-1 on [0, pi]: points pi j / P, j = 1..P-1.
// Mode sin(q x) with q < P is represented exactly; q in [P, 2P) aliases onto
// 2P - q with a sign flip.  Choosing P > (q_max + k_out) / 2 therefore keeps
// every coefficient with index <= k_out exact.
inline int alias_free_points(int q_max, int k_out) {
  return std::max(k_out + 1, (q_max + k_out) / 2 + 1);
}

/// Sampler for products of sine series: synthesize on the interior DST grid,
/// combine pointwise, analyze back.
class SineSampler {
 public:
  SineSampler(int px, int pl) : px_(px), pl_(pl), dst_(px - 1, pl - 1, FFTW_RODFT00) {}

  int px() const { return px_; }
  int pl() const { return pl_; }

  /// Row-major (px-1) x (pl-1) grid values of s.
  std::vector<double> synthesize(const SineSeries2D& s) const {
    std::vector<double> buf(static_cast<std::size_t>(px_ - 1) * (pl_ - 1), 0.0);
    const int kk = std::min(s.kmax(), px_ - 1);
    const int ll = std::min(s.lmax(), pl_ - 1);
    for (int k = 1; k <= kk; ++k)
      for (int l = 1; l <= ll; ++l)
        buf[static_cast<std::size_t>(k - 1) * (pl_ - 1) + (l - 1)] = s(k, l);
    dst_(buf, buf);
    for (double& v : buf) v *= 0.25;
    return buf;
  }

  /// Coefficients with k <= kout, l <= lout of the sampled function.
  SineSeries2D analyze(std::vector<double> grid, int kout, int lout) const {
    dst_(grid, grid);
    const double scale = 1.0 / (static_cast<double>(px_) * pl_);
    SineSeries2D out(kout, lout);
    for (int k = 1; k <= kout; ++k)
      for (int l = 1; l <= lout; ++l)
        out(k, l) = grid[static_cast<std::size_t>(k - 1) * (pl_ - 1) + (l - 1)] * scale;
    return out;
  }

 private:
  int px_;
  int pl_;
  fft::R2r dst_;
};

}  // namespace detail

/// Sine-sine coefficients of the pointwise cube, truncated to (kout, lout).
/// Exact (to round-off) for every retained mode.
inline SineSeries2D cube_project(const SineSeries2D& s, int kout, int lout) {
  if (kout < 1 || lout < 1) {
    throw DomainError("cube_project: output truncation must be >= 1");
  }
  detail::SineSampler sampler(detail::alias_free_points(3 * s.kmax(), kout),
                              detail::alias_free_points(3 * s.lmax(), lout));
  auto grid = sampler.synthesize(s);
  for (double& v : grid) v = v * v * v;
  return sampler.analyze(std::move(grid), kout, lout);
}

inline SineSeries2D cube_project(const SineSeries2D& s) {
  return cube_project(s, std::min(3 * s.kmax(), kMaxSeriesIndex),
                      std::min(3 * s.lmax(), kMaxSeriesIndex));
}

/// Mode-wise action of D = d^2_x - d^2_tau: C_kl -> (l^2 - k^2) C_kl.
inline SineSeries2D dalembert_apply(const SineSeries2D& s) {
  SineSeries2D out(s.kmax(), s.lmax());
  for (int k = 1; k <= s.kmax(); ++k)
    for (int l = 1; l <= s.lmax(); ++l)
      out(k, l) = static_cast<double>(l * l - k * k) * s(k, l);
  return out;
}

/// Inverse of D on the off-diagonal modes.  Any diagonal coefficient above
/// `tol` is a resonant source and is rejected; the rest are set to zero.
inline SineSeries2D invert_dalembert(const SineSeries2D& s, double tol) {
  SineSeries2D out(s.kmax(), s.lmax());
  for (int k = 1; k <= s.kmax(); ++k) {
    for (int l = 1; l <= s.lmax(); ++l) {
      if (k == l) {
        if (std::abs(s(k, l)) > tol) {
          throw ResonantSourceError(
              "invert_dalembert: resonant source at mode (" + std::to_string(k) +
              "," + std::to_string(l) + ")");
        }
        continue;
      }
      out(k, l) = s(k, l) / static_cast<double>(l * l - k * k);
    }
  }
  return out;
}

inline void to_json(nlohmann::json& j, const SineSeries2D& s) {
  j = nlohmann::json{{"kmax", s.kmax()},
                     {"lmax", s.lmax()},
                     {"coeffs", std::vector<double>(s.coeffs().begin(),
                                                    s.coeffs().end())}};
}

inline void from_json(const nlohmann::json& j, SineSeries2D& s) {
  s = SineSeries2D(j.at("kmax").get<int>(), j.at("lmax").get<int>(),
                   j.at("coeffs").get<std::vector<double>>());
}

}  // namespace breatherlab
