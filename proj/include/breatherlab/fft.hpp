#pragma once

// Thin RAII wrappers over FFTW plans.  Plans are created under a global lock
// (FFTW's planner is not reentrant) and executed with the new-array interface,
// so one plan can serve any suitably sized buffer.

#include <fftw3.h>

#include <complex>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace breatherlab::fft {

inline std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

class Plan {
 public:
  Plan() = default;
  explicit Plan(fftw_plan p) : plan_(p) {
    if (plan_ == nullptr) throw std::runtime_error("fftw: plan creation failed");
  }
  Plan(const Plan&) = delete;
  Plan& operator=(const Plan&) = delete;
  Plan(Plan&& o) noexcept : plan_(o.plan_) { o.plan_ = nullptr; }
  Plan& operator=(Plan&& o) noexcept {
    if (this != &o) {
      reset();
      plan_ = o.plan_;
      o.plan_ = nullptr;
    }
    return *this;
  }
  ~Plan() { reset(); }

  fftw_plan get() const { return plan_; }

 private:
  void reset() {
    if (plan_ != nullptr) {
      std::lock_guard lock(planner_mutex());
      fftw_destroy_plan(plan_);
      plan_ = nullptr;
    }
  }
  fftw_plan plan_ = nullptr;
};

/// Unnormalized real-to-real transform of one FFTW kind, 1-D or 2-D row-major.
/// RODFT00 (DST-I):  Y_k = 2 sum_j X_j sin(pi (j+1)(k+1) / (n+1)); applying it
///                   twice multiplies by 2(n+1).
/// REDFT00 (DCT-I):  Y_k = X_0 + (-1)^k X_{n-1} + 2 sum_{j=1}^{n-2} X_j cos(pi j k / (n-1)).
class R2r {
 public:
  R2r() = default;
  R2r(int n, fftw_r2r_kind kind) : rows_(1), cols_(n) {
    std::vector<double> buf(static_cast<std::size_t>(n));
    std::lock_guard lock(planner_mutex());
    plan_ = Plan(fftw_plan_r2r_1d(n, buf.data(), buf.data(), kind,
                                  FFTW_ESTIMATE | FFTW_UNALIGNED));
  }
  R2r(int rows, int cols, fftw_r2r_kind kind) : rows_(rows), cols_(cols) {
    std::vector<double> buf(static_cast<std::size_t>(rows) * cols);
    std::lock_guard lock(planner_mutex());
    plan_ = Plan(fftw_plan_r2r_2d(rows, cols, buf.data(), buf.data(), kind, kind,
                                  FFTW_ESTIMATE | FFTW_UNALIGNED));
  }

  int size() const { return rows_ * cols_; }

  // In place is allowed; buffers must not alias partially.
  void operator()(std::span<const double> in, std::span<double> out) const {
    if (static_cast<int>(in.size()) != size() ||
        static_cast<int>(out.size()) != size()) {
      throw std::invalid_argument("R2r: buffer size mismatch");
    }
    fftw_execute_r2r(plan_.get(), const_cast<double*>(in.data()), out.data());
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  Plan plan_;
};

/// Real-to-complex forward / complex-to-real backward DFT pair of length n.
/// Backward(Forward(x)) = n x.
class RealDft {
 public:
  RealDft() = default;
  explicit RealDft(int n) : n_(n) {
    std::vector<double> r(static_cast<std::size_t>(n));
    std::vector<std::complex<double>> c(static_cast<std::size_t>(n / 2 + 1));
    auto* cp = reinterpret_cast<fftw_complex*>(c.data());
    std::lock_guard lock(planner_mutex());
    forward_ = Plan(fftw_plan_dft_r2c_1d(n, r.data(), cp, FFTW_ESTIMATE | FFTW_UNALIGNED));
    backward_ = Plan(fftw_plan_dft_c2r_1d(n, cp, r.data(), FFTW_ESTIMATE | FFTW_UNALIGNED));
  }

  int size() const { return n_; }
  int spectrum_size() const { return n_ / 2 + 1; }

  void forward(std::span<const double> in,
               std::span<std::complex<double>> out) const {
    check(in.size(), out.size());
    fftw_execute_dft_r2c(forward_.get(), const_cast<double*>(in.data()),
                         reinterpret_cast<fftw_complex*>(out.data()));
  }

  // Destroys the contents of `in` (c2r transforms overwrite their input).
  void backward(std::span<std::complex<double>> in,
                std::span<double> out) const {
    check(out.size(), in.size());
    fftw_execute_dft_c2r(backward_.get(),
                         reinterpret_cast<fftw_complex*>(in.data()), out.data());
  }

 private:
  void check(std::size_t real_size, std::size_t complex_size) const {
    if (static_cast<int>(real_size) != n_ ||
        static_cast<int>(complex_size) != spectrum_size()) {
      throw std::invalid_argument("RealDft: buffer size mismatch");
    }
  }
  int n_ = 0;
  Plan forward_;
  Plan backward_;
};

}  // namespace breatherlab::fft
