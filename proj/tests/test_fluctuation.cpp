#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "breatherlab/fluctuation.hpp"
#include "oracles.hpp"

using namespace breatherlab;
using namespace breatherlab::fluctuation;

namespace {

lindstedt::LindstedtSolution standing_solution(double eps, int modes = 4) {
  lindstedt::ResonanceProblem p;
  p.n_modes = modes;
  std::vector<double> g(static_cast<std::size_t>(modes), 0.0);
  g[0] = 1.0;
  const auto r = lindstedt::solve_resonance_system(p, g, 9.0 / 32.0);
  return lindstedt::build_solution(r.a, r.omega1, eps, 1e-10);
}

// v = 0 with mass m, period 2 pi unless given.
Background vacuum(double m, double eps = 0.0, double period = 2 * kPi) {
  lindstedt::LindstedtSolution s;
  s.orders = {SineSeries2D(1, 1)};
  s.omega_corrections = {0.0};
  s.epsilon = eps;
  s.mass = m;
  return Background::from_lindstedt(s, 1.0, period);
}

double wrap(double a) { return std::remainder(a, 2 * kPi); }

double distance_to_set(std::complex<double> z, const std::vector<std::complex<double>>& set) {
  double d = 1e300;
  for (auto w : set) d = std::min(d, std::abs(z - w));
  return d;
}

}  // namespace

TEST(HMinus1, EqualsPdeResidual) {
  const auto sol = standing_solution(0.02);
  const auto bg = Background::from_lindstedt(sol);
  const int n = 64;
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    worst = std::max(worst, h_minus1_residual(bg, n, i * sol.period() / n));
  EXPECT_NEAR(worst, lindstedt::pde_residual(sol, n), 1e-12);
  EXPECT_GT(worst, 0.0);
}

TEST(HMinus1, ZeroBackground) {
  const std::vector<double> a{0.0};
  const auto bg = Background::from_lindstedt(lindstedt::build_solution(a, 0.0, 0.1, 1e-12));
  EXPECT_EQ(h_minus1_residual(bg, 64, 0.7), 0.0);
}

TEST(HMinus1, PerturbedBackgroundIsNotASolution) {
  auto sol = standing_solution(0.02);
  sol.orders[0] = sol.orders[0].resized(4, 4);
  sol.orders[0](2, 1) += 0.1;
  const auto bg = Background::from_lindstedt(sol);
  EXPECT_GT(h_minus1_residual(bg, 64, kPi / 2), 0.01);
}

TEST(Expand, LeadingTermIsClassicalEnergy) {
  const auto sol = standing_solution(0.05);
  const auto bg = Background::from_lindstedt(sol, 3.0);
  const auto e = expand(bg, 128);
  EXPECT_NEAR(e.h_minus2, dynamics::energy(dynamics::initial_state(sol, 128)), 1e-10);
  EXPECT_GT(expand(bg, 128, 0.7).h_minus1_norm, 0.0);
  ASSERT_EQ(e.linearized_mass_term.size(), 128u);
}

TEST(Expand, TravelingWave) {
  const auto p = elliptic::fit_periodic_wave(1.0, 0.1, 2.0, 1);
  const auto e = expand(Background::from_twave(p, 2.0), 128, 0.3);
  EXPECT_NEAR(e.h_minus2, dynamics::energy(dynamics::initial_state(p, 128, 0.3)), 1e-10);
  EXPECT_LT(e.h_minus1_norm, 1e-9);
}

TEST(LinearizedApply, VacuumIsKleinGordonOperator) {
  const double m = 0.7;
  const auto bg = vacuum(m, 0.3);
  const int n = 64;
  const auto xs = dynamics::grid_points(n);
  for (int k : {1, 3, 7}) {
    std::vector<double> u(n);
    for (int j = 0; j < n; ++j) u[j] = std::sin(k * xs[j]);
    u[0] = 0.0;
    const auto lu = linearized_apply(bg, u, 0.4);
    for (int j = 0; j < n; ++j) EXPECT_NEAR(lu[j], (k * k + m * m) * u[j], 1e-10);
  }
}

TEST(LinearizedApply, ZeroInput) {
  const auto bg = Background::from_lindstedt(standing_solution(0.1));
  for (double v : linearized_apply(bg, std::vector<double>(64, 0.0), 1.0)) EXPECT_EQ(v, 0.0);
}

TEST(LinearizedApply, MatchesSecondVariation) {
  // <u, L u> = d^2/ds^2 V[v + s u],  V = int u_x^2/2 + m^2 u^2/2 + eps u^4/4.
  // Gradient terms linear in s drop out, so only (s u_x)^2 / 2 is kept.
  auto sol = standing_solution(0.3);
  sol.mass = 0.6;
  const auto bg = Background::from_lindstedt(sol);
  const int n = 128;
  const double t = 0.9, m = 0.6, eps = 0.3, h = 2 * kPi / n;
  const auto xs = dynamics::grid_points(n);
  const auto v = bg.values(xs, t);
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> r(-1.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<double> c(6);
    for (auto& x : c) x = r(rng);
    std::vector<double> u(n, 0.0), ux(n, 0.0);
    for (int j = 0; j < n; ++j)
      for (int q = 0; q < 6; ++q) {
        u[j] += c[q] * std::sin((q + 1) * xs[j]);
        ux[j] += c[q] * (q + 1) * std::cos((q + 1) * xs[j]);
      }
    u[0] = 0.0;
    auto potential = [&](double s) {
      double acc = 0.0;
      for (int j = 0; j < n; ++j) {
        const double f = v[j] + s * u[j];
        acc += 0.5 * s * s * ux[j] * ux[j] + 0.5 * m * m * f * f + 0.25 * eps * f * f * f * f;
      }
      return acc * h;
    };
    const auto lu = linearized_apply(bg, u, t);
    double quad = 0.0;
    for (int j = 0; j < n; ++j) quad += u[j] * lu[j] * h;
    EXPECT_NEAR(quad, oracle::second_derivative(potential, 1e-3), 1e-6 * std::abs(quad));
  }
}

TEST(Spectrum, VacuumFrequencies) {
  const double m = 1.0;
  const auto bg = vacuum(m);
  const int n = 128, modes = 16;
  const auto xs = dynamics::grid_points(n);
  for (int l = 1; l <= modes; ++l) {
    std::vector<double> u(n);
    for (int j = 0; j < n; ++j) u[j] = std::sin(l * xs[j]);
    u[0] = 0.0;
    const auto lu = linearized_apply(bg, u, 0.0);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < n; ++j) {
      num += u[j] * lu[j];
      den += u[j] * u[j];
    }
    EXPECT_NEAR(std::sqrt(num / den), std::sqrt(l * l + m * m), 1e-10);
  }
}

TEST(Monodromy, MasslessVacuumIsIdentity) {
  const auto r = monodromy(vacuum(0.0), 4, 1e-2);
  ASSERT_EQ(r.multipliers.size(), 8u);
  for (auto z : r.multipliers) EXPECT_LT(std::abs(z - 1.0), 1e-8);
}

TEST(Monodromy, MassiveVacuumPhases) {
  const auto r = monodromy(vacuum(1.0), 8, 1e-2);
  for (auto z : r.multipliers) EXPECT_NEAR(std::abs(z), 1.0, 1e-8);
  for (int k = 1; k <= 8; ++k) {
    const double phase = wrap(std::sqrt(k * k + 1.0) * 2 * kPi);
    for (double s : {1.0, -1.0}) {
      double best = 1e300;
      for (auto z : r.multipliers) best = std::min(best, std::abs(wrap(std::arg(z) - s * phase)));
      EXPECT_LT(best, 1e-6) << k;
    }
  }
}

TEST(Monodromy, StandingWaveMultipliersPair) {
  const auto r = monodromy(Background::from_lindstedt(standing_solution(0.1)), 16, 1e-2);
  for (auto l : r.multipliers) {
    double best = 1e300;
    for (auto m : r.multipliers) best = std::min(best, std::abs(l * m - 1.0));
    EXPECT_LT(best, 1e-6);
  }
}

TEST(Monodromy, PerturbativeContinuity) {
  // Reference: the free field over the same period.
  double dist[2];
  int i = 0;
  for (double eps : {0.02, 0.01}) {
    const auto sol = standing_solution(eps);
    const auto free = monodromy(vacuum(0.0, 0.0, sol.period()), 12, 1e-2).multipliers;
    const auto r = monodromy(Background::from_lindstedt(sol), 12, 1e-2);
    double worst = 0.0;
    for (auto z : r.multipliers) worst = std::max(worst, distance_to_set(z, free));
    dist[i++] = worst;
  }
  EXPECT_LT(dist[0], 10 * 0.02);
  EXPECT_GT(dist[0] / dist[1], 1.5);
  EXPECT_LT(dist[0] / dist[1], 2.5);
}

TEST(Monodromy, DeterministicAndThreadIndependent) {
  const auto bg = Background::from_lindstedt(standing_solution(0.1));
  const auto a = monodromy(bg, 12, 1e-2), b = monodromy(bg, 12, 1e-2);
  EXPECT_EQ(a.multipliers, b.multipliers);
  MonodromyOptions opts;
  opts.threads = 3;
  const auto c = monodromy(bg, 12, 1e-2, opts);
  EXPECT_LT((a.monodromy - c.monodromy).lpNorm<Eigen::Infinity>(), 1e-12);
}

TEST(Monodromy, TravelingWaveUsesPeriodicModes) {
  const auto p = elliptic::fit_periodic_wave(1.0, 0.1, 2.0, 1);
  const auto r = monodromy(Background::from_twave(p), 9, 1e-3);
  EXPECT_EQ(r.multipliers.size(), 18u);
  EXPECT_NEAR(r.period, kPi, 1e-14);
}

TEST(Monodromy, BadArguments) {
  const auto bg = vacuum(1.0);
  EXPECT_THROW(monodromy(bg, 0, 1e-2), DomainError);
  EXPECT_THROW(monodromy(bg, 4, -1.0), StabilityError);
  const auto sw = Background::from_lindstedt(standing_solution(0.1));
  EXPECT_THROW(monodromy(sw, 64, 0.5), StabilityError);
}

TEST(ZeroMode, TravelingWaveConverges) {
  const auto bg = Background::from_twave(elliptic::fit_periodic_wave(1.0, 0.1, 2.0, 1));
  double prev_x = 1e300, prev_t = 1e300;
  for (int n : {64, 128, 256}) {
    const auto z = zero_mode_residual(bg, n);
    EXPECT_LT(z.r_x, prev_x);
    EXPECT_LT(z.r_t, prev_t);
    prev_x = z.r_x;
    prev_t = z.r_t;
  }
  EXPECT_LT(prev_x, 1e-4);
}

TEST(ZeroMode, StandingWaveTracksBackgroundResidual) {
  // d_x v solves the linearization only as well as v solves the field
  // equation, so the residual falls as eps^2 rather than with the grid.
  double r[2];
  int i = 0;
  for (double eps : {0.02, 0.01}) {
    const auto sol = standing_solution(eps, 8);
    const auto z = zero_mode_residual(Background::from_lindstedt(sol), 128);
    EXPECT_FALSE(z.degenerate());
    EXPECT_LT(z.r_x, 10 * lindstedt::pde_residual(sol, 128));
    r[i++] = z.r_x;
  }
  EXPECT_GT(r[0] / r[1], 3.0);
  EXPECT_LT(r[0] / r[1], 5.0);
}

TEST(ZeroMode, ZeroBackgroundIsDegenerate) {
  const auto z = zero_mode_residual(vacuum(1.0, 0.1), 64);
  EXPECT_TRUE(z.degenerate());
  EXPECT_EQ(z.r_x, 0.0);
  EXPECT_EQ(z.r_t, 0.0);
}

TEST(Report, Json) {
  const auto r = monodromy(vacuum(1.0), 2, 1e-2);
  const nlohmann::json j = r;
  EXPECT_EQ(j.at("multipliers").size(), 4u);
  EXPECT_EQ(j.at("zero_mode").size(), 2u);
  EXPECT_EQ(j.at("n_modes").get<int>(), 2);
}
