// breatherlab: command-line front end.
//
// Exit codes: 0 success, 1 invalid input, 2 numerical failure.  Failures print
// a single line "error: <message>" on stderr.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "breatherlab/breatherlab.hpp"

namespace {

using nlohmann::json;
using namespace breatherlab;

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
  }
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ValidationError("write to '" + path + "' failed");
}

void write_json(const std::string& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

int thread_cap() {
  const char* env = std::getenv("BREATHERLAB_THREADS");
  if (env == nullptr || *env == '\0') return 1;
  char* end = nullptr;
  const long v = std::strtol(env, &end, 10);
  if (*end != '\0' || v < 1 || v > 1024)
    throw ValidationError("BREATHERLAB_THREADS must be a positive integer");
  return static_cast<int>(v);
}

// --- lindstedt --------------------------------------------------------------

struct LindstedtArgs {
  int modes = 4;
  double epsilon = 0.01;
  double amplitude = 1.0;
  double mass = 0.0;
  double tol = 1e-10;
  std::string out;
};

void run_lindstedt(const LindstedtArgs& a) {
  lindstedt::LindstedtSolution sol;
  if (a.mass > 0.0) {
    sol = lindstedt::build_nonresonant_solution(a.amplitude, a.mass, a.epsilon);
  } else {
    lindstedt::ResonanceProblem problem;
    problem.n_modes = a.modes;
    problem.normalization = lindstedt::Normalization::fix_a1(a.amplitude);
    problem.tol = a.tol;
    std::vector<double> guess(static_cast<std::size_t>(a.modes), 0.0);
    guess[0] = a.amplitude;
    const auto root = lindstedt::solve_resonance_system(problem, guess,
                                                        9.0 * a.amplitude * a.amplitude / 32.0);
    sol = lindstedt::build_solution(root.a, root.omega1, a.epsilon, a.tol);
    double worst = 0.0;
    for (const auto& [n, v] : root.truncation_residual) worst = std::max(worst, std::abs(v));
    std::cout << "omega1 " << dynamics::format_double(root.omega1) << " iterations "
              << root.iterations << " truncation_residual " << dynamics::format_double(worst)
              << "\n";
  }
  write_json(a.out, sol);
}

// --- twave ------------------------------------------------------------------

struct TwaveArgs {
  double mass = 1.0;
  double epsilon = 0.1;
  double velocity = 2.0;
  int harmonic = 1;
  std::string out;
};

void run_twave(const TwaveArgs& a) {
  const auto p = elliptic::fit_periodic_wave(a.mass, a.epsilon, a.velocity, a.harmonic);
  std::cout << "ode_residual " << dynamics::format_double(elliptic::ode_residual(p)) << "\n";
  write_json(a.out, p);
}

// --- evolve -----------------------------------------------------------------

struct EvolveArgs {
  std::string init;
  double dt = 1e-3;
  std::int64_t steps = 1000;
  std::int64_t record_every = 1;
  int grid = 128;
  std::string out;
  std::string state_out;
};

template <class State>
void finish_evolve(const EvolveArgs& a, State state) {
  const auto ev = dynamics::evolve_with_diagnostics(std::move(state), a.dt, a.steps, a.record_every);
  std::ostringstream csv;
  dynamics::write_diagnostics_csv(csv, ev.records);
  write_text(a.out, csv.str());
  if (!a.state_out.empty()) write_json(a.state_out, ev.state);
}

void run_evolve(const EvolveArgs& a) {
  const json j = read_json(a.init);
  if (j.contains("orders")) {
    finish_evolve(a, dynamics::initial_state(j.get<lindstedt::LindstedtSolution>(), a.grid));
  } else if (j.contains("beta")) {
    finish_evolve(a, dynamics::initial_state(j.get<elliptic::TravelingWaveProfile>(), a.grid));
  } else if (j.contains("psi_re")) {
    finish_evolve(a, j.get<dynamics::PolaronState>());
  } else if (j.contains("phi")) {
    finish_evolve(a, j.get<dynamics::FieldState>());
  } else {
    throw ValidationError("'" + a.init + "' is not a standing-wave, traveling-wave or state file");
  }
}

// --- floquet ----------------------------------------------------------------

struct FloquetArgs {
  std::string background;
  int modes = 32;
  double dt = 1e-3;
  double coupling = 1.0;
  int zero_mode_grid = 128;
  std::string out;
};

void run_floquet(const FloquetArgs& a) {
  const json j = read_json(a.background);
  std::optional<fluctuation::Background> bg;
  if (j.contains("orders")) {
    bg = fluctuation::Background::from_lindstedt(j.get<lindstedt::LindstedtSolution>(), a.coupling);
  } else if (j.contains("beta")) {
    bg = fluctuation::Background::from_twave(j.get<elliptic::TravelingWaveProfile>(), a.coupling);
  } else {
    throw ValidationError("'" + a.background + "' is not a standing-wave or traveling-wave file");
  }
  fluctuation::MonodromyOptions opts;
  opts.threads = thread_cap();
  opts.zero_mode_grid = a.zero_mode_grid;
  const auto report = fluctuation::monodromy(*bg, a.modes, a.dt, opts);
  write_json(a.out, report);
}

// --- qcond ------------------------------------------------------------------

struct QcondArgs {
  std::string state;
  std::string projector;
  std::string observable;
  int d1 = 2;
  int d2 = 2;
  std::string out;
};

// A bare matrix, or the "state" member of a previous qcond result.
qcond::Matrix read_matrix(const std::string& path) {
  const json j = read_json(path);
  return qcond::matrix_from_json(j.contains("state") ? j.at("state") : j);
}

void run_qcond(const QcondArgs& a) {
  const qcond::BipartiteDims dims(a.d1, a.d2);
  const qcond::DensityMatrix rho(read_matrix(a.state));
  const qcond::Projector p2(read_matrix(a.projector));
  const auto cond = qcond::condition(rho, p2, dims);
  json out{{"probability", cond.probability}, {"state", qcond::matrix_to_json(cond.state.matrix())}};
  if (!a.observable.empty()) {
    const auto f = read_matrix(a.observable);
    const auto e = qcond::conditional_expectation(rho, f, p2, dims);
    out["expectation"] = e.value;
  }
  write_json(a.out, out);
}

int fail(int code, const std::string& msg) {
  std::string line = msg;
  for (char& c : line)
    if (c == '\n') c = ' ';
  std::cerr << "error: " << line << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"breatherlab: doubly periodic phi^4 waves, polaron dynamics, fluctuation "
               "spectra and conditional density matrices"};
  app.require_subcommand(1);

  LindstedtArgs la;
  auto* lind = app.add_subcommand("lindstedt", "Standing wave by Poincare-Lindstedt expansion");
  lind->add_option("--modes", la.modes, "Retained diagonal amplitudes N")
      ->check(CLI::Range(1, 170))->capture_default_str();
  lind->add_option("--epsilon", la.epsilon, "Coupling eps")->capture_default_str();
  lind->add_option("--amplitude", la.amplitude, "Pinned first amplitude a_1")->capture_default_str();
  lind->add_option("--mass", la.mass, "Field mass m (m > 0 selects the non-resonant path)")
      ->check(CLI::NonNegativeNumber)->capture_default_str();
  lind->add_option("--tol", la.tol, "Resonance tolerance")
      ->check(CLI::PositiveNumber)->capture_default_str();
  lind->add_option("--out", la.out, "Output JSON")->required();

  TwaveArgs ta;
  auto* tw = app.add_subcommand("twave", "Periodic traveling wave (Jacobi elliptic profile)");
  tw->add_option("--mass", ta.mass, "Field mass m")->check(CLI::NonNegativeNumber)->capture_default_str();
  tw->add_option("--epsilon", ta.epsilon, "Coupling eps")->capture_default_str();
  tw->add_option("--velocity", ta.velocity, "Velocity v")->capture_default_str();
  tw->add_option("--harmonic", ta.harmonic, "Harmonic n (period 2pi/n)")
      ->check(CLI::Range(1, 1 << 20))->capture_default_str();
  tw->add_option("--out", ta.out, "Output JSON")->required();

  EvolveArgs ea;
  auto* ev = app.add_subcommand("evolve", "Time evolution with energy/momentum diagnostics");
  ev->add_option("--init", ea.init, "Standing-wave, traveling-wave or state JSON")->required();
  ev->add_option("--dt", ea.dt, "Time step (<= dx/2)")->check(CLI::PositiveNumber)->capture_default_str();
  ev->add_option("--steps", ea.steps, "Number of steps")->check(CLI::NonNegativeNumber)->capture_default_str();
  ev->add_option("--record-every", ea.record_every, "Diagnostic stride")
      ->check(CLI::PositiveNumber)->capture_default_str();
  ev->add_option("--grid", ea.grid, "Grid points when sampling a solution file")
      ->check(CLI::Range(4, 1 << 20))->capture_default_str();
  ev->add_option("--out", ea.out, "Diagnostics CSV")->required();
  ev->add_option("--state-out", ea.state_out, "Final state JSON");

  FloquetArgs fa;
  auto* fl = app.add_subcommand("floquet", "Floquet multipliers and zero-mode residuals");
  fl->add_option("--background", fa.background, "Standing-wave or traveling-wave JSON")->required();
  fl->add_option("--modes", fa.modes, "Spatial modes retained")->check(CLI::Range(1, 512))->capture_default_str();
  fl->add_option("--dt", fa.dt, "Time step")->check(CLI::PositiveNumber)->capture_default_str();
  fl->add_option("--coupling", fa.coupling, "Semiclassical scale g")
      ->check(CLI::PositiveNumber)->capture_default_str();
  fl->add_option("--zero-mode-grid", fa.zero_mode_grid, "Grid for the zero-mode check")
      ->check(CLI::Range(4, 1 << 16))->capture_default_str();
  fl->add_option("--out", fa.out, "Output JSON")->required();

  QcondArgs qa;
  auto* qc = app.add_subcommand("qcond", "Conditional density matrix of subsystem 1");
  qc->add_option("--state", qa.state, "Density matrix JSON")->required();
  qc->add_option("--projector", qa.projector, "Projector on subsystem 2 (JSON)")->required();
  qc->add_option("--d1", qa.d1, "Dimension of subsystem 1")->check(CLI::Range(1, 64))->capture_default_str();
  qc->add_option("--d2", qa.d2, "Dimension of subsystem 2")->check(CLI::Range(1, 64))->capture_default_str();
  qc->add_option("--observable", qa.observable, "Hermitian observable on subsystem 1 (JSON)");
  qc->add_option("--out", qa.out, "Output JSON")->required();

  app.footer("Environment: BREATHERLAB_THREADS caps the threads used by floquet (default 1).");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(kExitValidation, e.what());
  }

  try {
    if (lind->parsed()) run_lindstedt(la);
    else if (tw->parsed()) run_twave(ta);
    else if (ev->parsed()) run_evolve(ea);
    else if (fl->parsed()) run_floquet(fa);
    else if (qc->parsed()) run_qcond(qa);
  } catch (const NumericalError& e) {
    return fail(kExitNumerical, e.what());
  } catch (const ValidationError& e) {
    return fail(kExitValidation, e.what());
  } catch (const nlohmann::json::exception& e) {
    return fail(kExitValidation, std::string("malformed input: ") + e.what());
  } catch (const std::exception& e) {
    return fail(kExitNumerical, e.what());
  }
  return 0;
}
