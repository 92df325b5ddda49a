#include <gtest/gtest.h>
#include <nlohmann/json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("breatherlab_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Result run(const std::string& args, const std::string& env = "") const {
    const std::string err = path("stderr.txt");
    const std::string cmd =
        env + " '" BREATHERLAB_CLI "' " + args + " > '" + path("stdout.txt") + "' 2> '" + err + "'";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err)};
  }

  static std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  fs::path dir_;
};

}  // namespace

TEST_F(Cli, LindstedtWritesSolutionSchema) {
  const auto r = run("lindstedt --modes 4 --epsilon 0.01 --amplitude 1 --tol 1e-10 --out " +
                     path("s.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(slurp(path("s.json")));
  EXPECT_EQ(j.at("epsilon").get<double>(), 0.01);
  EXPECT_EQ(j.at("mass").get<double>(), 0.0);
  ASSERT_EQ(j.at("omega").size(), 1u);
  ASSERT_EQ(j.at("orders").size(), 2u);
  for (const auto& o : j.at("orders"))
    EXPECT_EQ(o.at("coeffs").size(), o.at("kmax").get<std::size_t>() * o.at("lmax").get<std::size_t>());
}

TEST_F(Cli, LightConeVelocity) {
  const auto r = run("twave --velocity 1.0 --mass 1 --epsilon 0.1 --out " + path("t.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err, "error: light-cone degenerate velocity\n");
  EXPECT_FALSE(fs::exists(path("t.json")));
}

TEST_F(Cli, NoOrbitIsNumerical) {
  const auto r = run("twave --velocity 0.5 --mass 1 --epsilon 0.1 --out " + path("t.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}

TEST_F(Cli, ZeroStepsGiveHeaderOnly) {
  ASSERT_EQ(run("twave --out " + path("t.json")).code, 0);
  const auto r = run("evolve --init " + path("t.json") + " --steps 0 --out " + path("e.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(path("e.csv")), "step,time,energy,momentum\n");
}

TEST_F(Cli, ValidationErrors) {
  auto r = run("lindstedt --modes 0 --out " + path("s.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);

  r = run("evolve --init " + path("missing.json") + " --out " + path("e.csv"));
  EXPECT_EQ(r.code, 1);

  write("bad.json", "{ not json");
  r = run("evolve --init " + path("bad.json") + " --out " + path("e.csv"));
  EXPECT_EQ(r.code, 1);

  write("other.json", "{\"hello\": 1}");
  r = run("floquet --background " + path("other.json") + " --out " + path("f.json"));
  EXPECT_EQ(r.code, 1);

  r = run("frobnicate");
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(r.err.rfind("error: ", 0), 0u);
}

TEST_F(Cli, StepTooLargeIsNumerical) {
  ASSERT_EQ(run("twave --out " + path("t.json")).code, 0);
  const auto r = run("evolve --init " + path("t.json") + " --grid 64 --dt 0.5 --steps 2 --out " +
                     path("e.csv"));
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, ThreadCap) {
  ASSERT_EQ(run("lindstedt --modes 2 --out " + path("s.json")).code, 0);
  const std::string args =
      "floquet --background " + path("s.json") + " --modes 6 --dt 0.01 --out " + path("f.json");
  EXPECT_EQ(run(args, "BREATHERLAB_THREADS=zero").code, 1);
  const auto r = run(args, "BREATHERLAB_THREADS=2");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(path("f.json"))).at("multipliers").size(), 12u);
}

TEST_F(Cli, HelpListsDefaults) {
  const auto r = run("lindstedt --help");
  EXPECT_EQ(r.code, 0);
  const auto out = slurp(path("stdout.txt"));
  EXPECT_NE(out.find("--modes"), std::string::npos);
  EXPECT_NE(out.find("[4]"), std::string::npos);
}

TEST_F(Cli, StandingWavePipelineRoundTrip) {
  ASSERT_EQ(run("lindstedt --modes 4 --epsilon 0.05 --out " + path("s.json")).code, 0);
  auto r = run("evolve --init " + path("s.json") + " --dt 0.01 --steps 50 --record-every 10 --out " +
               path("e.csv") + " --state-out " + path("state.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("evolve --init " + path("state.json") + " --dt 0.01 --steps 10 --out " + path("e2.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("floquet --background " + path("s.json") + " --modes 8 --dt 0.01 --out " + path("f.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto f = json::parse(slurp(path("f.json")));
  EXPECT_EQ(f.at("multipliers").size(), 16u);
}

TEST_F(Cli, TravelingWavePipelineRoundTrip) {
  ASSERT_EQ(run("twave --mass 1 --epsilon 0.1 --velocity 2 --out " + path("t.json")).code, 0);
  auto r = run("evolve --init " + path("t.json") + " --steps 20 --out " + path("e.csv") +
               " --state-out " + path("state.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("evolve --init " + path("state.json") + " --steps 20 --out " + path("e2.csv"));
  ASSERT_EQ(r.code, 0) << r.err;
  r = run("floquet --background " + path("t.json") + " --modes 5 --out " + path("f.json"));
  ASSERT_EQ(r.code, 0) << r.err;
}

TEST_F(Cli, PolaronStateFile) {
  json s = {{"grid_n", 8},          {"boundary", "periodic"}, {"time", 0.0},
            {"mass", 1.0},          {"epsilon", 0.1},         {"coupling", 3.0},
            {"dimer_mass", 1.0},    {"phi", std::vector<double>(8, 0.1)},
            {"pi", std::vector<double>(8, 0.0)},
            {"psi_re", std::vector<double>(8, 0.2)}, {"psi_im", std::vector<double>(8, 0.0)},
            {"psi_t_re", std::vector<double>(8, 0.0)}, {"psi_t_im", std::vector<double>(8, 0.0)}};
  write("p.json", s.dump());
  const auto r = run("evolve --init " + path("p.json") + " --dt 0.01 --steps 5 --out " +
                     path("e.csv") + " --state-out " + path("p2.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(json::parse(slurp(path("p2.json"))).contains("psi_re"));
}

TEST_F(Cli, Qcond) {
  const json bell = {{"dim", 4},
                     {"re", {{0.5, 0, 0, 0.5}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0.5, 0, 0, 0.5}}},
                     {"im", {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}}};
  const json p0 = {{"dim", 2}, {"re", {{1, 0}, {0, 0}}}, {"im", {{0, 0}, {0, 0}}}};
  const json p1 = {{"dim", 2}, {"re", {{0, 0}, {0, 1}}}, {"im", {{0, 0}, {0, 0}}}};
  const json z = {{"dim", 2}, {"re", {{1, 0}, {0, -1}}}, {"im", {{0, 0}, {0, 0}}}};
  write("rho.json", bell.dump());
  write("p0.json", p0.dump());
  write("p1.json", p1.dump());
  write("z.json", z.dump());
  auto r = run("qcond --state " + path("rho.json") + " --projector " + path("p0.json") +
               " --d1 2 --d2 2 --observable " + path("z.json") + " --out " + path("c.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  const auto c = json::parse(slurp(path("c.json")));
  EXPECT_NEAR(c.at("probability").get<double>(), 0.5, 1e-15);
  EXPECT_NEAR(c.at("expectation").get<double>(), 0.5, 1e-15);
  EXPECT_NEAR(c.at("state").at("re")[0][0].get<double>(), 1.0, 1e-15);

  // The result file is itself accepted as a state.
  write("one.json", json{{"dim", 1}, {"re", {{1}}}, {"im", {{0}}}}.dump());
  r = run("qcond --state " + path("c.json") + " --projector " + path("one.json") +
          " --d1 2 --d2 1 --out " + path("c1.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(json::parse(slurp(path("c1.json"))).at("state"), c.at("state"));

  r = run("qcond --state " + path("rho.json") + " --projector " + path("p0.json") +
          " --d1 4 --d2 1 --out " + path("bad.json"));
  EXPECT_EQ(r.code, 1);

  write("pure00.json", json{{"dim", 4},
                            {"re", {{1, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}},
                            {"im", {{0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}, {0, 0, 0, 0}}}}
                           .dump());
  r = run("qcond --state " + path("pure00.json") + " --projector " + path("p1.json") +
          " --d1 2 --d2 2 --out " + path("c2.json"));
  EXPECT_EQ(r.code, 2);
}

TEST_F(Cli, DeterministicOutputs) {
  const std::string steps[] = {
      "lindstedt --modes 4 --epsilon 0.02 --out " + path("s.json"),
      "evolve --init " + path("s.json") + " --dt 0.01 --steps 100 --record-every 10 --out " +
          path("e.csv") + " --state-out " + path("state.json"),
      "floquet --background " + path("s.json") + " --modes 8 --dt 0.01 --out " + path("f.json"),
  };
  const std::string files[] = {"s.json", "e.csv", "state.json", "f.json"};
  std::map<std::string, std::string> first;
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& s : steps) ASSERT_EQ(run(s).code, 0);
    for (const auto& f : files) {
      const auto text = slurp(path(f));
      if (pass == 0) first[f] = text;
      else EXPECT_EQ(text, first[f]) << f;
    }
  }
}
