#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "olstec/io.hpp"
#include "olstec/runner.hpp"

using namespace olstec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("olstec_runner_" + std::to_string(std::random_device{}()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

RunSpec small_spec() {
  RunSpec s;
  SynthConfig c;
  c.rows = 15;
  c.cols = 12;
  c.steps = 40;
  s.input = c;
  return s;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("runs are reproducible from settings and seed", "[runner]") {
  const RunSummary a = execute(small_spec());
  const RunSummary b = execute(small_spec());
  REQUIRE(a.repetitions.size() == 1);
  REQUIRE(a.repetitions[0].rows.size() == 40);
  for (std::size_t i = 0; i < 40; ++i) {
    CHECK(a.repetitions[0].rows[i].residual == b.repetitions[0].rows[i].residual);
    CHECK(a.repetitions[0].rows[i].running_avg == b.repetitions[0].rows[i].running_avg);
  }
}

TEST_CASE("two repetitions are distinct and individually reproducible", "[runner]") {
  RunSpec s = small_spec();
  s.repetitions = 2;
  const RunSummary two = execute(s);
  REQUIRE(two.repetitions.size() == 2);
  CHECK(two.repetitions[0].final_running_average() != two.repetitions[1].final_running_average());

  RunSpec second = small_spec();
  second.seed = 1;
  const RunSummary alone = execute(second);
  CHECK(alone.repetitions[0].final_running_average() == two.repetitions[1].final_running_average());
  CHECK(two.completed == 2);
  const double m = 0.5 * (two.repetitions[0].final_running_average() +
                          two.repetitions[1].final_running_average());
  CHECK(two.mean == Catch::Approx(m).epsilon(1e-15));
}

TEST_CASE("logged running average matches the residual column", "[runner]") {
  RunSpec s = small_spec();
  s.algorithm = Algorithm::sgd;
  const RunSummary r = execute(s);
  RunningAverage replay;
  for (const auto& row : r.repetitions[0].rows) {
    REQUIRE(row.residual.has_value());
    CHECK(std::abs(replay.push(*row.residual) - row.running_avg) <= 1e-12);
    CHECK(row.algo == "sgd");
  }
}

TEST_CASE("the default synthetic experiment completes with a finite error", "[runner][slow]") {
  RunSpec s;
  SynthConfig c;  // 50 x 50, T = 500, R = 5, ratio 0.3, angle pi/36, noise 1e-3
  s.input = c;
  s.tracker.lambda = 0.5;
  s.tracker.mu = 1e-3;
  const RunSummary r = execute(s);
  REQUIRE(r.completed == 1);
  CHECK(r.repetitions[0].rows.size() == 500);
  CHECK(std::isfinite(r.mean));
  CHECK(r.mean < 1.0);
}

TEST_CASE("file input with generated masks and observed-only metrics", "[runner]") {
  TempDir dir;
  SynthConfig c;
  c.rows = 10;
  c.cols = 8;
  c.steps = 20;
  c.ratio = 1.0;
  SynthStream gen(c);
  std::vector<RealMatrix> values;
  while (!gen.done()) values.push_back(gen.next().observation.values);
  io::write_tensor(dir.path / "x.tns", values);

  RunSpec s;
  FileSource f;
  f.tensor = dir.path / "x.tns";
  f.mask_ratio = 0.5;
  s.input = f;
  s.out = dir.path / "out.csv";
  s.repetitions = 3;
  const RunSummary r = run(s);
  CHECK(r.completed == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto rows = io::read_results_csv(dir.path / ("out.rep" + std::to_string(i) + ".csv"));
    CHECK(rows.size() == 20);
  }
  CHECK(fs::exists(dir.path / "out.summary.csv"));

  SECTION("mask file and mask ratio together are rejected") {
    f.mask_file = dir.path / "m.msk";
    s.input = f;
    CHECK_THROWS_AS(execute(s), ConfigError);
  }
}

TEST_CASE("results path naming", "[runner]") {
  RunSpec s;
  s.out = "dir/res.csv";
  CHECK(repetition_path(s, 0) == fs::path("dir/res.csv"));
  s.repetitions = 2;
  CHECK(repetition_path(s, 1) == fs::path("dir/res.rep1.csv"));
  CHECK(summary_path(s) == fs::path("dir/res.summary.csv"));
}

TEST_CASE("bench reports a row per algorithm and rank", "[runner][bench]") {
  BenchSpec b;
  b.rows = 20;
  b.cols = 20;
  b.steps = 2;
  b.ranks = {2, 4};
  b.repeats = 1;
  const BenchReport rep = bench(b);
  CHECK(rep.rows.size() == 6);
  CHECK(rep.simplified_ratio.size() == 2);
  CHECK(rep.time("full", 4).has_value());
  CHECK_FALSE(rep.time("full", 3).has_value());
}

#ifdef OLSTEC_CLI_PATH

namespace {

int cli(const std::string& args, const fs::path& err) {
  const std::string cmd = std::string(OLSTEC_CLI_PATH) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("CLI synth then run on the written files", "[cli]") {
  TempDir dir;
  const fs::path err = dir.path / "err.txt";
  const std::string x = (dir.path / "x.tns").string();
  const std::string y = (dir.path / "y.tns").string();
  const std::string m = (dir.path / "m.msk").string();
  REQUIRE(cli("synth --L 12 --W 10 --T 15 --rank 3 --ratio 0.5 --seed 4 --out " + x +
                  " --truth-out " + y + " --mask-out " + m,
              err) == 0);
  CHECK(io::read_tensor(x).size() == 15);

  const fs::path out = dir.path / "res.csv";
  REQUIRE(cli("run --input " + x + " --mask-file " + m + " --truth " + y +
                  " --rank 3 --lambda 0.7 --mu 0.01 --gamma auto --variant window --window-len 5" +
                  " --ordering jacobi --seed 4 --out " + out.string(),
              err) == 0);
  const auto rows = io::read_results_csv(out);
  REQUIRE(rows.size() == 15);
  CHECK(rows[0].variant == "window5");

  // The synth route of `run` with the same seed sees the same stream.
  const fs::path out2 = dir.path / "res2.csv";
  REQUIRE(cli("run --input synth --L 12 --W 10 --T 15 --rank 3 --mask-ratio 0.5 --seed 4"
              " --lambda 0.7 --mu 0.01 --variant window --window-len 5 --ordering jacobi --out " +
                  out2.string(),
              err) == 0);
  const auto rows2 = io::read_results_csv(out2);
  REQUIRE(rows2.size() == 15);
  for (std::size_t i = 0; i < 15; ++i) CHECK(rows2[i].residual == rows[i].residual);
}

TEST_CASE("CLI sgd run and repetitions", "[cli]") {
  TempDir dir;
  const fs::path err = dir.path / "err.txt";
  const fs::path out = dir.path / "r.csv";
  REQUIRE(cli("run --input synth --L 10 --W 10 --T 10 --algo sgd --stepsize 5 --reps 2 --out " +
                  out.string(),
              err) == 0);
  CHECK(fs::exists(dir.path / "r.rep0.csv"));
  CHECK(fs::exists(dir.path / "r.rep1.csv"));
  CHECK(slurp(dir.path / "r.summary.csv").find("stddev") != std::string::npos);
}

TEST_CASE("CLI reports errors on one line with a kind", "[cli]") {
  TempDir dir;
  const fs::path err = dir.path / "err.txt";
  SECTION("bad config") {
    CHECK(cli("run --input synth --lambda 2 --out " + (dir.path / "r.csv").string(), err) == 2);
    const std::string text = slurp(err);
    CHECK(text.rfind("error: config: ", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
  }
  SECTION("missing input file") {
    CHECK(cli("run --input " + (dir.path / "none.tns").string(), err) == 3);
    CHECK(slurp(err).rfind("error: format: ", 0) == 0);
  }
  SECTION("unknown flag") {
    CHECK(cli("run --bogus 1", err) == 2);
    CHECK(slurp(err).rfind("error: usage: ", 0) == 0);
  }
  SECTION("bad variant") { CHECK(cli("run --variant nope", err) == 2); }
}

#endif
