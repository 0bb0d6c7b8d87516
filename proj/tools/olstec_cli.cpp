// Command-line front end: `run`, `synth` and `bench`.
//
// On failure a single line `error: <kind>: <message>` is written to stderr and
// the exit code identifies the kind (2 config/usage, 3 file format, 4 numerical,
// 5 benchmark trend not met, 1 anything else).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "olstec/olstec.hpp"

namespace {

using namespace olstec;

int fail(const std::string& kind, const std::string& message, int code) {
  std::cerr << "error: " << kind << ": " << message << "\n";
  return code;
}

std::optional<double> parse_gamma(const std::string& text) {
  if (text == "auto") return std::nullopt;
  const double v = io::parse_real(text, "--gamma");
  detail::require_config(v > 0.0, "--gamma must be > 0 or \"auto\"");
  return v;
}

struct SynthFlags {
  std::size_t rows = 50;
  std::size_t cols = 50;
  std::size_t steps = 500;
  double alpha = std::numbers::pi / 36.0;
  double noise = 1e-3;

  void add(CLI::App* app) {
    app->add_option("--L", rows, "slice rows")->check(CLI::PositiveNumber);
    app->add_option("--W", cols, "slice columns")->check(CLI::PositiveNumber);
    app->add_option("--T", steps, "number of slices")->check(CLI::PositiveNumber);
    app->add_option("--alpha", alpha, "rotation angle per step, radians");
    app->add_option("--noise", noise, "noise standard deviation");
  }
};

struct RunFlags {
  std::string input = "synth";
  std::size_t rank = 5;
  std::optional<double> lambda;
  std::optional<double> mu;
  std::string gamma = "auto";
  std::string variant = "full";
  std::size_t window_len = 10;
  std::string ordering = "gauss-seidel";
  std::string algo = "olstec";
  double stepsize = 10.0;
  std::optional<double> mask_ratio;
  std::optional<std::uint64_t> mask_seed;
  std::string mask_file;
  std::string truth;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  std::string out = "results.csv";
  std::string predict = "post";
  std::string mode = "auto";
  SynthFlags synth;

  void add(CLI::App* app) {
    app->add_option("--input", input, "TNS3 tensor path, or \"synth\"");
    app->add_option("--rank", rank, "CP rank")->check(CLI::PositiveNumber);
    app->add_option("--lambda", lambda,
                    "olstec: forgetting factor (default 0.5); sgd: weight ridge (default 0.001)");
    app->add_option("--mu", mu, "olstec: regularizer (default 1e-3); sgd: factor ridge (default 0.1)");
    app->add_option("--gamma", gamma, "initial inverse scale, or \"auto\" for 1/mu");
    app->add_option("--variant", variant, "full | simplified | window")
        ->check(CLI::IsMember({"full", "simplified", "window"}));
    app->add_option("--window-len", window_len, "window length V")->check(CLI::PositiveNumber);
    app->add_option("--ordering", ordering, "gauss-seidel | jacobi")
        ->check(CLI::IsMember({"gauss-seidel", "jacobi"}));
    app->add_option("--algo", algo, "olstec | sgd")->check(CLI::IsMember({"olstec", "sgd"}));
    app->add_option("--stepsize", stepsize, "sgd stepsize")->check(CLI::NonNegativeNumber);
    app->add_option("--mask-ratio", mask_ratio, "observation ratio");
    app->add_option("--mask-seed", mask_seed, "base seed for generated masks");
    app->add_option("--mask-file", mask_file, "MSK3 mask for a file input");
    app->add_option("--truth", truth, "TNS3 ground truth for a file input");
    app->add_option("--reps", reps, "repetitions")->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "base seed");
    app->add_option("--out", out, "results CSV path");
    app->add_option("--predict", predict, "post | pre")->check(CLI::IsMember({"post", "pre"}));
    app->add_option("--mode", mode, "auto | full | observed")
        ->check(CLI::IsMember({"auto", "full", "observed"}));
    synth.add(app);
  }

  RunSpec spec() const {
    RunSpec s;
    s.algorithm = algo == "sgd" ? Algorithm::sgd : Algorithm::olstec;
    s.tracker.rank = rank;
    if (lambda && s.algorithm == Algorithm::olstec) s.tracker.lambda = *lambda;
    if (mu && s.algorithm == Algorithm::olstec) s.tracker.mu = *mu;
    s.tracker.gamma = parse_gamma(gamma);
    s.tracker.variant = variant == "simplified" ? Variant::simplified
                        : variant == "window"   ? Variant::windowed
                                                : Variant::full;
    s.tracker.window = window_len;
    s.tracker.ordering = ordering == "jacobi" ? UpdateOrdering::jacobi : UpdateOrdering::gauss_seidel;
    s.sgd.rank = rank;
    if (lambda && s.algorithm == Algorithm::sgd) s.sgd.lambda = *lambda;
    if (mu && s.algorithm == Algorithm::sgd) s.sgd.mu = *mu;
    s.sgd.stepsize = stepsize;
    s.repetitions = reps;
    s.seed = seed;
    s.mask_seed = mask_seed;
    s.prediction = predict == "pre" ? PredictionKind::pre_update : PredictionKind::post_update;
    if (mode == "full") s.mode = ResidualMode::full;
    if (mode == "observed") s.mode = ResidualMode::observed_only;
    s.out = out;

    if (input == "synth") {
      detail::require_config(mask_file.empty() && truth.empty(),
                             "--mask-file and --truth apply to file inputs only");
      SynthConfig c;
      c.rows = synth.rows;
      c.cols = synth.cols;
      c.steps = synth.steps;
      c.rank = rank;
      c.angle = synth.alpha;
      c.noise = synth.noise;
      c.ratio = mask_ratio.value_or(0.3);
      s.input = c;
    } else {
      FileSource f;
      f.tensor = input;
      if (!mask_file.empty()) f.mask_file = mask_file;
      f.mask_ratio = mask_ratio;
      if (!truth.empty()) f.truth = truth;
      s.input = f;
    }
    return s;
  }
};

int cmd_run(const RunFlags& flags) {
  const RunSpec spec = flags.spec();
  const RunSummary summary = run(spec, &std::cerr);
  std::cout << std::setprecision(6);
  for (const auto& r : summary.repetitions) {
    std::cout << "rep " << r.index << " seed " << r.seed << " steps " << r.rows.size();
    if (r.failure)
      std::cout << " FAILED: " << *r.failure << "\n";
    else
      std::cout << " running_avg " << r.final_running_average() << " -> "
                << repetition_path(spec, r.index).string() << "\n";
  }
  std::cout << "mean " << summary.mean << " stddev " << summary.stddev << " over "
            << summary.completed << "/" << summary.repetitions.size() << " repetitions -> "
            << summary_path(spec).string() << "\n";
  return summary.completed == summary.repetitions.size() ? 0 : 4;
}

struct SynthCmdFlags {
  SynthFlags dims;
  std::size_t rank = 5;
  double ratio = 0.3;
  std::uint64_t seed = 0;
  std::string out;
  std::string truth_out;
  std::string mask_out;

  void add(CLI::App* app) {
    dims.add(app);
    app->add_option("--rank", rank, "generating rank (>= 2)");
    app->add_option("--ratio", ratio, "observation ratio of the generated mask");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--out", out, "TNS3 path for the noisy observations")->required();
    app->add_option("--truth-out", truth_out, "TNS3 path for the noiseless slices");
    app->add_option("--mask-out", mask_out, "MSK3 path for the Bernoulli masks");
  }
};

int cmd_synth(const SynthCmdFlags& flags) {
  SynthConfig c;
  c.rows = flags.dims.rows;
  c.cols = flags.dims.cols;
  c.steps = flags.dims.steps;
  c.rank = flags.rank;
  c.angle = flags.dims.alpha;
  c.noise = flags.dims.noise;
  c.ratio = flags.ratio;
  // Same derivation as repetition 0 of `run --input synth --seed <seed>`.
  c.seed = derive_seed(flags.seed, SeedStream::generator);
  c.mask_seed = derive_seed(flags.seed, SeedStream::mask);
  SynthStream gen(c);
  std::vector<RealMatrix> observed, truth;
  std::vector<MaskMatrix> masks;
  while (!gen.done()) {
    SynthSlice s = gen.next();
    observed.push_back(std::move(s.observation.values));
    masks.push_back(std::move(s.observation.mask));
    truth.push_back(std::move(s.truth));
  }
  io::write_tensor(flags.out, observed);
  if (!flags.truth_out.empty()) io::write_tensor(flags.truth_out, truth);
  if (!flags.mask_out.empty()) io::write_mask(flags.mask_out, masks);
  std::cout << "wrote " << c.rows << "x" << c.cols << "x" << c.steps << " slices to " << flags.out
            << "\n";
  return 0;
}

struct BenchFlags {
  std::size_t rows = 150;
  std::size_t cols = 150;
  std::size_t steps = 20;
  std::vector<std::size_t> ranks{10, 20, 40};
  double mask_ratio = 0.3;
  double lambda = 0.5;
  double mu = 1e-3;
  std::string gamma = "auto";
  double stepsize = 10.0;
  std::size_t reps = 3;
  std::uint64_t seed = 0;
  bool no_sgd = false;
  std::string out;

  void add(CLI::App* app) {
    app->add_option("--L", rows, "slice rows")->check(CLI::PositiveNumber);
    app->add_option("--W", cols, "slice columns")->check(CLI::PositiveNumber);
    app->add_option("--T", steps, "timed slices per measurement")->check(CLI::PositiveNumber);
    app->add_option("--ranks", ranks, "ranks to time")->delimiter(',');
    app->add_option("--mask-ratio", mask_ratio, "observation ratio");
    app->add_option("--lambda", lambda, "olstec forgetting factor");
    app->add_option("--mu", mu, "olstec regularizer");
    app->add_option("--gamma", gamma, "initial inverse scale, or \"auto\"");
    app->add_option("--stepsize", stepsize, "sgd stepsize");
    app->add_option("--reps", reps, "repeats per measurement (median reported)")
        ->check(CLI::PositiveNumber);
    app->add_option("--seed", seed, "base seed");
    app->add_flag("--no-sgd", no_sgd, "skip the sgd baseline");
    app->add_option("--out", out, "optional CSV of the timing table");
  }
};

int cmd_bench(const BenchFlags& flags) {
  BenchSpec spec;
  spec.rows = flags.rows;
  spec.cols = flags.cols;
  spec.steps = flags.steps;
  spec.ranks = flags.ranks;
  spec.ratio = flags.mask_ratio;
  spec.tracker.lambda = flags.lambda;
  spec.tracker.mu = flags.mu;
  spec.tracker.gamma = parse_gamma(flags.gamma);
  spec.sgd.stepsize = flags.stepsize;
  spec.include_sgd = !flags.no_sgd;
  spec.repeats = flags.reps;
  spec.seed = flags.seed;
  const BenchReport report = bench(spec);

  std::ostringstream csv;
  csv << "algo,rank,ms_per_iteration\n";
  std::cout << "rank  algo        ms/iter\n";
  for (const auto& r : report.rows) {
    std::cout << std::setw(4) << r.rank << "  " << std::left << std::setw(10) << r.algo
              << std::right << "  " << std::fixed << std::setprecision(3) << r.ms_per_iteration
              << "\n";
    csv << r.algo << "," << r.rank << "," << io::format_real(r.ms_per_iteration) << "\n";
  }
  for (std::size_t i = 0; i < spec.ranks.size(); ++i) {
    std::cout << "rank " << spec.ranks[i] << " simplified/full " << std::setprecision(1)
              << 100.0 * report.simplified_ratio[i] << "%\n";
  }
  if (!flags.out.empty()) io::detail::write_file(flags.out, csv.str());
  if (spec.ranks.size() >= 2 && !report.ratio_decreasing())
    return fail("bench", "simplified/full time ratio does not decrease with rank", 5);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online low-rank tensor subspace tracking experiments"};
  app.require_subcommand(1);

  RunFlags run_flags;
  run_flags.add(app.add_subcommand("run", "stream a tensor through a tracker and log metrics"));
  SynthCmdFlags synth_flags;
  synth_flags.add(app.add_subcommand("synth", "write a rotating-subspace synthetic stream"));
  BenchFlags bench_flags;
  bench_flags.add(app.add_subcommand("bench", "per-iteration timing across ranks"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (app.got_subcommand("run")) return cmd_run(run_flags);
    if (app.got_subcommand("synth")) return cmd_synth(synth_flags);
    return cmd_bench(bench_flags);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), 2);
  } catch (const DimensionError& e) {
    return fail("config", e.what(), 2);
  } catch (const FormatError& e) {
    return fail("format", e.what(), 3);
  } catch (const NumericalError& e) {
    return fail("numerical", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
}
