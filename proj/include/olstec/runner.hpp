#pragma once

// Experiment orchestration shared by the CLI and the acceptance suite:
// stream slices from a synthetic generator or from TNS3 files through one
// tracker, log per-step metrics, and aggregate repetitions.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "olstec/error.hpp"
#include "olstec/io.hpp"
#include "olstec/metrics.hpp"
#include "olstec/random.hpp"
#include "olstec/sgd.hpp"
#include "olstec/synth.hpp"
#include "olstec/tracker.hpp"

namespace olstec {

enum class Algorithm { olstec, sgd };

/// Which reconstruction is scored: after the factor updates (default) or the
/// one-step-ahead estimate formed before them.
enum class PredictionKind { post_update, pre_update };

struct FileSource {
  std::filesystem::path tensor;
  std::optional<std::filesystem::path> mask_file;
  std::optional<double> mask_ratio;  // used when no mask file is given; default 1
  std::optional<std::filesystem::path> truth;
};

struct RunSpec {
  std::variant<SynthConfig, FileSource> input = SynthConfig{};
  Algorithm algorithm = Algorithm::olstec;
  TrackerConfig tracker;
  SgdConfig sgd;
  std::size_t repetitions = 1;
  std::uint64_t seed = 0;
  /// Base seed for masks; the run seed when unset.
  std::optional<std::uint64_t> mask_seed;
  PredictionKind prediction = PredictionKind::post_update;
  /// Unset: full residual when ground truth exists, observed-only otherwise.
  std::optional<ResidualMode> mode;
  std::filesystem::path out;

  std::size_t rank() const noexcept {
    return algorithm == Algorithm::sgd ? sgd.rank : tracker.rank;
  }

  std::string algo_name() const { return algorithm == Algorithm::sgd ? "sgd" : "olstec"; }

  std::string variant_name() const {
    if (algorithm == Algorithm::sgd) return "sgd";
    if (tracker.variant == Variant::windowed) return "window" + std::to_string(tracker.window);
    return to_string(tracker.variant);
  }

  void validate() const {
    detail::require_config(repetitions >= 1, "RunSpec: repetitions must be >= 1");
    if (algorithm == Algorithm::sgd)
      sgd.validate();
    else
      tracker.validate();
    if (const auto* synth = std::get_if<SynthConfig>(&input)) {
      synth->validate();
    } else {
      const auto& file = std::get<FileSource>(input);
      detail::require_config(!file.tensor.empty(), "RunSpec: missing input tensor path");
      detail::require_config(!(file.mask_file && file.mask_ratio),
                             "RunSpec: give either a mask file or a mask ratio, not both");
      if (file.mask_ratio) {
        detail::require_config(*file.mask_ratio > 0.0 && *file.mask_ratio <= 1.0,
                               "RunSpec: mask ratio must lie in (0, 1]");
      }
    }
  }
};

struct RepetitionResult {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::vector<io::ResultRow> rows;
  /// Set when a numerical failure aborted the repetition.
  std::optional<std::string> failure;

  double final_running_average() const noexcept {
    return rows.empty() ? std::nan("") : rows.back().running_avg;
  }
};

struct RunSummary {
  std::vector<RepetitionResult> repetitions;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over completed repetitions
  std::size_t completed = 0;
};

namespace detail {

/// Loaded file input, validated once before any repetition runs.
struct LoadedFiles {
  std::vector<RealMatrix> values;
  std::vector<MaskMatrix> masks;  // empty when generated per repetition
  std::vector<RealMatrix> truth;  // empty when absent
};

inline LoadedFiles load_files(const FileSource& src) {
  LoadedFiles f;
  f.values = io::read_tensor(src.tensor);
  detail::require_config(!f.values.empty(), src.tensor.string() + ": tensor has no slices");
  const auto& first = f.values.front();
  if (src.mask_file) {
    f.masks = io::read_mask(*src.mask_file);
    detail::require_dims(f.masks.size() == f.values.size() &&
                             f.masks.front().same_shape(first),
                         src.mask_file->string() + ": mask dimensions differ from the tensor");
  }
  if (src.truth) {
    f.truth = io::read_tensor(*src.truth);
    detail::require_dims(f.truth.size() == f.values.size() && f.truth.front().same_shape(first),
                         src.truth->string() + ": truth dimensions differ from the tensor");
  }
  return f;
}

inline std::filesystem::path with_suffix(const std::filesystem::path& out, const std::string& tag) {
  auto stem = out.stem().string();
  auto ext = out.extension().string();
  if (ext.empty()) ext = ".csv";
  return out.parent_path() / (stem + tag + ext);
}

} // namespace detail

inline std::filesystem::path repetition_path(const RunSpec& spec, std::size_t rep) {
  if (spec.repetitions == 1) return spec.out;
  return detail::with_suffix(spec.out, ".rep" + std::to_string(rep));
}

inline std::filesystem::path summary_path(const RunSpec& spec) {
  return detail::with_suffix(spec.out, ".summary");
}

/// Any tracker exposing `StepOutput step(const SliceObservation&)`.
template <typename Tracker>
concept SliceTracker = requires(Tracker t, const SliceObservation& obs) {
  { t.step(obs) } -> std::same_as<StepOutput>;
};

/// Feeds `next()` slices through `tracker`, logging one row per step.
/// `next` returns false at end of stream; `truth` may be left empty.
template <SliceTracker Tracker, typename Next>
void stream_through(Tracker& tracker, Next&& next, const RunSpec& spec, RepetitionResult& result) {
  RunningAverage avg;
  SliceObservation obs;
  RealMatrix truth;
  while (next(obs, truth)) {
    const auto start = std::chrono::steady_clock::now();
    StepOutput out = tracker.step(obs);
    const auto stop = std::chrono::steady_clock::now();

    const RealMatrix& estimate =
        spec.prediction == PredictionKind::post_update ? out.prediction : out.prediction_before_update;
    const bool have_truth = !truth.empty();
    const ResidualMode mode =
        spec.mode.value_or(have_truth ? ResidualMode::full : ResidualMode::observed_only);
    const RealMatrix& reference = have_truth ? truth : obs.values;
    io::ResultRow row;
    row.t = obs.t;
    row.residual = normalized_residual(estimate, reference, mode, &obs.mask);
    if (row.residual && !std::isfinite(*row.residual)) {
      throw NumericalError("non-finite residual at step " + std::to_string(obs.t));
    }
    if (row.residual) avg.push(*row.residual);
    row.running_avg = avg.value();
    row.elapsed_ms = std::chrono::duration<double, std::milli>(stop - start).count();
    row.algo = spec.algo_name();
    row.variant = spec.variant_name();
    result.rows.push_back(std::move(row));
  }
}

/// Runs every repetition of `spec` without touching the filesystem for output.
/// Repetition i uses base seed `spec.seed + i`, from which independent seeds
/// for the generator, the masks and the tracker initialization are derived.
inline RunSummary execute(const RunSpec& spec, std::ostream* log = nullptr) {
  spec.validate();
  std::optional<detail::LoadedFiles> files;
  if (const auto* src = std::get_if<FileSource>(&spec.input)) files = detail::load_files(*src);

  RunSummary summary;
  for (std::size_t rep = 0; rep < spec.repetitions; ++rep) {
    RepetitionResult result;
    result.index = rep;
    result.seed = spec.seed + rep;
    const std::uint64_t tracker_seed = derive_seed(result.seed, SeedStream::tracker);
    const std::uint64_t mask_seed =
        derive_seed(spec.mask_seed.value_or(spec.seed) + rep, SeedStream::mask);

    std::optional<SynthStream> synth;
    std::vector<MaskMatrix> masks;
    Dims dims{0, 0, spec.rank()};
    if (const auto* cfg = std::get_if<SynthConfig>(&spec.input)) {
      SynthConfig c = *cfg;
      c.seed = derive_seed(result.seed, SeedStream::generator);
      c.mask_seed = mask_seed;
      synth.emplace(c);
      dims.rows = c.rows;
      dims.cols = c.cols;
    } else {
      const auto& src = std::get<FileSource>(spec.input);
      const auto& first = files->values.front();
      dims.rows = first.rows();
      dims.cols = first.cols();
      if (files->masks.empty()) {
        masks = io::generate_mask({dims.rows, dims.cols, files->values.size()},
                                  src.mask_ratio.value_or(1.0), mask_seed);
      }
    }

    std::size_t t = 0;
    auto next = [&](SliceObservation& obs, RealMatrix& truth) {
      if (synth) {
        if (synth->done()) return false;
        SynthSlice s = synth->next();
        obs = std::move(s.observation);
        truth = std::move(s.truth);
        return true;
      }
      if (t >= files->values.size()) return false;
      const MaskMatrix& m = files->masks.empty() ? masks[t] : files->masks[t];
      obs = SliceObservation(t + 1, files->values[t], m);
      if (!files->truth.empty()) truth = files->truth[t];
      ++t;
      return true;
    };

    try {
      if (spec.algorithm == Algorithm::sgd) {
        SgdConfig cfg = spec.sgd;
        cfg.seed = tracker_seed;
        SgdTracker tracker(dims, cfg);
        stream_through(tracker, next, spec, result);
      } else {
        TrackerConfig cfg = spec.tracker;
        cfg.seed = tracker_seed;
        OlstecTracker tracker(dims, cfg);
        stream_through(tracker, next, spec, result);
      }
    } catch (const NumericalError& e) {
      result.failure = e.what();
      if (log) *log << "repetition " << rep << " aborted: " << e.what() << "\n";
    }
    summary.repetitions.push_back(std::move(result));
  }

  double sum = 0.0;
  for (const auto& r : summary.repetitions) {
    if (r.failure || r.rows.empty()) continue;
    sum += r.final_running_average();
    ++summary.completed;
  }
  if (summary.completed > 0) {
    summary.mean = sum / static_cast<double>(summary.completed);
    double sq = 0.0;
    for (const auto& r : summary.repetitions) {
      if (r.failure || r.rows.empty()) continue;
      const double d = r.final_running_average() - summary.mean;
      sq += d * d;
    }
    summary.stddev =
        summary.completed > 1 ? std::sqrt(sq / static_cast<double>(summary.completed - 1)) : 0.0;
  } else {
    summary.mean = summary.stddev = std::nan("");
  }
  return summary;
}

inline void write_summary(const std::filesystem::path& path, const RunSummary& s) {
  std::string out = "rep,seed,status,steps,final_running_avg\n";
  for (const auto& r : s.repetitions) {
    out += std::to_string(r.index) + "," + std::to_string(r.seed) + "," +
           (r.failure ? "failed" : "ok") + "," + std::to_string(r.rows.size()) + "," +
           io::format_real(r.final_running_average()) + "\n";
  }
  out += "mean,,,," + io::format_real(s.mean) + "\n";
  out += "stddev,,,," + io::format_real(s.stddev) + "\n";
  io::detail::write_file(path, out);
}

/// execute() plus the per-repetition results CSVs and the summary file.
inline RunSummary run(const RunSpec& spec, std::ostream* log = nullptr) {
  detail::require_config(!spec.out.empty(), "RunSpec: output path is required");
  RunSummary summary = execute(spec, log);
  for (const auto& r : summary.repetitions) io::write_results_csv(repetition_path(spec, r.index), r.rows);
  write_summary(summary_path(spec), summary);
  return summary;
}

// ---- timing benchmark ---------------------------------------------------------

struct BenchSpec {
  std::size_t rows = 150;
  std::size_t cols = 150;
  std::size_t steps = 20;  // timed iterations per measurement
  std::vector<std::size_t> ranks{10, 20, 40};
  double ratio = 0.3;
  TrackerConfig tracker;  // variant is overridden per measurement
  SgdConfig sgd;
  bool include_sgd = true;
  std::size_t repeats = 3;  // the median over repeats is reported
  std::uint64_t seed = 0;
};

struct BenchRow {
  std::string algo;  // "full", "simplified" or "sgd"
  std::size_t rank = 0;
  double ms_per_iteration = 0.0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  /// simplified / full per rank, in BenchSpec::ranks order.
  std::vector<double> simplified_ratio;

  std::optional<double> time(const std::string& algo, std::size_t rank) const {
    for (const auto& r : rows)
      if (r.algo == algo && r.rank == rank) return r.ms_per_iteration;
    return std::nullopt;
  }

  /// Simplified-to-full time ratio strictly decreases as the rank grows.
  bool ratio_decreasing() const {
    for (std::size_t i = 1; i < simplified_ratio.size(); ++i)
      if (!(simplified_ratio[i] < simplified_ratio[i - 1])) return false;
    return simplified_ratio.size() >= 2;
  }
};

namespace detail {

template <typename Tracker>
double time_stream(Tracker& tracker, const std::vector<SliceObservation>& slices) {
  const auto start = std::chrono::steady_clock::now();
  for (const auto& s : slices) (void)tracker.step(s);
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() /
         static_cast<double>(slices.size());
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace detail

/// Mean per-iteration wall time of each algorithm at each rank. Slices are
/// generated up front so only tracker work is timed.
inline BenchReport bench(const BenchSpec& spec) {
  detail::require_config(!spec.ranks.empty() && spec.steps >= 1 && spec.repeats >= 1,
                         "BenchSpec: need ranks, steps >= 1 and repeats >= 1");
  BenchReport report;
  for (std::size_t rank : spec.ranks) {
    SynthConfig sc;
    sc.rows = spec.rows;
    sc.cols = spec.cols;
    sc.steps = spec.steps;
    sc.rank = std::max<std::size_t>(rank, 2);
    sc.ratio = spec.ratio;
    sc.seed = derive_seed(spec.seed, SeedStream::generator);
    sc.mask_seed = derive_seed(spec.seed, SeedStream::mask);
    SynthStream gen(sc);
    std::vector<SliceObservation> slices;
    while (!gen.done()) slices.push_back(gen.next().observation);

    const Dims dims{spec.rows, spec.cols, rank};
    auto measure_olstec = [&](Variant v) {
      std::vector<double> times;
      for (std::size_t k = 0; k < spec.repeats; ++k) {
        TrackerConfig cfg = spec.tracker;
        cfg.rank = rank;
        cfg.variant = v;
        cfg.seed = derive_seed(spec.seed + k, SeedStream::tracker);
        OlstecTracker tracker(dims, cfg);
        times.push_back(detail::time_stream(tracker, slices));
      }
      return detail::median(times);
    };
    const double full = measure_olstec(Variant::full);
    const double simplified = measure_olstec(Variant::simplified);
    report.rows.push_back({"full", rank, full});
    report.rows.push_back({"simplified", rank, simplified});
    report.simplified_ratio.push_back(simplified / full);
    if (spec.include_sgd) {
      std::vector<double> times;
      for (std::size_t k = 0; k < spec.repeats; ++k) {
        SgdConfig cfg = spec.sgd;
        cfg.rank = rank;
        cfg.seed = derive_seed(spec.seed + k, SeedStream::tracker);
        SgdTracker tracker(dims, cfg);
        times.push_back(detail::time_stream(tracker, slices));
      }
      report.rows.push_back({"sgd", rank, detail::median(times)});
    }
  }
  return report;
}

} // namespace olstec
