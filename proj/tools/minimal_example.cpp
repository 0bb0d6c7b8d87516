// Tracks a slowly rotating rank-5 stream with 30% of entries observed and
// prints the running averaging error every 50 slices.

#include <cstdio>

#include "olstec/olstec.hpp"

int main() {
  olstec::SynthConfig synth;  // 50 x 50 slices, rank 5, angle pi/36
  synth.steps = 300;
  synth.ratio = 0.3;
  olstec::SynthStream stream(synth);

  olstec::TrackerConfig config;
  config.rank = 5;
  config.lambda = 0.5;
  config.mu = 1e-3;
  olstec::OlstecTracker tracker({synth.rows, synth.cols, config.rank}, config);

  olstec::RunningAverage error;
  while (!stream.done()) {
    const olstec::SynthSlice slice = stream.next();
    const olstec::StepOutput out = tracker.step(slice.observation);
    const auto r = olstec::normalized_residual(out.prediction, slice.truth, olstec::ResidualMode::full);
    if (r) error.push(*r);
    if (slice.observation.t % 50 == 0)
      std::printf("t=%3zu  residual=%.3e  running_avg=%.3e\n", slice.observation.t, r.value_or(0.0),
                  error.value());
  }
  return 0;
}
