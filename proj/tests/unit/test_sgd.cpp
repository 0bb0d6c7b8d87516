#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "olstec/metrics.hpp"
#include "olstec/sgd.hpp"
#include "olstec/synth.hpp"
#include "support/oracles.hpp"

using namespace olstec;

namespace {

SgdConfig make_sgd(std::size_t rank, double mu, double stepsize) {
  SgdConfig c;
  c.rank = rank;
  c.mu = mu;
  c.stepsize = stepsize;
  c.seed = 7777;
  return c;
}

// Largest relative deviation between the analytic gradient and central
// differences of masked_loss, over every entry of A and C.
double gradient_check(CpFactors f, const SliceObservation& obs, double mu) {
  const MaskedLossGradient g = masked_loss_gradient(f, obs, mu);
  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](RealMatrix& m, const RealMatrix& grad) {
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double keep = m.values()[i];
      m.values()[i] = keep + h;
      const double up = masked_loss(f, obs, mu);
      m.values()[i] = keep - h;
      const double down = masked_loss(f, obs, mu);
      m.values()[i] = keep;
      const double fd = (up - down) / (2.0 * h);
      const double an = grad.values()[i];
      worst = std::max(worst, std::abs(fd - an) / std::max(1.0, std::abs(an)));
    }
  };
  probe(f.a, g.grad_a);
  probe(f.c, g.grad_c);
  return worst;
}

} // namespace

TEST_CASE("zero stepsize only refreshes b", "[sgd]") {
  std::mt19937_64 rng(1);
  SgdTracker t({4, 3, 2}, make_sgd(2, 0.1, 0.0));
  const CpFactors before = t.state().factors;
  const SliceObservation obs(1, testing::random_matrix(4, 3, rng), testing::random_mask(4, 3, 0.7, rng));
  const StepOutput out = t.step(obs);
  CHECK(t.state().factors.a == before.a);
  CHECK(t.state().factors.c == before.c);
  CHECK(out.b == solve_b(before, obs, t.config().lambda));
}

TEST_CASE("an empty mask with mu = 0 leaves the factors alone", "[sgd]") {
  std::mt19937_64 rng(2);
  SgdTracker t({5, 5, 3}, make_sgd(3, 0.0, 10.0));
  const CpFactors before = t.state().factors;
  t.step({1, testing::random_matrix(5, 5, rng), MaskMatrix(5, 5)});
  CHECK(t.state().factors.a == before.a);
  CHECK(t.state().factors.c == before.c);
}

TEST_CASE("analytic gradient matches central differences", "[sgd][gradient]") {
  std::mt19937_64 rng(3);
  SECTION("4x3, rank 2") {
    const CpFactors f = testing::random_factors(4, 3, 2, rng);
    const SliceObservation obs(1, testing::random_matrix(4, 3, rng), testing::random_mask(4, 3, 0.6, rng));
    CHECK(gradient_check(f, obs, 0.1) < 1e-6);
  }
  SECTION("random small instances") {
    for (int i = 0; i < 20; ++i) {
      const std::size_t rows = 2 + rng() % 5, cols = 2 + rng() % 5, rank = 1 + rng() % 3;
      const CpFactors f = testing::random_factors(rows, cols, rank, rng);
      const SliceObservation obs(1, testing::random_matrix(rows, cols, rng),
                                 testing::random_mask(rows, cols, 0.5, rng));
      CHECK(gradient_check(f, obs, i % 2 ? 0.1 : 0.0) < 1e-6);
    }
  }
}

TEST_CASE("step updates A and C from the same pre-step factors", "[sgd]") {
  std::mt19937_64 rng(4);
  const SgdConfig cfg = make_sgd(2, 0.1, 1.0);
  SgdState s = init_sgd({4, 4, 2}, cfg);
  const SliceObservation obs(1, testing::random_matrix(4, 4, rng), testing::random_mask(4, 4, 0.5, rng));
  CpFactors f = s.factors;
  f.b = solve_b(f, obs, cfg.lambda);
  const MaskedLossGradient g = masked_loss_gradient(f, obs, cfg.mu);
  const double step = cfg.stepsize / static_cast<double>(count_observed(obs.mask));
  sgd_step(s, cfg, obs);
  for (std::size_t i = 0; i < f.a.size(); ++i)
    CHECK(s.factors.a.values()[i] == f.a.values()[i] - step * g.grad_a.values()[i]);
  for (std::size_t i = 0; i < f.c.size(); ++i)
    CHECK(s.factors.c.values()[i] == f.c.values()[i] - step * g.grad_c.values()[i]);
}

TEST_CASE("static noiseless stream: observed residual decreases", "[sgd][convergence]") {
  SynthConfig sc;
  sc.rows = 20;
  sc.cols = 20;
  sc.rank = 3;
  sc.angle = 0.0;
  sc.noise = 0.0;
  sc.ratio = 0.5;
  sc.steps = 100;
  SynthStream stream(sc);
  // 5 / |Omega| is about 0.025 per observed entry here.
  SgdTracker t({20, 20, 3}, make_sgd(3, 0.0, 5.0));
  RunningAverage early, late;
  while (!stream.done()) {
    const SynthSlice s = stream.next();
    const StepOutput out = t.step(s.observation);
    const double r = *normalized_residual(out.prediction_before_update, s.observation.values,
                                          ResidualMode::observed_only, &s.observation.mask);
    REQUIRE(std::isfinite(r));
    if (s.observation.t <= 10) early.push(r);
    if (s.observation.t > 90) late.push(r);
  }
  CHECK(late.value() < 0.5 * early.value());
}

TEST_CASE("sgd config validation", "[sgd]") {
  CHECK_THROWS_AS(SgdTracker({2, 2, 1}, make_sgd(1, -1.0, 1.0)), ConfigError);
  CHECK_THROWS_AS(SgdTracker({2, 2, 1}, make_sgd(1, 0.1, -1.0)), ConfigError);
}
