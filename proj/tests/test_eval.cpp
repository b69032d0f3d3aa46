#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bss/eval.hpp"
#include "bss/rng.hpp"
#include "oracles.hpp"

using namespace bss;

namespace {

std::vector<double> noise(size_t len, std::uint64_t seed, double rms = 0.3) {
  Rng rng(seed);
  std::vector<double> x(len);
  for (auto& v : x) v = rms * rng.gaussian();
  return x;
}

}  // namespace

TEST_CASE("a perfect estimate hits the 100 dB cap") {
  const auto ref = noise(4000, 1);
  CHECK(sdr(ref, ref, 64) == 100.0);
}

TEST_CASE("a delay inside the projection span is transparent") {
  // Zero tail so the shift pushes nothing off the end of the buffer.
  auto ref = noise(4000, 2);
  for (size_t t = ref.size() - 16; t < ref.size(); ++t) ref[t] = 0.0;
  std::vector<double> delayed(ref.size(), 0.0);
  for (size_t t = 3; t < ref.size(); ++t) delayed[t] = ref[t - 3];
  CHECK(sdr(delayed, ref, 8) >= 99.0);
}

TEST_CASE("equal-power independent noise scores 0 dB") {
  const auto ref = noise(60000, 3);
  double ref_power = 0.0;
  for (double v : ref) ref_power += v * v;
  auto contaminant = noise(60000, 4);
  double noise_power = 0.0;
  for (double v : contaminant) noise_power += v * v;
  const double g = std::sqrt(ref_power / noise_power);
  std::vector<double> est(ref.size());
  for (size_t t = 0; t < ref.size(); ++t) est[t] = ref[t] + g * contaminant[t];
  CHECK(std::fabs(sdr(est, ref, 512)) < 0.3);
}

TEST_CASE("sdr is scale invariant") {
  const auto ref = noise(8000, 5);
  auto est = noise(8000, 6);
  for (size_t t = 0; t < est.size(); ++t) est[t] = 0.8 * ref[t] + 0.3 * est[t];
  const double base = sdr(est, ref, 128);
  for (double alpha : {3.7, -2.0, 1e-3}) {
    std::vector<double> scaled(est.size());
    for (size_t t = 0; t < est.size(); ++t) scaled[t] = alpha * est[t];
    CHECK(std::fabs(sdr(scaled, ref, 128) - base) < 1e-9);
  }
}

TEST_CASE("sdr matches the independent dense-projection oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 4; ++trial) {
    const auto ref = noise(1500, 100 + trial);
    auto est = noise(1500, 200 + trial, 0.1);
    for (size_t t = 0; t < est.size(); ++t) est[t] += 0.7 * ref[t];
    const double got = sdr(est, ref, 48);
    const double want = oracle::sdr(est, ref, 48);
    CHECK(std::fabs(got - want) < 1e-6);
  }
}

TEST_CASE("sdr is invariant to a shared delay") {
  // Zero tails longer than the largest shift so shifting drops only zeros
  // and the shifted pair carries exactly the same samples.
  auto ref = noise(9000, 8);
  auto est = noise(9000, 9, 0.05);
  for (size_t t = 0; t < est.size(); ++t) est[t] += ref[t];
  for (size_t t = ref.size() - 48; t < ref.size(); ++t) {
    ref[t] = 0.0;
    est[t] = 0.0;
  }
  const double base = sdr(est, ref, 64);
  for (int shift : {5, 40}) {
    std::vector<double> ref2(ref.size(), 0.0), est2(est.size(), 0.0);
    for (size_t t = shift; t < ref.size(); ++t) {
      ref2[t] = ref[t - shift];
      est2[t] = est[t - shift];
    }
    CHECK(std::fabs(sdr(est2, ref2, 64) - base) < 1e-6);
  }
}

TEST_CASE("sdr rejects silent and ragged input") {
  const std::vector<double> zero(2000, 0.0);
  const auto ref = noise(2000, 10);
  CHECK_THROWS_AS((void)sdr(ref, zero, 64), SilentReference);
  CHECK_THROWS_AS((void)sdr(noise(1999, 11), ref, 64), LengthMismatch);
  CHECK_THROWS_AS((void)sdr(noise(30, 12), noise(30, 13), 64), LengthMismatch);
}

TEST_CASE("best permutation finds a swap") {
  const auto a = noise(4000, 20);
  const auto b = noise(4000, 21);
  const std::vector<std::vector<double>> references = {a, b};
  const std::vector<std::vector<double>> estimates = {b, a};  // swapped
  const SdrReport report = best_permutation_sdr(estimates, references, 64);
  CHECK(report.permutation == std::vector<int>{1, 0});
  CHECK(report.per_source_db[0] == 100.0);
  CHECK(report.per_source_db[1] == 100.0);
}

TEST_CASE("single source uses the identity permutation") {
  const auto a = noise(3000, 22);
  const SdrReport report = best_permutation_sdr({a}, {a}, 64);
  CHECK(report.permutation == std::vector<int>{0});
  CHECK(report.mean_db == 100.0);
}

TEST_CASE("best permutation agrees with exhaustive oracle scoring") {
  // One good and one poor estimate; enumerate both assignments with the
  // oracle scorer and compare the chosen permutation and mean.
  const auto r0 = noise(1500, 30);
  const auto r1 = noise(1500, 31);
  auto e0 = noise(1500, 32, 0.05);
  auto e1 = noise(1500, 33, 0.4);
  for (size_t t = 0; t < r0.size(); ++t) {
    e0[t] += r1[t];  // e0 estimates r1 well
    e1[t] += 0.4 * r0[t];
  }
  const std::vector<std::vector<double>> estimates = {e0, e1};
  const std::vector<std::vector<double>> references = {r0, r1};
  const SdrReport report = best_permutation_sdr(estimates, references, 48);

  const double identity_mean =
      0.5 * (oracle::sdr(e0, r0, 48) + oracle::sdr(e1, r1, 48));
  const double swapped_mean =
      0.5 * (oracle::sdr(e1, r0, 48) + oracle::sdr(e0, r1, 48));
  const std::vector<int> want_perm =
      (swapped_mean > identity_mean) ? std::vector<int>{1, 0} : std::vector<int>{0, 1};
  CHECK(report.permutation == want_perm);
  CHECK(report.mean_db ==
        doctest::Approx(std::max(identity_mean, swapped_mean)).epsilon(1e-6));
}

TEST_CASE("too many sources are rejected") {
  const std::vector<std::vector<double>> five(5, noise(600, 40));
  CHECK_THROWS_AS((void)best_permutation_sdr(five, five, 32), ConfigMismatch);
}

TEST_CASE("sdr improvement of ground truth and of the mixture itself") {
  SyntheticSceneConfig cfg;
  cfg.t60_ms = 150.0;
  cfg.seed = 50;
  const MixtureScene scene = make_scene(cfg, 1.0);

  // Exact ground-truth estimates: separated mean hits the cap, improvement
  // is cap minus the mixture score, which must be positive.
  std::vector<std::vector<double>> perfect = {
      scene.ground_truth_images[0].channels[0],
      scene.ground_truth_images[1].channels[0]};
  const SdrReport top = sdr_improvement(scene, perfect, 0, 256);
  CHECK(top.mean_db == 100.0);
  CHECK(top.mean_improvement_db > 0.0);

  // The mixture duplicated as the estimate improves nothing.
  std::vector<std::vector<double>> unprocessed = {scene.mixture.channels[0],
                                                  scene.mixture.channels[0]};
  const SdrReport flat = sdr_improvement(scene, unprocessed, 0, 256);
  CHECK(std::fabs(flat.mean_improvement_db) < 1e-9);
}
