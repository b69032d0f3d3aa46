#include "bss/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bss {

namespace {

// Cholesky solve of the symmetric positive definite system g h = c, with g
// given as a dense row-major matrix. g is overwritten by its factor.
std::vector<double> cholesky_solve(std::vector<double>& g, int n,
                                   const std::vector<double>& c) {
  for (int k = 0; k < n; ++k) {
    double diag = g[static_cast<size_t>(k) * n + k];
    for (int p = 0; p < k; ++p) {
      const double l = g[static_cast<size_t>(k) * n + p];
      diag -= l * l;
    }
    if (diag <= 0.0) throw Error("sdr: gram matrix lost positive definiteness");
    const double lkk = std::sqrt(diag);
    g[static_cast<size_t>(k) * n + k] = lkk;
    for (int r = k + 1; r < n; ++r) {
      double acc = g[static_cast<size_t>(r) * n + k];
      for (int p = 0; p < k; ++p)
        acc -= g[static_cast<size_t>(r) * n + p] * g[static_cast<size_t>(k) * n + p];
      g[static_cast<size_t>(r) * n + k] = acc / lkk;
    }
  }
  std::vector<double> y(n);
  for (int r = 0; r < n; ++r) {
    double acc = c[r];
    for (int p = 0; p < r; ++p) acc -= g[static_cast<size_t>(r) * n + p] * y[p];
    y[r] = acc / g[static_cast<size_t>(r) * n + r];
  }
  std::vector<double> h(n);
  for (int r = n - 1; r >= 0; --r) {
    double acc = y[r];
    for (int p = r + 1; p < n; ++p) acc -= g[static_cast<size_t>(p) * n + r] * h[p];
    h[r] = acc / g[static_cast<size_t>(r) * n + r];
  }
  return h;
}

}  // namespace

double sdr(const std::vector<double>& estimate,
           const std::vector<double>& reference, int filter_taps) {
  const int len = static_cast<int>(reference.size());
  if (estimate.size() != reference.size())
    throw LengthMismatch("sdr: estimate/reference length mismatch");
  if (len < filter_taps) throw LengthMismatch("sdr: signal shorter than filter");

  double ref_energy = 0.0;
  for (double v : reference) ref_energy += v * v;
  if (ref_energy <= 0.0) throw SilentReference("sdr: all-zero reference");

  // Autocorrelation over the zero-extended domain makes the Gram matrix
  // exactly Toeplitz: G[a][b] = r[|a-b|].
  std::vector<double> r(filter_taps, 0.0);
  for (int k = 0; k < filter_taps; ++k) {
    double acc = 0.0;
    for (int t = k; t < len; ++t) acc += reference[t] * reference[t - k];
    r[k] = acc;
  }
  std::vector<double> c(filter_taps, 0.0);
  for (int a = 0; a < filter_taps; ++a) {
    double acc = 0.0;
    for (int t = a; t < len; ++t) acc += estimate[t] * reference[t - a];
    c[a] = acc;
  }

  std::vector<double> g(static_cast<size_t>(filter_taps) * filter_taps);
  const double load = 1e-10 * r[0];
  for (int a = 0; a < filter_taps; ++a)
    for (int b = 0; b < filter_taps; ++b)
      g[static_cast<size_t>(a) * filter_taps + b] =
          r[std::abs(a - b)] + ((a == b) ? load : 0.0);
  const std::vector<double> h = cholesky_solve(g, filter_taps, c);

  // Energies over the full convolution support.
  double starget = 0.0, enoise = 0.0;
  const int span = len + filter_taps - 1;
  for (int t = 0; t < span; ++t) {
    double fit = 0.0;
    const int a_lo = std::max(0, t - len + 1);
    const int a_hi = std::min(filter_taps - 1, t);
    for (int a = a_lo; a <= a_hi; ++a) fit += h[a] * reference[t - a];
    const double est = (t < len) ? estimate[t] : 0.0;
    const double err = est - fit;
    starget += fit * fit;
    enoise += err * err;
  }
  if (enoise <= 0.0) return 100.0;
  return std::min(100.0, 10.0 * std::log10(starget / enoise));
}

SdrReport best_permutation_sdr(const std::vector<std::vector<double>>& estimates,
                               const std::vector<std::vector<double>>& references,
                               int filter_taps) {
  const int n = static_cast<int>(references.size());
  if (static_cast<int>(estimates.size()) != n)
    throw LengthMismatch("best_permutation_sdr: estimate/reference count mismatch");
  if (n < 1 || n > 4)
    throw ConfigMismatch("best_permutation_sdr: 1..4 sources supported");

  // Score every (estimate, reference) pair once.
  std::vector<std::vector<double>> score(n, std::vector<double>(n));
  for (int e = 0; e < n; ++e)
    for (int r = 0; r < n; ++r) score[e][r] = sdr(estimates[e], references[r], filter_taps);

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<int> best = perm;
  double best_mean = -1e300;
  do {
    double mean = 0.0;
    for (int r = 0; r < n; ++r) mean += score[perm[r]][r];
    mean /= n;
    if (mean > best_mean) {
      best_mean = mean;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  SdrReport report;
  report.permutation = best;
  report.per_source_db.resize(n);
  for (int r = 0; r < n; ++r) report.per_source_db[r] = score[best[r]][r];
  report.mean_db = best_mean;
  return report;
}

SdrReport sdr_improvement(const MixtureScene& scene,
                          const std::vector<std::vector<double>>& estimates,
                          int reference_channel, int filter_taps) {
  const int n = static_cast<int>(scene.ground_truth_images.size());
  std::vector<std::vector<double>> references(n);
  for (int k = 0; k < n; ++k)
    references[k] = scene.ground_truth_images[k].channels[reference_channel];

  SdrReport separated = best_permutation_sdr(estimates, references, filter_taps);

  const std::vector<std::vector<double>> mixture_stand_in(
      n, scene.mixture.channels[reference_channel]);
  const SdrReport unprocessed =
      best_permutation_sdr(mixture_stand_in, references, filter_taps);

  separated.mean_improvement_db = separated.mean_db - unprocessed.mean_db;
  return separated;
}

}  // namespace bss
