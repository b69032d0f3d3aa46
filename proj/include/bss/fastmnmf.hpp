#pragma once

#include <cstdint>
#include <vector>

#include "bss/ilrma.hpp"
#include "bss/linalg.hpp"
#include "bss/rng.hpp"
#include "bss/signal.hpp"
#include "bss/tensors.hpp"
#include "bss/trace.hpp"

namespace bss {

// Per-frequency joint diagonalizers, one square matrix per bin. Row m of
// q[i] is the conjugated projection vector for diagonal channel m, so the
// diagonalized cell is x~_ij = q[i] * x_ij.
struct DiagonalizerSet {
  std::vector<CMat> q;
};

// Variance model shared across channels: every source's spectrogram variance
// is a nonnegative mix (z) of K basis/activation pairs (t, v), and each
// source contributes to diagonal channel m with gain g(i, n, m). The model
// prediction for channel m is d(i, j, m) = sum_n sigma(i, n, j) g(i, n, m)
// with sigma(i, n, j) = sum_k t(i, k) v(k, j) z(k, n).
struct SharedSourceModel {
  RealMatrix t;  // bins x rank
  RealMatrix v;  // rank x frames
  RealMatrix z;  // rank x sources, rows on the simplex
  Tensor3 g;     // bins x sources x channels
};

// t and v i.i.d. uniform on [0.1, 1); z uniform then normalized so each
// basis row sums to one; g deterministic: flat 1, or 1 + [m == n] when
// emphasize_own_channel is set (a per-source channel emphasis variant).
SharedSourceModel init_shared_model(int bins, int frames, int rank,
                                    int sources, int channels, Rng& rng,
                                    bool emphasize_own_channel = false);

// sigma(i, n, j) = sum_k t v z, floored. Shape bins x sources x frames.
Tensor3 source_variances(const SharedSourceModel& model);

// d(i, j, m) = sum_n sigma(i, n, j) g(i, n, m), floored.
// Shape bins x frames x channels.
Tensor3 model_denominators(const SharedSourceModel& model,
                           const Tensor3& sigma);

// p(i, j, m) = |q_im^H x_ij|^2. Shape bins x frames x channels.
Tensor3 diagonalized_powers(const DiagonalizerSet& diag, const Spectrogram& x);

// Negative log-likelihood (constants dropped): sum of p/d + log d minus
// twice the frame count times log |det Q_i|. Throws SingularDiagonalizer
// when a determinant vanishes.
double fastmnmf_cost(const Spectrogram& x, const DiagonalizerSet& diag,
                     const SharedSourceModel& model);

enum class InitStrategy { identity, pca, ilrma };

// identity: Q_i = E. pca: Q_i whitens the per-bin sample covariance
// (inverse-sqrt-eigenvalue-scaled eigenvectors); throws DegenerateCovariance
// when an eigenvalue falls below the variance floor. ilrma: Q_i copies the
// given demixing matrices (required for that strategy).
DiagonalizerSet init_q(InitStrategy strategy, const Spectrogram& x,
                       const DemixingSet* demixing = nullptr);

// One iterative-projection sweep over every bin and channel, using the
// model denominators as inverse weights. denominator_offset is added to
// every d entry when building the weighted scatters; callers retry once
// with a small positive offset after SingularUpdate.
void update_q_ip(DiagonalizerSet& diag, const Spectrogram& x,
                 const SharedSourceModel& model,
                 double denominator_offset = 0.0);

// Multiplicative square-root updates of the individual parameter blocks.
// Each function recomputes the model denominators itself, updates one
// block, and re-applies that block's floor and normalization (z: rows to
// the simplex, compensated into t; g: per-bin mean one, compensated into
// t), so the normalizations never change the model prediction d. `power`
// is the diagonalized-power tensor from diagonalized_powers.
void update_basis(SharedSourceModel& model, const Tensor3& power);        // t
void update_activation(SharedSourceModel& model, const Tensor3& power);   // v
void update_source_mix(SharedSourceModel& model, const Tensor3& power);   // z
void update_spatial_gain(SharedSourceModel& model, const Tensor3& power); // g

// The four updates in the order t, v, z, g.
void update_tvzg(SharedSourceModel& model, const Tensor3& power);

// Source images through the multichannel Wiener filter in the diagonalized
// domain, evaluated at the reference channel: output channel n holds
// row `reference_channel` of Q_i^{-1} applied to the per-source share
// (sigma g / d) of Q_i x_ij. Throws SingularDiagonalizer when a Q_i is not
// invertible.
Spectrogram wiener_reconstruct(const Spectrogram& x,
                               const DiagonalizerSet& diag,
                               const SharedSourceModel& model,
                               int reference_channel = 0);

struct FastmnmfConfig {
  int iterations = 300;
  int rank = 20;  // K, total basis count shared by all sources
  InitStrategy init = InitStrategy::identity;
  std::uint64_t seed = 0;
  bool emphasize_own_channel = false;
  int reference_channel = 0;
};

struct FastmnmfResult {
  DiagonalizerSet diagonalizer;
  SharedSourceModel model;
  Spectrogram separated;
  IterationTrace trace;
};

// Full pipeline: seeded model, Q from the chosen strategy (`demixing`
// required for InitStrategy::ilrma), then per iteration a Q sweep followed
// by the four multiplicative updates. Returns Wiener images and the
// per-iteration cost trace.
FastmnmfResult run_fastmnmf(const Spectrogram& x, const FastmnmfConfig& cfg,
                            const DemixingSet* demixing = nullptr);

}  // namespace bss
