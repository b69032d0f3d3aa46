#include "bss/fastmnmf.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace bss {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

// Per-bin contractions shared by the t, v, z updates:
//   phi(n, j) = sum_m g(i, n, m) p(i, j, m) / d(i, j, m)^2
//   psi(n, j) = sum_m g(i, n, m) / d(i, j, m)
void fill_phi_psi(const SharedSourceModel& model, const Tensor3& power,
                  const Tensor3& d, int i, RealMatrix& phi, RealMatrix& psi) {
  phi.fill(0.0);
  psi.fill(0.0);
  const int frames = d.n1;
  const int channels = d.n2;
  const int sources = model.g.n1;
  for (int j = 0; j < frames; ++j) {
    const double* pj = power.line(i, j);
    const double* dj = d.line(i, j);
    for (int m = 0; m < channels; ++m) {
      const double inv = 1.0 / dj[m];
      const double a = pj[m] * inv * inv;
      for (int n = 0; n < sources; ++n) {
        const double gg = model.g.at(i, n, m);
        phi.at(n, j) += gg * a;
        psi.at(n, j) += gg * inv;
      }
    }
  }
}

void check_positive_dims(const SharedSourceModel& model) {
  if (model.t.rows < 1 || model.t.cols < 1 || model.v.cols < 1 ||
      model.z.cols < 1 || model.g.n2 < 1)
    throw ConfigMismatch("shared source model has an empty dimension");
}

}  // namespace

SharedSourceModel init_shared_model(int bins, int frames, int rank,
                                    int sources, int channels, Rng& rng,
                                    bool emphasize_own_channel) {
  if (bins < 1 || frames < 1 || rank < 1 || sources < 1 || channels < 1)
    throw ConfigMismatch("init_shared_model: all dimensions must be positive");
  SharedSourceModel model;
  model.t = RealMatrix(bins, rank);
  for (double& x : model.t.v) x = rng.uniform(0.1, 1.0);
  model.v = RealMatrix(rank, frames);
  for (double& x : model.v.v) x = rng.uniform(0.1, 1.0);
  model.z = RealMatrix(rank, sources);
  for (int k = 0; k < rank; ++k) {
    double total = 0.0;
    for (int n = 0; n < sources; ++n) {
      model.z.at(k, n) = rng.uniform(0.1, 1.0);
      total += model.z.at(k, n);
    }
    for (int n = 0; n < sources; ++n) model.z.at(k, n) /= total;
  }
  model.g = Tensor3(bins, sources, channels);
  model.g.fill(1.0);
  if (emphasize_own_channel)
    for (int i = 0; i < bins; ++i)
      for (int n = 0; n < sources; ++n)
        if (n < channels) model.g.at(i, n, n) += 1.0;
  return model;
}

Tensor3 source_variances(const SharedSourceModel& model) {
  const int bins = model.t.rows;
  const int rank = model.t.cols;
  const int frames = model.v.cols;
  const int sources = model.z.cols;
  Tensor3 sigma(bins, sources, frames);
  for (int i = 0; i < bins; ++i) {
    const double* ti = model.t.row(i);
    for (int k = 0; k < rank; ++k) {
      const double tik = ti[k];
      const double* vk = model.v.row(k);
      const double* zk = model.z.row(k);
      for (int n = 0; n < sources; ++n) {
        const double tz = tik * zk[n];
        double* line = sigma.line(i, n);
        for (int j = 0; j < frames; ++j) line[j] += tz * vk[j];
      }
    }
  }
  for (double& s : sigma.v) s = std::max(s, kVarianceFloor);
  return sigma;
}

Tensor3 model_denominators(const SharedSourceModel& model,
                           const Tensor3& sigma) {
  const int bins = sigma.n0;
  const int sources = sigma.n1;
  const int frames = sigma.n2;
  const int channels = model.g.n2;
  Tensor3 d(bins, frames, channels);
  for (int i = 0; i < bins; ++i)
    for (int n = 0; n < sources; ++n) {
      const double* sn = sigma.line(i, n);
      const double* gn = model.g.line(i, n);
      for (int j = 0; j < frames; ++j) {
        double* dj = d.line(i, j);
        const double s = sn[j];
        for (int m = 0; m < channels; ++m) dj[m] += s * gn[m];
      }
    }
  for (double& x : d.v) x = std::max(x, kVarianceFloor);
  return d;
}

Tensor3 diagonalized_powers(const DiagonalizerSet& diag, const Spectrogram& x) {
  if (static_cast<int>(diag.q.size()) != x.bins)
    throw ConfigMismatch("diagonalized_powers: diagonalizer does not match bins");
  Tensor3 p(x.bins, x.frames, x.channels);
  for (int i = 0; i < x.bins; ++i) {
    const CMat& qi = diag.q[i];
    for (int j = 0; j < x.frames; ++j) {
      const cdouble* cell = x.cell(i, j);
      double* out = p.line(i, j);
      for (int m = 0; m < x.channels; ++m) {
        cdouble acc = 0.0;
        const cdouble* row = qi.row(m);
        for (int c = 0; c < x.channels; ++c) acc += row[c] * cell[c];
        out[m] = std::norm(acc);
      }
    }
  }
  return p;
}

double fastmnmf_cost(const Spectrogram& x, const DiagonalizerSet& diag,
                     const SharedSourceModel& model) {
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  const Tensor3 p = diagonalized_powers(diag, x);
  double total = 0.0;
  for (int i = 0; i < x.bins; ++i) {
    const double mag = std::abs(det(diag.q[i]));
    if (!(mag > 0.0) || !std::isfinite(mag))
      throw SingularDiagonalizer(
          "fastmnmf_cost: diagonalizer has zero determinant");
    total -= 2.0 * x.frames * std::log(mag);
    for (int j = 0; j < x.frames; ++j) {
      const double* pj = p.line(i, j);
      const double* dj = d.line(i, j);
      for (int m = 0; m < x.channels; ++m)
        total += pj[m] / dj[m] + std::log(dj[m]);
    }
  }
  return total;
}

DiagonalizerSet init_q(InitStrategy strategy, const Spectrogram& x,
                       const DemixingSet* demixing) {
  DiagonalizerSet diag;
  diag.q.reserve(x.bins);
  switch (strategy) {
    case InitStrategy::identity:
      diag.q.assign(x.bins, CMat::identity(x.channels));
      break;
    case InitStrategy::pca: {
      const double unit_weight = 1.0;
      for (int i = 0; i < x.bins; ++i) {
        const CMat cov =
            weighted_scatter(x.cell(i, 0), x.frames, x.channels, &unit_weight, 0);
        std::vector<double> values;
        CMat vectors;
        hermitian_eig(cov, values, vectors);
        CMat qi(x.channels);
        for (int m = 0; m < x.channels; ++m) {
          if (values[m] < kVarianceFloor)
            throw DegenerateCovariance(
                "init_q: sample covariance nearly singular at bin " +
                std::to_string(i));
          const double scale = 1.0 / std::sqrt(values[m]);
          for (int c = 0; c < x.channels; ++c)
            qi(m, c) = scale * std::conj(vectors(c, m));
        }
        diag.q.push_back(std::move(qi));
      }
      break;
    }
    case InitStrategy::ilrma: {
      if (demixing == nullptr ||
          static_cast<int>(demixing->w.size()) != x.bins)
        throw ConfigMismatch(
            "init_q: the demixing-matrix strategy needs a matching demixing set");
      diag.q = demixing->w;
      break;
    }
  }
  return diag;
}

void update_q_ip(DiagonalizerSet& diag, const Spectrogram& x,
                 const SharedSourceModel& model, double denominator_offset) {
  if (static_cast<int>(diag.q.size()) != x.bins)
    throw ConfigMismatch("update_q_ip: diagonalizer does not match bins");
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  for (int i = 0; i < x.bins; ++i) {
    CMat& qi = diag.q[i];
    for (int m = 0; m < x.channels; ++m) {
      const CMat scatter =
          weighted_scatter(x.cell(i, 0), x.frames, x.channels,
                           d.line(i, 0) + m, x.channels, denominator_offset);
      try {
        ip_row_update(qi, scatter, m);
      } catch (const SingularMatrix&) {
        throw SingularUpdate(
            "update_q_ip: degenerate weighted scatter at bin " +
            std::to_string(i));
      }
    }
  }
}

void update_basis(SharedSourceModel& model, const Tensor3& power) {
  check_positive_dims(model);
  const int bins = model.t.rows;
  const int rank = model.t.cols;
  const int frames = model.v.cols;
  const int sources = model.z.cols;
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  RealMatrix phi(sources, frames), psi(sources, frames);
  for (int i = 0; i < bins; ++i) {
    fill_phi_psi(model, power, d, i, phi, psi);
    double* ti = model.t.row(i);
    for (int k = 0; k < rank; ++k) {
      const double* zk = model.z.row(k);
      const double* vk = model.v.row(k);
      double num = 0.0, den = 0.0;
      for (int j = 0; j < frames; ++j) {
        double a = 0.0, b = 0.0;
        for (int n = 0; n < sources; ++n) {
          a += zk[n] * phi.at(n, j);
          b += zk[n] * psi.at(n, j);
        }
        num += vk[j] * a;
        den += vk[j] * b;
      }
      ti[k] = std::max(ti[k] * std::sqrt(num / den), kVarianceFloor);
    }
  }
}

void update_activation(SharedSourceModel& model, const Tensor3& power) {
  check_positive_dims(model);
  const int bins = model.t.rows;
  const int rank = model.t.cols;
  const int frames = model.v.cols;
  const int sources = model.z.cols;
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  RealMatrix phi(sources, frames), psi(sources, frames);
  RealMatrix num(rank, frames), den(rank, frames);
  for (int i = 0; i < bins; ++i) {
    fill_phi_psi(model, power, d, i, phi, psi);
    const double* ti = model.t.row(i);
    for (int k = 0; k < rank; ++k) {
      const double* zk = model.z.row(k);
      const double tik = ti[k];
      double* numk = num.row(k);
      double* denk = den.row(k);
      for (int j = 0; j < frames; ++j) {
        double a = 0.0, b = 0.0;
        for (int n = 0; n < sources; ++n) {
          a += zk[n] * phi.at(n, j);
          b += zk[n] * psi.at(n, j);
        }
        numk[j] += tik * a;
        denk[j] += tik * b;
      }
    }
  }
  for (int k = 0; k < rank; ++k)
    for (int j = 0; j < frames; ++j)
      model.v.at(k, j) = std::max(
          model.v.at(k, j) * std::sqrt(num.at(k, j) / den.at(k, j)),
          kVarianceFloor);
}

void update_source_mix(SharedSourceModel& model, const Tensor3& power) {
  check_positive_dims(model);
  const int bins = model.t.rows;
  const int rank = model.t.cols;
  const int frames = model.v.cols;
  const int sources = model.z.cols;
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  RealMatrix phi(sources, frames), psi(sources, frames);
  RealMatrix num(rank, sources), den(rank, sources);
  for (int i = 0; i < bins; ++i) {
    fill_phi_psi(model, power, d, i, phi, psi);
    const double* ti = model.t.row(i);
    for (int k = 0; k < rank; ++k) {
      const double* vk = model.v.row(k);
      const double tik = ti[k];
      for (int n = 0; n < sources; ++n) {
        const double* phin = phi.row(n);
        const double* psin = psi.row(n);
        double a = 0.0, b = 0.0;
        for (int j = 0; j < frames; ++j) {
          a += vk[j] * phin[j];
          b += vk[j] * psin[j];
        }
        num.at(k, n) += tik * a;
        den.at(k, n) += tik * b;
      }
    }
  }
  // Update, floor, then renormalize each row onto the simplex; the row sum
  // is absorbed into t so the model prediction d is unchanged.
  for (int k = 0; k < rank; ++k) {
    double total = 0.0;
    for (int n = 0; n < sources; ++n) {
      double& zkn = model.z.at(k, n);
      zkn = std::max(zkn * std::sqrt(num.at(k, n) / den.at(k, n)),
                     kVarianceFloor);
      total += zkn;
    }
    for (int n = 0; n < sources; ++n)
      model.z.at(k, n) = std::max(model.z.at(k, n) / total, kVarianceFloor);
    for (int i = 0; i < bins; ++i)
      model.t.at(i, k) = std::max(model.t.at(i, k) * total, kVarianceFloor);
  }
}

void update_spatial_gain(SharedSourceModel& model, const Tensor3& power) {
  check_positive_dims(model);
  const int bins = model.t.rows;
  const int rank = model.t.cols;
  const int frames = model.v.cols;
  const int sources = model.z.cols;
  const int channels = model.g.n2;
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  for (int i = 0; i < bins; ++i) {
    for (int n = 0; n < sources; ++n) {
      const double* sn = sigma.line(i, n);
      double* gn = model.g.line(i, n);
      for (int m = 0; m < channels; ++m) {
        double num = 0.0, den = 0.0;
        for (int j = 0; j < frames; ++j) {
          const double inv = 1.0 / d.at(i, j, m);
          num += sn[j] * power.at(i, j, m) * inv * inv;
          den += sn[j] * inv;
        }
        gn[m] = std::max(gn[m] * std::sqrt(num / den), kVarianceFloor);
      }
    }
    // Pin the per-bin gain scale: mean one over (source, channel), absorbed
    // into t so the model prediction d is unchanged. A per-(bin, source)
    // normalization could not be compensated exactly, because t and z are
    // shared across sources.
    double mean = 0.0;
    for (int n = 0; n < sources; ++n)
      for (int m = 0; m < channels; ++m) mean += model.g.at(i, n, m);
    mean /= static_cast<double>(sources) * channels;
    const double inv_mean = 1.0 / mean;
    for (int n = 0; n < sources; ++n)
      for (int m = 0; m < channels; ++m)
        model.g.at(i, n, m) =
            std::max(model.g.at(i, n, m) * inv_mean, kVarianceFloor);
    double* ti = model.t.row(i);
    for (int k = 0; k < rank; ++k)
      ti[k] = std::max(ti[k] * mean, kVarianceFloor);
  }
}

void update_tvzg(SharedSourceModel& model, const Tensor3& power) {
  update_basis(model, power);
  update_activation(model, power);
  update_source_mix(model, power);
  update_spatial_gain(model, power);
}

Spectrogram wiener_reconstruct(const Spectrogram& x,
                               const DiagonalizerSet& diag,
                               const SharedSourceModel& model,
                               int reference_channel) {
  if (static_cast<int>(diag.q.size()) != x.bins)
    throw ConfigMismatch("wiener_reconstruct: diagonalizer does not match bins");
  if (reference_channel < 0 || reference_channel >= x.channels)
    throw ConfigMismatch("wiener_reconstruct: reference channel out of range");
  const int sources = model.z.cols;
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  Spectrogram y(x.bins, x.frames, sources);
  std::vector<cdouble> transformed(x.channels);
  for (int i = 0; i < x.bins; ++i) {
    const CMat& qi = diag.q[i];
    CMat qinv;
    try {
      qinv = inverse(qi);
    } catch (const SingularMatrix&) {
      throw SingularDiagonalizer(
          "wiener_reconstruct: diagonalizer not invertible");
    }
    const cdouble* back = qinv.row(reference_channel);
    for (int j = 0; j < x.frames; ++j) {
      const cdouble* cell = x.cell(i, j);
      for (int m = 0; m < x.channels; ++m) {
        cdouble acc = 0.0;
        const cdouble* row = qi.row(m);
        for (int c = 0; c < x.channels; ++c) acc += row[c] * cell[c];
        transformed[m] = acc;
      }
      const double* dj = d.line(i, j);
      cdouble* out = y.cell(i, j);
      for (int n = 0; n < sources; ++n) {
        const double s = sigma.at(i, n, j);
        const double* gn = model.g.line(i, n);
        cdouble acc = 0.0;
        for (int m = 0; m < x.channels; ++m)
          acc += back[m] * (s * gn[m] / dj[m]) * transformed[m];
        out[n] = acc;
      }
    }
  }
  return y;
}

FastmnmfResult run_fastmnmf(const Spectrogram& x, const FastmnmfConfig& cfg,
                            const DemixingSet* demixing) {
  if (x.bins < 1 || x.frames < 1 || x.channels < 1)
    throw ConfigMismatch("run_fastmnmf: empty observation");

  Rng rng(cfg.seed);
  SharedSourceModel model =
      init_shared_model(x.bins, x.frames, cfg.rank, x.channels, x.channels,
                        rng, cfg.emphasize_own_channel);
  DiagonalizerSet diag = init_q(cfg.init, x, demixing);

  FastmnmfResult result;
  const auto start = std::chrono::steady_clock::now();
  result.trace.add(fastmnmf_cost(x, diag, model), 0.0, 0.0);
  for (int it = 0; it < cfg.iterations; ++it) {
    try {
      update_q_ip(diag, x, model);
    } catch (const SingularUpdate&) {
      update_q_ip(diag, x, model, kVarianceFloor);
    }
    update_tvzg(model, diagonalized_powers(diag, x));
    result.trace.add(fastmnmf_cost(x, diag, model), 0.0,
                     seconds_since(start));
  }
  result.separated = wiener_reconstruct(x, diag, model, cfg.reference_channel);
  result.diagonalizer = std::move(diag);
  result.model = std::move(model);
  return result;
}

}  // namespace bss
