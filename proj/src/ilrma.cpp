#include "bss/ilrma.hpp"

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

std::vector<RealMatrix> all_variances(const IlrmaSourceModel& model) {
  std::vector<RealMatrix> r;
  r.reserve(model.basis.size());
  for (size_t n = 0; n < model.basis.size(); ++n)
    r.push_back(model_variance(model, static_cast<int>(n)));
  return r;
}

}  // namespace

IlrmaSourceModel init_ilrma_model(int sources, int bins, int frames,
                                  int rank_per_source, Rng& rng) {
  if (sources < 1 || bins < 1 || frames < 1 || rank_per_source < 1)
    throw ConfigMismatch("init_ilrma_model: all dimensions must be positive");
  IlrmaSourceModel model;
  model.basis.reserve(sources);
  model.activation.reserve(sources);
  for (int n = 0; n < sources; ++n) {
    RealMatrix t(bins, rank_per_source);
    for (double& x : t.v) x = rng.uniform(0.1, 1.0);
    RealMatrix v(rank_per_source, frames);
    for (double& x : v.v) x = rng.uniform(0.1, 1.0);
    model.basis.push_back(std::move(t));
    model.activation.push_back(std::move(v));
  }
  return model;
}

RealMatrix model_variance(const IlrmaSourceModel& model, int source) {
  const RealMatrix& t = model.basis[source];
  const RealMatrix& v = model.activation[source];
  RealMatrix r(t.rows, v.cols);
  for (int i = 0; i < t.rows; ++i) {
    double* out = r.row(i);
    const double* ti = t.row(i);
    for (int k = 0; k < t.cols; ++k) {
      const double tik = ti[k];
      const double* vk = v.row(k);
      for (int j = 0; j < v.cols; ++j) out[j] += tik * vk[j];
    }
    for (int j = 0; j < v.cols; ++j) out[j] = std::max(out[j], kVarianceFloor);
  }
  return r;
}

Spectrogram apply_demixing(const DemixingSet& demixing, const Spectrogram& x) {
  if (static_cast<int>(demixing.w.size()) != x.bins)
    throw ConfigMismatch("apply_demixing: demixing set does not match bins");
  Spectrogram y(x.bins, x.frames, x.channels);
  const int m_count = x.channels;
  for (int i = 0; i < x.bins; ++i) {
    const CMat& wi = demixing.w[i];
    if (wi.dim() != m_count)
      throw ConfigMismatch("apply_demixing: matrix size does not match channels");
    for (int j = 0; j < x.frames; ++j) {
      const cdouble* in = x.cell(i, j);
      cdouble* out = y.cell(i, j);
      for (int n = 0; n < m_count; ++n) {
        cdouble acc = 0.0;
        const cdouble* row = wi.row(n);
        for (int m = 0; m < m_count; ++m) acc += row[m] * in[m];
        out[n] = acc;
      }
    }
  }
  return y;
}

Tensor3 source_power(const Spectrogram& separated) {
  Tensor3 p(separated.channels, separated.bins, separated.frames);
  for (int i = 0; i < separated.bins; ++i)
    for (int j = 0; j < separated.frames; ++j) {
      const cdouble* cell = separated.cell(i, j);
      for (int n = 0; n < separated.channels; ++n)
        p.at(n, i, j) = std::norm(cell[n]);
    }
  return p;
}

double ilrma_cost(const Spectrogram& x, const DemixingSet& demixing,
                  const IlrmaSourceModel& model) {
  const std::vector<RealMatrix> r = all_variances(model);
  const int sources = static_cast<int>(r.size());
  double total = 0.0;
  for (int i = 0; i < x.bins; ++i) {
    const CMat& wi = demixing.w[i];
    const double mag = std::abs(det(wi));
    if (!(mag > 0.0) || !std::isfinite(mag))
      throw SingularDemixing("ilrma_cost: demixing matrix has zero determinant");
    total -= 2.0 * x.frames * std::log(mag);
    for (int j = 0; j < x.frames; ++j) {
      const cdouble* cell = x.cell(i, j);
      for (int n = 0; n < sources; ++n) {
        cdouble y = 0.0;
        const cdouble* row = wi.row(n);
        for (int m = 0; m < x.channels; ++m) y += row[m] * cell[m];
        const double rr = r[n].at(i, j);
        total += std::norm(y) / rr + std::log(rr);
      }
    }
  }
  return total;
}

void update_source_model_is_nmf(IlrmaSourceModel& model, const Tensor3& power) {
  const int sources = static_cast<int>(model.basis.size());
  for (int n = 0; n < sources; ++n) {
    RealMatrix& t = model.basis[n];
    RealMatrix& v = model.activation[n];
    const int bins = t.rows;
    const int rank = t.cols;
    const int frames = v.cols;
    std::vector<double> num(rank), den(rank);

    RealMatrix r = model_variance(model, n);
    for (int i = 0; i < bins; ++i) {
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);
      const double* p = power.line(n, i);
      const double* ri = r.row(i);
      for (int j = 0; j < frames; ++j) {
        const double inv = 1.0 / ri[j];
        const double a = p[j] * inv * inv;
        for (int k = 0; k < rank; ++k) {
          num[k] += v.at(k, j) * a;
          den[k] += v.at(k, j) * inv;
        }
      }
      double* ti = t.row(i);
      for (int k = 0; k < rank; ++k)
        ti[k] = std::max(ti[k] * std::sqrt(num[k] / den[k]), kVarianceFloor);
    }

    r = model_variance(model, n);
    for (int j = 0; j < frames; ++j) {
      std::fill(num.begin(), num.end(), 0.0);
      std::fill(den.begin(), den.end(), 0.0);
      for (int i = 0; i < bins; ++i) {
        const double inv = 1.0 / r.at(i, j);
        const double a = power.at(n, i, j) * inv * inv;
        const double* ti = t.row(i);
        for (int k = 0; k < rank; ++k) {
          num[k] += ti[k] * a;
          den[k] += ti[k] * inv;
        }
      }
      for (int k = 0; k < rank; ++k)
        v.at(k, j) =
            std::max(v.at(k, j) * std::sqrt(num[k] / den[k]), kVarianceFloor);
    }
  }
}

void update_demixing_ip(DemixingSet& demixing, const Spectrogram& x,
                        const IlrmaSourceModel& model, double variance_offset) {
  if (static_cast<int>(demixing.w.size()) != x.bins)
    throw ConfigMismatch("update_demixing_ip: demixing set does not match bins");
  const std::vector<RealMatrix> r = all_variances(model);
  const int sources = static_cast<int>(r.size());
  for (int i = 0; i < x.bins; ++i) {
    CMat& wi = demixing.w[i];
    for (int n = 0; n < sources; ++n) {
      const CMat u = weighted_scatter(x.cell(i, 0), x.frames, x.channels,
                                      r[n].row(i), 1, variance_offset);
      try {
        ip_row_update(wi, u, n);
      } catch (const SingularMatrix&) {
        throw SingularUpdate(
            "update_demixing_ip: degenerate weighted scatter at bin " +
            std::to_string(i));
      }
    }
  }
}

void project_back(DemixingSet& demixing, int reference_channel) {
  for (CMat& wi : demixing.w) {
    if (reference_channel < 0 || reference_channel >= wi.dim())
      throw ConfigMismatch("project_back: reference channel out of range");
    CMat inv;
    try {
      inv = inverse(wi);
    } catch (const SingularMatrix&) {
      throw SingularDemixing("project_back: demixing matrix not invertible");
    }
    for (int n = 0; n < wi.dim(); ++n) {
      const cdouble scale = inv(reference_channel, n);
      cdouble* row = wi.row(n);
      for (int m = 0; m < wi.dim(); ++m) row[m] *= scale;
    }
  }
}

IlrmaResult run_ilrma(const Spectrogram& x, int iterations, int rank_per_source,
                      std::uint64_t seed, bool scale_to_reference,
                      int reference_channel) {
  if (x.bins < 1 || x.frames < 1 || x.channels < 1)
    throw ConfigMismatch("run_ilrma: empty observation");
  const int sources = x.channels;

  Rng rng(seed);
  IlrmaSourceModel model =
      init_ilrma_model(sources, x.bins, x.frames, rank_per_source, rng);
  DemixingSet demixing;
  demixing.w.assign(x.bins, CMat::identity(sources));

  IlrmaResult result;
  const auto start = std::chrono::steady_clock::now();
  result.trace.add(ilrma_cost(x, demixing, model), 0.0, 0.0);

  Spectrogram y = x;  // identity demixing to begin with
  for (int it = 0; it < iterations; ++it) {
    update_source_model_is_nmf(model, source_power(y));
    try {
      update_demixing_ip(demixing, x, model);
    } catch (const SingularUpdate&) {
      update_demixing_ip(demixing, x, model, kVarianceFloor);
    }
    y = apply_demixing(demixing, x);
    result.trace.add(ilrma_cost(x, demixing, model), 0.0, seconds_since(start));
  }

  if (scale_to_reference) {
    project_back(demixing, reference_channel);
    y = apply_demixing(demixing, x);
  }
  result.demixing = std::move(demixing);
  result.separated = std::move(y);
  return result;
}

}  // namespace bss
