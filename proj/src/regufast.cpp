#include "bss/regufast.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

#include "bss/errors.hpp"
#include "bss/rng.hpp"

namespace bss {

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

double lambda_at(const RegularizerSchedule& schedule, int l) {
  if (schedule.lambda_const < 0.0 || schedule.lambda0 < 0.0 ||
      schedule.lambda_end < 0.0)
    throw ConfigMismatch("lambda_at: negative regularization weight");
  if (l < 0 || l > std::max(schedule.total_iterations, 0))
    throw ConfigMismatch("lambda_at: sweep index outside 0..L");
  if (schedule.mode == ScheduleMode::constant) return schedule.lambda_const;
  if (l == 0) return schedule.lambda0;
  if (l == schedule.total_iterations) return schedule.lambda_end;
  // A zero start weight cannot be interpolated geometrically; the schedule
  // is identically zero until the pinned endpoint.
  if (schedule.lambda0 == 0.0) return 0.0;
  const double exponent =
      static_cast<double>(l) / schedule.total_iterations;
  return schedule.lambda0 *
         std::pow(schedule.lambda_end / schedule.lambda0, exponent);
}

PriorMeanSet prior_from_demixing(const DemixingSet& demixing) {
  PriorMeanSet prior;
  prior.q = demixing.w;
  return prior;
}

CMat build_D(const Spectrogram& x, const Tensor3& denominators, int bin,
             int channel, double lambda, double denominator_offset) {
  if (denominators.n0 != x.bins || denominators.n1 != x.frames ||
      denominators.n2 != x.channels)
    throw ConfigMismatch("build_D: denominator tensor does not match input");
  CMat d_mat = weighted_scatter(x.cell(bin, 0), x.frames, x.channels,
                                denominators.line(bin, 0) + channel,
                                x.channels, denominator_offset);
  if (lambda != 0.0)
    for (int a = 0; a < x.channels; ++a) d_mat(a, a) += lambda;
  return d_mat;
}

void update_q_vcd(DiagonalizerSet& diag, const Spectrogram& x,
                  const SharedSourceModel& model, const PriorMeanSet& prior,
                  double lambda, double denominator_offset) {
  if (static_cast<int>(diag.q.size()) != x.bins)
    throw ConfigMismatch("update_q_vcd: diagonalizer does not match bins");
  if (static_cast<int>(prior.q.size()) != x.bins)
    throw ConfigMismatch("update_q_vcd: prior does not match bins");
  const int channels = x.channels;
  const Tensor3 sigma = source_variances(model);
  const Tensor3 d = model_denominators(model, sigma);
  for (int i = 0; i < x.bins; ++i) {
    CMat& qi = diag.q[i];
    for (int m = 0; m < channels; ++m) {
      const CMat d_mat = build_D(x, d, i, m, lambda, denominator_offset);
      try {
        if (lambda == 0.0) {
          // No prior pull: the step reduces to the plain iterative
          // projection, taken verbatim so both optimizers match bitwise.
          ip_row_update(qi, d_mat, m);
          continue;
        }
        const CVec u = ip_direction(qi, d_mat, m);
        CVec qhat(channels);
        for (int c = 0; c < channels; ++c)
          qhat[c] = std::conj(prior.q[i](m, c));
        CVec uhat = solve(d_mat, qhat);
        for (cdouble& e : uhat) e *= lambda;
        const double r = std::real(dot_h(u, matvec(d_mat, u)));
        if (!(r > 0.0) || !std::isfinite(r))
          throw SingularMatrix("update_q_vcd: direction has no energy");
        const cdouble rhat = dot_h(u, matvec(d_mat, uhat));
        CVec qnew(channels);
        if (std::abs(rhat) < 1e-15) {
          const double inv = 1.0 / std::sqrt(r);
          for (int c = 0; c < channels; ++c) qnew[c] = u[c] * inv + uhat[c];
        } else {
          const cdouble scale =
              rhat / (2.0 * r) *
              (std::sqrt(1.0 + 4.0 * r / std::norm(rhat)) - 1.0);
          for (int c = 0; c < channels; ++c)
            qnew[c] = scale * u[c] + uhat[c];
        }
        for (int c = 0; c < channels; ++c) qi(m, c) = std::conj(qnew[c]);
      } catch (const SingularMatrix&) {
        throw SingularUpdate(
            "update_q_vcd: degenerate weighted scatter at bin " +
            std::to_string(i));
      }
    }
  }
}

double regularized_cost(const Spectrogram& x, const DiagonalizerSet& diag,
                        const SharedSourceModel& model,
                        const PriorMeanSet& prior, double lambda) {
  double cost = fastmnmf_cost(x, diag, model);
  if (lambda != 0.0) {
    if (static_cast<int>(prior.q.size()) != x.bins)
      throw ConfigMismatch("regularized_cost: prior does not match bins");
    double penalty = 0.0;
    for (int i = 0; i < x.bins; ++i)
      for (int m = 0; m < x.channels; ++m)
        for (int c = 0; c < x.channels; ++c)
          penalty += std::norm(diag.q[i](m, c) - prior.q[i](m, c));
    cost += x.frames * lambda * penalty;
  }
  return cost;
}

RegufastResult run_regularized_fastmnmf(const Spectrogram& x,
                                        const RegufastConfig& cfg) {
  if (x.bins < 1 || x.frames < 1 || x.channels < 1)
    throw ConfigMismatch("run_regularized_fastmnmf: empty observation");

  // Warm-start stage: a demixing pre-run provides the prior means. Its seed
  // comes from a derived stream so the model draw below stays aligned with
  // run_fastmnmf on the same seed.
  const IlrmaResult pre =
      run_ilrma(x, cfg.ilrma_iterations, cfg.ilrma_rank_per_source,
                derive_seed(cfg.seed, kIlrmaSeedStream), true,
                cfg.reference_channel);
  const PriorMeanSet prior = prior_from_demixing(pre.demixing);

  Rng rng(cfg.seed);
  SharedSourceModel model =
      init_shared_model(x.bins, x.frames, cfg.rank, x.channels, x.channels,
                        rng, cfg.emphasize_own_channel);
  DiagonalizerSet diag = init_q(InitStrategy::identity, x);

  RegularizerSchedule schedule = cfg.schedule;
  schedule.total_iterations = cfg.iterations;

  RegufastResult result;
  const auto start = std::chrono::steady_clock::now();
  const double lambda0 = lambda_at(schedule, 0);
  result.trace.add(regularized_cost(x, diag, model, prior, lambda0), lambda0,
                   0.0);
  for (int l = 1; l <= cfg.iterations; ++l) {
    const double lambda = lambda_at(schedule, l);
    try {
      update_q_vcd(diag, x, model, prior, lambda);
    } catch (const SingularUpdate&) {
      update_q_vcd(diag, x, model, prior, lambda, kVarianceFloor);
    }
    update_tvzg(model, diagonalized_powers(diag, x));
    result.trace.add(regularized_cost(x, diag, model, prior, lambda), lambda,
                     seconds_since(start));
  }
  result.separated = wiener_reconstruct(x, diag, model, cfg.reference_channel);
  result.diagonalizer = std::move(diag);
  result.model = std::move(model);
  result.prior = prior;
  return result;
}

}  // namespace bss
