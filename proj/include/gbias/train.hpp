#pragma once

// Full-batch gradient descent on the exponential loss, with a trace of
// loss, margin and norms of the (local) linearization.

#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "gbias/fourier.hpp"
#include "gbias/network.hpp"
#include "gbias/norms.hpp"

namespace gbias {

/// eta(t) = min(eta0 * factor^floor(t / period), cap).
struct StepSchedule {
  double eta0 = 0.1;
  double factor = 2.0;
  std::size_t period = 2000;
  double cap = 100.0;  // 1000 * eta0

  double at(std::size_t epoch) const {
    double eta = eta0;
    if (period > 0 && factor != 1.0) eta *= std::pow(factor, static_cast<double>(epoch / period));
    return std::min(eta, cap);
  }
  void validate() const {
    if (!(eta0 > 0) || !(factor > 0) || !(cap > 0) || !std::isfinite(cap))
      throw Error(ErrorKind::config, "step schedule must be positive and bounded");
  }
};

struct TrainOptions {
  std::size_t epochs = 10000;
  std::size_t record_every = 100;
  double loss_tol = 1e-6;
  bool snapshots = false;
  /// Irreps used to measure Fourier norms of the linearization. For FC and
  /// CNN this is the data group, not the architecture's own group.
  std::optional<IrrepSet> analysis_irreps;
};

struct TraceRow {
  std::size_t epoch = 0;
  double loss = 0;
  double min_margin = 0;
  double real_norm_2L = 0;
  double fourier_schatten_2L = 0;
  double cosine_beta_direction = 1.0;
};

struct TrainingTrace {
  std::vector<TraceRow> rows;
  std::vector<Vec> snapshots;  // beta at each recorded epoch when enabled
  bool aborted = false;
  std::size_t abort_epoch = 0;
  std::string abort_reason;
  bool converged = false;  // loss went below loss_tol
  NetworkParams final_params;

  static constexpr const char* kCsvHeader =
      "epoch,loss,min_margin,real_norm_2L,fourier_schatten_2L,cosine_beta_direction";

  std::string csv() const {
    std::string out = std::string(kCsvHeader) + "\n";
    char buf[512];
    for (const auto& r : rows) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g\n", r.epoch, r.loss, r.min_margin,
                    r.real_norm_2L, r.fourier_schatten_2L, r.cosine_beta_direction);
      out += buf;
    }
    return out;
  }
};

/// Margin-normalized linearization (or mean of per-sample local
/// linearizations for ReLU networks) used for trace norms.
struct LinearizationSummary {
  Vec beta;             // normalized linearization (linear) or mean local linearization (relu)
  double real_norm = 0;
  double fourier_norm = 0;
};

inline double fourier_norm_of(const Vec& beta, const NetworkParams& p, const std::optional<IrrepSet>& irreps, double q) {
  if (p.spec.kind == ArchKind::fourier_space_bandlimited) {
    const auto blocks = detail::unpack_blocks(beta, p.spec.band_dims);
    FourierBlocks fb;
    for (const auto& b : blocks) fb.blocks.push_back(b.cast<cplx>());
    // undo the c d_rho factor of the packed gradient to recover W_L..W_1
    for (std::size_t k = 0; k < fb.size(); ++k) fb[k] /= p.spec.band_scale * static_cast<double>(p.spec.band_dims[k]);
    return schatten_quasi_norm(fb, q);
  }
  if (!irreps) return std::numeric_limits<double>::quiet_NaN();
  return schatten_quasi_norm(gft(beta, *irreps), q);
}

inline LinearizationSummary summarize_linearization(const NetworkParams& p, const Dataset& d, double min_margin,
                                                    const std::optional<IrrepSet>& irreps) {
  const double q = 2.0 / static_cast<double>(p.spec.layers);
  const double scale = min_margin > 0 ? 1.0 / min_margin : 1.0;
  LinearizationSummary s;
  if (p.spec.activation == Activation::linear) {
    s.beta = scale * linearize(p);
    s.real_norm = real_quasi_norm(s.beta, q);
    s.fourier_norm = fourier_norm_of(s.beta, p, irreps, q);
    return s;
  }
  s.beta = Vec::Zero(static_cast<Eigen::Index>(p.spec.input_dim));
  for (const auto& x : d.inputs) {
    const Vec b = scale * local_linearization(p, x);
    s.beta += b;
    s.real_norm += real_quasi_norm(b, q);
    s.fourier_norm += fourier_norm_of(b, p, irreps, q);
  }
  const double n = static_cast<double>(d.size());
  s.beta /= n;
  s.real_norm /= n;
  s.fourier_norm /= n;
  return s;
}

namespace detail {

// Margins via the linearization for linear nets (one pass), otherwise per sample.
inline LossEval fast_loss(const NetworkParams& p, const Dataset& d) {
  if (p.spec.activation != Activation::linear || p.spec.kind == ArchKind::fourier_space_bandlimited)
    return evaluate_loss(p, d);
  const Vec beta = linearize(p);
  LossEval e;
  e.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < d.size(); ++n) {
    const double f = d.inputs[n].dot(beta);
    e.outputs.push_back(f);
    e.loss += std::exp(-d.labels[n] * f);
    e.min_margin = std::min(e.min_margin, d.labels[n] * f);
  }
  return e;
}

inline bool all_finite(const NetworkParams& p) {
  for (const auto& t : p.tensors)
    if (!t.allFinite()) return false;
  return true;
}

}  // namespace detail

/// Full-batch gradient descent. Records epoch 0, every `record_every`
/// epochs, and the final epoch. Stops early once loss < loss_tol.
inline TrainingTrace train(NetworkParams params, const Dataset& data, const StepSchedule& schedule,
                           const TrainOptions& opt) {
  data.validate();
  schedule.validate();
  params.spec.validate();
  TrainingTrace trace;
  Vec prev_beta;
  std::size_t last_recorded = std::numeric_limits<std::size_t>::max();

  auto record = [&](std::size_t epoch, const LossEval& e) {
    if (epoch == last_recorded) return;
    last_recorded = epoch;
    TraceRow row;
    row.epoch = epoch;
    row.loss = e.loss;
    row.min_margin = e.min_margin;
    const auto s = summarize_linearization(params, data, e.min_margin, opt.analysis_irreps);
    row.real_norm_2L = s.real_norm;
    row.fourier_schatten_2L = s.fourier_norm;
    if (prev_beta.size() == 0) {
      row.cosine_beta_direction = 1.0;
    } else {
      const double den = prev_beta.norm() * s.beta.norm();
      row.cosine_beta_direction = den > 0 ? prev_beta.dot(s.beta) / den : 0.0;
    }
    prev_beta = s.beta;
    trace.rows.push_back(row);
    if (opt.snapshots) trace.snapshots.push_back(s.beta);
  };

  LossEval e = detail::fast_loss(params, data);
  record(0, e);
  std::size_t epoch = 0;
  while (epoch < opt.epochs) {
    if (!std::isfinite(e.loss)) break;
    if (e.loss < opt.loss_tol) {
      trace.converged = true;
      break;
    }
    std::vector<double> coef(data.size());
    for (std::size_t n = 0; n < data.size(); ++n) coef[n] = -data.labels[n] * std::exp(-data.labels[n] * e.outputs[n]);
    const ParamGrad g = output_gradient(params, data.inputs, coef);
    const double eta = schedule.at(epoch);
    for (std::size_t i = 0; i < params.tensors.size(); ++i) params.tensors[i] -= eta * g[i];
    ++epoch;
    if (!detail::all_finite(params)) {
      e.loss = std::numeric_limits<double>::infinity();
      break;
    }
    e = detail::fast_loss(params, data);
    if (!std::isfinite(e.loss)) break;
    if (opt.record_every > 0 && epoch % opt.record_every == 0) record(epoch, e);
  }
  if (!std::isfinite(e.loss)) {
    trace.aborted = true;
    trace.abort_epoch = epoch;
    trace.abort_reason = "loss became non-finite (divergence) at epoch " + std::to_string(epoch);
  } else {
    if (e.loss < opt.loss_tol) trace.converged = true;
    record(epoch, e);
  }
  trace.final_params = std::move(params);
  return trace;
}

}  // namespace gbias
