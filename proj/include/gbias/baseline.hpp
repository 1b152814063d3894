#pragma once

// Minimum Fourier Schatten norm interpolating predictor.
//
// Convex stage: minimize the d_rho-weighted nuclear norm of betahat over
// {beta : y_n <x_n, beta> >= 1} by projected subgradient with step c/sqrt(t).
// Optional nonconvex stage for p < 1: projected gradient on the p
// quasi-norm started from the convex solution (a local value only).

#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/fourier.hpp"
#include "gbias/kkt.hpp"
#include "gbias/network.hpp"
#include "gbias/norms.hpp"

namespace gbias {

/// Exact or iterative projection onto {beta : A beta >= 1}.
class MarginPolytope {
 public:
  explicit MarginPolytope(const Dataset& d) {
    d.validate();
    if (d.size() == 0) throw Error(ErrorKind::validation, "baseline: empty dataset");
    A_.resize(static_cast<Eigen::Index>(d.size()), d.inputs.front().size());
    for (std::size_t n = 0; n < d.size(); ++n) A_.row(static_cast<Eigen::Index>(n)) = d.labels[n] * d.inputs[n].transpose();
    const Mat gram = A_ * A_.transpose();
    Eigen::LLT<Mat> llt(gram);
    if (llt.info() == Eigen::Success) {
      const Vec diag = llt.matrixL().toDenseMatrix().diagonal();
      if (diag.minCoeff() > 1e-8 * std::sqrt(gram.diagonal().maxCoeff())) {
        R_ = llt.matrixU();
        exact_ = true;
      }
    }
  }

  double min_margin(const Vec& beta) const { return (A_ * beta).minCoeff(); }
  double max_violation(const Vec& beta) const { return std::max(0.0, 1.0 - min_margin(beta)); }

  /// Closest point in the polytope. With independent constraints the dual
  /// QP  min_{mu>=0} 1/2 |A^T mu|^2 - mu^T (1 - A v)  is solved exactly as an
  /// NNLS problem; otherwise Dykstra's alternating projections are used.
  Vec project(const Vec& v, std::size_t max_passes = 2000) const {
    const Eigen::Index m = A_.rows();
    if (exact_) {
      const Vec rhs = Vec::Ones(m) - A_ * v;
      // 1/2 |R mu|^2 - mu^T rhs = 1/2 |R mu - R^{-T} rhs|^2 + const
      const Vec target = R_.transpose().triangularView<Eigen::Lower>().solve(rhs);
      const auto sol = nnls(R_, target);
      return v + A_.transpose() * sol.x;
    }
    Vec x = v;
    std::vector<Vec> corr(static_cast<std::size_t>(m), Vec::Zero(v.size()));
    for (std::size_t pass = 0; pass < max_passes; ++pass) {
      for (Eigen::Index i = 0; i < m; ++i) {
        const Vec y = x + corr[static_cast<std::size_t>(i)];
        const double a2 = A_.row(i).squaredNorm();
        const double gap = 1.0 - A_.row(i).dot(y);
        Vec proj = y;
        if (gap > 0 && a2 > 0) proj += (gap / a2) * A_.row(i).transpose();
        corr[static_cast<std::size_t>(i)] = y - proj;
        x = std::move(proj);
      }
      if (max_violation(x) < 1e-13) break;
    }
    return x;
  }

 private:
  Mat A_;
  Mat R_;
  bool exact_ = false;
};

struct BaselineOptions {
  std::size_t iters = 20000;
  std::size_t refine_iters = 5000;
  double step = 0.05;  // times |beta_0|
  double refine_cutoff = 1e-8;
};

struct BaselineResult {
  double p = 1.0;
  Vec beta;                   // convex (nuclear) solution, feasible
  double nuclear_value = 0;   // weighted nuclear norm of beta
  double schatten_value = 0;  // p quasi-norm of the convex solution (reference line)
  Vec refined_beta;           // locally refined for p < 1 (equals beta for p = 1)
  double refined_value = 0;
  double min_margin = 0;
  std::size_t iterations = 0;
};

namespace detail {

inline Vec feasible_rescale(const Vec& beta, const MarginPolytope& poly) {
  const double mm = poly.min_margin(beta);
  return mm > 0 ? Vec(beta / mm) : beta;
}

}  // namespace detail

inline BaselineResult min_schatten_baseline(const Dataset& data, const IrrepSet& irreps, double p, std::uint64_t seed,
                                            const BaselineOptions& opt = {}) {
  if (!(p > 0) || p > 1) throw Error(ErrorKind::validation, "baseline: p must be in (0, 1]");
  const MarginPolytope poly(data);
  std::mt19937_64 rng(seed);

  Vec beta = poly.project(Vec::Zero(static_cast<Eigen::Index>(irreps.group().order())));
  if (!beta.allFinite() || poly.max_violation(beta) > 1e-6)
    throw Error(ErrorKind::infeasible, "baseline: margin constraints are infeasible (max violation " +
                                           std::to_string(poly.max_violation(beta)) + ")");
  const double scale = std::max(beta.norm(), 1e-12);
  // tiny deterministic perturbation breaks exact ties in the subgradient
  beta = poly.project(beta + 1e-9 * scale * random_gaussian_vector(beta.size(), rng));

  auto nuclear = [&](const Vec& b) { return schatten_quasi_norm(gft(b, irreps), 1.0); };
  BaselineResult r;
  r.p = p;
  Vec best = detail::feasible_rescale(beta, poly);
  double best_val = nuclear(best);
  for (std::size_t t = 1; t <= opt.iters; ++t) {
    const Vec g = schatten_gradient_real(beta, irreps, 1.0);
    const double gn = g.norm();
    if (!(gn > 0)) break;
    beta = poly.project(beta - (opt.step * scale / std::sqrt(static_cast<double>(t))) * (g / gn));
    const Vec cand = detail::feasible_rescale(beta, poly);
    const double v = nuclear(cand);
    if (v < best_val) {
      best_val = v;
      best = cand;
    }
    r.iterations = t;
  }
  r.beta = best;
  r.nuclear_value = best_val;
  r.schatten_value = schatten_quasi_norm(gft(best, irreps), p);
  r.min_margin = poly.min_margin(best);

  r.refined_beta = best;
  r.refined_value = r.schatten_value;
  if (p < 1) {
    Vec b = best;
    for (std::size_t t = 1; t <= opt.refine_iters; ++t) {
      const FourierBlocks g = schatten_gradient(gft(b, irreps), p, opt.refine_cutoff);
      const Vec gr = static_cast<double>(irreps.group().order()) * igft_real(g, irreps, 1e-6);
      const double gn = gr.norm();
      if (!(gn > 0)) break;
      b = poly.project(b - (opt.step * scale / std::sqrt(static_cast<double>(t))) * (gr / gn));
      const Vec cand = detail::feasible_rescale(b, poly);
      const double v = schatten_quasi_norm(gft(cand, irreps), p);
      if (v < r.refined_value) {
        r.refined_value = v;
        r.refined_beta = cand;
      }
    }
  }
  return r;
}

}  // namespace gbias
