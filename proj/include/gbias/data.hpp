#pragma once

// Synthetic datasets: Gaussian inputs with labels from a random linear
// rule, and Gaussian inputs labelled by a Fourier-sparse ground truth.

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/fourier.hpp"
#include "gbias/irreps.hpp"
#include "gbias/network.hpp"

namespace gbias {

struct LabelledData {
  Dataset data;
  Vec beta;                  // ground truth used for labelling
  double achieved_margin = 0;  // min_i |<x_i, beta>| / (|beta| |x_i|)
};

inline double normalized_margin(const std::vector<Vec>& xs, const Vec& beta) {
  double m = std::numeric_limits<double>::infinity();
  const double bn = beta.norm();
  for (const auto& x : xs) {
    const double den = bn * x.norm();
    m = std::min(m, den > 0 ? std::abs(x.dot(beta)) / den : 0.0);
  }
  return m;
}

/// Labels y_i = sign(<x_i, beta>) for a random Gaussian beta, redrawn until
/// the normalized margin reaches margin_min or the budget runs out (the
/// best draw is kept and its margin reported).
inline LabelledData make_separable_labels(const std::vector<Vec>& inputs, std::uint64_t seed, double margin_min = 0.01,
                                          std::size_t budget = 1000) {
  if (!(margin_min > 0)) throw Error(ErrorKind::validation, "make_separable_labels: margin_min must be positive");
  if (inputs.empty()) throw Error(ErrorKind::validation, "make_separable_labels: no inputs");
  std::mt19937_64 rng(seed);
  LabelledData out;
  out.achieved_margin = -1;
  for (std::size_t attempt = 0; attempt < std::max<std::size_t>(budget, 1); ++attempt) {
    const Vec beta = random_gaussian_vector(inputs.front().size(), rng);
    const double m = normalized_margin(inputs, beta);
    if (m > out.achieved_margin) {
      out.achieved_margin = m;
      out.beta = beta;
    }
    if (m >= margin_min) break;
  }
  out.data.inputs = inputs;
  for (const auto& x : inputs) out.data.labels.push_back(x.dot(out.beta) >= 0 ? 1.0 : -1.0);
  return out;
}

/// n signals of i.i.d. standard normals on G, labelled by make_separable_labels.
inline LabelledData gaussian_dataset(const GroupTable& g, std::size_t n, std::uint64_t seed, double margin_min = 0.01) {
  if (n == 0) throw Error(ErrorKind::validation, "gaussian_dataset: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::vector<Vec> xs;
  for (std::size_t i = 0; i < n; ++i) xs.push_back(random_gaussian_vector(static_cast<Eigen::Index>(g.order()), rng));
  return make_separable_labels(xs, seed ^ 0xa5a5a5a5a5a5a5a5ULL, margin_min);
}

/// Closes a set of irrep indices under complex conjugation (rho -> its
/// dual, matched by conjugate characters), so masking keeps signals real.
inline std::vector<std::size_t> conjugate_closure(const IrrepSet& irreps, const std::vector<std::size_t>& active) {
  std::set<std::size_t> out;
  const std::size_t n = irreps.group().order();
  for (auto k : active) {
    if (k >= irreps.size()) throw Error(ErrorKind::validation, "active block index out of range");
    out.insert(k);
    for (std::size_t j = 0; j < irreps.size(); ++j) {
      if (irreps.dim(j) != irreps.dim(k)) continue;
      double dist = 0;
      for (std::size_t g = 0; g < n; ++g)
        dist = std::max(dist, std::abs(irreps.character(j, static_cast<Element>(g)) -
                                       std::conj(irreps.character(k, static_cast<Element>(g)))));
      if (dist < 1e-6) out.insert(j);
    }
  }
  return {out.begin(), out.end()};
}

struct FourierSparseData {
  LabelledData labelled;
  std::vector<std::size_t> active;  // conjugate-closed support of betahat
};

/// Ground truth supported on the given irreps: the transform of a random
/// real signal with every other block zeroed. Inputs are Gaussian and are
/// redrawn until |<x, beta>| >= margin_min |x| |beta|.
inline FourierSparseData fourier_sparse_dataset(const IrrepSet& irreps, const std::vector<std::size_t>& active_blocks,
                                                std::size_t n, std::uint64_t seed, double margin_min = 0.05,
                                                std::size_t retry_budget = 10000) {
  if (active_blocks.empty()) throw Error(ErrorKind::validation, "fourier_sparse_dataset: empty active set");
  std::mt19937_64 rng(seed);
  FourierSparseData out;
  out.active = conjugate_closure(irreps, active_blocks);
  const auto N = static_cast<Eigen::Index>(irreps.group().order());
  FourierBlocks bh = gft(random_gaussian_vector(N, rng), irreps);
  std::vector<bool> keep(irreps.size(), false);
  for (auto k : out.active) keep[k] = true;
  for (std::size_t k = 0; k < irreps.size(); ++k)
    if (!keep[k]) bh[k].setZero();
  const Vec beta = igft_real(bh, irreps, 1e-10);
  const double bn = beta.norm();
  std::vector<Vec> xs;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t tries = 0;
    for (;;) {
      Vec x = random_gaussian_vector(N, rng);
      if (std::abs(x.dot(beta)) >= margin_min * bn * x.norm()) {
        xs.push_back(std::move(x));
        break;
      }
      if (++tries >= retry_budget)
        throw Error(ErrorKind::numerical, "fourier_sparse_dataset: margin unattainable within the retry budget");
    }
  }
  out.labelled.beta = beta;
  out.labelled.data.inputs = xs;
  for (const auto& x : xs) out.labelled.data.labels.push_back(x.dot(beta) >= 0 ? 1.0 : -1.0);
  out.labelled.achieved_margin = normalized_margin(xs, beta);
  return out;
}

}  // namespace gbias
