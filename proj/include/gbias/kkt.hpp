#pragma once

// Stationarity checks for min Phi(beta) s.t. y_n <x_n, beta> >= 1, with
// Phi the d_rho-weighted 2/L Schatten quasi-norm of the transform.
//
// Scaling: <x, y> = (1/|G|) <xhat, yhat>_M, so the Fourier-side gradient
// of Phi is Ghat = Phi^{1-p} U D^{p-1} V^dagger (blockwise SVD of betahat)
// and a KKT point has Ghat = zhat := (1/|G|) sum_n lambda_n y_n xhat_n.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/fourier.hpp"
#include "gbias/network.hpp"
#include "gbias/norms.hpp"

namespace gbias {

inline constexpr double kSupportCutoff = 1e-14;

/// Fourier-side gradient of Phi(betahat) = (sum d sum sigma^p)^{1/p},
/// formed on the numerical support (sigma > cutoff * sigma_max).
inline FourierBlocks schatten_gradient(const FourierBlocks& beta_hat, double p, double cutoff = kSupportCutoff) {
  const double phi = schatten_quasi_norm(beta_hat, p);
  if (!(phi > 0)) throw Error(ErrorKind::validation, "schatten_gradient: zero argument");
  double smax = 0;
  for (const auto& b : beta_hat.blocks) smax = std::max(smax, singular_values(b).maxCoeff());
  const double c = std::pow(phi, 1.0 - p);
  FourierBlocks g;
  for (const auto& b : beta_hat.blocks) {
    Eigen::JacobiSVD<CMat> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > cutoff * smax ? std::pow(s(i), p - 1.0) : 0.0;
    g.blocks.push_back(c * svd.matrixU() * s.asDiagonal() * svd.matrixV().adjoint());
  }
  return g;
}

/// Real-space gradient of beta -> Phi(gft(beta)).
inline Vec schatten_gradient_real(const Vec& beta, const IrrepSet& irreps, double p) {
  const FourierBlocks g = schatten_gradient(gft(beta, irreps), p);
  return static_cast<double>(irreps.group().order()) * igft_real(g, irreps);
}

// ---------------------------------------------------------------------------
// Nonnegative least squares (Lawson-Hanson active set)

struct NnlsResult {
  Vec x;
  double residual_norm = 0;
  std::size_t iterations = 0;
};

inline NnlsResult nnls(const Mat& A, const Vec& b, std::size_t max_iter = 0, double tol = 0) {
  const Eigen::Index n = A.cols();
  if (A.rows() != b.size()) throw Error(ErrorKind::shape_mismatch, "nnls: dimension mismatch");
  if (max_iter == 0) max_iter = static_cast<std::size_t>(30 * std::max<Eigen::Index>(n, 1));
  if (tol <= 0) tol = 10 * std::numeric_limits<double>::epsilon() * A.norm() * std::max<Eigen::Index>(A.rows(), n);
  Vec x = Vec::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Vec w = A.transpose() * (b - A * x);
  std::size_t it = 0;

  auto solve_passive = [&](Vec& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (passive[static_cast<std::size_t>(j)]) idx.push_back(j);
    z = Vec::Zero(n);
    if (idx.empty()) return;
    Mat Ap(A.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ap.col(static_cast<Eigen::Index>(k)) = A.col(idx[k]);
    const Vec zp = Ap.colPivHouseholderQr().solve(b);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
  };

  while (it < max_iter) {
    Eigen::Index best = -1;
    double wmax = tol;
    for (Eigen::Index j = 0; j < n; ++j)
      if (!passive[static_cast<std::size_t>(j)] && w(j) > wmax) {
        wmax = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[static_cast<std::size_t>(best)] = true;
    Vec z;
    for (;;) {
      ++it;
      solve_passive(z);
      double alpha = 1.0;
      bool feasible = true;
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && z(j) <= 0) {
          feasible = false;
          const double denom = x(j) - z(j);
          if (denom > 0) alpha = std::min(alpha, x(j) / denom);
        }
      if (feasible || it >= max_iter) break;
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0;
        }
    }
    x = z.cwiseMax(0.0);
    w = A.transpose() * (b - A * x);
  }
  return {x, (A * x - b).norm(), it};
}

// ---------------------------------------------------------------------------
// Subgradient membership

namespace detail {

inline double weighted_frob2(const FourierBlocks& a) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<double>(a.dim(k)) * a[k].squaredNorm();
  return s;
}

// Right-hand sides Phi^{1-p} (B^dagger B)^{p/2} and Phi^{1-p} (B B^dagger)^{p/2}.
inline std::pair<FourierBlocks, FourierBlocks> identity_targets(const FourierBlocks& beta_hat, double p) {
  const double phi = schatten_quasi_norm(beta_hat, p);
  const double c = std::pow(phi, 1.0 - p);
  double smax = 0;
  for (const auto& b : beta_hat.blocks) smax = std::max(smax, singular_values(b).maxCoeff());
  // from the SVD of B itself: eigenvalues of B^dag B carry eps*|B|^2 noise,
  // which sigma^p would amplify far above the cutoff
  FourierBlocks left, right;
  for (const auto& b : beta_hat.blocks) {
    Eigen::JacobiSVD<CMat> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Vec s = svd.singularValues();
    for (Eigen::Index i = 0; i < s.size(); ++i) s(i) = s(i) > kSupportCutoff * smax ? std::pow(s(i), p) : 0.0;
    left.blocks.push_back(c * svd.matrixV() * s.asDiagonal() * svd.matrixV().adjoint());
    right.blocks.push_back(c * svd.matrixU() * s.asDiagonal() * svd.matrixU().adjoint());
  }
  return {left, right};
}

}  // namespace detail

/// Relative residual of zhat as an element of the (Clarke) subdifferential
/// of Phi at betahat. For L > 2 this is the d_rho-weighted relative
/// Frobenius residual of both support identities
///   B^dagger Z = Phi^{1-p} (B^dagger B)^{p/2},  Z B^dagger = Phi^{1-p} (B B^dagger)^{p/2};
/// for L = 2 it is max(|<Z,B>_M - |B|_1| / |B|_1, max(0, |Z|_inf - 1)).
inline double subgradient_membership_residual(const FourierBlocks& beta_hat, const FourierBlocks& z_hat, std::size_t L) {
  if (L < 2) throw Error(ErrorKind::validation, "subgradient_membership_residual: L must be >= 2");
  beta_hat.check_same_shape(z_hat);
  const double p = 2.0 / static_cast<double>(L);
  const double phi = schatten_quasi_norm(beta_hat, p);
  if (!(phi > 0)) throw Error(ErrorKind::validation, "subgradient_membership_residual: zero beta");
  if (L == 2) {
    const double inner = matrix_inner(z_hat, beta_hat).real();
    double zinf = 0;
    for (const auto& z : z_hat.blocks) zinf = std::max(zinf, singular_values(z).maxCoeff());
    return std::max(std::abs(inner - phi) / phi, std::max(0.0, zinf - 1.0));
  }
  const auto [tl, tr] = detail::identity_targets(beta_hat, p);
  const FourierBlocks el = beta_hat.adjoint() * z_hat - tl;
  const FourierBlocks er = z_hat * beta_hat.adjoint() - tr;
  return std::sqrt((detail::weighted_frob2(el) + detail::weighted_frob2(er)) /
                   (detail::weighted_frob2(tl) + detail::weighted_frob2(tr)));
}

struct KktReport {
  std::size_t layers = 0;
  double margin_scale = 0;           // beta was divided by this (its min margin)
  std::vector<std::size_t> active;   // indices with normalized margin <= 1 + tol
  std::vector<double> alpha;         // one per sample, zero off the active set
  FourierBlocks z_hat;               // (1/|G|) sum alpha_n y_n xhat_n
  double membership_residual = 0;
  double fit_residual = 0;           // NNLS residual relative to the target
  double phi = 0;                    // Phi of the normalized beta
  double gamma_theory = 0;           // Phi(beta)^{p-1} for the unnormalized beta
  bool degenerate = false;           // empty active set
  std::optional<bool> assumption_zinf;  // L = 2: |zhat|_inf <= 1 (+1e-6)
};

/// Normalizes beta to unit min margin, picks the active set and fits
/// alpha >= 0 so that zhat(alpha) satisfies the support identities.
inline KktReport fit_dual_coefficients(const Vec& beta, const Dataset& data, const IrrepSet& irreps, std::size_t L,
                                       double margin_tol = 1e-3) {
  data.validate();
  if (L < 2) throw Error(ErrorKind::validation, "fit_dual_coefficients: L must be >= 2");
  const double p = 2.0 / static_cast<double>(L);
  double mm = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n < data.size(); ++n) mm = std::min(mm, data.labels[n] * data.inputs[n].dot(beta));
  if (!(mm > 0)) throw Error(ErrorKind::validation, "fit_dual_coefficients: beta does not separate the data");

  KktReport r;
  r.layers = L;
  r.margin_scale = mm;
  const Vec bn = beta / mm;
  const FourierBlocks bh = gft(bn, irreps);
  r.phi = schatten_quasi_norm(bh, p);
  r.gamma_theory = std::pow(schatten_quasi_norm(gft(beta, irreps), p), p - 1.0);
  r.alpha.assign(data.size(), 0.0);
  for (std::size_t n = 0; n < data.size(); ++n)
    if (data.labels[n] * data.inputs[n].dot(bn) <= 1.0 + margin_tol) r.active.push_back(n);
  r.z_hat = FourierBlocks::zeros(irreps.dims());
  if (r.active.empty()) {
    r.degenerate = true;
    r.membership_residual = subgradient_membership_residual(bh, r.z_hat, L);
    r.fit_residual = 1.0;
    return r;
  }

  const double inv_n = 1.0 / static_cast<double>(irreps.group().order());
  std::vector<FourierBlocks> cols;
  for (auto n : r.active) cols.push_back(gft(data.inputs[n], irreps) * cplx(data.labels[n] * inv_n));

  // Stack weighted real/imag parts of both identities.
  FourierBlocks tl, tr;
  if (L == 2) {
    // unit factor for p = 1
    std::tie(tl, tr) = detail::identity_targets(bh, 1.0);
  } else {
    std::tie(tl, tr) = detail::identity_targets(bh, p);
  }
  Eigen::Index rows = 0;
  for (std::size_t k = 0; k < bh.size(); ++k) rows += 4 * static_cast<Eigen::Index>(bh.dim(k) * bh.dim(k));
  Mat A(rows, static_cast<Eigen::Index>(cols.size()));
  Vec b(rows);
  auto stack = [&](const FourierBlocks& left, const FourierBlocks& right, auto&& sink) {
    Eigen::Index r0 = 0;
    for (std::size_t k = 0; k < bh.size(); ++k) {
      const double w = std::sqrt(static_cast<double>(bh.dim(k)));
      for (const CMat* m : {&left[k], &right[k]})
        for (Eigen::Index i = 0; i < m->size(); ++i) {
          sink(r0++, w * (*m)(i).real());
          sink(r0++, w * (*m)(i).imag());
        }
    }
  };
  stack(tl, tr, [&](Eigen::Index i, double v) { b(i) = v; });
  for (std::size_t c = 0; c < cols.size(); ++c) {
    const FourierBlocks l = bh.adjoint() * cols[c];
    const FourierBlocks rr = cols[c] * bh.adjoint();
    stack(l, rr, [&](Eigen::Index i, double v) { A(i, static_cast<Eigen::Index>(c)) = v; });
  }
  const auto sol = nnls(A, b);
  r.fit_residual = b.norm() > 0 ? sol.residual_norm / b.norm() : 0.0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    r.alpha[r.active[c]] = sol.x(static_cast<Eigen::Index>(c));
    r.z_hat += cols[c] * cplx(sol.x(static_cast<Eigen::Index>(c)));
  }
  r.membership_residual = subgradient_membership_residual(bh, r.z_hat, L);
  if (L == 2) {
    double zinf = 0;
    for (const auto& z : r.z_hat.blocks) zinf = std::max(zinf, singular_values(z).maxCoeff());
    r.assumption_zinf = zinf <= 1.0 + 1e-6;
  }
  return r;
}

// ---------------------------------------------------------------------------
// Layer recurrences at stationarity

struct RecurrenceReport {
  std::vector<double> layer;  // |w_l - gamma R_l|_M / |w_l|_M
  double power_identity = 0;  // B B^dag vs gamma^L (Z B^dag)^L
  double transpose_identity = 0;  // B^dag B vs gamma^L (B^dag Z)^L
  double hermitian_zb = 0;    // Z B^dag
  double hermitian_bz = 0;    // B^dag Z
  double gamma = 0;           // least-squares fit over all layers
  double max() const {
    double m = std::max({power_identity, transpose_identity, hermitian_zb, hermitian_bz});
    for (double v : layer) m = std::max(m, v);
    return m;
  }
};

namespace detail {

inline double rel(const FourierBlocks& diff, const FourierBlocks& ref) {
  const double den = weighted_frob2(ref);
  return den > 0 ? std::sqrt(weighted_frob2(diff) / den) : std::sqrt(weighted_frob2(diff));
}

inline FourierBlocks block_power(const FourierBlocks& a, std::size_t L) {
  FourierBlocks out = a;
  for (std::size_t i = 1; i < L; ++i) out = out * a;
  return out;
}

// R_l = w_{l+1}^dag ... w_L^dag Z w_1^dag ... w_{l-1}^dag
inline std::vector<FourierBlocks> recurrence_rhs(const std::vector<FourierBlocks>& w, const FourierBlocks& z) {
  const std::size_t L = w.size();
  std::vector<FourierBlocks> out;
  for (std::size_t l = 0; l < L; ++l) {
    FourierBlocks r = z;
    for (std::size_t m = L; m-- > l + 1;) r = w[m].adjoint() * r;
    for (std::size_t m = 0; m < l; ++m) r = r * w[m].adjoint();
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace detail

/// Residuals of the stationarity recurrences for per-layer transforms
/// w_hat[0..L-1] (first layer first).
inline RecurrenceReport recurrence_residuals(const std::vector<FourierBlocks>& w_hat, const FourierBlocks& z_hat) {
  const std::size_t L = w_hat.size();
  if (L < 1) throw Error(ErrorKind::validation, "recurrence_residuals: no layers");
  for (const auto& w : w_hat) w.check_same_shape(z_hat);
  const auto R = detail::recurrence_rhs(w_hat, z_hat);
  double num = 0, den = 0;
  for (std::size_t l = 0; l < L; ++l) {
    num += matrix_inner(w_hat[l], R[l]).real();
    den += detail::weighted_frob2(R[l]);
  }
  RecurrenceReport rep;
  rep.gamma = den > 0 ? num / den : 0.0;
  for (std::size_t l = 0; l < L; ++l) rep.layer.push_back(detail::rel(w_hat[l] - R[l] * cplx(rep.gamma), w_hat[l]));

  FourierBlocks beta = w_hat[0];
  for (std::size_t l = 1; l < L; ++l) beta = w_hat[l] * beta;
  const double gL = std::pow(rep.gamma, static_cast<double>(L));
  const FourierBlocks bbd = beta * beta.adjoint();
  const FourierBlocks bdb = beta.adjoint() * beta;
  const FourierBlocks zb = z_hat * beta.adjoint();
  const FourierBlocks bz = beta.adjoint() * z_hat;
  rep.power_identity = detail::rel(bbd - detail::block_power(zb, L) * cplx(gL), bbd);
  rep.transpose_identity = detail::rel(bdb - detail::block_power(bz, L) * cplx(gL), bdb);
  rep.hermitian_zb = detail::rel(zb - zb.adjoint(), zb);
  rep.hermitian_bz = detail::rel(bz - bz.adjoint(), bz);
  return rep;
}

/// Per-layer transforms of a linear G-CNN's filters.
inline std::vector<FourierBlocks> layer_transforms(const NetworkParams& p, const IrrepSet& irreps) {
  if (!p.spec.is_group_conv() && p.spec.kind != ArchKind::fourier_space_bandlimited)
    throw Error(ErrorKind::wrong_variant, "layer transforms exist for group-convolutional networks only");
  std::vector<FourierBlocks> w;
  for (std::size_t l = 0; l < p.spec.layers; ++l) {
    if (p.spec.kind == ArchKind::fourier_space_bandlimited) w.push_back(band_layer_blocks(p, l));
    else w.push_back(gft(p.tensors[l].col(0), irreps));
  }
  return w;
}

inline RecurrenceReport recurrence_residuals(const NetworkParams& p, const IrrepSet& irreps, const FourierBlocks& z_hat) {
  return recurrence_residuals(layer_transforms(p, irreps), z_hat);
}

/// Builds a stationary G-CNN for the direction z by alternating fixed-point
/// updates w_l <- R_l / |R_l| (each layer normalized), starting from real
/// filters so every iterate stays the transform of a real signal.
struct StationaryPoint {
  std::vector<FourierBlocks> w_hat;
  FourierBlocks z_hat;
  std::size_t iterations = 0;
  double change = 0;  // largest relative layer change in the last sweep
};

inline StationaryPoint stationary_point(const Vec& z, const IrrepSet& irreps, std::size_t L, std::uint64_t seed,
                                        std::size_t max_iter = 200000, double tol = 1e-14) {
  std::mt19937_64 rng(seed);
  StationaryPoint sp;
  sp.z_hat = gft(z, irreps);
  const FourierBlocks& z_hat = sp.z_hat;
  for (std::size_t l = 0; l < L; ++l) {
    FourierBlocks w = gft(random_gaussian_vector(z.size(), rng), irreps);
    w *= cplx(1.0 / std::sqrt(detail::weighted_frob2(w)));
    sp.w_hat.push_back(std::move(w));
  }
  for (sp.iterations = 0; sp.iterations < max_iter; ++sp.iterations) {
    sp.change = 0;
    for (std::size_t l = 0; l < L; ++l) {
      FourierBlocks r = z_hat;
      for (std::size_t m = L; m-- > l + 1;) r = sp.w_hat[m].adjoint() * r;
      for (std::size_t m = 0; m < l; ++m) r = r * sp.w_hat[m].adjoint();
      const double nr = std::sqrt(detail::weighted_frob2(r));
      if (!(nr > 0)) throw Error(ErrorKind::numerical, "stationary_point: update vanished");
      r *= cplx(1.0 / nr);
      sp.change = std::max(sp.change, std::sqrt(detail::weighted_frob2(r - sp.w_hat[l])));
      sp.w_hat[l] = std::move(r);
    }
    if (sp.change < tol) break;
  }
  return sp;
}

}  // namespace gbias
