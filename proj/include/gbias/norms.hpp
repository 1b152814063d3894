#pragma once

// Norms, rank/support profiles and uncertainty inequalities.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/fourier.hpp"
#include "gbias/irreps.hpp"
#include "gbias/linalg.hpp"

namespace gbias {

namespace detail {

inline void require_finite(const FourierBlocks& b, const char* who) {
  for (const auto& m : b.blocks)
    if (!m.allFinite()) throw Error(ErrorKind::numerical, std::string(who) + ": non-finite block entries");
}

inline double global_sigma_max(const std::vector<Vec>& sv) {
  double m = 0;
  for (const auto& s : sv)
    if (s.size() > 0) m = std::max(m, s.maxCoeff());
  return m;
}

}  // namespace detail

inline std::vector<Vec> block_singular_values(const FourierBlocks& b) {
  std::vector<Vec> out;
  out.reserve(b.size());
  for (const auto& m : b.blocks) out.push_back(singular_values(m));
  return out;
}

/// [sum_rho d_rho sum_i sigma_{rho,i}^p]^{1/p}.
inline double schatten_quasi_norm(const FourierBlocks& b, double p) {
  if (!(p > 0)) throw Error(ErrorKind::validation, "schatten_quasi_norm: p must be positive");
  detail::require_finite(b, "schatten_quasi_norm");
  double s = 0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const Vec sv = singular_values(b[k]);
    for (Eigen::Index i = 0; i < sv.size(); ++i)
      if (sv(i) > 0) s += static_cast<double>(b.dim(k)) * std::pow(sv(i), p);
  }
  return std::pow(s, 1.0 / p);
}

/// (sum_u |f(u)|^p)^{1/p}.
template <class Derived>
double real_quasi_norm(const Eigen::MatrixBase<Derived>& f, double p) {
  if (!(p > 0)) throw Error(ErrorKind::validation, "real_quasi_norm: p must be positive");
  double s = 0;
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double a = std::abs(f(i));
    if (a > 0) s += std::pow(a, p);
  }
  return std::pow(s, 1.0 / p);
}

struct RankSupportProfile {
  std::vector<std::size_t> ranks;  // per block
  std::vector<std::size_t> dims;
  std::size_t support = 0;         // real-space nonzeros
  std::size_t weighted_rank = 0;   // sum_rho d_rho rank
  std::size_t nonzero_blocks = 0;
};

/// Ranks count singular values above tol * (largest singular value over
/// all blocks); support counts |f(u)| above tol * max|f|.
inline RankSupportProfile rank_support_profile(const FourierBlocks& b, const Vec& f, double tol = 1e-6) {
  if (!(tol > 0)) throw Error(ErrorKind::validation, "rank_support_profile: tol must be positive");
  RankSupportProfile r;
  const auto sv = block_singular_values(b);
  const double smax = detail::global_sigma_max(sv);
  for (std::size_t k = 0; k < b.size(); ++k) {
    std::size_t rank = 0;
    if (smax > 0)
      for (Eigen::Index i = 0; i < sv[k].size(); ++i) rank += sv[k](i) > tol * smax;
    r.ranks.push_back(rank);
    r.dims.push_back(b.dim(k));
    r.weighted_rank += b.dim(k) * rank;
    r.nonzero_blocks += rank > 0;
  }
  const double fmax = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (fmax > 0)
    for (Eigen::Index i = 0; i < f.size(); ++i) r.support += std::abs(f(i)) > tol * fmax;
  return r;
}

inline RankSupportProfile rank_support_profile(const Vec& f, const IrrepSet& irreps, double tol = 1e-6) {
  return rank_support_profile(gft(f, irreps), f, tol);
}

struct NormReport {
  std::vector<double> ps;
  std::vector<double> real_norms;
  std::vector<double> fourier_norms;
  std::vector<Vec> singular_values;
  RankSupportProfile profile;
};

inline NormReport norm_report(const Vec& f, const IrrepSet& irreps, const std::vector<double>& ps, double tol = 1e-6) {
  NormReport r;
  const FourierBlocks b = gft(f, irreps);
  r.ps = ps;
  for (double p : ps) {
    r.real_norms.push_back(real_quasi_norm(f, p));
    r.fourier_norms.push_back(schatten_quasi_norm(b, p));
  }
  r.singular_values = block_singular_values(b);
  r.profile = rank_support_profile(b, f, tol);
  return r;
}

// ---------------------------------------------------------------------------
// Uncertainty principles

struct UncertaintyEntry {
  std::string name;
  bool applicable = false;
  double lhs = 0;
  double rhs = 0;
  bool satisfied = false;
};

struct UncertaintyReport {
  UncertaintyEntry donoho_stark;  // abelian groups only
  UncertaintyEntry meshulam;      // |supp f| * sum d rank(fhat)
  UncertaintyEntry kuperberg;     // (|f|_1/|f|_inf)(sum d |fhat|_S1 / max |fhat|_Sinf)
  bool all_satisfied() const {
    return (!donoho_stark.applicable || donoho_stark.satisfied) && meshulam.satisfied && kuperberg.satisfied;
  }
};

/// Evaluates the three uncertainty inequalities for f and its transform.
/// `tol` is the relative cutoff for support and rank counting; satisfied
/// flags allow 1e-9 relative slack on the right-hand side |G|.
inline UncertaintyReport uncertainty_check(const Vec& f, const FourierBlocks& b, double tol = 1e-9) {
  const double finf = f.size() ? f.cwiseAbs().maxCoeff() : 0.0;
  if (!(finf > 0)) throw Error(ErrorKind::validation, "uncertainty_check: zero signal");
  const double n = static_cast<double>(f.size());
  const double slack = 1e-9 * n;
  const double ratio_real = f.cwiseAbs().sum() / finf;

  UncertaintyReport r;
  bool abelian = true;
  for (std::size_t k = 0; k < b.size(); ++k) abelian = abelian && b.dim(k) == 1;

  r.donoho_stark.name = "donoho_stark";
  r.donoho_stark.applicable = abelian;
  r.donoho_stark.rhs = n;
  if (abelian) {
    double l1 = 0, linf = 0;
    for (std::size_t k = 0; k < b.size(); ++k) {
      l1 += std::abs(b[k](0, 0));
      linf = std::max(linf, std::abs(b[k](0, 0)));
    }
    r.donoho_stark.lhs = ratio_real * l1 / linf;
    r.donoho_stark.satisfied = r.donoho_stark.lhs >= n - slack;
  }

  const auto profile = rank_support_profile(b, f, tol);
  r.meshulam.name = "meshulam";
  r.meshulam.applicable = true;
  r.meshulam.lhs = static_cast<double>(profile.support) * static_cast<double>(profile.weighted_rank);
  r.meshulam.rhs = n;
  r.meshulam.satisfied = r.meshulam.lhs >= n - slack;

  double s1 = 0, sinf = 0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const Vec sv = singular_values(b[k]);
    s1 += static_cast<double>(b.dim(k)) * sv.sum();
    if (sv.size()) sinf = std::max(sinf, sv.maxCoeff());
  }
  r.kuperberg.name = "kuperberg";
  r.kuperberg.applicable = true;
  r.kuperberg.lhs = ratio_real * s1 / sinf;
  r.kuperberg.rhs = n;
  r.kuperberg.satisfied = r.kuperberg.lhs >= n - slack;
  return r;
}

inline UncertaintyReport uncertainty_check(const Vec& f, const IrrepSet& irreps, double tol = 1e-9) {
  return uncertainty_check(f, gft(f, irreps), tol);
}

}  // namespace gbias
