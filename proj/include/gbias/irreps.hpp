#pragma once

// Complete sets of unitary irreducible representations.
//
// An IrrepSet is either explicit (every rho(g) stored) or a Kronecker
// product of two factor sets for a direct-product group, in which case
// matrices are formed on demand and transforms run factor-wise.

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/group.hpp"
#include "gbias/linalg.hpp"

namespace gbias {

class IrrepSet {
 public:
  struct Data {
    GroupTable group;
    std::vector<std::size_t> dims;
    std::vector<std::string> names;
    // explicit storage: matrices[k][g] is rho_k(g)
    std::vector<std::vector<CMat>> matrices;
    // product storage
    std::shared_ptr<const IrrepSet> left, right;
  };

  explicit IrrepSet(std::shared_ptr<const Data> d) : data_(std::move(d)) {}

  const GroupTable& group() const { return data_->group; }
  std::size_t size() const { return data_->dims.size(); }
  std::size_t dim(std::size_t k) const { return data_->dims[k]; }
  const std::vector<std::size_t>& dims() const { return data_->dims; }
  const std::string& name(std::size_t k) const { return data_->names[k]; }

  bool is_product() const { return data_->left != nullptr; }
  const IrrepSet& left() const { return *data_->left; }
  const IrrepSet& right() const { return *data_->right; }

  /// Explicit access; only valid when !is_product().
  const CMat& stored(std::size_t k, Element g) const { return data_->matrices[k][g]; }

  CMat matrix(std::size_t k, Element g) const {
    if (!is_product()) return data_->matrices[k][g];
    const std::size_t nb = right().size();
    const std::size_t hb = right().group().order();
    return kron(left().matrix(k / nb, static_cast<Element>(g / hb)),
                right().matrix(k % nb, static_cast<Element>(g % hb)));
  }

  cplx character(std::size_t k, Element g) const {
    if (!is_product()) return data_->matrices[k][g].trace();
    const std::size_t nb = right().size();
    const std::size_t hb = right().group().order();
    return left().character(k / nb, static_cast<Element>(g / hb)) *
           right().character(k % nb, static_cast<Element>(g % hb));
  }

  std::size_t sum_of_squared_dims() const {
    std::size_t s = 0;
    for (auto d : data_->dims) s += d * d;
    return s;
  }

  static IrrepSet from_matrices(const GroupTable& g, std::vector<std::vector<CMat>> mats,
                                std::vector<std::string> names = {}) {
    auto d = std::make_shared<Data>(Data{g, {}, std::move(names), std::move(mats), nullptr, nullptr});
    for (std::size_t k = 0; k < d->matrices.size(); ++k) {
      if (d->matrices[k].size() != g.order())
        throw Error(ErrorKind::shape_mismatch, "irrep " + std::to_string(k) + " has " +
                                                   std::to_string(d->matrices[k].size()) +
                                                   " matrices, expected |G|");
      const auto dk = static_cast<std::size_t>(d->matrices[k][0].rows());
      for (const auto& m : d->matrices[k])
        if (static_cast<std::size_t>(m.rows()) != dk || static_cast<std::size_t>(m.cols()) != dk)
          throw Error(ErrorKind::shape_mismatch, "irrep " + std::to_string(k) + " is not square/uniform");
      d->dims.push_back(dk);
    }
    if (d->names.empty())
      for (std::size_t k = 0; k < d->dims.size(); ++k) d->names.push_back("rho" + std::to_string(k + 1));
    return IrrepSet(std::move(d));
  }

 private:
  std::shared_ptr<const Data> data_;
};

// ---------------------------------------------------------------------------
// Verification

/// max_{k,i,j} |rho(g_i) rho(g_j) - rho(g_i g_j)|.
inline double homomorphism_error(const IrrepSet& s) {
  const auto& g = s.group();
  double err = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    std::vector<CMat> m(g.order());
    for (std::size_t i = 0; i < g.order(); ++i) m[i] = s.matrix(k, static_cast<Element>(i));
    for (std::size_t i = 0; i < g.order(); ++i)
      for (std::size_t j = 0; j < g.order(); ++j)
        err = std::max(err, max_abs(m[i] * m[j] - m[g.mul(static_cast<Element>(i), static_cast<Element>(j))]));
  }
  return err;
}

/// max over irreps and elements of |rho(g) rho(g)^† - I| and |rho(e) - I|.
inline double unitarity_error(const IrrepSet& s) {
  double err = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto d = static_cast<Eigen::Index>(s.dim(k));
    const CMat id = CMat::Identity(d, d);
    err = std::max(err, max_abs(s.matrix(k, s.group().identity()) - id));
    for (std::size_t i = 0; i < s.group().order(); ++i) {
      const CMat m = s.matrix(k, static_cast<Element>(i));
      err = std::max(err, max_abs(m * m.adjoint() - id));
    }
  }
  return err;
}

/// Schur orthogonality residual
///   max | (d/|G|) sum_g rho(g)_ab conj(rho'(g)_cd) - delta |
/// over all irrep pairs and entries. Requires a square stacking, so
/// incomplete sets report the completeness gap as an error instead.
inline double schur_orthogonality_error(const IrrepSet& s) {
  const std::size_t n = s.group().order();
  const std::size_t rows = s.sum_of_squared_dims();
  CMat f(rows, n);
  std::size_t r = 0;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const auto d = static_cast<Eigen::Index>(s.dim(k));
    const double scale = std::sqrt(static_cast<double>(d) / static_cast<double>(n));
    for (std::size_t u = 0; u < n; ++u) {
      const CMat m = s.matrix(k, static_cast<Element>(u));
      for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) f(static_cast<Eigen::Index>(r + i + j * d), static_cast<Eigen::Index>(u)) = scale * m(i, j);
    }
    r += s.dim(k) * s.dim(k);
  }
  return max_abs(f * f.adjoint() - CMat::Identity(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(rows)));
}

/// Smallest max-norm distance between the character vectors of two irreps.
inline double min_character_distance(const IrrepSet& s) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = a + 1; b < s.size(); ++b) {
      double dist = 0;
      for (std::size_t g = 0; g < s.group().order(); ++g)
        dist = std::max(dist, std::abs(s.character(a, static_cast<Element>(g)) -
                                       s.character(b, static_cast<Element>(g))));
      best = std::min(best, dist);
    }
  return best;
}

struct IrrepSetReport {
  bool complete = false;
  double homomorphism = 0;
  double unitarity = 0;
  double schur = 0;
  double character_separation = 0;

  bool ok(double hom_tol = 1e-10, double schur_tol = 1e-8) const {
    return complete && homomorphism <= hom_tol && unitarity <= hom_tol && schur <= schur_tol &&
           character_separation > 1e-6;
  }
};

inline IrrepSetReport verify_irreps(const IrrepSet& s) {
  IrrepSetReport r;
  r.complete = s.sum_of_squared_dims() == s.group().order();
  r.homomorphism = homomorphism_error(s);
  r.unitarity = unitarity_error(s);
  r.schur = r.complete ? schur_orthogonality_error(s) : std::numeric_limits<double>::infinity();
  r.character_separation = s.size() > 1 ? min_character_distance(s) : std::numeric_limits<double>::infinity();
  return r;
}

inline void require_complete(const IrrepSet& s, const char* who) {
  if (s.sum_of_squared_dims() != s.group().order())
    throw Error(ErrorKind::validation, std::string(who) + ": irrep set is incomplete (sum d^2 = " +
                                           std::to_string(s.sum_of_squared_dims()) + ", |G| = " +
                                           std::to_string(s.group().order()) + ")");
}

// ---------------------------------------------------------------------------
// Closed-form constructors

/// One-dimensional characters of C_n: irrep k maps a to w^{ka},
/// w = exp(-2 pi i / n).
inline IrrepSet cyclic_irreps(const GroupTable& g) {
  if (g.family() != GroupFamily::cyclic)
    throw Error(ErrorKind::wrong_variant, "cyclic_irreps needs a cyclic_group table");
  const std::size_t n = g.order();
  std::vector<std::vector<CMat>> mats(n, std::vector<CMat>(n, CMat(1, 1)));
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n; ++k) {
    names.push_back("chi" + std::to_string(k));
    for (std::size_t a = 0; a < n; ++a)
      mats[k][a](0, 0) = std::polar(1.0, -2.0 * kPi * static_cast<double>((k * a) % n) / static_cast<double>(n));
  }
  return IrrepSet::from_matrices(g, std::move(mats), std::move(names));
}

IrrepSet product_irreps(const IrrepSet& a, const IrrepSet& b, const GroupTable& product);

/// Characters of a finite abelian group given as nested direct products of
/// cyclic groups: (k_1..k_m) maps (a_1..a_m) to prod w_{d_i}^{k_i a_i}.
inline IrrepSet abelian_irreps(const GroupTable& g) {
  if (!g.is_abelian())
    throw Error(ErrorKind::wrong_variant, "abelian_irreps called on a non-abelian group");
  if (g.family() == GroupFamily::cyclic) return cyclic_irreps(g);
  if (g.family() == GroupFamily::product)
    return product_irreps(abelian_irreps(g.left_factor()), abelian_irreps(g.right_factor()), g);
  throw Error(ErrorKind::wrong_variant,
              "abelian_irreps needs a product-of-cyclic factorization, got " + g.descriptor());
}

/// Unitary irreps of the dihedral group of order n = 2k. One-dimensional:
/// trivial, sign and (k even) the two characters with r -> -1. Two-
/// dimensional rho_m for 1 <= m < k/2: r -> diag(w^m, w^-m),
/// a -> [[0,1],[1,0]], w = exp(2 pi i / k).
inline IrrepSet dihedral_irreps(const GroupTable& g) {
  if (g.family() != GroupFamily::dihedral)
    throw Error(ErrorKind::wrong_variant, "dihedral_irreps needs a dihedral_group table");
  const std::size_t n = g.order(), k = n / 2;
  std::vector<std::vector<CMat>> mats;
  std::vector<std::string> names;
  auto one_dim = [&](double rot, double refl, std::string name) {
    std::vector<CMat> m(n, CMat(1, 1));
    for (std::size_t i = 0; i < k; ++i) {
      m[i](0, 0) = std::pow(rot, static_cast<double>(i));
      m[k + i](0, 0) = refl * std::pow(rot, static_cast<double>(i));
    }
    mats.push_back(std::move(m));
    names.push_back(std::move(name));
  };
  one_dim(1, 1, "trivial");
  one_dim(1, -1, "sign");
  if (k % 2 == 0) {
    one_dim(-1, 1, "alt+");
    one_dim(-1, -1, "alt-");
  }
  for (std::size_t m = 1; 2 * m < k; ++m) {
    std::vector<CMat> mm(n, CMat::Zero(2, 2));
    for (std::size_t i = 0; i < k; ++i) {
      const cplx w = std::polar(1.0, 2.0 * kPi * static_cast<double>((m * i) % k) / static_cast<double>(k));
      mm[i](0, 0) = w;
      mm[i](1, 1) = std::conj(w);
      // a r^i = [[0,1],[1,0]] diag(w, conj w)
      mm[k + i](0, 1) = std::conj(w);
      mm[k + i](1, 0) = w;
    }
    mats.push_back(std::move(mm));
    names.push_back("rho2_" + std::to_string(m));
  }
  return IrrepSet::from_matrices(g, std::move(mats), std::move(names));
}

inline IrrepSet dihedral_irreps(std::size_t n) { return dihedral_irreps(dihedral_group(n)); }

/// Real orthogonal form: each 2-dim irrep conjugated by
/// U = [[1, 1], [-i, i]] / sqrt(2), so r acts as a rotation and a as diag(1, -1).
inline IrrepSet real_dihedral_irreps(std::size_t n) {
  const IrrepSet base = dihedral_irreps(n);
  std::vector<std::vector<CMat>> mats(base.size());
  CMat u(2, 2);
  u << 1, 1, cplx(0, -1), cplx(0, 1);
  u /= std::sqrt(2.0);
  std::vector<std::string> names;
  for (std::size_t k = 0; k < base.size(); ++k) {
    names.push_back(base.name(k));
    for (Element g = 0; g < base.group().order(); ++g) {
      CMat m = base.dim(k) == 2 ? CMat(u * base.stored(k, g) * u.adjoint()) : base.stored(k, g);
      mats[k].push_back(m.real().cast<cplx>());
    }
  }
  return IrrepSet::from_matrices(base.group(), std::move(mats), std::move(names));
}

/// All tensor products rho_a (x) rho_b, evaluated on pairs (g, h). The
/// product group must be direct_product(a.group(), b.group()).
inline IrrepSet product_irreps(const IrrepSet& a, const IrrepSet& b, const GroupTable& product) {
  require_complete(a, "product_irreps(left)");
  require_complete(b, "product_irreps(right)");
  if (!product.is_product() || !product.left_factor().same_as(a.group()) ||
      !product.right_factor().same_as(b.group()))
    throw Error(ErrorKind::validation, "product_irreps: group is not the direct product of the factor groups");
  auto d = std::make_shared<IrrepSet::Data>(IrrepSet::Data{product, {}, {}, {}, nullptr, nullptr});
  d->left = std::make_shared<const IrrepSet>(a);
  d->right = std::make_shared<const IrrepSet>(b);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      d->dims.push_back(a.dim(i) * b.dim(j));
      d->names.push_back(a.name(i) + "(x)" + b.name(j));
    }
  return IrrepSet(std::move(d));
}

inline IrrepSet product_irreps(const IrrepSet& a, const IrrepSet& b) {
  return product_irreps(a, b, direct_product(a.group(), b.group()));
}

/// Stores every matrix explicitly (turns a Kronecker-form set into a plain one).
inline IrrepSet materialize(const IrrepSet& s) {
  if (!s.is_product()) return s;
  std::vector<std::vector<CMat>> mats(s.size());
  std::vector<std::string> names;
  for (std::size_t k = 0; k < s.size(); ++k) {
    mats[k].reserve(s.group().order());
    for (std::size_t g = 0; g < s.group().order(); ++g) mats[k].push_back(s.matrix(k, static_cast<Element>(g)));
    names.push_back(s.name(k));
  }
  return IrrepSet::from_matrices(s.group(), std::move(mats), std::move(names));
}

/// rho_k -> U_k rho_k U_k^† for the given per-irrep unitaries.
inline IrrepSet conjugate_irreps(const IrrepSet& s, const std::vector<CMat>& unitaries) {
  if (unitaries.size() != s.size())
    throw Error(ErrorKind::shape_mismatch, "conjugate_irreps: one unitary per irrep required");
  std::vector<std::vector<CMat>> mats(s.size());
  std::vector<std::string> names;
  for (std::size_t k = 0; k < s.size(); ++k) {
    const CMat& u = unitaries[k];
    if (static_cast<std::size_t>(u.rows()) != s.dim(k))
      throw Error(ErrorKind::shape_mismatch, "conjugate_irreps: unitary size mismatch");
    for (std::size_t g = 0; g < s.group().order(); ++g)
      mats[k].push_back(u * s.matrix(k, static_cast<Element>(g)) * u.adjoint());
    names.push_back(s.name(k));
  }
  return IrrepSet::from_matrices(s.group(), std::move(mats), std::move(names));
}

inline IrrepSet random_conjugate(const IrrepSet& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<CMat> us;
  for (std::size_t k = 0; k < s.size(); ++k) us.push_back(random_unitary(static_cast<Eigen::Index>(s.dim(k)), rng));
  return conjugate_irreps(s, us);
}

// ---------------------------------------------------------------------------
// Numerical decomposition of the regular representation

struct DecompositionOptions {
  std::size_t max_order = 512;
  std::size_t max_retries = 5;
  double eigen_cluster_tol = 1e-8;
  double character_tol = 1e-6;
};

namespace detail {

struct Eigenspace {
  CMat basis;             // |G| x m, orthonormal columns
  std::vector<cplx> chi;  // character of the restricted representation
};

// Returns nullopt when the draw was degenerate (merged eigenspaces).
inline std::optional<IrrepSet> try_decompose(const GroupTable& g, std::uint64_t seed,
                                             const DecompositionOptions& opt) {
  const std::size_t n = g.order();
  const auto ni = static_cast<Eigen::Index>(n);
  std::mt19937_64 rng(seed);
  CMat h = random_complex_gaussian(ni, ni, rng);
  h = 0.5 * (h + h.adjoint()).eval();

  // Average over the group: Hbar[a][b] = (1/|G|) sum_x H[x^-1 a][x^-1 b].
  CMat hbar = CMat::Zero(ni, ni);
  std::vector<Eigen::Index> perm(n);
  for (std::size_t x = 0; x < n; ++x) {
    const Element xinv = g.inverse(static_cast<Element>(x));
    for (std::size_t a = 0; a < n; ++a) perm[a] = g.mul(xinv, static_cast<Element>(a));
    for (std::size_t b = 0; b < n; ++b) {
      const Eigen::Index pb = perm[b];
      for (std::size_t a = 0; a < n; ++a) hbar(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) += h(perm[a], pb);
    }
  }
  hbar /= static_cast<double>(n);
  hbar = 0.5 * (hbar + hbar.adjoint()).eval();

  Eigen::SelfAdjointEigenSolver<CMat> eig(hbar);
  const Vec& ev = eig.eigenvalues();
  const CMat& vecs = eig.eigenvectors();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());

  // cluster ascending eigenvalues
  std::vector<std::pair<Eigen::Index, Eigen::Index>> clusters;  // [start, len)
  for (Eigen::Index i = 0; i < ni;) {
    Eigen::Index j = i + 1;
    while (j < ni && ev(j) - ev(j - 1) <= opt.eigen_cluster_tol * scale) ++j;
    clusters.emplace_back(i, j - i);
    i = j;
  }

  // invmap[x][a] = x^-1 a
  std::vector<Eigenspace> spaces;
  for (auto [start, len] : clusters) {
    Eigenspace sp;
    sp.basis = vecs.middleCols(start, len);
    sp.chi.resize(n);
    for (std::size_t x = 0; x < n; ++x) {
      const Element xinv = g.inverse(static_cast<Element>(x));
      cplx tr = 0;
      for (std::size_t a = 0; a < n; ++a)
        tr += sp.basis.row(static_cast<Eigen::Index>(a))
                  .dot(sp.basis.row(static_cast<Eigen::Index>(g.mul(xinv, static_cast<Element>(a)))));
      sp.chi[x] = tr;
    }
    double norm2 = 0;
    for (const auto& c : sp.chi) norm2 += std::norm(c);
    if (std::abs(norm2 / static_cast<double>(n) - 1.0) > 1e-6) return std::nullopt;  // reducible
    spaces.push_back(std::move(sp));
  }

  // deduplicate by character
  struct Klass {
    std::size_t representative;
    std::size_t copies;
  };
  std::vector<Klass> classes;
  for (std::size_t s = 0; s < spaces.size(); ++s) {
    bool matched = false;
    for (auto& c : classes) {
      double dist = 0;
      for (std::size_t x = 0; x < n; ++x) dist = std::max(dist, std::abs(spaces[s].chi[x] - spaces[c.representative].chi[x]));
      if (dist < opt.character_tol) {
        ++c.copies;
        matched = true;
        break;
      }
    }
    if (!matched) classes.push_back({s, 1});
  }
  std::size_t total = 0;
  for (const auto& c : classes) {
    const auto d = static_cast<std::size_t>(spaces[c.representative].basis.cols());
    if (c.copies != d) return std::nullopt;
    total += d * d;
  }
  if (total != n) return std::nullopt;

  // order: by dimension, trivial first, then discovery order
  std::vector<std::size_t> order(classes.size());
  std::iota(order.begin(), order.end(), 0);
  auto is_trivial = [&](std::size_t c) {
    const auto& chi = spaces[classes[c].representative].chi;
    return std::all_of(chi.begin(), chi.end(), [](cplx v) { return std::abs(v - 1.0) < 1e-6; });
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto da = spaces[classes[a].representative].basis.cols();
    const auto db = spaces[classes[b].representative].basis.cols();
    if (da != db) return da < db;
    return is_trivial(a) && !is_trivial(b);
  });

  std::vector<std::vector<CMat>> mats;
  std::vector<std::string> names;
  for (std::size_t c : order) {
    const CMat& v = spaces[classes[c].representative].basis;
    const Eigen::Index d = v.cols();
    std::vector<CMat> m(n);
    CMat shifted(ni, d);
    for (std::size_t x = 0; x < n; ++x) {
      // (L(x) V)[a] = V[x^-1 a]
      const Element xinv = g.inverse(static_cast<Element>(x));
      for (std::size_t a = 0; a < n; ++a)
        shifted.row(static_cast<Eigen::Index>(a)) = v.row(static_cast<Eigen::Index>(g.mul(xinv, static_cast<Element>(a))));
      CMat r = v.adjoint() * shifted;
      // re-unitarize against round-off (polar factor)
      Eigen::JacobiSVD<CMat> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
      m[x] = svd.matrixU() * svd.matrixV().adjoint();
    }
    mats.push_back(std::move(m));
    names.push_back("irrep" + std::to_string(mats.size()) + "_d" + std::to_string(d));
  }
  return IrrepSet::from_matrices(g, std::move(mats), std::move(names));
}

}  // namespace detail

/// Irreps of an arbitrary finite group from the regular representation:
/// a group-averaged random Hermitian matrix lies in the commutant, and its
/// eigenspaces are the irreducible invariant subspaces.
inline IrrepSet decompose_regular_representation(const GroupTable& g, std::uint64_t seed,
                                                 const DecompositionOptions& opt = {}) {
  if (g.order() > opt.max_order)
    throw Error(ErrorKind::resource, "decompose_regular_representation: |G| = " + std::to_string(g.order()) +
                                         " exceeds the cap of " + std::to_string(opt.max_order));
  for (std::size_t attempt = 0; attempt <= opt.max_retries; ++attempt) {
    if (auto r = detail::try_decompose(g, seed + 0x9e3779b97f4a7c15ULL * attempt, opt)) return *r;
  }
  throw Error(ErrorKind::numerical, "decompose_regular_representation: eigenspaces stayed merged after " +
                                        std::to_string(opt.max_retries) + " retries");
}

/// Closed-form irreps where available, numerical decomposition otherwise.
inline IrrepSet builtin_irreps(const GroupTable& g, std::uint64_t seed = 1) {
  switch (g.family()) {
    case GroupFamily::cyclic: return cyclic_irreps(g);
    case GroupFamily::dihedral: return dihedral_irreps(g);
    case GroupFamily::product:
      return product_irreps(builtin_irreps(g.left_factor(), seed), builtin_irreps(g.right_factor(), seed), g);
    case GroupFamily::quaternion:
    case GroupFamily::table: return decompose_regular_representation(g, seed);
  }
  throw Error(ErrorKind::wrong_variant, "unknown group family");
}

}  // namespace gbias
