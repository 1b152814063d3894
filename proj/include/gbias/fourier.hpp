#pragma once

// Group Fourier transform over an IrrepSet.
//
// Convention: analysis is unnormalized, fhat(rho) = sum_u f(u) rho(u);
// synthesis carries 1/|G|. The unitary basis matrix F has row (rho,i,j)
// (column-major within a block) equal to sqrt(d_rho/|G|) rho(u)_ij.

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/group.hpp"
#include "gbias/irreps.hpp"
#include "gbias/linalg.hpp"

namespace gbias {

/// One d_rho x d_rho complex block per irrep, in IrrepSet order.
struct FourierBlocks {
  std::vector<CMat> blocks;

  std::size_t size() const { return blocks.size(); }
  CMat& operator[](std::size_t k) { return blocks[k]; }
  const CMat& operator[](std::size_t k) const { return blocks[k]; }
  std::size_t dim(std::size_t k) const { return static_cast<std::size_t>(blocks[k].rows()); }

  static FourierBlocks zeros(const std::vector<std::size_t>& dims) {
    FourierBlocks b;
    for (auto d : dims) b.blocks.push_back(CMat::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    return b;
  }
  static FourierBlocks identities(const std::vector<std::size_t>& dims) {
    FourierBlocks b;
    for (auto d : dims) b.blocks.push_back(CMat::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d)));
    return b;
  }

  FourierBlocks adjoint() const {
    FourierBlocks o;
    for (const auto& b : blocks) o.blocks.push_back(b.adjoint());
    return o;
  }
  FourierBlocks& operator+=(const FourierBlocks& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < blocks.size(); ++k) blocks[k] += o.blocks[k];
    return *this;
  }
  FourierBlocks& operator-=(const FourierBlocks& o) {
    check_same_shape(o);
    for (std::size_t k = 0; k < blocks.size(); ++k) blocks[k] -= o.blocks[k];
    return *this;
  }
  FourierBlocks& operator*=(cplx s) {
    for (auto& b : blocks) b *= s;
    return *this;
  }
  friend FourierBlocks operator+(FourierBlocks a, const FourierBlocks& b) { return a += b; }
  friend FourierBlocks operator-(FourierBlocks a, const FourierBlocks& b) { return a -= b; }
  friend FourierBlocks operator*(FourierBlocks a, cplx s) { return a *= s; }
  friend FourierBlocks operator*(cplx s, FourierBlocks a) { return a *= s; }

  /// Blockwise matrix product.
  friend FourierBlocks operator*(const FourierBlocks& a, const FourierBlocks& b) {
    a.check_same_shape(b);
    FourierBlocks o;
    for (std::size_t k = 0; k < a.size(); ++k) o.blocks.push_back(a.blocks[k] * b.blocks[k]);
    return o;
  }

  void check_same_shape(const FourierBlocks& o) const {
    if (o.size() != size()) throw Error(ErrorKind::shape_mismatch, "FourierBlocks: block count mismatch");
    for (std::size_t k = 0; k < size(); ++k)
      if (o.blocks[k].rows() != blocks[k].rows() || o.blocks[k].cols() != blocks[k].cols())
        throw Error(ErrorKind::shape_mismatch, "FourierBlocks: block " + std::to_string(k) + " shape mismatch");
  }

  void check_dims(const std::vector<std::size_t>& dims) const {
    if (dims.size() != size())
      throw Error(ErrorKind::shape_mismatch, "FourierBlocks: " + std::to_string(size()) + " blocks for " +
                                                 std::to_string(dims.size()) + " irreps");
    for (std::size_t k = 0; k < size(); ++k)
      if (static_cast<std::size_t>(blocks[k].rows()) != dims[k] || static_cast<std::size_t>(blocks[k].cols()) != dims[k])
        throw Error(ErrorKind::shape_mismatch, "FourierBlocks: block " + std::to_string(k) + " is not " +
                                                   std::to_string(dims[k]) + "x" + std::to_string(dims[k]));
  }

  double max_abs_diff(const FourierBlocks& o) const {
    check_same_shape(o);
    double e = 0;
    for (std::size_t k = 0; k < size(); ++k) e = std::max(e, max_abs(blocks[k] - o.blocks[k]));
    return e;
  }
};

/// <A,B>_M = sum_rho d_rho tr(A B^dagger).
inline cplx matrix_inner(const FourierBlocks& a, const FourierBlocks& b) {
  a.check_same_shape(b);
  cplx s = 0;
  for (std::size_t k = 0; k < a.size(); ++k)
    s += static_cast<double>(a.dim(k)) * (a[k].array() * b[k].array().conjugate()).sum();
  return s;
}

namespace detail {

inline void require_length(const IrrepSet& irreps, Eigen::Index n, const char* who) {
  if (static_cast<std::size_t>(n) != irreps.group().order())
    throw Error(ErrorKind::shape_mismatch, std::string(who) + ": signal length " + std::to_string(n) +
                                               " does not match |G| = " + std::to_string(irreps.group().order()));
}

inline FourierBlocks gft_impl(const IrrepSet& s, const CVec& f) {
  FourierBlocks out = FourierBlocks::zeros(s.dims());
  const std::size_t n = s.group().order();
  if (!s.is_product()) {
    for (std::size_t k = 0; k < s.size(); ++k)
      for (std::size_t u = 0; u < n; ++u)
        if (f(static_cast<Eigen::Index>(u)) != cplx(0)) out[k].noalias() += f(static_cast<Eigen::Index>(u)) * s.stored(k, static_cast<Element>(u));
    return out;
  }
  const IrrepSet& A = s.left();
  const IrrepSet& B = s.right();
  const auto na = static_cast<Eigen::Index>(A.group().order());
  const auto nb = static_cast<Eigen::Index>(B.group().order());
  // B-side transform of every row f(a, .)
  std::vector<FourierBlocks> t(static_cast<std::size_t>(na));
  for (Eigen::Index a = 0; a < na; ++a) t[static_cast<std::size_t>(a)] = gft_impl(B, f.segment(a * nb, nb));
  CVec col(na);
  for (std::size_t ib = 0; ib < B.size(); ++ib) {
    const auto db = static_cast<Eigen::Index>(B.dim(ib));
    for (Eigen::Index q = 0; q < db; ++q)
      for (Eigen::Index p = 0; p < db; ++p) {
        for (Eigen::Index a = 0; a < na; ++a) col(a) = t[static_cast<std::size_t>(a)][ib](p, q);
        const FourierBlocks sa = gft_impl(A, col);
        for (std::size_t ia = 0; ia < A.size(); ++ia) {
          const auto da = static_cast<Eigen::Index>(A.dim(ia));
          CMat& blk = out[ia * B.size() + ib];
          for (Eigen::Index j = 0; j < da; ++j)
            for (Eigen::Index i = 0; i < da; ++i) blk(i * db + p, j * db + q) = sa[ia](i, j);
        }
      }
  }
  return out;
}

inline CVec igft_impl(const IrrepSet& s, const FourierBlocks& blocks) {
  const std::size_t n = s.group().order();
  CVec f = CVec::Zero(static_cast<Eigen::Index>(n));
  if (!s.is_product()) {
    for (std::size_t k = 0; k < s.size(); ++k) {
      const double d = static_cast<double>(s.dim(k));
      for (std::size_t u = 0; u < n; ++u)
        f(static_cast<Eigen::Index>(u)) += d * (blocks[k].array() * s.stored(k, static_cast<Element>(u)).array().conjugate()).sum();
    }
    return f / static_cast<double>(n);
  }
  const IrrepSet& A = s.left();
  const IrrepSet& B = s.right();
  const auto na = static_cast<Eigen::Index>(A.group().order());
  const auto nb = static_cast<Eigen::Index>(B.group().order());
  std::vector<FourierBlocks> t(static_cast<std::size_t>(na), FourierBlocks::zeros(B.dims()));
  FourierBlocks sa = FourierBlocks::zeros(A.dims());
  for (std::size_t ib = 0; ib < B.size(); ++ib) {
    const auto db = static_cast<Eigen::Index>(B.dim(ib));
    for (Eigen::Index q = 0; q < db; ++q)
      for (Eigen::Index p = 0; p < db; ++p) {
        for (std::size_t ia = 0; ia < A.size(); ++ia) {
          const auto da = static_cast<Eigen::Index>(A.dim(ia));
          const CMat& blk = blocks[ia * B.size() + ib];
          for (Eigen::Index j = 0; j < da; ++j)
            for (Eigen::Index i = 0; i < da; ++i) sa[ia](i, j) = blk(i * db + p, j * db + q);
        }
        const CVec col = igft_impl(A, sa);
        for (Eigen::Index a = 0; a < na; ++a) t[static_cast<std::size_t>(a)][ib](p, q) = col(a);
      }
  }
  for (Eigen::Index a = 0; a < na; ++a) f.segment(a * nb, nb) = igft_impl(B, t[static_cast<std::size_t>(a)]);
  return f;
}

}  // namespace detail

/// fhat(rho) = sum_u f(u) rho(u). Product sets are transformed factor-wise.
template <class Derived>
FourierBlocks gft(const Eigen::MatrixBase<Derived>& f, const IrrepSet& irreps) {
  detail::require_length(irreps, f.size(), "gft");
  const CVec fc = f.template cast<cplx>();
  return detail::gft_impl(irreps, fc);
}

/// f(u) = (1/|G|) sum_rho d_rho tr(fhat(rho) rho(u)^dagger).
inline CVec igft(const FourierBlocks& blocks, const IrrepSet& irreps) {
  blocks.check_dims(irreps.dims());
  return detail::igft_impl(irreps, blocks);
}

/// igft for blocks known to come from a real signal; throws if the
/// imaginary part exceeds `imag_tol` relative to the real part.
inline Vec igft_real(const FourierBlocks& blocks, const IrrepSet& irreps, double imag_tol = 1e-8) {
  const CVec f = igft(blocks, irreps);
  const double scale = std::max(1.0, max_abs(f.real()));
  if (max_abs(f.imag()) > imag_tol * scale)
    throw Error(ErrorKind::numerical, "igft_real: synthesized signal has imaginary part " +
                                          std::to_string(max_abs(f.imag())));
  return f.real();
}

/// (g * h)(u) = sum_v g(uv) h(v).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> cross_correlate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& g,
                                                         const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& h,
                                                         const GroupTable& group) {
  const auto n = static_cast<Eigen::Index>(group.order());
  if (g.size() != n || h.size() != n)
    throw Error(ErrorKind::shape_mismatch, "cross_correlate: signal length does not match |G|");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(n);
  for (Eigen::Index u = 0; u < n; ++u) {
    const auto row = group.row(static_cast<Element>(u));
    Scalar acc = 0;
    for (Eigen::Index v = 0; v < n; ++v) acc += g(row[static_cast<std::size_t>(v)]) * h(v);
    out(u) = acc;
  }
  return out;
}

/// f^-(u) = f(u^-1).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> involution(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& f,
                                                    const GroupTable& group) {
  const auto n = static_cast<Eigen::Index>(group.order());
  if (f.size() != n) throw Error(ErrorKind::shape_mismatch, "involution: signal length does not match |G|");
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  for (Eigen::Index u = 0; u < n; ++u) out(u) = f(group.inverse(static_cast<Element>(u)));
  return out;
}

/// Left translation (L_w f)(u) = f(w^-1 u).
template <class Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> left_translate(const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& f,
                                                        Element w, const GroupTable& group) {
  const auto n = static_cast<Eigen::Index>(group.order());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out(n);
  const Element winv = group.inverse(w);
  for (Eigen::Index u = 0; u < n; ++u) out(u) = f(group.mul(winv, static_cast<Element>(u)));
  return out;
}

// ---------------------------------------------------------------------------
// Unitary basis matrix

inline constexpr std::size_t kDenseBasisCap = 4096;

/// Row offset of block k in the stacked (rho,i,j) ordering.
inline std::vector<std::size_t> block_offsets(const std::vector<std::size_t>& dims) {
  std::vector<std::size_t> off(dims.size() + 1, 0);
  for (std::size_t k = 0; k < dims.size(); ++k) off[k + 1] = off[k] + dims[k] * dims[k];
  return off;
}

/// Stacks sqrt(d/|G|) * vec(block) (column-major) into a length-|G| vector.
inline CVec blocks_to_vector(const FourierBlocks& b, std::size_t group_order) {
  std::size_t total = 0;
  for (std::size_t k = 0; k < b.size(); ++k) total += b.dim(k) * b.dim(k);
  CVec v(static_cast<Eigen::Index>(total));
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < b.size(); ++k) {
    const double scale = std::sqrt(static_cast<double>(b.dim(k)) / static_cast<double>(group_order));
    const auto d = static_cast<Eigen::Index>(b.dim(k));
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i) v(r++) = scale * b[k](i, j);
  }
  return v;
}

inline FourierBlocks vector_to_blocks(const CVec& v, const std::vector<std::size_t>& dims, std::size_t group_order) {
  FourierBlocks b = FourierBlocks::zeros(dims);
  Eigen::Index r = 0;
  for (std::size_t k = 0; k < dims.size(); ++k) {
    const double scale = std::sqrt(static_cast<double>(group_order) / static_cast<double>(dims[k]));
    const auto d = static_cast<Eigen::Index>(dims[k]);
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index i = 0; i < d; ++i) b[k](i, j) = scale * v(r++);
  }
  if (r != v.size()) throw Error(ErrorKind::shape_mismatch, "vector_to_blocks: length mismatch");
  return b;
}

/// The unitary F, held densely for |G| <= cap, otherwise applied through
/// the (Kronecker-factored) transforms.
class FourierBasis {
 public:
  explicit FourierBasis(IrrepSet irreps, std::size_t dense_cap = kDenseBasisCap) : irreps_(std::move(irreps)) {
    require_complete(irreps_, "fourier_basis");
    const std::size_t n = irreps_.group().order();
    if (n > dense_cap) {
      if (!irreps_.is_product())
        throw Error(ErrorKind::resource, "fourier_basis: |G| = " + std::to_string(n) +
                                             " exceeds the dense cap and the irrep set has no Kronecker factorization");
      return;
    }
    CMat f(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    const auto off = block_offsets(irreps_.dims());
    for (std::size_t k = 0; k < irreps_.size(); ++k) {
      const auto d = static_cast<Eigen::Index>(irreps_.dim(k));
      const double scale = std::sqrt(static_cast<double>(d) / static_cast<double>(n));
      for (std::size_t u = 0; u < n; ++u) {
        const CMat m = irreps_.matrix(k, static_cast<Element>(u));
        for (Eigen::Index j = 0; j < d; ++j)
          for (Eigen::Index i = 0; i < d; ++i)
            f(static_cast<Eigen::Index>(off[k]) + i + j * d, static_cast<Eigen::Index>(u)) = scale * m(i, j);
      }
    }
    dense_ = std::move(f);
  }

  bool is_dense() const { return dense_.has_value(); }
  const CMat& matrix() const {
    if (!dense_) throw Error(ErrorKind::wrong_variant, "fourier_basis: matrix is implicit (Kronecker form)");
    return *dense_;
  }
  const IrrepSet& irreps() const { return irreps_; }

  /// Row label (rho, i, j) of row r.
  struct RowIndex {
    std::size_t irrep, i, j;
  };
  RowIndex row_index(std::size_t r) const {
    const auto off = block_offsets(irreps_.dims());
    for (std::size_t k = 0; k < irreps_.size(); ++k)
      if (r < off[k + 1]) {
        const std::size_t local = r - off[k], d = irreps_.dim(k);
        return {k, local % d, local / d};
      }
    throw Error(ErrorKind::shape_mismatch, "fourier_basis: row out of range");
  }

  template <class Derived>
  CVec apply(const Eigen::MatrixBase<Derived>& x) const {
    if (dense_) return *dense_ * x.template cast<cplx>();
    return blocks_to_vector(gft(x, irreps_), irreps_.group().order());
  }

  CVec apply_adjoint(const CVec& y) const {
    if (dense_) return dense_->adjoint() * y;
    return igft(vector_to_blocks(y, irreps_.dims(), irreps_.group().order()), irreps_);
  }

 private:
  IrrepSet irreps_;
  std::optional<CMat> dense_;
};

inline FourierBasis fourier_basis(const IrrepSet& irreps, std::size_t dense_cap = kDenseBasisCap) {
  return FourierBasis(irreps, dense_cap);
}

}  // namespace gbias
