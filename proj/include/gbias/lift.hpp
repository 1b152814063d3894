#pragma once

// Lifting images on an n x n grid to signals on the affine group
// (C_n x C_n) x| D_8: cyclic translations plus the square's rotations and
// reflections about the grid center. Element (t_r, t_c, d) has index
// (t_r * n + t_c) * 8 + d, with d indexing D_8 as a^s r^i -> 4 s + i.
//
// The irreps are induced from translation characters (little-group
// construction), so no regular-representation decomposition is needed.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/group.hpp"
#include "gbias/idx.hpp"
#include "gbias/irreps.hpp"
#include "gbias/linalg.hpp"

namespace gbias {

using IntMat2 = std::array<int, 4>;  // row-major 2x2

namespace detail {

inline IntMat2 mul2(const IntMat2& a, const IntMat2& b) {
  return {a[0] * b[0] + a[1] * b[2], a[0] * b[1] + a[1] * b[3], a[2] * b[0] + a[3] * b[2],
          a[2] * b[1] + a[3] * b[3]};
}

inline long mod(long a, long n) { return ((a % n) + n) % n; }

}  // namespace detail

/// D_8 element a^s r^i as an integer matrix acting on (row, col):
/// r is a quarter turn, a flips columns.
inline IntMat2 point_matrix(Element d) {
  const IntMat2 r{0, -1, 1, 0};
  const IntMat2 a{1, 0, 0, -1};
  IntMat2 m{1, 0, 0, 1};
  for (Element i = 0; i < d % 4; ++i) m = detail::mul2(m, r);
  if (d >= 4) m = detail::mul2(a, m);
  return m;
}

struct AffineGroup {
  std::size_t n = 0;
  GroupTable group;
  GroupTable point;  // D_8

  Element element(std::size_t tr, std::size_t tc, Element d) const {
    return static_cast<Element>((tr * n + tc) * 8 + d);
  }
  std::size_t translation_row(Element g) const { return g / 8 / n; }
  std::size_t translation_col(Element g) const { return (g / 8) % n; }
  Element point_part(Element g) const { return g % 8; }
};

/// Builds the table of (C_n x C_n) x| D_8 with
/// (a1, h1)(a2, h2) = (a1 + M_{h1} a2 mod n, h1 h2).
inline AffineGroup affine_group(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::invalid_order, "affine group needs n >= 1");
  const std::size_t order = n * n * 8;
  if (order > kMaxGroupOrder) throw Error(ErrorKind::resource, "affine group too large");
  AffineGroup ag{n, cyclic_group(1), dihedral_group(8)};
  std::array<IntMat2, 8> M;
  for (Element d = 0; d < 8; ++d) M[d] = point_matrix(d);
  std::vector<Element> t(order * order);
  const long ln = static_cast<long>(n);
  for (std::size_t g1 = 0; g1 < order; ++g1) {
    const long r1 = static_cast<long>(g1 / 8 / n), c1 = static_cast<long>((g1 / 8) % n);
    const Element h1 = static_cast<Element>(g1 % 8);
    const auto& m = M[h1];
    for (std::size_t g2 = 0; g2 < order; ++g2) {
      const long r2 = static_cast<long>(g2 / 8 / n), c2 = static_cast<long>((g2 / 8) % n);
      const Element h2 = static_cast<Element>(g2 % 8);
      const long r = detail::mod(r1 + m[0] * r2 + m[1] * c2, ln);
      const long c = detail::mod(c1 + m[2] * r2 + m[3] * c2, ln);
      t[g1 * order + g2] = ag.element(static_cast<std::size_t>(r), static_cast<std::size_t>(c), ag.point.mul(h1, h2));
    }
  }
  std::vector<std::string> labels;
  labels.reserve(order);
  for (std::size_t g = 0; g < order; ++g)
    labels.push_back("(" + std::to_string(g / 8 / n) + "," + std::to_string((g / 8) % n) + "," +
                     ag.point.label(static_cast<Element>(g % 8)) + ")");
  // associativity holds by construction; skip the cubic check
  ag.group = detail::make_group(order, std::move(t), std::move(labels), GroupFamily::table, 0);
  return ag;
}

/// Complete irreps of the affine group. For each D_8-orbit of translation
/// characters chi_k, the stabilizer H_k's irreps sigma extend to
/// chi_k(a) sigma(h) on C_n^2 x| H_k and are induced up to G.
inline IrrepSet affine_irreps(const AffineGroup& ag, std::uint64_t seed = 1) {
  const std::size_t n = ag.n;
  const GroupTable& G = ag.group;
  const GroupTable& H = ag.point;
  const long ln = static_cast<long>(n);
  auto act = [&](Element h, long kr, long kc) {
    const IntMat2 m = point_matrix(h);
    return std::pair<long, long>{detail::mod(m[0] * kr + m[1] * kc, ln), detail::mod(m[2] * kr + m[3] * kc, ln)};
  };
  std::vector<bool> seen(n * n, false);
  std::vector<std::vector<CMat>> mats;
  std::vector<std::string> names;
  std::map<std::vector<Element>, IrrepSet> stabilizer_irreps;

  for (long kr = 0; kr < ln; ++kr)
    for (long kc = 0; kc < ln; ++kc) {
      if (seen[static_cast<std::size_t>(kr * ln + kc)]) continue;
      // stabilizer and left coset representatives h_i (orbit points M_{h_i} k)
      std::vector<Element> stab, reps;
      std::vector<std::pair<long, long>> orbit;
      for (Element h = 0; h < 8; ++h) {
        const auto img = act(h, kr, kc);
        if (img.first == kr && img.second == kc) stab.push_back(h);
        if (!seen[static_cast<std::size_t>(img.first * ln + img.second)]) {
          seen[static_cast<std::size_t>(img.first * ln + img.second)] = true;
          reps.push_back(h);
          orbit.push_back(img);
        }
      }
      auto it = stabilizer_irreps.find(stab);
      if (it == stabilizer_irreps.end()) {
        std::vector<std::vector<Element>> sub(stab.size(), std::vector<Element>(stab.size()));
        for (std::size_t i = 0; i < stab.size(); ++i)
          for (std::size_t j = 0; j < stab.size(); ++j) {
            const Element p = H.mul(stab[i], stab[j]);
            sub[i][j] = static_cast<Element>(std::find(stab.begin(), stab.end(), p) - stab.begin());
          }
        it = stabilizer_irreps.emplace(stab, decompose_regular_representation(group_from_table(sub), seed)).first;
      }
      const IrrepSet& sigma = it->second;
      std::vector<int> stab_index(8, -1);
      for (std::size_t i = 0; i < stab.size(); ++i) stab_index[stab[i]] = static_cast<int>(i);

      const std::size_t m = reps.size();
      std::vector<Element> rep_elems, rep_inv;
      for (auto h : reps) {
        rep_elems.push_back(ag.element(0, 0, h));
        rep_inv.push_back(G.inverse(ag.element(0, 0, h)));
      }
      for (std::size_t s = 0; s < sigma.size(); ++s) {
        const auto ds = static_cast<Eigen::Index>(sigma.dim(s));
        std::vector<CMat> irrep(G.order(), CMat::Zero(static_cast<Eigen::Index>(m) * ds, static_cast<Eigen::Index>(m) * ds));
        for (std::size_t g = 0; g < G.order(); ++g)
          for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < m; ++j) {
              const Element x = G.mul(G.mul(rep_inv[i], static_cast<Element>(g)), rep_elems[j]);
              const int si = stab_index[ag.point_part(x)];
              if (si < 0) continue;
              const double phase = 2.0 * kPi *
                                   static_cast<double>(kr * static_cast<long>(ag.translation_row(x)) +
                                                       kc * static_cast<long>(ag.translation_col(x))) /
                                   static_cast<double>(n);
              irrep[g].block(static_cast<Eigen::Index>(i) * ds, static_cast<Eigen::Index>(j) * ds, ds, ds) =
                  std::polar(1.0, phase) * sigma.matrix(s, static_cast<Element>(si));
            }
        mats.push_back(std::move(irrep));
        names.push_back("ind(" + std::to_string(kr) + "," + std::to_string(kc) + ";" + sigma.name(s) + ")");
      }
    }
  return IrrepSet::from_matrices(G, std::move(mats), std::move(names));
}

/// Group, pixel action and fixed filter for the lift
///   x(g) = sum_p img(action(g, p)) filter(p).
struct LiftSpec {
  GroupTable group;
  std::size_t height = 0, width = 0;
  std::vector<std::uint32_t> action;  // action[g * pixels + p]
  ImageGrid filter;
  std::uint64_t filter_seed = 0;

  std::size_t pixels() const { return height * width; }
  std::uint32_t act(Element g, std::size_t p) const { return action[static_cast<std::size_t>(g) * pixels() + p]; }

  void validate() const {
    if (action.size() != group.order() * pixels())
      throw Error(ErrorKind::shape_mismatch, "lift: action table does not cover group x grid");
    if (filter.height != height || filter.width != width)
      throw Error(ErrorKind::shape_mismatch, "lift: filter grid differs from the action grid");
  }
};

inline ImageGrid gaussian_filter(std::size_t h, std::size_t w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  ImageGrid f(h, w);
  for (auto& v : f.pixels) v = nd(rng);
  return f;
}

/// Affine action on an n x n grid: rotate/reflect about the grid center,
/// then translate cyclically. Works in doubled coordinates so even n
/// (half-integer center) stays exact.
inline LiftSpec affine_lift_spec(const AffineGroup& ag, std::uint64_t filter_seed) {
  const std::size_t n = ag.n;
  const long ln = static_cast<long>(n);
  LiftSpec s{ag.group};
  s.height = s.width = n;
  s.action.resize(ag.group.order() * n * n);
  for (std::size_t g = 0; g < ag.group.order(); ++g) {
    const auto ge = static_cast<Element>(g);
    const IntMat2 m = point_matrix(ag.point_part(ge));
    const long tr = static_cast<long>(ag.translation_row(ge)), tc = static_cast<long>(ag.translation_col(ge));
    for (long r = 0; r < ln; ++r)
      for (long c = 0; c < ln; ++c) {
        const long qr = 2 * r - (ln - 1), qc = 2 * c - (ln - 1);
        const long rr = (m[0] * qr + m[1] * qc + (ln - 1)) / 2, rc = (m[2] * qr + m[3] * qc + (ln - 1)) / 2;
        s.action[g * n * n + static_cast<std::size_t>(r * ln + c)] =
            static_cast<std::uint32_t>(detail::mod(rr + tr, ln) * ln + detail::mod(rc + tc, ln));
      }
  }
  s.filter = gaussian_filter(n, n, filter_seed);
  s.filter_seed = filter_seed;
  return s;
}

/// Translations only: C_h x C_w acting by cyclic shifts.
inline LiftSpec translation_lift_spec(std::size_t h, std::size_t w, std::uint64_t filter_seed) {
  LiftSpec s{direct_product(cyclic_group(h), cyclic_group(w))};
  s.height = h;
  s.width = w;
  s.action.resize(h * w * h * w);
  for (std::size_t tr = 0; tr < h; ++tr)
    for (std::size_t tc = 0; tc < w; ++tc)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c)
          s.action[(tr * w + tc) * h * w + r * w + c] = static_cast<std::uint32_t>(((r + tr) % h) * w + (c + tc) % w);
  s.filter = gaussian_filter(h, w, filter_seed);
  s.filter_seed = filter_seed;
  return s;
}

/// Empty when the action is valid, otherwise the first violation.
inline std::string check_action(const LiftSpec& s) {
  s.validate();
  const GroupTable& g = s.group;
  for (std::size_t p = 0; p < s.pixels(); ++p)
    if (s.act(g.identity(), p) != p) return "identity moves pixel " + std::to_string(p);
  for (std::size_t a = 0; a < g.order(); ++a)
    for (std::size_t b = 0; b < g.order(); ++b) {
      const Element ab = g.mul(static_cast<Element>(a), static_cast<Element>(b));
      for (std::size_t p = 0; p < s.pixels(); ++p)
        if (s.act(static_cast<Element>(a), s.act(static_cast<Element>(b), p)) != s.act(ab, p))
          return "composition fails at (" + std::to_string(a) + "," + std::to_string(b) + "," + std::to_string(p) + ")";
    }
  return {};
}

inline Vec lift_image(const ImageGrid& img, const LiftSpec& s) {
  s.validate();
  if (img.height != s.height || img.width != s.width)
    throw Error(ErrorKind::shape_mismatch, "lift: image is " + std::to_string(img.height) + "x" +
                                               std::to_string(img.width) + ", spec expects " +
                                               std::to_string(s.height) + "x" + std::to_string(s.width));
  const std::size_t P = s.pixels();
  Vec x(static_cast<Eigen::Index>(s.group.order()));
  for (std::size_t g = 0; g < s.group.order(); ++g) {
    const std::uint32_t* row = s.action.data() + g * P;
    double acc = 0;
    for (std::size_t p = 0; p < P; ++p) acc += img.pixels[row[p]] * s.filter.pixels[p];
    x(static_cast<Eigen::Index>(g)) = acc;
  }
  return x;
}

/// (g . img)(q) = img(g^{-1} . q).
inline ImageGrid transform_image(const ImageGrid& img, const LiftSpec& s, Element g) {
  ImageGrid out(img.height, img.width);
  const Element gi = s.group.inverse(g);
  for (std::size_t p = 0; p < s.pixels(); ++p) out.pixels[p] = img.pixels[s.act(gi, p)];
  return out;
}

}  // namespace gbias
