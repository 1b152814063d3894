#pragma once

// Finite groups as validated multiplication tables.
//
// Element ordering is part of each constructor's contract because it fixes
// the column order of the Fourier basis matrix:
//   cyclic_group(n)     : r^0, r^1, ..., r^{n-1}
//   dihedral_group(n)   : 1, r, ..., r^{k-1}, a, ar, ..., ar^{k-1}   (k = n/2)
//   quaternion_group()  : 1, -1, i, -i, j, -j, k, -k
//   direct_product(g,h) : (g_0,h_0), (g_0,h_1), ..., row-major over (g, h)

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gbias/error.hpp"

namespace gbias {

using Element = std::uint32_t;

enum class GroupFamily { cyclic, dihedral, quaternion, table, product };

inline const char* to_string(GroupFamily f) {
  switch (f) {
    case GroupFamily::cyclic: return "cyclic";
    case GroupFamily::dihedral: return "dihedral";
    case GroupFamily::quaternion: return "quaternion";
    case GroupFamily::table: return "table";
    case GroupFamily::product: return "product";
  }
  return "unknown";
}

/// Largest order whose full |G|x|G| table we are willing to allocate.
inline constexpr std::size_t kMaxGroupOrder = 46340;

/// Groups up to this order get an exhaustive associativity check; larger
/// tables are checked on kAssociativitySamples random triples.
inline constexpr std::size_t kExhaustiveAssociativityOrder = 256;
inline constexpr std::size_t kAssociativitySamples = 100000;

/// Immutable finite group. Copies share the underlying table.
class GroupTable {
 public:
  std::size_t order() const { return data_->order; }
  Element mul(Element i, Element j) const {
    return data_->table[static_cast<std::size_t>(i) * data_->order + j];
  }
  std::span<const Element> row(Element i) const {
    return {data_->table.data() + static_cast<std::size_t>(i) * data_->order,
            data_->order};
  }
  std::span<const Element> table() const { return data_->table; }
  Element identity() const { return data_->identity; }
  Element inverse(Element i) const { return data_->inverses[i]; }
  std::span<const Element> inverses() const { return data_->inverses; }
  const std::vector<std::string>& labels() const { return data_->labels; }
  const std::string& label(Element i) const { return data_->labels[i]; }
  bool is_abelian() const { return data_->abelian; }

  GroupFamily family() const { return data_->family; }
  /// n for cyclic/dihedral families, 0 otherwise.
  std::size_t family_parameter() const { return data_->parameter; }
  /// Human-readable family descriptor, e.g. "dihedral:8" or
  /// "cyclic:7*cyclic:7*dihedral:8".
  std::string descriptor() const {
    switch (data_->family) {
      case GroupFamily::cyclic:
      case GroupFamily::dihedral:
        return std::string(to_string(data_->family)) + ":" +
               std::to_string(data_->parameter);
      case GroupFamily::quaternion: return "quaternion";
      case GroupFamily::table: return "table:" + std::to_string(order());
      case GroupFamily::product:
        return left_factor().descriptor() + "*" + right_factor().descriptor();
    }
    return "unknown";
  }

  bool is_product() const { return data_->family == GroupFamily::product; }
  const GroupTable& left_factor() const { return data_->factors.at(0); }
  const GroupTable& right_factor() const { return data_->factors.at(1); }

  bool same_as(const GroupTable& other) const {
    return data_ == other.data_ ||
           (data_->order == other.data_->order &&
            data_->table == other.data_->table);
  }

  /// Smallest k >= 1 with g^k = e.
  std::size_t element_order(Element g) const {
    std::size_t k = 1;
    Element x = g;
    while (x != identity()) {
      x = mul(x, g);
      ++k;
    }
    return k;
  }

  struct Data {
    std::size_t order = 0;
    std::vector<Element> table;
    Element identity = 0;
    std::vector<Element> inverses;
    std::vector<std::string> labels;
    bool abelian = false;
    GroupFamily family = GroupFamily::table;
    std::size_t parameter = 0;
    std::vector<GroupTable> factors;
  };

  explicit GroupTable(std::shared_ptr<const Data> data) : data_(std::move(data)) {}

 private:
  std::shared_ptr<const Data> data_;
};

namespace detail {

inline void check_closure(const std::vector<Element>& table, std::size_t n) {
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k] >= n) {
      throw Error(ErrorKind::validation,
                  "closure violated: table[" + std::to_string(k / n) + "][" +
                      std::to_string(k % n) + "] = " + std::to_string(table[k]) +
                      " is not an element index");
    }
  }
}

inline void check_associativity(const std::vector<Element>& t, std::size_t n) {
  auto at = [&](std::size_t i, std::size_t j) { return t[i * n + j]; };
  auto fail = [](std::size_t i, std::size_t j, std::size_t k) {
    throw Error(ErrorKind::validation,
                "associativity violated at (" + std::to_string(i) + ", " +
                    std::to_string(j) + ", " + std::to_string(k) + ")");
  };
  if (n <= kExhaustiveAssociativityOrder) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) {
        const std::size_t ij = at(i, j);
        for (std::size_t k = 0; k < n; ++k)
          if (at(ij, k) != at(i, at(j, k))) fail(i, j, k);
      }
    return;
  }
  std::mt19937_64 rng(0x5eed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  for (std::size_t s = 0; s < kAssociativitySamples; ++s) {
    const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
    if (at(at(i, j), k) != at(i, at(j, k))) fail(i, j, k);
  }
}

inline bool table_is_abelian(const std::vector<Element>& t, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (t[i * n + j] != t[j * n + i]) return false;
  return true;
}

inline std::vector<Element> derive_inverses(const std::vector<Element>& t,
                                            std::size_t n, Element e) {
  std::vector<Element> inv(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    bool found = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (t[i * n + j] == e && t[j * n + i] == e) {
        inv[i] = static_cast<Element>(j);
        found = true;
        break;
      }
    }
    if (!found) {
      throw Error(ErrorKind::validation,
                  "element " + std::to_string(i) + " has no inverse");
    }
  }
  return inv;
}

inline GroupTable make_group(std::size_t n, std::vector<Element> table,
                             std::vector<std::string> labels, GroupFamily family,
                             std::size_t parameter,
                             std::vector<GroupTable> factors = {}) {
  auto data = std::make_shared<GroupTable::Data>();
  data->order = n;
  data->table = std::move(table);
  data->identity = 0;
  bool found_identity = false;
  for (std::size_t e = 0; e < n && !found_identity; ++e) {
    bool ok = true;
    for (std::size_t i = 0; i < n && ok; ++i)
      ok = data->table[e * n + i] == i && data->table[i * n + e] == i;
    if (ok) {
      data->identity = static_cast<Element>(e);
      found_identity = true;
    }
  }
  if (!found_identity) throw Error(ErrorKind::validation, "table has no identity element");
  data->inverses = derive_inverses(data->table, n, data->identity);
  data->abelian = table_is_abelian(data->table, n);
  if (labels.empty()) {
    labels.reserve(n);
    for (std::size_t i = 0; i < n; ++i) labels.push_back("g" + std::to_string(i));
  }
  data->labels = std::move(labels);
  data->family = family;
  data->parameter = parameter;
  data->factors = std::move(factors);
  return GroupTable(std::move(data));
}

inline std::string power_label(const std::string& prefix, std::size_t k) {
  if (k == 0) return prefix.empty() ? "1" : prefix;
  std::string s = prefix + "r";
  if (k > 1) s += "^" + std::to_string(k);
  return s;
}

}  // namespace detail

/// C_n with table[i][j] = (i + j) mod n.
inline GroupTable cyclic_group(std::size_t n) {
  if (n == 0) throw Error(ErrorKind::invalid_order, "cyclic group order must be >= 1");
  if (n > kMaxGroupOrder) throw Error(ErrorKind::resource, "cyclic group order too large");
  std::vector<Element> t(n * n);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) {
    labels.push_back(detail::power_label("", i));
    for (std::size_t j = 0; j < n; ++j) t[i * n + j] = static_cast<Element>((i + j) % n);
  }
  return detail::make_group(n, std::move(t), std::move(labels), GroupFamily::cyclic, n);
}

/// Dihedral group of order n (D_8 has 8 elements), relations
/// r^{n/2} = a^2 = 1 and a r a = r^{-1}.
inline GroupTable dihedral_group(std::size_t n) {
  if (n == 0 || n % 2 != 0)
    throw Error(ErrorKind::invalid_order, "dihedral group order must be even and >= 2");
  if (n > kMaxGroupOrder) throw Error(ErrorKind::resource, "dihedral group order too large");
  const std::size_t k = n / 2;
  // element (s, i) = a^s r^i  ->  index s*k + i
  auto idx = [k](std::size_t s, std::size_t i) { return static_cast<Element>(s * k + i % k); };
  std::vector<Element> t(n * n);
  for (std::size_t s1 = 0; s1 < 2; ++s1)
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t s2 = 0; s2 < 2; ++s2)
        for (std::size_t j = 0; j < k; ++j) {
          // a^s1 r^i a^s2 r^j = a^{s1+s2} r^{(-1)^{s2} i + j}
          const std::size_t exponent = s2 == 0 ? i + j : (k - i) + j;
          t[(s1 * k + i) * n + (s2 * k + j)] = idx((s1 + s2) % 2, exponent);
        }
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < k; ++i) labels.push_back(detail::power_label("", i));
  for (std::size_t i = 0; i < k; ++i) labels.push_back(detail::power_label("a", i));
  return detail::make_group(n, std::move(t), std::move(labels), GroupFamily::dihedral, n);
}

/// Q_8 = {±1, ±i, ±j, ±k} with i^2 = j^2 = k^2 = ijk = -1.
inline GroupTable quaternion_group() {
  // unit u in {1,i,j,k} = {0,1,2,3}; unit product table with sign
  static constexpr int unit_prod[4][4] = {{0, 1, 2, 3}, {1, 0, 3, 2}, {2, 3, 0, 1}, {3, 2, 1, 0}};
  static constexpr int unit_sign[4][4] = {{1, 1, 1, 1}, {1, -1, 1, -1}, {1, -1, -1, 1}, {1, 1, -1, -1}};
  std::vector<Element> t(64);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      const int ua = a / 2, ub = b / 2;
      int sign = (a % 2 ? -1 : 1) * (b % 2 ? -1 : 1) * unit_sign[ua][ub];
      t[a * 8 + b] = static_cast<Element>(unit_prod[ua][ub] * 2 + (sign < 0 ? 1 : 0));
    }
  return detail::make_group(8, std::move(t), {"1", "-1", "i", "-i", "j", "-j", "k", "-k"},
                            GroupFamily::quaternion, 0);
}

/// G x H on pairs, ordered row-major over (g, h). Keeps both factors so
/// representations can be built and applied in Kronecker form.
inline GroupTable direct_product(const GroupTable& g, const GroupTable& h) {
  const std::size_t ng = g.order(), nh = h.order();
  if (ng > kMaxGroupOrder / nh)
    throw Error(ErrorKind::resource, "direct product order " + std::to_string(ng) + "*" +
                                         std::to_string(nh) + " exceeds the table cap");
  const std::size_t n = ng * nh;
  std::vector<Element> t(n * n);
  for (std::size_t a = 0; a < ng; ++a)
    for (std::size_t b = 0; b < nh; ++b) {
      const std::size_t row = (a * nh + b) * n;
      const auto grow = g.row(static_cast<Element>(a));
      const auto hrow = h.row(static_cast<Element>(b));
      for (std::size_t c = 0; c < ng; ++c) {
        const std::size_t base = static_cast<std::size_t>(grow[c]) * nh;
        for (std::size_t d = 0; d < nh; ++d) t[row + c * nh + d] = static_cast<Element>(base + hrow[d]);
      }
    }
  std::vector<std::string> labels;
  labels.reserve(n);
  for (std::size_t a = 0; a < ng; ++a)
    for (std::size_t b = 0; b < nh; ++b)
      labels.push_back("(" + g.label(static_cast<Element>(a)) + "," +
                       h.label(static_cast<Element>(b)) + ")");
  return detail::make_group(n, std::move(t), std::move(labels), GroupFamily::product, 0, {g, h});
}

/// Validates an arbitrary square table and derives identity and inverses.
inline GroupTable group_from_table(const std::vector<std::vector<Element>>& raw,
                                   std::vector<std::string> labels = {}) {
  const std::size_t n = raw.size();
  if (n == 0) throw Error(ErrorKind::validation, "empty table");
  if (n > kMaxGroupOrder) throw Error(ErrorKind::resource, "table too large");
  std::vector<Element> t;
  t.reserve(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i].size() != n)
      throw Error(ErrorKind::validation, "row " + std::to_string(i) + " has length " +
                                             std::to_string(raw[i].size()) + ", expected " +
                                             std::to_string(n));
    t.insert(t.end(), raw[i].begin(), raw[i].end());
  }
  if (!labels.empty() && labels.size() != n)
    throw Error(ErrorKind::validation, "label count does not match table order");
  detail::check_closure(t, n);
  detail::check_associativity(t, n);
  return detail::make_group(n, std::move(t), std::move(labels), GroupFamily::table, 0);
}

/// Checks every group axiom on an already-constructed table. Returns an
/// empty string on success, otherwise a description of the first failure.
inline std::string check_group_axioms(const GroupTable& g) {
  const std::size_t n = g.order();
  std::vector<Element> t(g.table().begin(), g.table().end());
  try {
    detail::check_closure(t, n);
    detail::check_associativity(t, n);
  } catch (const Error& e) {
    return e.what();
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = static_cast<Element>(i);
    if (g.mul(g.identity(), x) != x || g.mul(x, g.identity()) != x)
      return "identity fails at " + std::to_string(i);
    if (g.mul(x, g.inverse(x)) != g.identity())
      return "inverse fails at " + std::to_string(i);
  }
  if (g.is_abelian() != detail::table_is_abelian(t, n)) return "abelian flag inconsistent";
  return {};
}

}  // namespace gbias
