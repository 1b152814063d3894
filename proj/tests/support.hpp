#pragma once

#include <random>
#include <string>

#include "gbias/group.hpp"
#include "gbias/io.hpp"
#include "gbias/linalg.hpp"

namespace gbias::test {

inline std::string source_path(const std::string& rel) { return std::string(GBIAS_SOURCE_DIR) + "/" + rel; }

inline GroupTable c5c5_q8() {
  static const GroupTable g = group_from_json(read_json_file(source_path("configs/groups/c5c5_q8.json")));
  return g;
}

inline Vec random_real(std::size_t n, std::mt19937_64& rng) { return random_gaussian_vector(static_cast<Eigen::Index>(n), rng); }

inline CVec random_complex(std::size_t n, std::mt19937_64& rng) {
  return random_complex_gaussian(static_cast<Eigen::Index>(n), 1, rng).col(0);
}

inline Vec delta(std::size_t n, Element g) {
  Vec v = Vec::Zero(static_cast<Eigen::Index>(n));
  v(g) = 1.0;
  return v;
}

/// Index of the element with the given label.
inline Element by_label(const GroupTable& g, const std::string& label) {
  for (std::size_t i = 0; i < g.order(); ++i)
    if (g.label(static_cast<Element>(i)) == label) return static_cast<Element>(i);
  throw std::runtime_error("no element labelled " + label);
}

}  // namespace gbias::test
