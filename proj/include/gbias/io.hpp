#pragma once

// JSON layouts for groups, irrep sets, Fourier blocks and real signals.
//
//   group:   {"order": n, "table": [[...], ...], "labels": [...]}
//   irreps:  {"order": n, "dims": [...], "names": [...],
//             "matrices": [[[[re, im], ...row...], ...rows...] per element] per irrep}
//   blocks:  {"dims": [...], "blocks": [[[[re, im], ...], ...], ...]}
//   signal:  {"values": [...]} or a bare array

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gbias/error.hpp"
#include "gbias/fourier.hpp"
#include "gbias/group.hpp"
#include "gbias/irreps.hpp"
#include "json.hpp"

namespace gbias {

using json = nlohmann::json;

inline json group_to_json(const GroupTable& g) {
  json t = json::array();
  for (std::size_t i = 0; i < g.order(); ++i) {
    const auto row = g.row(static_cast<Element>(i));
    t.push_back(std::vector<Element>(row.begin(), row.end()));
  }
  return json{{"order", g.order()}, {"table", std::move(t)}, {"labels", g.labels()}};
}

inline GroupTable group_from_json(const json& j) {
  try {
    const auto raw = j.at("table").get<std::vector<std::vector<Element>>>();
    if (j.contains("order") && j.at("order").get<std::size_t>() != raw.size())
      throw Error(ErrorKind::validation, "group json: order field disagrees with table size");
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j.at("labels").get<std::vector<std::string>>();
    return group_from_table(raw, std::move(labels));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("group json: ") + e.what());
  }
}

inline json matrix_to_json(const CMat& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(std::move(row));
  }
  return rows;
}

inline CMat matrix_from_json(const json& j) {
  const auto r = static_cast<Eigen::Index>(j.size());
  const auto c = r == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j.at(0).size());
  CMat m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    if (static_cast<Eigen::Index>(j.at(i).size()) != c) throw Error(ErrorKind::parse, "ragged matrix in json");
    for (Eigen::Index k = 0; k < c; ++k) {
      const auto& e = j.at(i).at(k);
      m(i, k) = e.is_array() ? cplx(e.at(0).get<double>(), e.at(1).get<double>()) : cplx(e.get<double>(), 0.0);
    }
  }
  return m;
}

inline json irreps_to_json(const IrrepSet& s) {
  json mats = json::array();
  for (std::size_t k = 0; k < s.size(); ++k) {
    json per = json::array();
    for (std::size_t g = 0; g < s.group().order(); ++g) per.push_back(matrix_to_json(s.matrix(k, static_cast<Element>(g))));
    mats.push_back(std::move(per));
  }
  std::vector<std::string> names;
  for (std::size_t k = 0; k < s.size(); ++k) names.push_back(s.name(k));
  return json{{"order", s.group().order()}, {"dims", s.dims()}, {"names", names}, {"matrices", std::move(mats)}};
}

inline IrrepSet irreps_from_json(const json& j, const GroupTable& g) {
  try {
    if (j.at("order").get<std::size_t>() != g.order())
      throw Error(ErrorKind::shape_mismatch, "irreps json: order does not match the group");
    std::vector<std::vector<CMat>> mats;
    for (const auto& per : j.at("matrices")) {
      std::vector<CMat> v;
      for (const auto& m : per) v.push_back(matrix_from_json(m));
      mats.push_back(std::move(v));
    }
    std::vector<std::string> names;
    if (j.contains("names")) names = j.at("names").get<std::vector<std::string>>();
    return IrrepSet::from_matrices(g, std::move(mats), std::move(names));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("irreps json: ") + e.what());
  }
}

inline json blocks_to_json(const FourierBlocks& b) {
  json blocks = json::array();
  std::vector<std::size_t> dims;
  for (std::size_t k = 0; k < b.size(); ++k) {
    dims.push_back(b.dim(k));
    blocks.push_back(matrix_to_json(b[k]));
  }
  return json{{"dims", dims}, {"blocks", std::move(blocks)}};
}

inline FourierBlocks blocks_from_json(const json& j) {
  try {
    FourierBlocks b;
    for (const auto& m : j.at("blocks")) b.blocks.push_back(matrix_from_json(m));
    return b;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("blocks json: ") + e.what());
  }
}

inline json signal_to_json(const Vec& v) { return json{{"values", std::vector<double>(v.data(), v.data() + v.size())}}; }

inline Vec signal_from_json(const json& j) {
  try {
    const auto& arr = j.is_array() ? j : j.at("values");
    const auto vals = arr.get<std::vector<double>>();
    return Eigen::Map<const Vec>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("signal json: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::config, "cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, path + ": " + e.what());
  }
}

inline void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::config, "cannot write " + path);
  out << j.dump(2) << '\n';
}

}  // namespace gbias
