#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "gbias/irreps.hpp"
#include "support.hpp"

using namespace gbias;

namespace {

std::vector<std::size_t> sorted_dims(const IrrepSet& s) {
  auto d = s.dims();
  std::sort(d.begin(), d.end());
  return d;
}

// Number of conjugacy classes by brute force.
std::size_t conjugacy_classes(const GroupTable& g) {
  std::set<std::set<Element>> classes;
  for (Element x = 0; x < g.order(); ++x) {
    std::set<Element> c;
    for (Element y = 0; y < g.order(); ++y) c.insert(g.mul(g.mul(y, x), g.inverse(y)));
    classes.insert(c);
  }
  return classes.size();
}

void expect_valid(const IrrepSet& s) {
  const auto r = verify_irreps(s);
  EXPECT_TRUE(r.complete);
  EXPECT_LE(r.homomorphism, 1e-10);
  EXPECT_LE(r.unitarity, 1e-10);
  EXPECT_LE(r.schur, 1e-8);
  EXPECT_GT(r.character_separation, 1e-6);
}

}  // namespace

TEST(Abelian, C4Values) {
  const auto s = abelian_irreps(cyclic_group(4));
  ASSERT_EQ(s.size(), 4u);
  const std::vector<cplx> want{1.0, cplx(0, -1), -1.0, cplx(0, 1)};
  for (Element a = 0; a < 4; ++a) EXPECT_LT(std::abs(s.matrix(1, a)(0, 0) - want[a]), 1e-15);
}

TEST(Abelian, KleinRealCharacters) {
  const auto s = abelian_irreps(direct_product(cyclic_group(2), cyclic_group(2)));
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t k = 0; k < 4; ++k)
    for (Element a = 0; a < 4; ++a) {
      const cplx v = s.matrix(k, a)(0, 0);
      EXPECT_LT(std::abs(v.imag()), 1e-15);
      EXPECT_LT(std::abs(std::abs(v.real()) - 1.0), 1e-15);
    }
  expect_valid(s);
}

TEST(Abelian, TrivialGroupAndRejection) {
  EXPECT_EQ(abelian_irreps(cyclic_group(1)).size(), 1u);
  EXPECT_THROW(abelian_irreps(dihedral_group(6)), Error);
}

TEST(Dihedral, D6MatchesClosedForm) {
  const auto s = dihedral_irreps(6);
  EXPECT_EQ(s.dims(), (std::vector<std::size_t>{1, 1, 2}));
  const cplx w = std::polar(1.0, 2 * kPi / 3);
  CMat want = CMat::Zero(2, 2);
  want(0, 0) = w;
  want(1, 1) = w * w;
  EXPECT_LT(max_abs(s.matrix(2, 1) - want), 1e-15);
  CMat a(2, 2);
  a << 0, 1, 1, 0;
  EXPECT_LT(max_abs(s.matrix(2, 3) - a), 1e-15);
  expect_valid(s);
}

TEST(Dihedral, DimensionCounts) {
  EXPECT_EQ(dihedral_irreps(8).dims(), (std::vector<std::size_t>{1, 1, 1, 1, 2}));
  const auto d60 = dihedral_irreps(60);
  EXPECT_EQ(std::count(d60.dims().begin(), d60.dims().end(), 1u), 4);
  EXPECT_EQ(std::count(d60.dims().begin(), d60.dims().end(), 2u), 14);
  for (std::size_t n : {2, 4, 6, 8, 10, 12, 60}) expect_valid(dihedral_irreps(n));
}

TEST(Product, Dimensions) {
  const auto c2 = cyclic_irreps(cyclic_group(2));
  const auto d6 = dihedral_irreps(6);
  const auto p = product_irreps(c2, d6);
  EXPECT_EQ(p.dims(), (std::vector<std::size_t>{1, 1, 2, 1, 1, 2}));
  expect_valid(p);
  const auto t = product_irreps(cyclic_irreps(cyclic_group(1)), d6);
  EXPECT_EQ(t.dims(), d6.dims());
  expect_valid(t);
  expect_valid(materialize(p));
}

TEST(Product, RejectsIncompleteFactor) {
  const auto d6 = dihedral_irreps(6);
  std::vector<std::vector<CMat>> mats{std::vector<CMat>(6, CMat::Identity(1, 1))};
  const auto partial = IrrepSet::from_matrices(d6.group(), mats);
  EXPECT_THROW(product_irreps(partial, d6), Error);
}

TEST(Decompose, C2) {
  const auto s = decompose_regular_representation(cyclic_group(2), 3);
  ASSERT_EQ(s.size(), 2u);
  expect_valid(s);
}

TEST(Decompose, DihedralMatchesClosedForm) {
  for (std::size_t n : {6, 8}) {
    const auto s = decompose_regular_representation(dihedral_group(n), 11);
    EXPECT_EQ(sorted_dims(s), sorted_dims(dihedral_irreps(n)));
    expect_valid(s);
  }
}

TEST(Decompose, QuaternionAgainstClassCount) {
  const auto q = quaternion_group();
  const auto s = decompose_regular_representation(q, 5);
  EXPECT_EQ(s.size(), conjugacy_classes(q));
  EXPECT_EQ(sorted_dims(s), (std::vector<std::size_t>{1, 1, 1, 1, 2}));
  expect_valid(s);
}

TEST(Decompose, Order200) {
  const auto g = gbias::test::c5c5_q8();
  const auto s = decompose_regular_representation(g, 7);
  EXPECT_EQ(s.size(), conjugacy_classes(g));
  EXPECT_EQ(*std::max_element(s.dims().begin(), s.dims().end()), 8u);
  expect_valid(s);
}

TEST(Decompose, CapIsResourceError) {
  DecompositionOptions opt;
  opt.max_order = 4;
  try {
    decompose_regular_representation(cyclic_group(5), 1, opt);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::resource);
  }
}

TEST(Conjugation, CharactersInvariant) {
  const auto s = dihedral_irreps(8);
  const auto c = random_conjugate(s, 42);
  expect_valid(c);
  for (std::size_t k = 0; k < s.size(); ++k)
    for (Element g = 0; g < 8; ++g) EXPECT_LT(std::abs(s.character(k, g) - c.character(k, g)), 1e-12);
}

TEST(Json, IrrepRoundTrip) {
  const auto s = dihedral_irreps(6);
  const auto back = irreps_from_json(irreps_to_json(s), s.group());
  for (std::size_t k = 0; k < s.size(); ++k)
    for (Element g = 0; g < 6; ++g) EXPECT_EQ(s.matrix(k, g), back.matrix(k, g));
}
