#include <gtest/gtest.h>

#include "gbias/data.hpp"
#include "gbias/idx.hpp"
#include "gbias/lift.hpp"
#include "gbias/norms.hpp"
#include "support.hpp"

using namespace gbias;
using gbias::test::random_real;
using gbias::test::source_path;

TEST(Gaussian, DeterministicAndSeparable) {
  const auto g = dihedral_group(8);
  const auto a = gaussian_dataset(g, 5, 3), b = gaussian_dataset(g, 5, 3), c = gaussian_dataset(g, 5, 4);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.data.inputs[i], b.data.inputs[i]);
    EXPECT_GT(a.data.labels[i] * a.data.inputs[i].dot(a.beta), 0.0);
  }
  EXPECT_NE(a.data.inputs[0], c.data.inputs[0]);
}

TEST(Gaussian, SampleMeanNearZero) {
  const auto d = gaussian_dataset(cyclic_group(1000), 100, 1);
  double s = 0;
  for (const auto& x : d.data.inputs) s += x.sum();
  EXPECT_LT(std::abs(s / 1e5), 0.02);
}

TEST(Labels, SingleInputAlwaysSeparable) {
  std::mt19937_64 rng(1);
  const auto r = make_separable_labels({random_real(4, rng)}, 2, 0.01);
  EXPECT_GT(r.data.labels[0] * r.data.inputs[0].dot(r.beta), 0.0);
  EXPECT_GE(r.achieved_margin, 0.01);
  EXPECT_THROW(make_separable_labels({random_real(4, rng)}, 2, 0.0), Error);
}

TEST(Labels, TenPointsInHighDimension) {
  std::mt19937_64 rng(2);
  std::vector<Vec> xs;
  for (int i = 0; i < 10; ++i) xs.push_back(random_real(200, rng));
  int first_draw = 0;
  for (std::uint64_t s = 0; s < 50; ++s) first_draw += make_separable_labels(xs, s, 1e-4, 1).achieved_margin >= 1e-4;
  EXPECT_GE(first_draw, 45);
}

TEST(FourierSparse, TrivialBlockGivesConstantBeta) {
  const auto irreps = dihedral_irreps(8);
  const auto r = fourier_sparse_dataset(irreps, {0}, 10, 1);
  const Vec& b = r.labelled.beta;
  EXPECT_LE((b.array() - b.mean()).abs().maxCoeff(), 1e-12);
  for (std::size_t i = 0; i < 10; ++i)
    EXPECT_EQ(r.labelled.data.labels[i], (r.labelled.data.inputs[i].mean() * b.mean() >= 0) ? 1.0 : -1.0);
}

TEST(FourierSparse, D60RankProfileMatchesActiveSet) {
  const auto irreps = dihedral_irreps(60);
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < irreps.size() && active.size() < 10; ++k)
    if (irreps.dim(k) == 2) active.push_back(k);
  const auto r = fourier_sparse_dataset(irreps, active, 10, 5);
  EXPECT_EQ(r.active, active);
  const auto prof = rank_support_profile(r.labelled.beta, irreps);
  for (std::size_t k = 0; k < irreps.size(); ++k) {
    const bool on = std::find(active.begin(), active.end(), k) != active.end();
    EXPECT_EQ(prof.ranks[k] > 0, on) << k;
  }
  EXPECT_GE(r.labelled.achieved_margin, 0.05);
}

TEST(FourierSparse, ConjugateClosureOnCyclic) {
  const auto irreps = cyclic_irreps(cyclic_group(7));
  const auto r = fourier_sparse_dataset(irreps, {2}, 4, 3);
  EXPECT_EQ(r.active, (std::vector<std::size_t>{2, 5}));
  const CVec back = igft(gft(r.labelled.beta, irreps), irreps);
  EXPECT_LT(back.imag().cwiseAbs().maxCoeff(), 1e-10);
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::vector<std::uint8_t> header(std::uint32_t magic, std::vector<std::uint32_t> dims) {
  IdxData d;
  d.magic = magic;
  d.dims = std::move(dims);
  return write_idx(d);
}

}  // namespace

TEST(Idx, TwoImages) {
  auto bytes = header(0x803, {2, 28, 28});
  for (int i = 0; i < 1568; ++i) bytes.push_back(static_cast<std::uint8_t>(i % 256));
  const auto d = parse_idx(bytes);
  const auto imgs = d.images();
  ASSERT_EQ(imgs.size(), 2u);
  EXPECT_EQ(imgs[1].height, 28u);
  EXPECT_DOUBLE_EQ(imgs[0].at(9, 3), 1.0);
  EXPECT_EQ(write_idx(d), bytes);
}

TEST(Idx, Labels) {
  auto bytes = header(0x801, {3});
  for (std::uint8_t v : {1, 5, 1}) bytes.push_back(v);
  EXPECT_EQ(parse_idx(bytes).labels(), (std::vector<int>{1, 5, 1}));
}

TEST(Idx, ErrorsCarryOffsets) {
  auto bytes = header(0x803, {2, 28, 28});
  bytes.resize(bytes.size() + 784);
  try {
    parse_idx(bytes);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::parse);
    EXPECT_NE(std::string(e.what()).find("offset 800"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_idx(header(0x802, {1})), Error);
  EXPECT_THROW(parse_idx({0, 0, 8}), Error);
  EXPECT_THROW(parse_idx(header(0x803, {0xffffffffu, 0xffffffffu, 0xffffffffu})), Error);
}

TEST(Idx, RandomRoundTrip) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const std::uint32_t n = static_cast<std::uint32_t>(rng() % 5), r = 1 + static_cast<std::uint32_t>(rng() % 9),
                        c = 1 + static_cast<std::uint32_t>(rng() % 9);
    auto bytes = header(0x803, {n, r, c});
    for (std::uint32_t i = 0; i < n * r * c; ++i) bytes.push_back(static_cast<std::uint8_t>(rng()));
    EXPECT_EQ(write_idx(parse_idx(bytes)), bytes);
  }
}

TEST(Idx, BundledMnistSubset) {
  const auto imgs = read_idx_file(source_path("data/mnist-1-5-images-idx3-ubyte")).images();
  const auto labels = read_idx_file(source_path("data/mnist-1-5-labels-idx1-ubyte")).labels();
  ASSERT_EQ(imgs.size(), labels.size());
  EXPECT_EQ(imgs[0].height, 28u);
  for (int l : labels) EXPECT_TRUE(l == 1 || l == 5);
  const auto small = downsample(imgs[0], 4);
  EXPECT_EQ(small.height, 7u);
  double a = 0, b = 0;
  for (double v : imgs[0].pixels) a += v;
  for (double v : small.pixels) b += v;
  EXPECT_NEAR(a / 16.0, b, 1e-9);
}

// ---------------------------------------------------------------------------
// Lift

TEST(Lift, AffineGroupIrrepsComplete) {
  const auto ag = affine_group(7);
  EXPECT_EQ(ag.group.order(), 392u);
  EXPECT_EQ(check_group_axioms(ag.group), "");
  const auto ir = affine_irreps(ag);
  EXPECT_EQ(ir.sum_of_squared_dims(), 392u);
  const auto rep = verify_irreps(ir);
  EXPECT_TRUE(rep.ok());
  EXPECT_LT(rep.schur, 1e-8);
}

TEST(Lift, ActionIsValid) {
  for (std::size_t n : {4u, 5u, 7u}) EXPECT_EQ(check_action(affine_lift_spec(affine_group(n), 1)), "") << n;
  EXPECT_EQ(check_action(translation_lift_spec(3, 4, 1)), "");
}

TEST(Lift, EquivariantOn7x7) {
  const auto ag = affine_group(7);
  const auto spec = affine_lift_spec(ag, 9);
  std::mt19937_64 rng(4);
  ImageGrid img(7, 7);
  for (auto& v : img.pixels) v = std::uniform_real_distribution<double>()(rng);
  const Vec x = lift_image(img, spec);
  for (Element g = 0; g < ag.group.order(); ++g) {
    const Vec xg = lift_image(transform_image(img, spec, g), spec);
    ASSERT_LE((xg - left_translate<double>(x, g, ag.group)).cwiseAbs().maxCoeff(), 1e-12) << g;
  }
}

TEST(Lift, DeltaFilterGivesCircularShift) {
  auto spec = translation_lift_spec(3, 4, 1);
  spec.filter = ImageGrid(3, 4);
  spec.filter.at(0, 0) = 1.0;
  ImageGrid img(3, 4);
  for (std::size_t i = 0; i < 12; ++i) img.pixels[i] = static_cast<double>(i);
  const Vec x = lift_image(img, spec);
  for (std::size_t t = 0; t < 12; ++t) EXPECT_EQ(x(static_cast<Eigen::Index>(t)), static_cast<double>(t));
}

TEST(Lift, ConstantImageGivesConstantSignal) {
  const auto spec = affine_lift_spec(affine_group(5), 2);
  ImageGrid img(5, 5, std::vector<double>(25, 0.3));
  const Vec x = lift_image(img, spec);
  EXPECT_LE((x.array() - x(0)).abs().maxCoeff(), 1e-12);
}

TEST(Lift, ShapeMismatch) {
  const auto spec = affine_lift_spec(affine_group(5), 2);
  try {
    lift_image(ImageGrid(4, 4), spec);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::shape_mismatch);
  }
}
