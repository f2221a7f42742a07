#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "tvspec/dataset.hpp"
#include "tvspec/image_io.hpp"
#include "tvspec/invariance.hpp"
#include "tvspec/tensor_file.hpp"

using namespace tvspec;

namespace {

DecompositionConfig fast_config() {
  DecompositionConfig c;
  c.n_steps = 40;
  c.schedule = BandSchedule::default_dyadic(40);
  return c;
}

ImageGrid natural_crop(const char* name, int x, int y, int n) {
  const ImageGrid c = crop(to_luma(read_image_file(test::natural_image(name))), x, y, n, n);
  return standardize(c, compute_standardization({c}));
}

// [1 2 1]^2 / 16 blur with clamped borders.
ImageGrid blur(const ImageGrid& u) {
  const int w = u.width(), h = u.height();
  const double k[3] = {0.25, 0.5, 0.25};
  ImageGrid out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int j = -1; j <= 1; ++j)
        for (int i = -1; i <= 1; ++i)
          s += k[i + 1] * k[j + 1] * u.at(std::clamp(x + i, 0, w - 1), std::clamp(y + j, 0, h - 1));
      out.at(x, y) = s;
    }
  return out;
}

// Detail plus blur: exactly equivariant under right-angle rotations and,
// outside a one-pixel strip, under shifts with replicated fill.
class BlurDecomposer final : public Decomposer {
 public:
  BlurDecomposer() : schedule_{{1, 2}} {}
  BandSet decompose(const ImageGrid& f) const override {
    const ImageGrid b = blur(f);
    BandSet s;
    s.schedule = schedule_;
    s.bands = {f - b, b};
    return s;
  }
  const BandSchedule& schedule() const override { return schedule_; }
  std::string name() const override { return "blur"; }

 private:
  BandSchedule schedule_;
};

class BrokenDecomposer final : public Decomposer {
 public:
  BandSet decompose(const ImageGrid& f) const override { return BandSet{{f}, schedule_}; }
  const BandSchedule& schedule() const override { return schedule_; }
  std::string name() const override { return "broken"; }

 private:
  BandSchedule schedule_{{2, 4, 8}};
};

void expect_perfect(const InvarianceReport& r) {
  for (const PairScore& p : r.pairs) {
    EXPECT_NEAR(p.score.ssim, 1.0, 1e-12) << p.label;
    EXPECT_NEAR(p.score.slmse, 1.0, 1e-12) << p.label;
  }
}

}  // namespace

TEST(Translate, FillModes) {
  const ImageGrid u(3, 2, {0, 1, 2, 3, 4, 5});
  EXPECT_EQ(translate(u, 1, 0, ShiftFill::Replicate), ImageGrid(3, 2, {0, 0, 1, 3, 3, 4}));
  EXPECT_EQ(translate(u, 1, 0, ShiftFill::Circular), ImageGrid(3, 2, {2, 0, 1, 5, 3, 4}));
  EXPECT_EQ(translate(u, 0, -1, ShiftFill::Replicate), ImageGrid(3, 2, {3, 4, 5, 3, 4, 5}));
  EXPECT_EQ(translate(u, 0, 0, ShiftFill::Replicate), u);
  EXPECT_EQ(translate(translate(u, 2, 1, ShiftFill::Circular), -2, -1, ShiftFill::Circular), u);
  EXPECT_EQ(shift_fill_from_string("circular"), ShiftFill::Circular);
  EXPECT_THROW(shift_fill_from_string("zero"), std::invalid_argument);
}

TEST(Harness, EquivariantDecomposerScoresPerfectly) {
  std::mt19937_64 rng(1);
  const ImageGrid f = test::random_grid(40, 40, rng);
  const BlurDecomposer d;
  for (int deg : {90, 180, 270}) expect_perfect(test_rotation(d, f, deg));
  expect_perfect(test_translation(d, f, 4, 0));
  expect_perfect(test_translation(d, f, -3, 5));
  expect_perfect(test_translation(d, f, 0, 0, ShiftFill::Circular));
  const InvarianceReport r = test_rotation(d, f, 90);
  ASSERT_EQ(r.pairs.size(), 2u);
  EXPECT_GT(r.average.psnr, 200.0);
  EXPECT_EQ(r.parameters, "90 deg");
}

TEST(Harness, TranslationCropsBorderStrips) {
  std::mt19937_64 rng(2);
  const ImageGrid f = test::random_grid(40, 32, rng);
  // Circular fill breaks the blur near the wrapped edge; the crop hides only 3 px.
  const InvarianceReport r = test_translation(BlurDecomposer{}, f, 3, 0, ShiftFill::Circular);
  EXPECT_LT(r.average.ssim, 1.0 - 1e-6);
  EXPECT_EQ(r.parameters, "shift (3, 0) circular");
}

TEST(Harness, Errors) {
  const ImageGrid f(40, 32, 1.0);
  const BlurDecomposer d;
  EXPECT_THROW(test_rotation(d, f, 90), std::invalid_argument);
  EXPECT_NO_THROW(test_rotation(d, f, 180));
  EXPECT_THROW(test_rotation(d, ImageGrid(32, 32), 45), std::invalid_argument);
  EXPECT_THROW(test_translation(d, f, 11, 0), std::invalid_argument);
  EXPECT_THROW(test_translation(d, f, 0, -9), std::invalid_argument);
  EXPECT_NO_THROW(test_translation(d, f, 10, 8));
  EXPECT_THROW(test_homogeneity(BrokenDecomposer{}, ImageGrid(32, 32)), std::runtime_error);
  PrecomputedDecomposer fine(BandSchedule{{2, 6, 12}});
  EXPECT_THROW(test_homogeneity(fine, ImageGrid(32, 32)), std::invalid_argument);
}

TEST(Homogeneity, ConstantImageIsVacuous) {
  const ModelDrivenDecomposer d(fast_config());
  const InvarianceReport r = test_homogeneity(d, ImageGrid(32, 32, 0.8));
  ASSERT_EQ(r.pairs.size(), 4u);
  EXPECT_EQ(r.pairs[0].label, "band 1+2 of 2f vs 2 x band 1");
  EXPECT_EQ(r.pairs[3].label, "band 5 of 2f vs 2 x bands 4+5");
  expect_perfect(r);
}

// Same time grid: the shifted bands only agree up to the time discretization.
TEST(Homogeneity, NaturalCropShiftedBandsAgree) {
  const ModelDrivenDecomposer d(fast_config());
  const InvarianceReport r = test_homogeneity(d, natural_crop("camera", 176, 16, 48));
  for (const PairScore& p : r.pairs) EXPECT_GE(p.score.ssim, 0.99) << p.label;
}

// With the time grid stretched by 2 the bands of 2f are exactly 2x those of f.
TEST(Homogeneity, StretchedGridIsExact) {
  const ImageGrid f = natural_crop("coins", 96, 96, 32);
  DecompositionConfig c = fast_config();
  const BandSet b = ModelDrivenDecomposer(c).decompose(f);
  c.dt *= 2.0;
  const BandSet b2 = ModelDrivenDecomposer(c).decompose(2.0 * f);
  for (int k = 0; k < b.count(); ++k) {
    const ImageGrid twice = 2.0 * b.bands[k];
    EXPECT_LE(relative_l2(b2.bands[k], twice), 1e-9) << k;
  }
}

TEST(Translation, InteriorShapesAreEquivariant) {
  const ModelDrivenDecomposer d(fast_config());
  const ImageGrid f = render_scene(
      {ShapeSpec::disk(20, 22, 6, 1.0), ShapeSpec::disk(34, 30, 3, -0.8)}, 48, 48, 0.0);
  for (auto [dx, dy] : {std::pair{4, 0}, {-3, 5}}) {
    const InvarianceReport r = test_translation(d, f, dx, dy);
    for (const PairScore& p : r.pairs) EXPECT_GE(p.score.ssim, 0.999) << p.label;
  }
}

// A 180 degree turn maps the forward-difference stencil to backward
// differences, so even a symmetric disk only matches in the coarse bands.
TEST(Rotation, SymmetricDiskHalfTurn) {
  const ModelDrivenDecomposer d(fast_config());
  const ImageGrid f = render_scene({ShapeSpec::disk(15.5, 15.5, 7.0, 1.0)}, 32, 32, 0.0);
  ASSERT_EQ(f, rotate90(f, 2));
  const InvarianceReport r = test_rotation(d, f, 180);
  EXPECT_GE(r.pairs[2].score.ssim, 0.97);
  EXPECT_NEAR(r.pairs[3].score.ssim, 1.0, 1e-9);
  EXPECT_NEAR(r.pairs[4].score.ssim, 1.0, 1e-12);
  const BandSet b = d.decompose(f);
  ImageGrid total(32, 32);
  for (const ImageGrid& band : b.bands) total = total + band;
  EXPECT_LE(relative_l2(rotate90(total, 2), total), 1e-12);
}

TEST(Reports, Deterministic) {
  const ModelDrivenDecomposer d(fast_config());
  const ImageGrid f = natural_crop("moon", 16, 176, 32);
  EXPECT_EQ(nlohmann::json(test_rotation(d, f, 90)), nlohmann::json(test_rotation(d, f, 90)));
  EXPECT_EQ(nlohmann::json(test_translation(d, f, 8, 0)), nlohmann::json(test_translation(d, f, 8, 0)));
}

TEST(Precomputed, LookupByContent) {
  PrecomputedDecomposer p(BandSchedule{{2, 4, 8}}, "surrogate");
  std::mt19937_64 rng(3);
  const ImageGrid f = test::random_grid(8, 8, rng), g = test::random_grid(8, 8, rng);
  p.add(f, {0.5 * f, 0.25 * f});
  EXPECT_EQ(p.size(), 1u);
  const BandSet b = p.decompose(f);
  ASSERT_EQ(b.count(), 3);
  EXPECT_LE(relative_l2(b.sum(), f), 1e-15);
  EXPECT_EQ(p.name(), "surrogate");
  // float32 rounding of the input still finds the entry
  EXPECT_NO_THROW(p.decompose(BandTensor::from_grids({f}).plane(0)));
  EXPECT_THROW(p.decompose(g), std::out_of_range);
  EXPECT_THROW(p.add(g, {g}), std::invalid_argument);
  EXPECT_THROW(p.add(g, {g, ImageGrid(4, 4)}), std::invalid_argument);
  EXPECT_NE(grid_fingerprint(f), grid_fingerprint(g));
  EXPECT_EQ(grid_fingerprint(ImageGrid(2, 2, 0.0)), grid_fingerprint(ImageGrid(2, 2, -0.0)));
  EXPECT_NE(grid_fingerprint(ImageGrid(2, 3)), grid_fingerprint(ImageGrid(3, 2)));
}

// Bands exported as tensors and read back score like the decomposer that
// produced them.
TEST(Precomputed, DirectoryRoundTripMatchesModel) {
  const auto dir = test::temp_dir("precomputed");
  const ModelDrivenDecomposer model(fast_config());
  const ImageGrid f = natural_crop("grass", 16, 16, 32);
  const InvarianceSettings s;
  for (const auto& [key, img] : invariance_inputs(f, s)) {
    const ImageGrid stored = BandTensor::from_grids({img}).plane(0);
    write_band_tensor(dir / (key + ".input.tvt"), BandTensor::from_grids({img}));
    std::vector<ImageGrid> bands = model.decompose(stored).bands;
    bands.pop_back();
    write_band_tensor(dir / (key + ".pred.tvt"), BandTensor::from_grids(bands));
  }
  write_band_tensor(dir / "unpaired.input.tvt", BandTensor::from_grids({3.0 * f}));

  PrecomputedDecomposer p(model.schedule());
  EXPECT_EQ(p.load_directory(dir), 4u);
  const ImageGrid f32 = BandTensor::from_grids({f}).plane(0);
  const InvarianceReport a = test_rotation(p, f32, 90);
  const InvarianceReport b = test_rotation(model, f32, 90);
  EXPECT_NEAR(a.average.ssim, b.average.ssim, 1e-5);
  EXPECT_NO_THROW(test_translation(p, f32, 8, 0));
  EXPECT_NO_THROW(test_homogeneity(p, f32));
  EXPECT_THROW(p.load_directory(dir / "none"), std::runtime_error);
}

TEST(InvarianceInputs, Keys) {
  std::mt19937_64 rng(4);
  const ImageGrid f = test::random_grid(16, 16, rng);
  InvarianceSettings s;
  s.dx = 2;
  s.dy = -1;
  s.degrees = 270;
  const auto in = invariance_inputs(f, s);
  ASSERT_EQ(in.size(), 4u);
  EXPECT_EQ(in[0].first, "original");
  EXPECT_EQ(in[1].second, 2.0 * f);
  EXPECT_EQ(in[2].second, translate(f, 2, -1, ShiftFill::Replicate));
  EXPECT_EQ(in[3].first, "rotated");
  EXPECT_EQ(in[3].second, rotate90(f, 3));
}

TEST(InvarianceSummary, TableCsv) {
  InvarianceSummary s;
  InvarianceReport h;
  h.property = InvarianceProperty::OneHomogeneity;
  h.average = {0.98, 33.5, 0.9, 1.0};
  s.add(h);
  h.average = {0.96, 31.5, 0.8, 1.0};
  s.add(h);
  InvarianceReport t;
  t.property = InvarianceProperty::Translation;
  t.average = {1.0, kPsnrIdentical, 1.0, 1.0};
  s.add(t);
  EXPECT_EQ(s.count(InvarianceProperty::OneHomogeneity), 2);
  EXPECT_EQ(s.count(InvarianceProperty::Rotation), 0);
  std::ostringstream os;
  s.write_table_csv(os);
  EXPECT_EQ(os.str(),
            "metric,one-homogeneity,translation invariance,rotation invariance\n"
            "SSIM,0.9700,1.0000,n/a\n"
            "PSNR,32.500,inf,n/a\n"
            "sLMSE,0.850,1.000,n/a\n");
}
