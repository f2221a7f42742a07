#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "tvspec/metrics.hpp"

using namespace tvspec;
using tvspec::test::random_grid;

namespace {

// Direct per-window SSIM with a 2-D Gaussian window, no separable filtering.
double reference_ssim(const ImageGrid& b, const ImageGrid& r, double range) {
  constexpr int n = 11;
  double w[n][n];
  double total_w = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double dx = i - 5.0, dy = j - 5.0;
      w[j][i] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      total_w += w[j][i];
    }
  const double c1 = std::pow(0.01 * range, 2), c2 = std::pow(0.03 * range, 2);
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + n <= b.height(); ++y0)
    for (int x0 = 0; x0 + n <= b.width(); ++x0) {
      double mb = 0.0, mr = 0.0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          mb += w[j][i] / total_w * b.at(x0 + i, y0 + j);
          mr += w[j][i] / total_w * r.at(x0 + i, y0 + j);
        }
      double vb = 0.0, vr = 0.0, cov = 0.0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double db = b.at(x0 + i, y0 + j) - mb, dr = r.at(x0 + i, y0 + j) - mr;
          vb += w[j][i] / total_w * db * db;
          vr += w[j][i] / total_w * dr * dr;
          cov += w[j][i] / total_w * db * dr;
        }
      total += (2 * mb * mr + c1) * (2 * cov + c2) / ((mb * mb + mr * mr + c1) * (vb + vr + c2));
      ++count;
    }
  return total / count;
}

// Patch origins advance by the stride until a patch reaches the far edge.
double reference_lmse(const ImageGrid& b, const ImageGrid& r) {
  std::vector<int> xs, ys;
  for (int x = 0;; x += 8) {
    xs.push_back(x);
    if (x + 16 >= b.width()) break;
  }
  for (int y = 0;; y += 8) {
    ys.push_back(y);
    if (y + 16 >= b.height()) break;
  }
  double total = 0.0;
  for (int y0 : ys)
    for (int x0 : xs)
      for (int y = y0; y < std::min(y0 + 16, b.height()); ++y)
        for (int x = x0; x < std::min(x0 + 16, b.width()); ++x)
          total += std::pow(b.at(x, y) - r.at(x, y), 2);
  return total;
}

ImageGrid embed(const ImageGrid& u, int w, int h, int ox, int oy) {
  ImageGrid out(w, h);
  for (int y = 0; y < u.height(); ++y)
    for (int x = 0; x < u.width(); ++x) out.at(x + ox, y + oy) = u.at(x, y);
  return out;
}

ImageGrid add_noise(const ImageGrid& u, const ImageGrid& noise, double a) {
  return scale_add(1.0, u, a, noise);
}

}  // namespace

TEST(Psnr, ConstantOffset) {
  std::mt19937_64 rng(1);
  const ImageGrid b = random_grid(20, 20, rng);
  ImageGrid bh = b;
  for (double& x : bh.data()) x += 0.1;
  EXPECT_NEAR(psnr(bh, b, 1.0), 20.0, 1e-10);
  EXPECT_EQ(psnr(b, b, 1.0), kPsnrIdentical);
  EXPECT_TRUE(std::isinf(psnr(b, b, 1.0)));
}

TEST(Psnr, DirectFormula) {
  std::mt19937_64 rng(2);
  const ImageGrid a = random_grid(13, 9, rng), b = random_grid(13, 9, rng);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::pow(a.data()[i] - b.data()[i], 2);
  const double e = s / a.size();
  EXPECT_NEAR(mse(a, b), e, 1e-15);
  EXPECT_NEAR(psnr(a, b, 2.5), 10.0 * std::log10(6.25 / e), 1e-12);
}

TEST(Psnr, Errors) {
  EXPECT_THROW(psnr(ImageGrid(4, 4), ImageGrid(4, 5), 1.0), std::invalid_argument);
  EXPECT_THROW(psnr(ImageGrid(4, 4), ImageGrid(4, 4, 1.0), 0.0), std::invalid_argument);
}

TEST(Psnr, DecreasesWithNoise) {
  std::mt19937_64 rng(3);
  const ImageGrid b = random_grid(32, 32, rng), noise = random_grid(32, 32, rng);
  double prev = kPsnrIdentical;
  for (double a : {0.01, 0.03, 0.1, 0.3, 1.0}) {
    const double p = psnr(add_noise(b, noise, a), b, 2.0);
    EXPECT_LT(p, prev);
    prev = p;
  }
}

TEST(Ssim, IdenticalAndNegated) {
  std::mt19937_64 rng(4);
  ImageGrid b = random_grid(24, 24, rng);
  const double m = mean(b);
  for (double& x : b.data()) x -= m;
  EXPECT_NEAR(ssim(b, b), 1.0, 1e-12);
  SsimConfig g;
  g.global = true;
  EXPECT_NEAR(ssim(b, b, g), 1.0, 1e-12);
  EXPECT_LT(ssim(-1.0 * b, b, g), 0.0);
  // Windowed, the negation is only anticorrelated where local means vanish.
  ImageGrid c(24, 24);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 24; ++x) c.at(x, y) = ((x + y) % 2 ? 1.0 : -1.0) * (1.0 + 0.3 * std::sin(0.2 * x));
  EXPECT_LT(ssim(-1.0 * c, c), -0.9);
}

TEST(Ssim, MatchesDirectWindowed) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> size(11, 40);
  std::uniform_real_distribution<double> mix(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int w = size(rng), h = size(rng);
    const ImageGrid r = random_grid(w, h, rng, -2.0, 2.0);
    const ImageGrid b = scale_add(mix(rng), r, 1.0, random_grid(w, h, rng));
    EXPECT_NEAR(ssim(b, r), reference_ssim(b, r, dynamic_range(r)), 1e-6) << w << "x" << h;
  }
}

// Frozen from tests/oracles/metrics_and_tv.py (scikit-image, Gaussian window,
// population covariance, data range of the reference).
TEST(Ssim, FrozenReferenceValues) {
  struct Case {
    int k, w, h;
    double ssim, psnr;
  };
  const Case cases[] = {
      {0, 24, 20, 0.764619134196, 24.049845136290}, {0, 32, 32, 0.758296896383, 24.087000668636},
      {0, 40, 33, 0.753115308988, 24.051209117755}, {1, 24, 20, 0.768410949200, 23.840484629379},
      {1, 32, 32, 0.721831588214, 23.875891386670}, {1, 40, 33, 0.721028353512, 23.832719160113},
      {2, 24, 20, 0.859515530208, 23.288667465283}, {2, 32, 32, 0.851771427834, 23.263691702440},
      {2, 40, 33, 0.849206050600, 23.267246589023}};
  for (const Case& c : cases) {
    const ImageGrid a = test::pattern_a(c.w, c.h, c.k), b = test::pattern_b(c.w, c.h, c.k);
    EXPECT_NEAR(ssim(b, a), c.ssim, 1e-9) << c.k << " " << c.w << "x" << c.h;
    EXPECT_NEAR(psnr(b, a, dynamic_range(a)), c.psnr, 1e-9);
    const BandScore s = score_band(b, a);
    EXPECT_NEAR(s.ssim, c.ssim, 1e-9);
    EXPECT_NEAR(s.psnr, c.psnr, 1e-9);
    EXPECT_DOUBLE_EQ(s.max_i, dynamic_range(a));
  }
  EXPECT_NEAR(dynamic_range(test::pattern_a(24, 20, 0)), 3.945863568714, 1e-11);
}

TEST(Ssim, RangeInvariants) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 30; ++trial) {
    const ImageGrid a = random_grid(16, 16, rng), b = random_grid(16, 16, rng, -3.0, 0.5);
    const double s = ssim(a, b);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Ssim, Errors) {
  EXPECT_THROW(ssim(ImageGrid(12, 12), ImageGrid(12, 13)), std::invalid_argument);
  EXPECT_THROW(ssim(ImageGrid(10, 12), ImageGrid(10, 12)), std::invalid_argument);
  SsimConfig even;
  even.window = 10;
  EXPECT_THROW(ssim(ImageGrid(12, 12), ImageGrid(12, 12), even), std::invalid_argument);
}

TEST(Slmse, IdenticalAndZero) {
  std::mt19937_64 rng(7);
  const ImageGrid r = random_grid(40, 33, rng);
  EXPECT_EQ(slmse(r, r), 1.0);
  EXPECT_DOUBLE_EQ(slmse(ImageGrid(40, 33), r), 0.0);
  EXPECT_EQ(slmse(ImageGrid(16, 16), ImageGrid(16, 16)), 1.0);
  EXPECT_EQ(slmse(ImageGrid(16, 16, 1.0), ImageGrid(16, 16)), 0.0);
}

TEST(Slmse, MatchesBruteForce) {
  std::mt19937_64 rng(8);
  for (auto [w, h] : {std::pair{16, 16}, {20, 17}, {24, 24}, {40, 33}, {64, 64}, {71, 50}}) {
    const ImageGrid a = random_grid(w, h, rng), b = random_grid(w, h, rng);
    const double l = reference_lmse(a, b);
    EXPECT_NEAR(lmse(a, b), l, 1e-12 * l) << w << "x" << h;
    const double z = reference_lmse(ImageGrid(w, h), b);
    EXPECT_NEAR(slmse(a, b), 1.0 - l / z, 1e-12);
  }
}

TEST(Slmse, BoundedAndStrict) {
  std::mt19937_64 rng(9);
  const ImageGrid r = random_grid(32, 32, rng), noise = random_grid(32, 32, rng);
  for (double a : {1e-8, 1e-3, 0.5, 3.0}) EXPECT_LT(slmse(add_noise(r, noise, a), r), 1.0);
  ImageGrid one = r;
  one.at(31, 31) += 1e-4;
  EXPECT_LT(slmse(one, r), 1.0);
  EXPECT_THROW(slmse(ImageGrid(15, 20), ImageGrid(15, 20)), std::invalid_argument);
}

TEST(Metrics, JointTranslation) {
  std::mt19937_64 rng(10);
  const ImageGrid r = random_grid(24, 24, rng);
  const ImageGrid b = scale_add(0.7, r, 0.5, random_grid(24, 24, rng));
  // Same padding amount, image placed 8 pixels further along in the second frame.
  const ImageGrid b0 = embed(b, 64, 64, 16, 16), r0 = embed(r, 64, 64, 16, 16);
  const ImageGrid b1 = embed(b, 64, 64, 24, 16), r1 = embed(r, 64, 64, 24, 16);
  EXPECT_DOUBLE_EQ(psnr(b0, r0, 1.0), psnr(b1, r1, 1.0));
  EXPECT_NEAR(ssim(b0, r0), ssim(b1, r1), 1e-12);
  EXPECT_NEAR(slmse(b0, r0), slmse(b1, r1), 1e-12);
}

TEST(BandPeak, RangeAndFloor) {
  ImageGrid r(16, 16);
  r.at(3, 3) = 2.0;
  r.at(4, 4) = -1.0;
  EXPECT_EQ(band_peak(ImageGrid(16, 16), r), 3.0);
  EXPECT_EQ(band_peak(ImageGrid(16, 16), r, 5.0), 5.0);
  ImageGrid b(16, 16);
  b.at(0, 0) = 0.5;
  EXPECT_EQ(band_peak(b, ImageGrid(16, 16, 1.0)), 0.5);
  EXPECT_EQ(band_peak(ImageGrid(16, 16), ImageGrid(16, 16)), 1.0);
  EXPECT_DOUBLE_EQ(grey_level(r), 3.0 / 255.0);
  EXPECT_DOUBLE_EQ(with_grey_level_floor(SsimConfig{}, r).range_floor, 3.0 / 255.0);
}

// A near-flat band scored against one grey level of the source is not
// penalised for noise below that level.
TEST(BandPeak, FloorTamesFlatBands) {
  std::mt19937_64 rng(11);
  const ImageGrid f = random_grid(32, 32, rng, 0.0, 255.0);
  const ImageGrid gt = scale_add(1e-6, random_grid(32, 32, rng), 0.0, f);
  const ImageGrid pred = scale_add(1.0, gt, 1e-6, random_grid(32, 32, rng));
  EXPECT_LT(score_band(pred, gt).ssim, 0.9);
  EXPECT_GT(score_band(pred, gt, with_grey_level_floor({}, f)).ssim, 0.999);
}

TEST(ScoreBands, AveragesAndSentinel) {
  std::mt19937_64 rng(12);
  std::vector<ImageGrid> gt, pred;
  for (int k = 0; k < 3; ++k) {
    gt.push_back(random_grid(16, 16, rng));
    pred.push_back(k == 1 ? gt.back() : scale_add(1.0, gt.back(), 0.1, random_grid(16, 16, rng)));
  }
  const MetricsReport r = score_bands(pred, gt);
  ASSERT_EQ(r.per_band.size(), 3u);
  EXPECT_TRUE(std::isinf(r.per_band[1].psnr));
  EXPECT_NEAR(r.average.psnr, 0.5 * (r.per_band[0].psnr + r.per_band[2].psnr), 1e-12);
  EXPECT_NEAR(r.average.ssim, (r.per_band[0].ssim + 1.0 + r.per_band[2].ssim) / 3.0, 1e-12);
  EXPECT_THROW(score_bands(pred, {gt[0]}), std::invalid_argument);
  EXPECT_THROW(score_bands({}, {}), std::invalid_argument);

  const MetricsReport self = score_bands(gt, gt);
  EXPECT_DOUBLE_EQ(self.average.ssim, 1.0);
  EXPECT_EQ(self.average.slmse, 1.0);
  EXPECT_TRUE(std::isinf(self.average.psnr));
}

TEST(MetricsAccumulator, DatasetMeans) {
  MetricsReport a, b;
  a.per_band = {{0.9, 30.0, 0.8, 1.0}, {0.7, kPsnrIdentical, 0.6, 2.0}};
  a.average = average_scores(a.per_band);
  b.per_band = {{0.5, 20.0, 0.4, 3.0}, {0.3, 10.0, 0.2, 4.0}};
  b.average = average_scores(b.per_band);
  MetricsAccumulator acc;
  acc.add(a);
  acc.add(b);
  const MetricsReport m = acc.result();
  EXPECT_EQ(m.images, 2);
  EXPECT_DOUBLE_EQ(m.per_band[0].ssim, 0.7);
  EXPECT_DOUBLE_EQ(m.per_band[0].psnr, 25.0);
  EXPECT_DOUBLE_EQ(m.per_band[1].psnr, 10.0);
  EXPECT_DOUBLE_EQ(m.average.slmse, 0.5);
  MetricsReport c;
  c.per_band.resize(3);
  EXPECT_THROW(acc.add(c), std::invalid_argument);
}

TEST(MetricsReport, TableCsvLayout) {
  MetricsReport r;
  r.per_band = {{0.99712, 35.1234, 0.9456, 1.0}, {0.5, kPsnrIdentical, 0.25, 1.0}};
  r.average = average_scores(r.per_band);
  std::ostringstream os;
  r.write_table_csv(os);
  EXPECT_EQ(os.str(),
            "metric,Average,Band 1,residual Band\n"
            "SSIM,0.7486,0.9971,0.5000\n"
            "PSNR,35.123,35.123,inf\n"
            "sLMSE,0.598,0.946,0.250\n");
}

TEST(MetricsReport, Json) {
  MetricsReport r;
  r.per_band = {{1.0, kPsnrIdentical, 1.0, 2.0}};
  r.average = r.per_band[0];
  const nlohmann::json j = r;
  EXPECT_EQ(j["per_band"][0]["psnr"], "inf");
  const BandScore back = j["average"].get<BandScore>();
  EXPECT_TRUE(std::isinf(back.psnr));
  EXPECT_EQ(back.max_i, 2.0);
}
