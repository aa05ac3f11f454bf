#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>

#include <gtest/gtest.h>

#include "semfusion/error.h"
#include "semfusion/labels.h"
#include "semfusion/prediction.h"
#include "support/generators.h"

namespace semfusion {
namespace {

namespace fs = std::filesystem;

fs::path temp(const std::string& name) { return fs::temp_directory_path() / name; }

void put_u32(std::ofstream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::ofstream& out, float f) {
  std::uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

// Hand-assembled SFPM file, independent of write_probability_map.
void write_raw(const fs::path& path, const char* magic, std::uint32_t w, std::uint32_t h,
               std::uint32_t c, const std::vector<float>& values) {
  std::ofstream out(path, std::ios::binary);
  out.write(magic, 4);
  put_u32(out, 1);
  put_u32(out, w);
  put_u32(out, h);
  put_u32(out, c);
  for (float f : values) put_f32(out, f);
}

std::vector<char> bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::optional<Errc> load_error(const fs::path& path) {
  try {
    load_probability_map(path);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

TEST(Sfpm, LoadsTwoByOne) {
  const auto path = temp("semfusion_2x1.sfpm");
  write_raw(path, "SFPM", 2, 1, 2, {1, 0, 0.5, 0.5});
  const auto loaded = load_probability_map(path);
  EXPECT_EQ(loaded.map.width(), 2);
  EXPECT_EQ(loaded.map.height(), 1);
  EXPECT_EQ(loaded.map.row(1, 0)[1], 0.5f);
  EXPECT_EQ(loaded.renormalised_rows, 0u);
  fs::remove(path);
}

TEST(Sfpm, Errors) {
  const auto path = temp("semfusion_bad.sfpm");
  write_raw(path, "XXXX", 2, 1, 2, {1, 0, 0.5, 0.5});
  EXPECT_EQ(load_error(path), Errc::kBadMagic);
  write_raw(path, "SFPM", 2, 1, 2, {1, 0, 0.6, 0.6});
  EXPECT_EQ(load_error(path), Errc::kRowNotNormalised);
  write_raw(path, "SFPM", 2, 1, 2, {1, 0, 0.5});
  EXPECT_EQ(load_error(path), Errc::kTruncatedFile);
  write_raw(path, "SFPM", 2, 1, 2, {1, 0, 0.5, 0.5, 0.25});
  EXPECT_EQ(load_error(path), Errc::kTrailingBytes);
  fs::remove(path);
}

TEST(Sfpm, SlightlyOffRowsAreRenormalisedAndCounted) {
  const auto path = temp("semfusion_off.sfpm");
  write_raw(path, "SFPM", 1, 1, 2, {0.505f, 0.5f});
  const auto loaded = load_probability_map(path);
  EXPECT_EQ(loaded.renormalised_rows, 1u);
  const auto row = loaded.map.row(0, 0);
  EXPECT_NEAR(row[0] + row[1], 1.0, 1e-6);
  fs::remove(path);
}

TEST(Sfpm, WriteLoadRoundTripIsByteIdentical) {
  testing::Gen gen(61);
  const auto path = temp("semfusion_rt.sfpm");
  const auto copy = temp("semfusion_rt2.sfpm");
  ProbabilityMap pm(7, 5, 4);
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 7; ++x) {
      const auto d = gen.distribution(4);
      for (int c = 0; c < 4; ++c) pm.row(x, y)[c] = static_cast<float>(d[c]);
    }
  }
  write_probability_map(path, pm);
  const auto loaded = load_probability_map(path);
  EXPECT_EQ(loaded.map, pm);
  write_probability_map(copy, loaded.map);
  EXPECT_EQ(bytes(path), bytes(copy));
  fs::remove(path);
  fs::remove(copy);
}

LabelImage stripes(int w, int h, int classes) {
  LabelImage gt(w, h, 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) gt.at(x, y) = static_cast<std::uint8_t>((x + y) % classes);
  }
  return gt;
}

TEST(Oracle, IdentityMatrixGivesOneHotRows) {
  const auto gt = stripes(8, 6, 3);
  const auto pm = synthetic_oracle(gt, ConfusionModel::Symmetric(3, 1.0));
  EXPECT_EQ(pm.argmax(), gt);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) EXPECT_EQ(pm.row(x, y)[gt.at(x, y)], 1.0f);
  }
}

TEST(Oracle, SymmetricRowHasDiagonalAtTrueClass) {
  LabelImage gt(1, 1, 1, 2);
  const auto pm = synthetic_oracle(gt, ConfusionModel::Symmetric(9, 0.7));
  EXPECT_EQ(pm.row(0, 0)[2], 0.7f);
  EXPECT_EQ(pm.row(0, 0)[0], static_cast<float>(0.3 / 8));
}

TEST(Oracle, VoidPixelsAreUniformAndOutOfRangeThrows) {
  LabelImage gt(2, 1, 1, kVoidLabel);
  gt.at(1, 0) = 0;
  const auto pm = synthetic_oracle(gt, ConfusionModel::Symmetric(4, 0.7));
  for (int c = 0; c < 4; ++c) EXPECT_EQ(pm.row(0, 0)[c], 0.25f);
  gt.at(1, 0) = 4;
  try {
    synthetic_oracle(gt, ConfusionModel::Symmetric(4, 0.7));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kClassOutOfRange);
  }
}

TEST(Oracle, DeterministicAndStreamDependent) {
  const auto gt = stripes(16, 16, 5);
  auto model = ConfusionModel::Symmetric(5, 0.7);
  model.mode = OracleMode::kSampled;
  model.seed = 3;
  EXPECT_EQ(synthetic_oracle(gt, model, 4), synthetic_oracle(gt, model, 4));
  EXPECT_NE(synthetic_oracle(gt, model, 4), synthetic_oracle(gt, model, 5));
  model.mode = OracleMode::kSoft;
  model.sharpness = 0.2;
  const auto jittered = synthetic_oracle(gt, model, 1);
  EXPECT_EQ(jittered, synthetic_oracle(gt, model, 1));
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      double s = 0;
      for (float v : jittered.row(x, y)) s += v;
      ASSERT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Oracle, ValidateRejectsNonStochastic) {
  ConfusionModel m;
  m.matrix = {{0.5, 0.4}, {0.5, 0.5}};
  EXPECT_THROW(m.validate(), Error);
  m.matrix = {{1.0, 0.0}};
  EXPECT_THROW(m.validate(), Error);
}

TEST(OracleProperty, SoftArgmaxIsAlwaysCorrect) {
  const auto gt = stripes(320, 320, 13);
  const auto pm = synthetic_oracle(gt, ConfusionModel::Symmetric(13, 0.7));
  EXPECT_EQ(pm.argmax(), gt);
}

TEST(OracleProperty, SampledAccuracyMatchesDiagonal) {
  const auto gt = stripes(400, 300, 13);  // 1.2e5 pixels
  auto model = ConfusionModel::Symmetric(13, 0.7);
  model.mode = OracleMode::kSampled;
  model.seed = 99;
  const auto am = synthetic_oracle(gt, model, 0).argmax();
  std::size_t right = 0;
  for (std::size_t i = 0; i < am.data().size(); ++i) right += am.data()[i] == gt.data()[i];
  const double acc = static_cast<double>(right) / am.data().size();
  EXPECT_NEAR(acc, 0.7, 0.02);
}

TEST(Rescale, Examples) {
  ProbabilityMap small(2, 2, 2);
  small.row(0, 0)[0] = 1.0f;
  small.row(0, 0)[1] = 0.0f;
  small.row(1, 1)[0] = 0.25f;
  small.row(1, 1)[1] = 0.75f;
  EXPECT_EQ(rescale_probability_map(small, 2, 2), small);
  const auto big = rescale_probability_map(small, 4, 4);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      const auto want = small.row(x / 2, y / 2);
      ASSERT_TRUE(std::equal(want.begin(), want.end(), big.row(x, y).begin()));
    }
  }
  EXPECT_THROW(rescale_probability_map(small, 0, 2), Error);
}

TEST(RescaleProperty, MatchesScalarIndexReference) {
  testing::Gen gen(62);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = gen.integer(1, 30), h = gen.integer(1, 30);
    const int nw = gen.integer(1, 40), nh = gen.integer(1, 40);
    ProbabilityMap pm(w, h, 3);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const auto d = gen.distribution(3);
        for (int c = 0; c < 3; ++c) pm.row(x, y)[c] = static_cast<float>(d[c]);
      }
    }
    const auto out = rescale_probability_map(pm, nw, nh);
    for (int y = 0; y < nh; ++y) {
      for (int x = 0; x < nw; ++x) {
        const int xs = std::min(w - 1, static_cast<int>(std::floor((x + 0.5) * w / nw)));
        const int ys = std::min(h - 1, static_cast<int>(std::floor((y + 0.5) * h / nh)));
        const auto want = pm.row(xs, ys);
        ASSERT_TRUE(std::equal(want.begin(), want.end(), out.row(x, y).begin()));
      }
    }
  }
}

}  // namespace
}  // namespace semfusion
