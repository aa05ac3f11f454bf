#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "semfusion/error.h"
#include "semfusion/ply.h"
#include "support/generators.h"

namespace semfusion {
namespace {

namespace fs = std::filesystem;

fs::path temp(const std::string& name) { return fs::temp_directory_path() / name; }

Surfel make_surfel(const Eigen::Vector3d& p) {
  Surfel s;
  s.position = p;
  s.normal = Eigen::Vector3d(0, 0, 1);
  s.colour = {10, 20, 30};
  s.radius = 0.01;
  s.confidence = 1;
  return s;
}

TEST(Ply, SingleSurfelHasAllProperties) {
  SurfelMap map(LabelSet({"a", "b"}));
  map.add(make_surfel({1, 2, 3}), uniform(2));
  const auto path = temp("semfusion_one.ply");
  export_ply(map, path, PlyColourMode::kColour, PlyEncoding::kAscii);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  EXPECT_NE(text.find("element vertex 1"), std::string::npos);
  for (const char* prop : {"x", "y", "z", "nx", "ny", "nz", "red", "green", "blue", "label",
                           "label_confidence"}) {
    EXPECT_NE(text.find(std::string(" ") + prop + "\n"), std::string::npos) << prop;
  }
  const auto v = read_ply(path);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].colour, (Rgb{10, 20, 30}));
  EXPECT_EQ(v[0].label, 0);
  EXPECT_FLOAT_EQ(v[0].label_confidence, 0.5f);
  fs::remove(path);
}

TEST(Ply, LabelModeUsesPalette) {
  const LabelSet labels({"a", "b", "c", "d", "e"});
  SurfelMap map(labels);
  map.add(make_surfel({0, 0, 1}), normalize(std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.6}));
  const auto path = temp("semfusion_label.ply");
  export_ply(map, path, PlyColourMode::kLabel);
  const auto v = read_ply(path);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].label, 4);
  EXPECT_EQ(v[0].colour, Palette::Default()[4]);
  fs::remove(path);
}

TEST(Ply, EmptyMapThrows) {
  SurfelMap map(LabelSet({"a"}));
  try {
    export_ply(map, temp("semfusion_empty.ply"), PlyColourMode::kColour);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kEmptyMap);
  }
}

TEST(Ply, RoundTripBothEncodings) {
  testing::Gen gen(41);
  SurfelMap map(LabelSet({"a", "b", "c"}));
  for (int i = 0; i < 200; ++i) {
    Surfel s = make_surfel({gen.uniform(-5, 5), gen.uniform(-5, 5), gen.uniform(-5, 5)});
    s.normal = gen.unit_vector();
    s.colour = {gen.uniform(0, 255), gen.uniform(0, 255), gen.uniform(0, 255)};
    map.add(s, gen.distribution(3));
  }
  for (auto enc : {PlyEncoding::kAscii, PlyEncoding::kBinaryLittleEndian}) {
    const auto path = temp("semfusion_rt.ply");
    export_ply(map, path, PlyColourMode::kColour, enc);
    const auto v = read_ply(path);
    ASSERT_EQ(v.size(), map.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto& s = map.surfels()[i];
      for (int k = 0; k < 3; ++k) {
        ASSERT_EQ(v[i].position[k], static_cast<float>(s.position[k]));
        ASSERT_EQ(v[i].normal[k], static_cast<float>(s.normal[k]));
      }
      const auto am = argmax_label(map.distribution(s.id));
      ASSERT_EQ(v[i].label, am.index);
      ASSERT_EQ(v[i].label_confidence, static_cast<float>(am.probability));
    }
    fs::remove(path);
  }
}

TEST(Palette, FileAndWrap) {
  const auto path = temp("semfusion_palette.txt");
  {
    std::ofstream out(path);
    out << "# idx r g b\n0 1 2 3\n1 4 5 6\n";
  }
  const Palette p = Palette::FromFile(path);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p[1], (Rgb{4, 5, 6}));
  EXPECT_EQ(p[2], (Rgb{1, 2, 3}));
  {
    std::ofstream out(path);
    out << "0 1 2 300\n";
  }
  EXPECT_THROW(Palette::FromFile(path), Error);
  fs::remove(path);
}

}  // namespace
}  // namespace semfusion
