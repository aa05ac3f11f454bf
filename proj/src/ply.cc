#include "semfusion/ply.h"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "semfusion/error.h"

namespace semfusion {
namespace {

static_assert(std::endian::native == std::endian::little,
              "binary PLY writer assumes a little-endian host");

const char* const kPropertyLines[] = {
    "property float x",        "property float y",
    "property float z",        "property float nx",
    "property float ny",       "property float nz",
    "property uchar red",      "property uchar green",
    "property uchar blue",     "property ushort label",
    "property float label_confidence",
};

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T take(const char*& p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  p += sizeof(T);
  return value;
}

std::uint8_t to_byte(double c) {
  const double r = std::floor(c + 0.5);
  return static_cast<std::uint8_t>(r < 0 ? 0 : (r > 255 ? 255 : r));
}

}  // namespace

Palette Palette::Default() {
  // NYU-style class colours; index 0 first.
  return Palette({{{0, 0, 255}},     {{233, 89, 48}},   {{0, 218, 0}},
                  {{149, 0, 240}},   {{222, 241, 24}},  {{255, 206, 206}},
                  {{0, 224, 229}},   {{106, 136, 204}}, {{117, 29, 41}},
                  {{240, 35, 235}},  {{0, 167, 156}},   {{249, 139, 0}},
                  {{225, 229, 194}}, {{128, 128, 128}}});
}

Palette Palette::FromFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIoFailure, "cannot open palette " + path.string());
  std::vector<Rgb> colours;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long index = 0;
    int r = 0, g = 0, b = 0;
    if (!(ls >> index)) continue;
    if (!(ls >> r >> g >> b) || index < 0 || r < 0 || r > 255 || g < 0 ||
        g > 255 || b < 0 || b > 255) {
      throw Error(Errc::kMalformedLine,
                  path.string() + ":" + std::to_string(line_no));
    }
    if (static_cast<std::size_t>(index) >= colours.size()) {
      colours.resize(index + 1, Rgb{0, 0, 0});
    }
    colours[index] = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                      static_cast<std::uint8_t>(b)};
  }
  if (colours.empty()) throw Error(Errc::kMalformedLine, "empty palette");
  return Palette(std::move(colours));
}

Rgb Palette::operator[](std::size_t index) const {
  if (colours_.empty()) return {0, 0, 0};
  return colours_[index % colours_.size()];
}

void export_ply(const SurfelMap& map, const std::filesystem::path& path,
                PlyColourMode mode, PlyEncoding encoding,
                const Palette& palette) {
  if (map.empty()) throw Error(Errc::kEmptyMap, "nothing to export");
  const auto& surfels = map.surfels();
  const auto& table = map.probabilities();

  std::string body;
  std::ostringstream ascii;
  ascii.precision(9);
  for (std::size_t i = 0; i < surfels.size(); ++i) {
    const Surfel& s = surfels[i];
    const auto slot = table.slot(s.id, i);
    if (!slot) {
      throw Error(Errc::kInvalidArgument,
                  "surfel " + std::to_string(s.id) + " has no distribution");
    }
    const ArgmaxResult best = argmax_label(table.row(*slot));
    Rgb colour = mode == PlyColourMode::kLabel
                     ? palette[best.index]
                     : Rgb{to_byte(s.colour.x()), to_byte(s.colour.y()),
                           to_byte(s.colour.z())};
    const float v[6] = {static_cast<float>(s.position.x()), static_cast<float>(s.position.y()),
                        static_cast<float>(s.position.z()), static_cast<float>(s.normal.x()),
                        static_cast<float>(s.normal.y()),   static_cast<float>(s.normal.z())};
    const auto label = static_cast<std::uint16_t>(best.index);
    const auto conf = static_cast<float>(best.probability);
    if (encoding == PlyEncoding::kBinaryLittleEndian) {
      for (float f : v) put(body, f);
      for (std::uint8_t c : colour) put(body, c);
      put(body, label);
      put(body, conf);
    } else {
      for (float f : v) ascii << f << ' ';
      ascii << int(colour[0]) << ' ' << int(colour[1]) << ' ' << int(colour[2])
            << ' ' << label << ' ' << conf << '\n';
    }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  out << "ply\nformat "
      << (encoding == PlyEncoding::kAscii ? "ascii" : "binary_little_endian")
      << " 1.0\nelement vertex " << surfels.size() << "\n";
  for (const char* line : kPropertyLines) out << line << "\n";
  out << "end_header\n";
  if (encoding == PlyEncoding::kAscii) {
    out << ascii.str();
  } else {
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
  }
  if (!out) throw Error(Errc::kIoFailure, "short write " + path.string());
}

std::vector<PlyVertex> read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw Error(Errc::kBadMagic, path.string() + " is not a PLY file");
  bool binary = false;
  std::size_t count = 0;
  std::size_t property = 0;
  while (std::getline(in, line)) {
    if (line == "end_header") break;
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    if (word == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt == "binary_little_endian") binary = true;
      else if (fmt != "ascii") throw Error(Errc::kIoFailure, "unsupported PLY format " + fmt);
    } else if (word == "element") {
      std::string name;
      ls >> name >> count;
    } else if (word == "property") {
      if (property >= std::size(kPropertyLines) || line != kPropertyLines[property]) {
        throw Error(Errc::kIoFailure, "unexpected PLY property: " + line);
      }
      ++property;
    }
  }
  if (property != std::size(kPropertyLines)) {
    throw Error(Errc::kTruncatedFile, "PLY header incomplete");
  }

  std::vector<PlyVertex> vertices(count);
  if (binary) {
    constexpr std::size_t kStride = 6 * 4 + 3 + 2 + 4;
    std::string buf(count * kStride, '\0');
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (static_cast<std::size_t>(in.gcount()) != buf.size()) {
      throw Error(Errc::kTruncatedFile, path.string());
    }
    const char* p = buf.data();
    for (auto& v : vertices) {
      for (int k = 0; k < 3; ++k) v.position[k] = take<float>(p);
      for (int k = 0; k < 3; ++k) v.normal[k] = take<float>(p);
      for (int k = 0; k < 3; ++k) v.colour[k] = take<std::uint8_t>(p);
      v.label = take<std::uint16_t>(p);
      v.label_confidence = take<float>(p);
    }
  } else {
    for (auto& v : vertices) {
      int r = 0, g = 0, b = 0;
      if (!(in >> v.position.x() >> v.position.y() >> v.position.z() >>
            v.normal.x() >> v.normal.y() >> v.normal.z() >> r >> g >> b >>
            v.label >> v.label_confidence)) {
        throw Error(Errc::kTruncatedFile, path.string());
      }
      v.colour = {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                  static_cast<std::uint8_t>(b)};
    }
  }
  return vertices;
}

}  // namespace semfusion
