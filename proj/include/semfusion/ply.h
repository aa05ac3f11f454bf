#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Core>

#include "semfusion/image.h"
#include "semfusion/surfel_map.h"

namespace semfusion {

// Class index -> display colour.
class Palette {
 public:
  Palette() = default;
  explicit Palette(std::vector<Rgb> colours) : colours_(std::move(colours)) {}

  // Fixed default palette; indices past its end wrap around.
  static Palette Default();
  // Text file, one "index r g b" per line; '#' starts a comment.
  static Palette FromFile(const std::filesystem::path& path);

  Rgb operator[](std::size_t index) const;
  std::size_t size() const { return colours_.size(); }

 private:
  std::vector<Rgb> colours_;
};

enum class PlyColourMode { kColour, kLabel };
enum class PlyEncoding { kAscii, kBinaryLittleEndian };

// One vertex per surfel: x y z nx ny nz (float32), red green blue (uint8),
// label (uint16, argmax class) and label_confidence (float32, argmax
// probability). Label mode paints vertices with the class palette.
// Throws Errc::kEmptyMap / Errc::kIoFailure.
void export_ply(const SurfelMap& map, const std::filesystem::path& path,
                PlyColourMode mode,
                PlyEncoding encoding = PlyEncoding::kBinaryLittleEndian,
                const Palette& palette = Palette::Default());

struct PlyVertex {
  Eigen::Vector3f position;
  Eigen::Vector3f normal;
  Rgb colour{};
  std::uint16_t label = 0;
  float label_confidence = 0.0f;
};

// Reads files written by export_ply (either encoding).
std::vector<PlyVertex> read_ply(const std::filesystem::path& path);

}  // namespace semfusion
