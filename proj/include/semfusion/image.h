#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace semfusion {

// Row-major, channel-interleaved image.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels = 1, T fill = T{})
      : width_(width),
        height_(height),
        channels_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int channels() const { return channels_; }
  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width_) * height_;
  }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y, int c = 0) {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }
  const T& at(int x, int y, int c = 0) const {
    return data_[(static_cast<std::size_t>(y) * width_ + x) * channels_ + c];
  }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }

  bool same_size(int width, int height) const {
    return width_ == width && height_ == height;
  }
  template <typename U>
  bool same_size(const Image<U>& other) const {
    return same_size(other.width(), other.height());
  }

  bool operator==(const Image&) const = default;

 private:
  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<T> data_;
};

using RgbImage = Image<std::uint8_t>;      // 3 channels
using DepthImage = Image<double>;          // metres, 0 = missing
using LabelImage = Image<std::uint8_t>;    // class index, kVoidLabel = none

using Rgb = std::array<std::uint8_t, 3>;

// Source index floor((i + 0.5) * src / dst) of nearest-neighbour resampling,
// in exact integer arithmetic.
inline int nearest_source_index(int i, int src, int dst) {
  const long long s = (2LL * i + 1) * src / (2LL * dst);
  return static_cast<int>(s < src ? s : src - 1);
}

template <typename T>
Image<T> resize_nearest(const Image<T>& src, int width, int height) {
  if (src.same_size(width, height)) return src;
  Image<T> out(width, height, src.channels());
  for (int y = 0; y < height; ++y) {
    const int ys = nearest_source_index(y, src.height(), height);
    for (int x = 0; x < width; ++x) {
      const int xs = nearest_source_index(x, src.width(), width);
      for (int c = 0; c < src.channels(); ++c) out.at(x, y, c) = src.at(xs, ys, c);
    }
  }
  return out;
}

// --- image files -----------------------------------------------------------
// Binary PPM (P6, 8 bit) / PGM (P5, 8 or 16 bit, big-endian samples) and PNG
// (8-bit RGB/grey, 16-bit grey). The format is chosen from the extension.
// Failures raise Errc::kUnreadableImage / Errc::kIoFailure.

RgbImage read_rgb(const std::filesystem::path& path);
// Single-channel 8- or 16-bit image widened to 16 bit.
Image<std::uint16_t> read_gray16(const std::filesystem::path& path);
LabelImage read_labels(const std::filesystem::path& path);

void write_rgb(const std::filesystem::path& path, const RgbImage& image);
void write_gray16(const std::filesystem::path& path,
                  const Image<std::uint16_t>& image);
void write_gray8(const std::filesystem::path& path, const Image<std::uint8_t>& image);

}  // namespace semfusion
