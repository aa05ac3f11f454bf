#include "semfusion/prediction.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <tuple>

#include "semfusion/error.h"
#include "semfusion/labels.h"

namespace semfusion {
namespace {

static_assert(std::endian::native == std::endian::little,
              "SFPM reader assumes a little-endian host");

constexpr char kMagic[4] = {'S', 'F', 'P', 'M'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 20;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Counter-based stream: every (seed, stream, x, y) pixel owns an independent
// sequence of uniforms, so results never depend on evaluation order.
class PixelRng {
 public:
  PixelRng(std::uint64_t seed, std::uint64_t stream, int x, int y)
      : key_(splitmix64(splitmix64(splitmix64(seed) ^ stream) ^
                        ((static_cast<std::uint64_t>(static_cast<std::uint32_t>(y)) << 32) |
                         static_cast<std::uint32_t>(x)))) {}

  // Uniform in (0, 1).
  double uniform() {
    const std::uint64_t bits = splitmix64(key_ + counter_++);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace

ProbabilityMap::ProbabilityMap(int width, int height, std::size_t classes)
    : width_(width),
      height_(height),
      classes_(classes),
      probs_(static_cast<std::size_t>(width) * height * classes,
             classes ? 1.0f / static_cast<float>(classes) : 0.0f) {
  if (width < 1 || height < 1 || classes < 1) {
    throw Error(Errc::kInvalidArgument, "probability map dimensions must be >= 1");
  }
}

LabelImage ProbabilityMap::argmax() const {
  LabelImage out(width_, height_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) {
      const auto r = row(x, y);
      std::size_t best = 0;
      for (std::size_t c = 1; c < classes_; ++c) {
        if (r[c] > r[best]) best = c;
      }
      out.at(x, y) = static_cast<std::uint8_t>(best);
    }
  }
  return out;
}

LoadedProbabilityMap load_probability_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::kIoFailure, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::kBadMagic, path.string());
  }
  if (bytes.size() < kHeaderBytes) {
    throw Error(Errc::kTruncatedFile, path.string() + ": header");
  }
  std::uint32_t header[4];
  std::memcpy(header, bytes.data() + 4, sizeof(header));
  const auto [version, width, height, classes] =
      std::tuple{header[0], header[1], header[2], header[3]};
  if (version != kVersion) {
    throw Error(Errc::kBadMagic,
                path.string() + ": unsupported version " + std::to_string(version));
  }
  if (width == 0 || height == 0 || classes == 0) {
    throw Error(Errc::kTruncatedFile, path.string() + ": zero dimension");
  }
  const std::uint64_t values = std::uint64_t{width} * height * classes;
  const std::uint64_t expected = kHeaderBytes + values * sizeof(float);
  if (bytes.size() < expected) {
    throw Error(Errc::kTruncatedFile, path.string() + ": expected " +
                                          std::to_string(expected) + " bytes, got " +
                                          std::to_string(bytes.size()));
  }
  if (bytes.size() > expected) {
    throw Error(Errc::kTrailingBytes, path.string() + ": " +
                                          std::to_string(bytes.size() - expected) +
                                          " extra bytes");
  }

  LoadedProbabilityMap out{ProbabilityMap(static_cast<int>(width),
                                          static_cast<int>(height), classes),
                           0};
  auto data = out.map.data();
  std::memcpy(data.data(), bytes.data() + kHeaderBytes, values * sizeof(float));
  for (std::uint64_t p = 0; p < std::uint64_t{width} * height; ++p) {
    std::span<float> r = data.subspan(p * classes, classes);
    double sum = 0.0;
    for (float v : r) {
      if (!std::isfinite(v) || v < 0.0f) {
        throw Error(Errc::kRowNotNormalised,
                    path.string() + ": invalid entry in row " + std::to_string(p));
      }
      sum += v;
    }
    if (sum >= 0.999 && sum <= 1.001) continue;
    if (sum >= 0.99 && sum <= 1.01) {
      for (float& v : r) v = static_cast<float>(v / sum);
      ++out.renormalised_rows;
      continue;
    }
    throw Error(Errc::kRowNotNormalised,
                path.string() + ": row " + std::to_string(p) + " sums to " +
                    std::to_string(sum));
  }
  return out;
}

void write_probability_map(const std::filesystem::path& path,
                           const ProbabilityMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  const std::uint32_t header[4] = {kVersion, static_cast<std::uint32_t>(map.width()),
                                   static_cast<std::uint32_t>(map.height()),
                                   static_cast<std::uint32_t>(map.classes())};
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(header), sizeof(header));
  out.write(reinterpret_cast<const char*>(map.data().data()),
            static_cast<std::streamsize>(map.data().size() * sizeof(float)));
  if (!out) throw Error(Errc::kIoFailure, "short write " + path.string());
}

ConfusionModel ConfusionModel::Symmetric(std::size_t classes, double diagonal) {
  if (classes < 1) throw Error(Errc::kInvalidArgument, "no classes");
  ConfusionModel model;
  const double off = classes > 1 ? (1.0 - diagonal) / static_cast<double>(classes - 1) : 0.0;
  model.matrix.assign(classes, std::vector<double>(classes, off));
  for (std::size_t i = 0; i < classes; ++i) {
    model.matrix[i][i] = classes > 1 ? diagonal : 1.0;
  }
  return model;
}

void ConfusionModel::validate() const {
  if (matrix.empty()) throw Error(Errc::kInvalidArgument, "empty confusion matrix");
  for (const auto& row : matrix) {
    if (row.size() != matrix.size()) {
      throw Error(Errc::kInvalidArgument, "confusion matrix must be square");
    }
    double sum = 0.0;
    for (double v : row) {
      if (!(v >= 0.0)) throw Error(Errc::kInvalidArgument, "negative confusion entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw Error(Errc::kInvalidArgument, "confusion rows must sum to 1");
    }
  }
  if (!(sharpness >= 0.0)) throw Error(Errc::kInvalidArgument, "sharpness < 0");
  if (!(sampled_smoothing >= 0.0 && sampled_smoothing <= 1.0)) {
    throw Error(Errc::kInvalidArgument, "smoothing outside [0, 1]");
  }
}

ProbabilityMap synthetic_oracle(const LabelImage& gt, const ConfusionModel& model,
                                std::uint64_t stream) {
  model.validate();
  const std::size_t classes = model.classes();
  ProbabilityMap out(gt.width(), gt.height(), classes);
  std::vector<double> row(classes);
  const float uniform_value = 1.0f / static_cast<float>(classes);

  for (int y = 0; y < gt.height(); ++y) {
    for (int x = 0; x < gt.width(); ++x) {
      const std::uint8_t truth = gt.at(x, y);
      auto dst = out.row(x, y);
      if (truth == kVoidLabel) {
        std::fill(dst.begin(), dst.end(), uniform_value);
        continue;
      }
      if (truth >= classes) {
        throw Error(Errc::kClassOutOfRange,
                    "label " + std::to_string(truth) + " at (" + std::to_string(x) +
                        ", " + std::to_string(y) + ") with " +
                        std::to_string(classes) + " classes");
      }
      PixelRng rng(model.seed, stream, x, y);
      const auto& base = model.matrix[truth];
      if (model.sharpness > 0.0) {
        double sum = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
          row[c] = base[c] - model.sharpness * std::log(rng.uniform());
          sum += row[c];
        }
        for (double& v : row) v /= sum;
      } else {
        std::copy(base.begin(), base.end(), row.begin());
      }

      if (model.mode == OracleMode::kSampled) {
        const double u = rng.uniform();
        std::size_t pick = classes - 1;
        double acc = 0.0;
        for (std::size_t c = 0; c < classes; ++c) {
          acc += row[c];
          if (u < acc) {
            pick = c;
            break;
          }
        }
        const double eps = model.sampled_smoothing;
        for (std::size_t c = 0; c < classes; ++c) {
          row[c] = eps / static_cast<double>(classes) + (c == pick ? 1.0 - eps : 0.0);
        }
      }
      for (std::size_t c = 0; c < classes; ++c) dst[c] = static_cast<float>(row[c]);
    }
  }
  return out;
}

ProbabilityMap rescale_probability_map(const ProbabilityMap& pm, int new_width,
                                       int new_height) {
  if (new_width < 1 || new_height < 1) {
    throw Error(Errc::kInvalidArgument, "rescale target must be >= 1x1");
  }
  if (pm.width() == new_width && pm.height() == new_height) return pm;
  ProbabilityMap out(new_width, new_height, pm.classes());
  for (int y = 0; y < new_height; ++y) {
    const int ys = nearest_source_index(y, pm.height(), new_height);
    for (int x = 0; x < new_width; ++x) {
      const int xs = nearest_source_index(x, pm.width(), new_width);
      const auto src = pm.row(xs, ys);
      std::copy(src.begin(), src.end(), out.row(x, y).begin());
    }
  }
  return out;
}

}  // namespace semfusion
