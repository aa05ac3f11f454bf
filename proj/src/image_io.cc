#include <png.h>

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>

#include "semfusion/error.h"
#include "semfusion/image.h"

namespace semfusion {
namespace {

bool has_extension(const std::filesystem::path& path, const char* ext) {
  std::string e = path.extension().string();
  for (char& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e == ext;
}

[[noreturn]] void unreadable(const std::filesystem::path& path,
                             const std::string& why) {
  throw Error(Errc::kUnreadableImage, path.string() + ": " + why);
}

// --- PNM -------------------------------------------------------------------

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;
};

int read_header_int(std::istream& in, const std::filesystem::path& path) {
  for (;;) {
    int c = in.peek();
    if (c == '#') {
      std::string comment;
      std::getline(in, comment);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int value = 0;
  if (!(in >> value)) unreadable(path, "bad PNM header");
  return value;
}

RawImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) unreadable(path, "cannot open");
  char magic[2] = {};
  in.read(magic, 2);
  RawImage raw;
  if (magic[0] == 'P' && magic[1] == '6') raw.channels = 3;
  else if (magic[0] == 'P' && magic[1] == '5') raw.channels = 1;
  else unreadable(path, "unsupported PNM magic");
  raw.width = read_header_int(in, path);
  raw.height = read_header_int(in, path);
  const int maxval = read_header_int(in, path);
  in.get();  // single whitespace before the raster
  if (raw.width < 1 || raw.height < 1 || maxval < 1 || maxval > 65535) {
    unreadable(path, "bad PNM dimensions");
  }
  raw.bit_depth = maxval > 255 ? 16 : 8;
  const std::size_t n =
      static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  const std::size_t bytes = n * (raw.bit_depth / 8);
  std::vector<unsigned char> buf(bytes);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes) unreadable(path, "truncated raster");
  raw.samples.resize(n);
  if (raw.bit_depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      raw.samples[i] = static_cast<std::uint16_t>((buf[2 * i] << 8) | buf[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) raw.samples[i] = buf[i];
  }
  return raw;
}

void write_pnm(const std::filesystem::path& path, int width, int height,
               int channels, int bit_depth, const std::uint16_t* samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  out << (channels == 3 ? "P6" : "P5") << "\n"
      << width << " " << height << "\n"
      << (bit_depth == 16 ? 65535 : 255) << "\n";
  const std::size_t n = static_cast<std::size_t>(width) * height * channels;
  std::vector<unsigned char> buf;
  buf.reserve(n * (bit_depth / 8));
  for (std::size_t i = 0; i < n; ++i) {
    if (bit_depth == 16) {
      buf.push_back(static_cast<unsigned char>(samples[i] >> 8));
      buf.push_back(static_cast<unsigned char>(samples[i] & 0xff));
    } else {
      buf.push_back(static_cast<unsigned char>(samples[i]));
    }
  }
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw Error(Errc::kIoFailure, "short write " + path.string());
}

// --- PNG -------------------------------------------------------------------

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

RawImage read_png(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "rb"));
  if (!fp) unreadable(path, "cannot open");
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    unreadable(path, "libpng init failed");
  }
  RawImage raw;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buf;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    unreadable(path, "corrupt PNG");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && raw.bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  raw.width = static_cast<int>(png_get_image_width(png, info));
  raw.height = static_cast<int>(png_get_image_height(png, info));
  raw.channels = png_get_channels(png, info);
  raw.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buf.resize(stride * raw.height);
  rows.resize(raw.height);
  for (int y = 0; y < raw.height; ++y) rows[y] = buf.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t n =
      static_cast<std::size_t>(raw.width) * raw.height * raw.channels;
  raw.samples.resize(n);
  for (int y = 0; y < raw.height; ++y) {
    const unsigned char* row = rows[y];
    const std::size_t per_row = static_cast<std::size_t>(raw.width) * raw.channels;
    for (std::size_t i = 0; i < per_row; ++i) {
      raw.samples[y * per_row + i] =
          raw.bit_depth == 16
              ? static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1])
              : row[i];
    }
  }
  return raw;
}

void write_png(const std::filesystem::path& path, int width, int height,
               int channels, int bit_depth, const std::uint16_t* samples) {
  std::unique_ptr<std::FILE, FileCloser> fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw Error(Errc::kIoFailure, "cannot write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw Error(Errc::kIoFailure, "libpng init failed");
  }
  const std::size_t per_row = static_cast<std::size_t>(width) * channels;
  std::vector<unsigned char> buf(per_row * height * (bit_depth / 8));
  for (std::size_t i = 0; i < per_row * height; ++i) {
    if (bit_depth == 16) {
      buf[2 * i] = static_cast<unsigned char>(samples[i] >> 8);
      buf[2 * i + 1] = static_cast<unsigned char>(samples[i] & 0xff);
    } else {
      buf[i] = static_cast<unsigned char>(samples[i]);
    }
  }
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = buf.data() + y * per_row * (bit_depth / 8);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(Errc::kIoFailure, "PNG encode failed " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

RawImage read_raw(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) unreadable(path, "missing file");
  if (has_extension(path, ".png")) return read_png(path);
  if (has_extension(path, ".ppm") || has_extension(path, ".pgm") ||
      has_extension(path, ".pnm")) {
    return read_pnm(path);
  }
  unreadable(path, "unsupported extension");
}

void write_raw(const std::filesystem::path& path, int width, int height,
               int channels, int bit_depth,
               const std::vector<std::uint16_t>& samples) {
  if (has_extension(path, ".png")) {
    write_png(path, width, height, channels, bit_depth, samples.data());
  } else {
    write_pnm(path, width, height, channels, bit_depth, samples.data());
  }
}

}  // namespace

RgbImage read_rgb(const std::filesystem::path& path) {
  RawImage raw = read_raw(path);
  if (raw.channels != 3 || raw.bit_depth != 8) {
    unreadable(path, "expected 8-bit RGB");
  }
  RgbImage img(raw.width, raw.height, 3);
  auto out = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(raw.samples[i]);
  }
  return img;
}

Image<std::uint16_t> read_gray16(const std::filesystem::path& path) {
  RawImage raw = read_raw(path);
  if (raw.channels != 1) unreadable(path, "expected a single-channel image");
  Image<std::uint16_t> img(raw.width, raw.height, 1);
  std::copy(raw.samples.begin(), raw.samples.end(), img.data().begin());
  return img;
}

LabelImage read_labels(const std::filesystem::path& path) {
  RawImage raw = read_raw(path);
  if (raw.channels != 1 || raw.bit_depth != 8) {
    unreadable(path, "expected an 8-bit single-channel label image");
  }
  LabelImage img(raw.width, raw.height, 1);
  auto out = img.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(raw.samples[i]);
  }
  return img;
}

void write_rgb(const std::filesystem::path& path, const RgbImage& image) {
  std::vector<std::uint16_t> s(image.data().begin(), image.data().end());
  write_raw(path, image.width(), image.height(), 3, 8, s);
}

void write_gray16(const std::filesystem::path& path,
                  const Image<std::uint16_t>& image) {
  std::vector<std::uint16_t> s(image.data().begin(), image.data().end());
  write_raw(path, image.width(), image.height(), 1, 16, s);
}

void write_gray8(const std::filesystem::path& path,
                 const Image<std::uint8_t>& image) {
  std::vector<std::uint16_t> s(image.data().begin(), image.data().end());
  write_raw(path, image.width(), image.height(), 1, 8, s);
}

}  // namespace semfusion
