#pragma once

// Minimal image support: binary PGM/PPM load & save, bilinear resize, and
// the all-zero blank image used for posts without pictures. Pixel values are
// kept normalized in [0,1].

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "reintel/common.hpp"

namespace reintel {

struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> data;  // (y, x, c) row-major, values in [0,1]

  double& at(int y, int x, int c) {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool empty() const { return data.empty(); }
};

inline Image blank_image(int height, int width, int channels = 1) {
  Image img;
  img.height = height;
  img.width = width;
  img.channels = channels;
  img.data.assign(static_cast<std::size_t>(height) * width * channels, 0.0);
  return img;
}

namespace detail {
inline int read_pnm_int(std::istream& in) {
  int c = in.get();
  while (c == '#' || std::isspace(c)) {
    if (c == '#')
      while (c != '\n' && c != EOF) c = in.get();
    c = in.get();
  }
  int v = 0;
  bool got = false;
  while (c >= '0' && c <= '9') {
    v = v * 10 + (c - '0');
    got = true;
    c = in.get();
  }
  if (!got) throw Error("pnm: malformed header");
  return v;
}
}  // namespace detail

// P5 (grayscale) and P6 (RGB), 8-bit only.
inline Image load_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open image: " + path);
  char m0 = static_cast<char>(in.get()), m1 = static_cast<char>(in.get());
  int channels;
  if (m0 == 'P' && m1 == '5') channels = 1;
  else if (m0 == 'P' && m1 == '6') channels = 3;
  else throw Error("unsupported image format (want P5/P6 PNM): " + path);
  int width = detail::read_pnm_int(in);
  int height = detail::read_pnm_int(in);
  int maxval = detail::read_pnm_int(in);
  if (maxval <= 0 || maxval > 255) throw Error("pnm: unsupported maxval: " + path);
  Image img = blank_image(height, width, channels);
  std::vector<unsigned char> buf(static_cast<std::size_t>(width) * height * channels);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size()))
    throw Error("pnm: truncated pixel data: " + path);
  for (std::size_t i = 0; i < buf.size(); ++i)
    img.data[i] = static_cast<double>(buf[i]) / static_cast<double>(maxval);
  return img;
}

inline void save_pnm(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw Error("save_pnm: channels must be 1 or 3");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write image: " + path);
  out << (img.channels == 1 ? "P5" : "P6") << "\n"
      << img.width << " " << img.height << "\n255\n";
  for (double v : img.data) {
    double clamped = std::min(1.0, std::max(0.0, v));
    out.put(static_cast<char>(std::lround(clamped * 255.0)));
  }
  if (!out) throw Error("image write failed: " + path);
}

inline Image resize_bilinear(const Image& src, int height, int width) {
  if (src.empty()) return blank_image(height, width, std::max(1, src.channels));
  Image dst = blank_image(height, width, src.channels);
  for (int y = 0; y < height; ++y) {
    double sy = height > 1 ? static_cast<double>(y) * (src.height - 1) / (height - 1) : 0;
    int y0 = static_cast<int>(std::floor(sy));
    int y1 = std::min(y0 + 1, src.height - 1);
    double fy = sy - y0;
    for (int x = 0; x < width; ++x) {
      double sx = width > 1 ? static_cast<double>(x) * (src.width - 1) / (width - 1) : 0;
      int x0 = static_cast<int>(std::floor(sx));
      int x1 = std::min(x0 + 1, src.width - 1);
      double fx = sx - x0;
      for (int c = 0; c < src.channels; ++c) {
        double top = src.at(y0, x0, c) * (1 - fx) + src.at(y0, x1, c) * fx;
        double bot = src.at(y1, x0, c) * (1 - fx) + src.at(y1, x1, c) * fx;
        dst.at(y, x, c) = top * (1 - fy) + bot * fy;
      }
    }
  }
  return dst;
}

// Channel adaptation: gray -> replicate, RGB -> luma.
inline Image to_channels(const Image& src, int channels) {
  if (src.channels == channels) return src;
  Image dst = blank_image(src.height, src.width, channels);
  for (int y = 0; y < src.height; ++y)
    for (int x = 0; x < src.width; ++x) {
      double gray = 0;
      if (src.channels == 3)
        gray = 0.299 * src.at(y, x, 0) + 0.587 * src.at(y, x, 1) +
               0.114 * src.at(y, x, 2);
      else
        gray = src.at(y, x, 0);
      if (channels == 3 && src.channels == 3) {
        for (int c = 0; c < 3; ++c) dst.at(y, x, c) = src.at(y, x, c);
      } else {
        for (int c = 0; c < channels; ++c) dst.at(y, x, c) = gray;
      }
    }
  return dst;
}

}  // namespace reintel
