#pragma once

// Binary matrix blocks: "RMAT" magic, uint32 rows, uint32 cols (little
// endian), then row-major float32 payload. Used for precomputed embedding
// files and for the tensors inside model checkpoints.

#include <Eigen/Core>
#include <cstdint>
#include <fstream>
#include <string>

#include "reintel/common.hpp"

namespace reintel {

using Mat = Eigen::MatrixXd;

inline void write_matrix_block(std::ostream& out, const Mat& m) {
  out.write("RMAT", 4);
  std::uint32_t rows = static_cast<std::uint32_t>(m.rows());
  std::uint32_t cols = static_cast<std::uint32_t>(m.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      float v = static_cast<float>(m(r, c));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  if (!out) throw Error("matrix block write failed");
}

inline Mat read_matrix_block(std::istream& in) {
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "RMAT")
    throw Error("matrix block: bad magic (expected RMAT)");
  std::uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in) throw Error("matrix block: truncated header");
  Mat m(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r)
    for (std::uint32_t c = 0; c < cols; ++c) {
      float v;
      in.read(reinterpret_cast<char*>(&v), 4);
      if (!in) throw Error("matrix block: truncated payload");
      m(r, c) = static_cast<double>(v);
    }
  return m;
}

inline void write_matrix_file(const std::string& path, const Mat& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write matrix file: " + path);
  write_matrix_block(out, m);
}

inline Mat read_matrix_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open matrix file: " + path);
  return read_matrix_block(in);
}

}  // namespace reintel
