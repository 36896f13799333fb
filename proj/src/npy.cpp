// src/npy.cpp

// Copyright 2026  The voiceprobe Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "voiceprobe/npy.hpp"

#include <cmath>
#include <cstring>
#include <regex>

#include "voiceprobe/csv.hpp"

namespace voiceprobe {

namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

std::uint32_t read_le(const std::string& bytes, std::size_t offset, std::size_t width) {
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < width; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  return v;
}

struct Header {
  int element_size = 0;
  std::vector<long long> shape;
};

Header parse_header(const std::string& dict, const std::string& source) {
  Header h;
  std::smatch m;
  static const std::regex descr_re(R"('descr'\s*:\s*'([^']*)')");
  static const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
  static const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
  if (!std::regex_search(dict, m, descr_re)) throw DataError(source, "malformed header: no descr");
  std::string descr = m[1];
  if (descr == "<f8" || descr == "=f8" || descr == "f8")
    h.element_size = 8;
  else if (descr == "<f4" || descr == "=f4" || descr == "f4")
    h.element_size = 4;
  else
    throw DataError(source, "unsupported element type '" + descr + "'");
  if (!std::regex_search(dict, m, order_re)) throw DataError(source, "malformed header: no fortran_order");
  if (m[1] == "True") throw DataError(source, "unsupported Fortran-order array");
  if (!std::regex_search(dict, m, shape_re)) throw DataError(source, "malformed header: no shape");
  std::string dims = m[1];
  static const std::regex int_re(R"(\d+)");
  for (auto it = std::sregex_iterator(dims.begin(), dims.end(), int_re); it != std::sregex_iterator(); ++it)
    h.shape.push_back(std::stoll(it->str()));
  if (h.shape.empty()) throw DataError(source, "unsupported 0-d array");
  if (h.shape.size() > 2) throw DataError(source, "unsupported array rank " + std::to_string(h.shape.size()));
  return h;
}

}  // namespace

Matrix parse_npy(const std::string& bytes, const std::string& source) {
  if (bytes.size() < kMagicLen + 4 || std::memcmp(bytes.data(), kMagic, kMagicLen) != 0)
    throw DataError(source, "malformed header: bad magic");
  int major = static_cast<unsigned char>(bytes[6]);
  std::size_t len_width = major == 1 ? 2 : 4;
  if (major < 1 || major > 3) throw DataError(source, "unsupported format version " + std::to_string(major));
  std::size_t header_start = 8 + len_width;
  if (bytes.size() < header_start) throw DataError(source, "malformed header: truncated");
  std::size_t header_len = read_le(bytes, 8, len_width);
  if (bytes.size() < header_start + header_len) throw DataError(source, "malformed header: truncated");
  Header h = parse_header(bytes.substr(header_start, header_len), source);

  long long rows = h.shape.size() == 1 ? 1 : h.shape[0];
  long long cols = h.shape.back();
  if (rows < 1 || cols < 1) throw DataError(source, "empty array");
  std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  std::size_t data_start = header_start + header_len;
  if (bytes.size() - data_start < count * h.element_size)
    throw DataError(source, "truncated data: expected " + std::to_string(count) + " elements");

  Matrix out(rows, cols);
  const char* p = bytes.data() + data_start;
  for (long long r = 0; r < rows; ++r) {
    for (long long c = 0; c < cols; ++c) {
      double v;
      if (h.element_size == 8) {
        std::memcpy(&v, p, 8);
        p += 8;
      } else {
        float f;
        std::memcpy(&f, p, 4);
        p += 4;
        v = f;
      }
      if (!std::isfinite(v))
        throw DataError(source, "non-finite value at (" + std::to_string(r) + ", " + std::to_string(c) + ")");
      out(r, c) = v;
    }
  }
  return out;
}

Matrix read_npy(const std::string& path) { return parse_npy(read_text_file(path), path); }

std::string encode_npy(const Matrix& m, bool as_vector) {
  std::string shape = (as_vector && m.rows() == 1)
                          ? "(" + std::to_string(m.cols()) + ",)"
                          : "(" + std::to_string(m.rows()) + ", " + std::to_string(m.cols()) + ")";
  std::string dict = "{'descr': '<f8', 'fortran_order': False, 'shape': " + shape + ", }";
  std::size_t total = kMagicLen + 2 + 2 + dict.size() + 1;
  std::size_t pad = (64 - total % 64) % 64;
  dict.append(pad, ' ');
  dict.push_back('\n');
  std::string out(kMagic, kMagicLen);
  out.push_back('\x01');
  out.push_back('\x00');
  out.push_back(static_cast<char>(dict.size() & 0xff));
  out.push_back(static_cast<char>((dict.size() >> 8) & 0xff));
  out += dict;
  out.reserve(out.size() + 8 * m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double v = m(r, c);
      char buf[8];
      std::memcpy(buf, &v, 8);
      out.append(buf, 8);
    }
  return out;
}

void write_npy(const std::string& path, const Matrix& m, bool as_vector) {
  write_file_atomic(path, encode_npy(m, as_vector));
}

}  // namespace voiceprobe
