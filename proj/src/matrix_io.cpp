/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#include "hmcda/matrix_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

#include <fmt/format.h>

#include "hmcda/error.hpp"

namespace hmcda {

namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xffU));
}

std::uint64_t get_u64(const std::string& in, std::size_t offset) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(b)])) << (8 * b);
  }
  return v;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  require(out.good(), ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return out;
}

}  // namespace

std::string encode_matrix_binary(const Matrix& m) {
  std::string out(kMatrixMagic.begin(), kMatrixMagic.end());
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.reserve(out.size() + static_cast<std::size_t>(m.size()) * 8);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) put_u64(out, std::bit_cast<std::uint64_t>(m(i, j)));
  }
  return out;
}

Matrix decode_matrix_binary(const std::string& bytes) {
  require(bytes.size() >= 24, ErrorCode::Io, "matrix container truncated");
  require(std::equal(kMatrixMagic.begin(), kMatrixMagic.end(), bytes.begin()), ErrorCode::Io,
          "matrix container has a bad magic header");
  const std::uint64_t rows = get_u64(bytes, 8);
  const std::uint64_t cols = get_u64(bytes, 16);
  require(bytes.size() == 24 + rows * cols * 8, ErrorCode::Io, "matrix container size does not match its dims");
  Matrix m(static_cast<Index>(rows), static_cast<Index>(cols));
  std::size_t offset = 24;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j, offset += 8) m(i, j) = std::bit_cast<double>(get_u64(bytes, offset));
  }
  return m;
}

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m) {
  auto out = open_out(path, std::ios::binary);
  const std::string bytes = encode_matrix_binary(m);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Matrix read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_matrix_binary(bytes);
}

std::string format_double(double value) { return fmt::format("{:.17g}", value); }

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header) {
  auto out = open_out(path);
  if (!header.empty()) out << fmt::format("{}\n", fmt::join(header, ","));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
    out << '\n';
  }
}

Matrix read_matrix_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::Io, "cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  if (has_header) std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    require(rows.empty() || row.size() == rows.front().size(), ErrorCode::Io, "ragged CSV in " + path.string());
    rows.push_back(std::move(row));
  }
  Matrix m(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

void write_trajectory_csv(const std::filesystem::path& path, const std::vector<double>& times,
                          const std::vector<StateVector>& states) {
  require(times.size() == states.size(), ErrorCode::DimensionMismatch, "trajectory times and states differ in length");
  auto out = open_out(path);
  const Index n = states.empty() ? 0 : states.front().size();
  out << "time";
  for (Index i = 0; i < n; ++i) out << ",x" << i;
  out << '\n';
  for (std::size_t k = 0; k < states.size(); ++k) {
    out << format_double(times[k]);
    for (Index i = 0; i < n; ++i) out << ',' << format_double(states[k][i]);
    out << '\n';
  }
}

}  // namespace hmcda
