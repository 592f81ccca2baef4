/*
 * (C) Copyright 2026 The hmcda authors.
 *
 * This software is licensed under the terms of the Apache Licence Version 2.0
 * which can be obtained at http://www.apache.org/licenses/LICENSE-2.0.
 */

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "hmcda/state.hpp"

namespace hmcda {

/// Binary matrix container: 8-byte magic, rows and cols as little-endian
/// uint64, then rows*cols little-endian float64 values in row-major order.
inline constexpr std::array<char, 8> kMatrixMagic = {'H', 'M', 'C', 'D', 'A', 'M', 'A', 'T'};

void write_matrix_binary(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_binary(const std::filesystem::path& path);
std::string encode_matrix_binary(const Matrix& m);
Matrix decode_matrix_binary(const std::string& bytes);

/// Shortest decimal with 17 significant digits; round-trips every double.
std::string format_double(double value);

/// Plain CSV with an optional header row.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m, const std::vector<std::string>& header = {});
Matrix read_matrix_csv(const std::filesystem::path& path, bool has_header);

/// Trajectory CSV: one row per time, `time` column followed by x_0..x_{n-1}.
void write_trajectory_csv(const std::filesystem::path& path, const std::vector<double>& times,
                          const std::vector<StateVector>& states);

}  // namespace hmcda
