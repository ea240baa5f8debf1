#pragma once

#include "boclab/linalg.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace boclab::io {

// BOCM layout: "BOCM", u32 version, u32 rows, u32 cols, then rows*cols
// row-major float64 values. All integers and floats are little-endian.
inline constexpr std::uint32_t kBocmVersion = 1;

void write_bocm(const std::filesystem::path& path, const Matrix& m);
Matrix read_bocm(const std::filesystem::path& path);

std::string encode_bocm(const Matrix& m);
Matrix decode_bocm(const std::string& bytes);

// Matrix CSV: first line "rows,cols", then one line per row. Values are
// written with 17 significant digits so the text round-trips exactly.
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix_csv(const std::filesystem::path& path);

// Dispatch on extension: ".csv" uses CSV, anything else BOCM.
void write_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix read_matrix(const std::filesystem::path& path);

// Labels file: header "label", one integer in {-1, +1} per line.
void write_labels_csv(const std::filesystem::path& path, const Vector& labels);
Vector read_labels_csv(const std::filesystem::path& path);

// Text helpers shared by the CSV writers.
std::string format_double(double v);

// Tabular CSV with a header row. Every data row must have header.size() fields.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws InputError
};

void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(const std::filesystem::path& path);

// Writes through a temporary file in the same directory and renames it.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace boclab::io
