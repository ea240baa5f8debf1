#include "boclab/matrix_io.hpp"

#include "boclab/error.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

namespace boclab::io {
namespace {

static_assert(std::numeric_limits<double>::is_iec559, "BOCM requires IEEE-754 doubles");

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}

std::uint64_t get_le(const std::string& in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + i])) << (8 * i);
  }
  return v;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return s.substr(i);
}

double parse_double(const std::string& field, const std::filesystem::path& path, std::size_t line) {
  const std::string s = strip(field);
  if (s == "nan" || s == "NaN") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    std::ostringstream msg;
    msg << path.string() << ":" << line << ": cannot parse '" << s << "' as a number";
    throw InputError(msg.str());
  }
  return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    line = strip(line);
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

}  // namespace

std::string encode_bocm(const Matrix& m) {
  std::string out = "BOCM";
  out.reserve(16 + 8 * static_cast<std::size_t>(m.size()));
  put_u32(out, kBocmVersion);
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64(out, m(i, j));
  }
  return out;
}

Matrix decode_bocm(const std::string& bytes) {
  if (bytes.size() < 16 || bytes.compare(0, 4, "BOCM") != 0) {
    throw InputError("not a BOCM matrix (bad magic)");
  }
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kBocmVersion) {
    throw InputError("unsupported BOCM version " + std::to_string(version));
  }
  const auto rows = get_le(bytes, 8, 4);
  const auto cols = get_le(bytes, 12, 4);
  if (bytes.size() != 16 + 8 * rows * cols) {
    throw InputError("BOCM payload size does not match the header");
  }
  Matrix m(rows, cols);
  std::size_t offset = 16;
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j, offset += 8) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::bit_cast<double>(get_le(bytes, offset, 8));
    }
  }
  return m;
}

void write_bocm(const std::filesystem::path& path, const Matrix& m) {
  write_file_atomic(path, encode_bocm(m));
}

Matrix read_bocm(const std::filesystem::path& path) { return decode_bocm(read_file(path)); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  if (ec != std::errc()) throw InvariantError("format_double: buffer too small");
  return std::string(buf, ptr);
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& m) {
  std::string out = "rows,cols\n" + std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out += ',';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2 || strip(lines[0]) != "rows,cols") {
    throw InputError(path.string() + ": matrix CSV must start with a 'rows,cols' header");
  }
  const auto dims = split_line(lines[1]);
  if (dims.size() != 2) throw InputError(path.string() + ": malformed dimension line");
  const auto rows = static_cast<Eigen::Index>(parse_double(dims[0], path, 2));
  const auto cols = static_cast<Eigen::Index>(parse_double(dims[1], path, 2));
  if (rows < 0 || cols < 0 || static_cast<Eigen::Index>(lines.size()) != rows + 2) {
    throw InputError(path.string() + ": row count does not match the header");
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto fields = split_line(lines[static_cast<std::size_t>(i) + 2]);
    if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw InputError(path.string() + ": wrong number of columns on row " + std::to_string(i));
    }
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = parse_double(fields[static_cast<std::size_t>(j)], path, static_cast<std::size_t>(i) + 3);
    }
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const Matrix& m) {
  if (path.extension() == ".csv") {
    write_matrix_csv(path, m);
  } else {
    write_bocm(path, m);
  }
}

Matrix read_matrix(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? read_matrix_csv(path) : read_bocm(path);
}

void write_labels_csv(const std::filesystem::path& path, const Vector& labels) {
  std::string out = "label\n";
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    out += labels[i] > 0 ? "1\n" : "-1\n";
  }
  write_file_atomic(path, out);
}

Vector read_labels_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || strip(lines[0]) != "label") {
    throw InputError(path.string() + ": labels CSV must start with a 'label' header");
  }
  Vector y(static_cast<Eigen::Index>(lines.size() - 1));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const double v = parse_double(lines[i], path, i + 1);
    if (v != 1.0 && v != -1.0) throw InputError(path.string() + ": labels must be -1 or 1");
    y[static_cast<Eigen::Index>(i - 1)] = v;
  }
  return y;
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw InputError("CSV has no column '" + name + "'");
}

void write_table(const std::filesystem::path& path, const Table& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size()) throw InvariantError("table row width mismatch");
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

Table read_table(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw InputError(path.string() + ": empty CSV");
  Table t;
  for (auto& h : split_line(lines[0])) t.header.push_back(strip(h));
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto fields = split_line(lines[i]);
    if (fields.size() != t.header.size()) {
      throw InputError(path.string() + ":" + std::to_string(i + 1) + ": expected " +
                       std::to_string(t.header.size()) + " fields");
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_double(f, path, i + 1));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace boclab::io
