#include "boclab/error.hpp"
#include "boclab/matrix_io.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <fstream>
#include <limits>

using namespace boclab;

namespace {

Matrix awkward_matrix() {
  Matrix m(3, 2);
  m << 1.0 / 3.0, -2.5e-300, 1e300, std::numeric_limits<double>::denorm_min(), -0.0, 123456789.123456789;
  return m;
}

}  // namespace

TEST_CASE("bocm round trip is exact") {
  TempDir tmp;
  const Matrix m = awkward_matrix();
  io::write_bocm(tmp / "m.bocm", m);
  const Matrix back = io::read_bocm(tmp / "m.bocm");
  REQUIRE(back.rows() == 3);
  REQUIRE(back.cols() == 2);
  CHECK(back == m);
  CHECK(io::decode_bocm(io::encode_bocm(m)) == m);
}

TEST_CASE("bocm header is little-endian") {
  const std::string bytes = io::encode_bocm(Matrix::Zero(2, 5));
  REQUIRE(bytes.size() == 16 + 10 * 8);
  CHECK(bytes.substr(0, 4) == "BOCM");
  CHECK(static_cast<unsigned char>(bytes[4]) == io::kBocmVersion);
  CHECK(static_cast<unsigned char>(bytes[8]) == 2);
  CHECK(static_cast<unsigned char>(bytes[12]) == 5);
}

TEST_CASE("bocm rejects corrupt data") {
  CHECK_THROWS_AS(io::decode_bocm("XXXX"), InputError);
  std::string bytes = io::encode_bocm(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(io::decode_bocm(bytes.substr(0, bytes.size() - 1)), InputError);
  bytes[0] = 'X';
  CHECK_THROWS_AS(io::decode_bocm(bytes), InputError);
}

TEST_CASE("matrix csv round trip is exact") {
  TempDir tmp;
  const Matrix m = awkward_matrix();
  io::write_matrix(tmp / "m.csv", m);
  CHECK(io::read_matrix(tmp / "m.csv") == m);
  io::write_matrix(tmp / "m.bin", m);
  CHECK(io::read_matrix(tmp / "m.bin") == m);
}

TEST_CASE("matrix csv validates shape") {
  TempDir tmp;
  std::ofstream(tmp / "bad.csv") << "rows,cols\n2,2\n1,2\n3\n";
  CHECK_THROWS_AS(io::read_matrix_csv(tmp / "bad.csv"), InputError);
  std::ofstream(tmp / "short.csv") << "rows,cols\n3,1\n1\n2\n";
  CHECK_THROWS_AS(io::read_matrix_csv(tmp / "short.csv"), InputError);
  CHECK_THROWS_AS(io::read_matrix(tmp / "missing.bocm"), InputError);
}

TEST_CASE("labels csv") {
  TempDir tmp;
  Vector y(4);
  y << 1, -1, -1, 1;
  io::write_labels_csv(tmp / "y.csv", y);
  CHECK(io::read_labels_csv(tmp / "y.csv") == y);
  std::ofstream(tmp / "bad.csv") << "label\n1\n0\n";
  CHECK_THROWS_AS(io::read_labels_csv(tmp / "bad.csv"), InputError);
}

TEST_CASE("tables") {
  TempDir tmp;
  io::Table t{{"a", "b"}, {{1.0, 0.1}, {-2.0, 1e-17}}};
  io::write_table(tmp / "t.csv", t);
  const io::Table back = io::read_table(tmp / "t.csv");
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.column("b") == 1);
  CHECK_THROWS_AS(back.column("c"), InputError);
  CHECK(io::read_file(tmp / "t.csv").substr(0, 4) == "a,b\n");
}

TEST_CASE("format_double round trips") {
  for (double v : {0.1, 1.0 / 3.0, -1e-300, 6.02214076e23, 2.0}) {
    CHECK(std::stod(io::format_double(v)) == v);
  }
  CHECK(io::format_double(2.0) == "2");
}

TEST_CASE("atomic write leaves no temporary files") {
  TempDir tmp;
  io::write_file_atomic(tmp / "x.txt", "hello");
  io::write_file_atomic(tmp / "x.txt", "world");
  CHECK(io::read_file(tmp / "x.txt") == "world");
  int count = 0;
  for (const auto& e : std::filesystem::directory_iterator(tmp.path)) {
    (void)e;
    ++count;
  }
  CHECK(count == 1);
}
