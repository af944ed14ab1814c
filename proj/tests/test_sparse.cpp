#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "hexpde/sparse.hpp"

using namespace hexpde;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<std::vector<double>> to_dense(const SparseMatrix& m) {
  std::vector<std::vector<double>> d(m.rows, std::vector<double>(m.cols, 0.0));
  for (std::int32_t i = 0; i < m.rows; ++i)
    for (std::int64_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
      d[i][m.col_indices[k]] += m.values[k];
  return d;
}

SparseMatrix random_sparse(std::int32_t rows, std::int32_t cols, double fill,
                           std::mt19937& rng) {
  std::uniform_real_distribution<double> value(-2.0, 2.0);
  std::uniform_real_distribution<double> pick(0.0, 1.0);
  std::vector<Triplet> triplets;
  for (std::int32_t i = 0; i < rows; ++i)
    for (std::int32_t j = 0; j < cols; ++j)
      if (pick(rng) < fill) triplets.push_back({i, j, value(rng)});
  return from_triplets(rows, cols, triplets);
}

}  // namespace

TEST_CASE("from_triplets sums duplicates and prunes exact zeros") {
  std::vector<Triplet> t = {{0, 1, 2.0}, {0, 1, 3.0}, {1, 0, 1.0},
                            {1, 0, -1.0}, {2, 2, 4.0}};
  const SparseMatrix m = from_triplets(3, 3, t);
  REQUIRE(m.nnz() == 2);  // the (1,0) pair cancelled exactly
  REQUIRE_THAT(m.at(0, 1), WithinAbs(5.0, 1e-15));
  REQUIRE_THAT(m.at(2, 2), WithinAbs(4.0, 1e-15));
  REQUIRE_THAT(m.at(1, 0), WithinAbs(0.0, 1e-15));

  std::vector<Triplet> t2 = {{0, 1, 2.0}, {0, 1, -2.0}};
  const SparseMatrix kept = from_triplets(2, 2, t2, /*prune_zeros=*/false);
  REQUIRE(kept.nnz() == 1);
}

TEST_CASE("matvec, transpose and product agree with dense arithmetic") {
  std::mt19937 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    const SparseMatrix a = random_sparse(17, 13, 0.3, rng);
    const SparseMatrix b = random_sparse(13, 19, 0.3, rng);
    const auto da = to_dense(a);
    const auto db = to_dense(b);

    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> x(13);
    for (double& v : x) v = dist(rng);
    const std::vector<double> y = a.multiply(x);
    for (std::int32_t i = 0; i < 17; ++i) {
      double expect = 0.0;
      for (std::int32_t j = 0; j < 13; ++j) expect += da[i][j] * x[j];
      REQUIRE_THAT(y[i], WithinAbs(expect, 1e-13));
    }

    const SparseMatrix at = transpose(a);
    REQUIRE(at.rows == 13);
    REQUIRE(at.cols == 17);
    const auto dat = to_dense(at);
    for (std::int32_t i = 0; i < 17; ++i)
      for (std::int32_t j = 0; j < 13; ++j)
        REQUIRE_THAT(dat[j][i], WithinAbs(da[i][j], 0.0));

    std::vector<double> z(17);
    for (double& v : z) v = dist(rng);
    const std::vector<double> aty = a.multiply_transpose(z);
    const std::vector<double> aty2 = at.multiply(z);
    for (std::int32_t j = 0; j < 13; ++j)
      REQUIRE_THAT(aty[j], WithinAbs(aty2[j], 1e-13));

    const SparseMatrix c = multiply(a, b);
    const auto dc = to_dense(c);
    for (std::int32_t i = 0; i < 17; ++i)
      for (std::int32_t j = 0; j < 19; ++j) {
        double expect = 0.0;
        for (std::int32_t k = 0; k < 13; ++k) expect += da[i][k] * db[k][j];
        REQUIRE_THAT(dc[i][j], WithinAbs(expect, 1e-12));
      }
    // rows stay sorted
    for (std::int32_t i = 0; i < c.rows; ++i) {
      const auto cols = c.row_cols(i);
      for (std::size_t k = 1; k < cols.size(); ++k)
        REQUIRE(cols[k - 1] < cols[k]);
    }
  }

  REQUIRE_THROWS_AS(multiply(random_sparse(4, 5, 0.5, rng),
                             random_sparse(4, 5, 0.5, rng)),
                    std::invalid_argument);
  std::vector<double> wrong(7);
  std::vector<double> out(4);
  REQUIRE_THROWS_AS(random_sparse(4, 5, 0.5, rng).multiply(wrong, out),
                    std::invalid_argument);
}

TEST_CASE("identity and symmetry check") {
  const SparseMatrix id = identity(6);
  REQUIRE(id.nnz() == 6);
  REQUIRE(id.is_symmetric(0.0));

  std::vector<Triplet> t = {{0, 1, 2.0}, {1, 0, 2.0 + 1e-9}, {0, 0, 1.0},
                            {1, 1, 1.0}};
  const SparseMatrix m = from_triplets(2, 2, t);
  REQUIRE(m.is_symmetric(1e-8));
  REQUIRE(!m.is_symmetric(1e-12));
}

TEST_CASE("matrix market export writes the symmetric lower triangle") {
  std::vector<Triplet> t = {{0, 0, 2.0},  {1, 1, 2.0},  {2, 2, 2.0},
                            {0, 1, -1.0}, {1, 0, -1.0}, {1, 2, -0.5},
                            {2, 1, -0.5}};
  const SparseMatrix m = from_triplets(3, 3, t);
  const std::string path = "mm_test.mtx";
  write_matrix_market(m, path, true);

  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  REQUIRE(header ==
          "%%MatrixMarket matrix coordinate real symmetric");
  std::int32_t rows, cols;
  std::int64_t count;
  in >> rows >> cols >> count;
  REQUIRE(rows == 3);
  REQUIRE(cols == 3);
  REQUIRE(count == 5);  // 3 diagonal + 2 strictly-lower entries
  double sum = 0.0;
  for (std::int64_t k = 0; k < count; ++k) {
    std::int32_t i, j;
    double v;
    in >> i >> j >> v;
    REQUIRE(i >= j);  // lower triangle, 1-based
    REQUIRE_THAT(v, WithinAbs(m.at(i - 1, j - 1), 0.0));
    sum += v;
  }
  REQUIRE_THAT(sum, WithinAbs(6.0 - 1.5, 1e-15));
  std::remove(path.c_str());
}
