#pragma once

// Compressed-row sparse matrices: assembly from coordinate triplets with
// duplicate summation, products needed by the Galerkin coarse-operator
// construction, and Matrix Market export.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hexpde {

struct Triplet {
  std::int32_t row;
  std::int32_t col;
  double value;
};

struct SparseMatrix {
  std::int32_t rows = 0;
  std::int32_t cols = 0;
  std::vector<std::int64_t> row_offsets;   // size rows+1
  std::vector<std::int32_t> col_indices;
  std::vector<double> values;

  std::int32_t n() const { return rows; }
  std::int64_t nnz() const { return static_cast<std::int64_t>(values.size()); }

  std::span<const std::int32_t> row_cols(std::int32_t i) const {
    return {col_indices.data() + row_offsets[i],
            col_indices.data() + row_offsets[i + 1]};
  }
  std::span<const double> row_values(std::int32_t i) const {
    return {values.data() + row_offsets[i],
            values.data() + row_offsets[i + 1]};
  }

  double at(std::int32_t i, std::int32_t j) const {
    for (std::int64_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
      if (col_indices[k] == j) return values[k];
    return 0.0;
  }

  void multiply(std::span<const double> x, std::span<double> y) const {
    if (static_cast<std::int32_t>(x.size()) != cols ||
        static_cast<std::int32_t>(y.size()) != rows)
      throw std::invalid_argument("SparseMatrix::multiply: size mismatch");
    for (std::int32_t i = 0; i < rows; ++i) {
      double s = 0.0;
      for (std::int64_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
        s += values[k] * x[col_indices[k]];
      y[i] = s;
    }
  }

  std::vector<double> multiply(std::span<const double> x) const {
    std::vector<double> y(rows);
    multiply(x, y);
    return y;
  }

  // y = A^T x (no explicit transpose needed)
  std::vector<double> multiply_transpose(std::span<const double> x) const {
    if (static_cast<std::int32_t>(x.size()) != rows)
      throw std::invalid_argument("multiply_transpose: size mismatch");
    std::vector<double> y(cols, 0.0);
    for (std::int32_t i = 0; i < rows; ++i)
      for (std::int64_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k)
        y[col_indices[k]] += values[k] * x[i];
    return y;
  }

  bool is_symmetric(double tol) const {
    if (rows != cols) return false;
    for (std::int32_t i = 0; i < rows; ++i)
      for (std::int64_t k = row_offsets[i]; k < row_offsets[i + 1]; ++k) {
        const std::int32_t j = col_indices[k];
        if (j < i) continue;
        if (std::abs(values[k] - at(j, i)) > tol) return false;
      }
    return true;
  }
};

// Builds CSR from triplets, summing duplicates. Entries that cancel to an
// exact 0.0 are pruned when prune_zeros is set (assembly finalization).
inline SparseMatrix from_triplets(std::int32_t rows, std::int32_t cols,
                                  std::vector<Triplet>& triplets,
                                  bool prune_zeros = true) {
  std::sort(triplets.begin(), triplets.end(),
            [](const Triplet& a, const Triplet& b) {
              return a.row != b.row ? a.row < b.row : a.col < b.col;
            });
  SparseMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.row_offsets.assign(rows + 1, 0);
  m.col_indices.reserve(triplets.size());
  m.values.reserve(triplets.size());
  std::size_t i = 0;
  while (i < triplets.size()) {
    const std::int32_t r = triplets[i].row, c = triplets[i].col;
    double v = 0.0;
    for (; i < triplets.size() && triplets[i].row == r && triplets[i].col == c;
         ++i)
      v += triplets[i].value;
    if (prune_zeros && v == 0.0) continue;
    m.col_indices.push_back(c);
    m.values.push_back(v);
    ++m.row_offsets[r + 1];
  }
  std::partial_sum(m.row_offsets.begin(), m.row_offsets.end(),
                   m.row_offsets.begin());
  return m;
}

inline SparseMatrix transpose(const SparseMatrix& a) {
  SparseMatrix t;
  t.rows = a.cols;
  t.cols = a.rows;
  t.row_offsets.assign(t.rows + 1, 0);
  for (std::int32_t c : a.col_indices) ++t.row_offsets[c + 1];
  std::partial_sum(t.row_offsets.begin(), t.row_offsets.end(),
                   t.row_offsets.begin());
  t.col_indices.resize(a.nnz());
  t.values.resize(a.nnz());
  std::vector<std::int64_t> cursor(t.row_offsets.begin(),
                                   t.row_offsets.end() - 1);
  for (std::int32_t i = 0; i < a.rows; ++i)
    for (std::int64_t k = a.row_offsets[i]; k < a.row_offsets[i + 1]; ++k) {
      const std::int64_t p = cursor[a.col_indices[k]]++;
      t.col_indices[p] = i;
      t.values[p] = a.values[k];
    }
  return t;
}

// C = A * B via row-wise sparse accumulation; column order within each row
// is sorted for deterministic storage.
inline SparseMatrix multiply(const SparseMatrix& a, const SparseMatrix& b) {
  if (a.cols != b.rows)
    throw std::invalid_argument("sparse multiply: inner dimension mismatch");
  SparseMatrix c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.row_offsets.assign(a.rows + 1, 0);
  std::vector<double> accum(b.cols, 0.0);
  std::vector<std::int32_t> marker(b.cols, -1);
  std::vector<std::int32_t> touched;
  for (std::int32_t i = 0; i < a.rows; ++i) {
    touched.clear();
    for (std::int64_t ka = a.row_offsets[i]; ka < a.row_offsets[i + 1]; ++ka) {
      const std::int32_t j = a.col_indices[ka];
      const double va = a.values[ka];
      for (std::int64_t kb = b.row_offsets[j]; kb < b.row_offsets[j + 1];
           ++kb) {
        const std::int32_t col = b.col_indices[kb];
        if (marker[col] != i) {
          marker[col] = i;
          accum[col] = 0.0;
          touched.push_back(col);
        }
        accum[col] += va * b.values[kb];
      }
    }
    std::sort(touched.begin(), touched.end());
    for (std::int32_t col : touched) {
      if (accum[col] == 0.0) continue;
      c.col_indices.push_back(col);
      c.values.push_back(accum[col]);
    }
    c.row_offsets[i + 1] = static_cast<std::int64_t>(c.col_indices.size());
  }
  return c;
}

inline SparseMatrix identity(std::int32_t n) {
  SparseMatrix m;
  m.rows = m.cols = n;
  m.row_offsets.resize(n + 1);
  m.col_indices.resize(n);
  m.values.assign(n, 1.0);
  for (std::int32_t i = 0; i <= n; ++i) m.row_offsets[i] = i;
  std::iota(m.col_indices.begin(), m.col_indices.end(), 0);
  return m;
}

// Matrix Market coordinate export; symmetric variant stores the lower
// triangle only.
inline void write_matrix_market(const SparseMatrix& m, const std::string& path,
                                bool symmetric = true) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "%%MatrixMarket matrix coordinate real "
      << (symmetric ? "symmetric" : "general") << "\n";
  std::int64_t count = 0;
  if (symmetric) {
    for (std::int32_t i = 0; i < m.rows; ++i)
      for (std::int64_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k)
        if (m.col_indices[k] <= i) ++count;
  } else {
    count = m.nnz();
  }
  out << m.rows << " " << m.cols << " " << count << "\n";
  out.precision(16);
  for (std::int32_t i = 0; i < m.rows; ++i)
    for (std::int64_t k = m.row_offsets[i]; k < m.row_offsets[i + 1]; ++k) {
      const std::int32_t j = m.col_indices[k];
      if (symmetric && j > i) continue;
      out << i + 1 << " " << j + 1 << " " << m.values[k] << "\n";
    }
}

}  // namespace hexpde
