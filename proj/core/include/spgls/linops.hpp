#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "spgls/types.hpp"

namespace spgls {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

/// Row-compressed sparse matrix. Columns within a row are strictly
/// increasing; duplicate (row, col) pairs are rejected at construction.
class SparseMatrix {
 public:
  SparseMatrix() : row_ptr_(1, 0) {}

  static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                    std::vector<Triplet> entries);
  static SparseMatrix from_csr(std::size_t rows, std::size_t cols,
                               std::vector<std::size_t> row_ptr,
                               std::vector<std::size_t> col_idx,
                               std::vector<double> values);
  /// Stores every nonzero of `dense`; exact zeros are dropped.
  static SparseMatrix from_dense(const Matrix& dense);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t nnz() const noexcept { return values_.size(); }

  std::span<const std::size_t> row_ptr() const noexcept { return row_ptr_; }
  std::span<const std::size_t> col_idx() const noexcept { return col_idx_; }
  std::span<const double> values() const noexcept { return values_; }

  std::span<const std::size_t> row_cols(std::size_t i) const {
    return {col_idx_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }
  std::span<const double> row_values(std::size_t i) const {
    return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
  }

  /// out = scale * A x
  void multiply(ConstVectorRef x, VectorRef out, double scale = 1.0) const;
  /// out += scale * A^T u, as a scatter pass over the rows.
  void multiply_transpose_add(ConstVectorRef u, VectorRef out,
                              double scale = 1.0) const;

  Matrix to_dense() const;

  bool all_finite() const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_idx_;
  std::vector<double> values_;
};

/// Instrumentation shared by all copies of an operator. Relaxed atomics, so a
/// single operator can be used from several threads.
struct OperatorCounters {
  std::atomic<std::uint64_t> applies{0};
  std::atomic<std::uint64_t> transpose_applies{0};
  std::atomic<std::uint64_t> hessian_applies{0};
  std::atomic<std::uint64_t> entries_touched{0};

  void reset() noexcept {
    applies = 0;
    transpose_applies = 0;
    hessian_applies = 0;
    entries_touched = 0;
  }
};

/// The m x (n+1) operator [ (sqrt(gamma)/2) X | z/2 ], never materialized.
/// H = L^T L is only available through hessian_apply.
class ScaledAugmentedOperator {
 public:
  ScaledAugmentedOperator(std::shared_ptr<const SparseMatrix> base, Vector column,
                          double gamma);

  std::size_t rows() const noexcept { return base_->rows(); }
  std::size_t cols() const noexcept { return base_->cols() + 1; }

  const SparseMatrix& base() const noexcept { return *base_; }
  const Vector& column() const noexcept { return column_; }
  double gamma() const noexcept { return gamma_; }
  double scale() const noexcept { return scale_; }
  static constexpr double column_scale() noexcept { return 0.5; }

  void apply(ConstVectorRef r, VectorRef out) const;
  Vector apply(ConstVectorRef r) const;

  void apply_transpose(ConstVectorRef u, VectorRef out) const;
  Vector apply_transpose(ConstVectorRef u) const;

  /// out = L^T (L r). `scratch` must have length rows().
  void hessian_apply(ConstVectorRef r, VectorRef out, VectorRef scratch) const;
  Vector hessian_apply(ConstVectorRef r) const;

  /// Dense copy of L, for oracles and tests only.
  Matrix to_dense() const;

  const OperatorCounters& counters() const noexcept { return *counters_; }
  void reset_counters() const noexcept { counters_->reset(); }

 private:
  std::shared_ptr<const SparseMatrix> base_;
  Vector column_;
  double gamma_;
  double scale_;
  std::shared_ptr<OperatorCounters> counters_;
};

}  // namespace spgls
