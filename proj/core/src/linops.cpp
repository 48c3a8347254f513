#include "spgls/linops.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "spgls/errors.hpp"

namespace spgls {

namespace {

void require_length(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    std::ostringstream os;
    os << what << ": dimension mismatch (got " << got << ", expected " << want << ")";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

SparseMatrix SparseMatrix::from_triplets(std::size_t rows, std::size_t cols,
                                         std::vector<Triplet> entries) {
  for (const auto& t : entries) {
    if (t.row >= rows || t.col >= cols) {
      std::ostringstream os;
      os << "sparse entry (" << t.row << ", " << t.col << ") out of range for "
         << rows << "x" << cols << " matrix";
      throw InvalidArgument(os.str());
    }
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });

  std::vector<std::size_t> row_ptr(rows + 1, 0);
  std::vector<std::size_t> col_idx;
  std::vector<double> values;
  col_idx.reserve(entries.size());
  values.reserve(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& t = entries[k];
    if (k > 0 && entries[k - 1].row == t.row && entries[k - 1].col == t.col) {
      std::ostringstream os;
      os << "duplicate sparse entry at (" << t.row << ", " << t.col << ")";
      throw InvalidArgument(os.str());
    }
    ++row_ptr[t.row + 1];
    col_idx.push_back(t.col);
    values.push_back(t.value);
  }
  for (std::size_t i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];

  SparseMatrix a;
  a.rows_ = rows;
  a.cols_ = cols;
  a.row_ptr_ = std::move(row_ptr);
  a.col_idx_ = std::move(col_idx);
  a.values_ = std::move(values);
  return a;
}

SparseMatrix SparseMatrix::from_csr(std::size_t rows, std::size_t cols,
                                    std::vector<std::size_t> row_ptr,
                                    std::vector<std::size_t> col_idx,
                                    std::vector<double> values) {
  if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 ||
      row_ptr.back() != col_idx.size() || col_idx.size() != values.size()) {
    throw InvalidArgument("malformed CSR arrays");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    if (row_ptr[i] > row_ptr[i + 1]) throw InvalidArgument("CSR row pointers must be non-decreasing");
    for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
      if (col_idx[k] >= cols) throw InvalidArgument("CSR column index out of range");
      if (k > row_ptr[i] && col_idx[k] <= col_idx[k - 1]) {
        std::ostringstream os;
        os << "CSR columns must be strictly increasing within row " << i;
        throw InvalidArgument(os.str());
      }
    }
  }
  SparseMatrix a;
  a.rows_ = rows;
  a.cols_ = cols;
  a.row_ptr_ = std::move(row_ptr);
  a.col_idx_ = std::move(col_idx);
  a.values_ = std::move(values);
  return a;
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense) {
  std::vector<Triplet> entries;
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      if (dense(i, j) != 0.0) {
        entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), dense(i, j)});
      }
    }
  }
  return from_triplets(static_cast<std::size_t>(dense.rows()),
                       static_cast<std::size_t>(dense.cols()), std::move(entries));
}

void SparseMatrix::multiply(ConstVectorRef x, VectorRef out, double scale) const {
  require_length(static_cast<std::size_t>(x.size()), cols_, "SparseMatrix::multiply input");
  require_length(static_cast<std::size_t>(out.size()), rows_, "SparseMatrix::multiply output");
  for (std::size_t i = 0; i < rows_; ++i) {
    double sum = 0.0;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      sum += values_[k] * x[static_cast<Eigen::Index>(col_idx_[k])];
    }
    out[static_cast<Eigen::Index>(i)] = scale * sum;
  }
}

void SparseMatrix::multiply_transpose_add(ConstVectorRef u, VectorRef out,
                                          double scale) const {
  require_length(static_cast<std::size_t>(u.size()), rows_,
                 "SparseMatrix::multiply_transpose_add input");
  require_length(static_cast<std::size_t>(out.size()), cols_,
                 "SparseMatrix::multiply_transpose_add output");
  for (std::size_t i = 0; i < rows_; ++i) {
    const double ui = scale * u[static_cast<Eigen::Index>(i)];
    if (ui == 0.0) continue;
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      out[static_cast<Eigen::Index>(col_idx_[k])] += values_[k] * ui;
    }
  }
}

Matrix SparseMatrix::to_dense() const {
  Matrix dense = Matrix::Zero(static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
      dense(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(col_idx_[k])) = values_[k];
    }
  }
  return dense;
}

bool SparseMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ScaledAugmentedOperator::ScaledAugmentedOperator(std::shared_ptr<const SparseMatrix> base,
                                                 Vector column, double gamma)
    : base_(std::move(base)),
      column_(std::move(column)),
      gamma_(gamma),
      scale_(std::sqrt(gamma) / 2.0),
      counters_(std::make_shared<OperatorCounters>()) {
  if (!base_) throw InvalidArgument("ScaledAugmentedOperator: null base matrix");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) {
    throw InvalidArgument("ScaledAugmentedOperator: gamma must be positive and finite");
  }
  require_length(static_cast<std::size_t>(column_.size()), base_->rows(),
                 "ScaledAugmentedOperator column");
}

void ScaledAugmentedOperator::apply(ConstVectorRef r, VectorRef out) const {
  const std::size_t n = base_->cols();
  require_length(static_cast<std::size_t>(r.size()), n + 1, "apply input");
  require_length(static_cast<std::size_t>(out.size()), rows(), "apply output");
  base_->multiply(r.head(static_cast<Eigen::Index>(n)), out, scale_);
  out += (column_scale() * r[static_cast<Eigen::Index>(n)]) * column_;
  counters_->applies.fetch_add(1, std::memory_order_relaxed);
  counters_->entries_touched.fetch_add(base_->nnz(), std::memory_order_relaxed);
}

Vector ScaledAugmentedOperator::apply(ConstVectorRef r) const {
  Vector out(static_cast<Eigen::Index>(rows()));
  apply(r, out);
  return out;
}

void ScaledAugmentedOperator::apply_transpose(ConstVectorRef u, VectorRef out) const {
  const std::size_t n = base_->cols();
  require_length(static_cast<std::size_t>(u.size()), rows(), "apply_transpose input");
  require_length(static_cast<std::size_t>(out.size()), n + 1, "apply_transpose output");
  out.setZero();
  base_->multiply_transpose_add(u, out.head(static_cast<Eigen::Index>(n)), scale_);
  out[static_cast<Eigen::Index>(n)] = column_scale() * column_.dot(u);
  counters_->transpose_applies.fetch_add(1, std::memory_order_relaxed);
  counters_->entries_touched.fetch_add(base_->nnz(), std::memory_order_relaxed);
}

Vector ScaledAugmentedOperator::apply_transpose(ConstVectorRef u) const {
  Vector out(static_cast<Eigen::Index>(cols()));
  apply_transpose(u, out);
  return out;
}

void ScaledAugmentedOperator::hessian_apply(ConstVectorRef r, VectorRef out,
                                            VectorRef scratch) const {
  apply(r, scratch);
  apply_transpose(scratch, out);
  counters_->hessian_applies.fetch_add(1, std::memory_order_relaxed);
}

Vector ScaledAugmentedOperator::hessian_apply(ConstVectorRef r) const {
  Vector scratch(static_cast<Eigen::Index>(rows()));
  Vector out(static_cast<Eigen::Index>(cols()));
  hessian_apply(r, out, scratch);
  return out;
}

Matrix ScaledAugmentedOperator::to_dense() const {
  const auto n = static_cast<Eigen::Index>(base_->cols());
  Matrix dense(static_cast<Eigen::Index>(rows()), n + 1);
  dense.leftCols(n) = scale_ * base_->to_dense();
  dense.col(n) = column_scale() * column_;
  return dense;
}

}  // namespace spgls
