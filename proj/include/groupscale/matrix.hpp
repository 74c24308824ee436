#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <vector>

namespace groupscale {

// Dense row-major double matrix. Small on purpose: the toolkit works at desk
// scale and only needs contiguous storage plus row access.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m;
    for (const auto& r : rows) {
      if (m.rows_ == 0) m.cols_ = r.size();
      if (r.size() != m.cols_) throw std::invalid_argument("ragged matrix rows");
      m.data_.insert(m.data_.end(), r.begin(), r.end());
      ++m.rows_;
    }
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  double* row(std::size_t i) { return data_.data() + i * cols_; }
  const double* row(std::size_t i) const { return data_.data() + i * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  Matrix take_rows(const std::vector<int>& idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      const double* src = row(static_cast<std::size_t>(idx[k]));
      double* dst = out.row(k);
      for (std::size_t j = 0; j < cols_; ++j) dst[j] = src[j];
    }
    return out;
  }

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace groupscale
