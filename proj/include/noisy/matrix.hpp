#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace noisy {

// Dense row-major matrix of feature rows.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }
  std::span<double> row(std::size_t i) {
    return {data_.data() + i * cols_, cols_};
  }
  double operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  void push_back(std::span<const double> r) {
    if (rows_ == 0 && data_.empty()) cols_ = r.size();
    if (r.size() != cols_) {
      throw std::invalid_argument("FeatureMatrix: row dimension mismatch");
    }
    data_.insert(data_.end(), r.begin(), r.end());
    ++rows_;
  }

  void reserve(std::size_t rows) { data_.reserve(rows * cols_); }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const FeatureMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

}  // namespace noisy
