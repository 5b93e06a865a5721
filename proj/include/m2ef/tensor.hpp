#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace m2ef {

// Dense row-major 2-D matrix of doubles; the universal numeric carrier.
// Plain value type: gradients live on the tape, not here.
struct Tensor {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(int r, int c);  // zero-filled
  Tensor(int r, int c, std::vector<double> values);
  Tensor(std::initializer_list<std::initializer_list<double>> rows_init);

  static Tensor zeros(int r, int c) { return Tensor(r, c); }
  static Tensor full(int r, int c, double v);
  static Tensor ones(int r, int c) { return full(r, c, 1.0); }
  static Tensor identity(int n);
  static Tensor row(std::initializer_list<double> values);

  int size() const { return rows * cols; }
  bool same_shape(const Tensor& o) const {
    return rows == o.rows && cols == o.cols;
  }
  std::string shape_str() const;

  double& operator()(int r, int c) {
    return data[static_cast<std::size_t>(r) * cols + c];
  }
  double operator()(int r, int c) const {
    return data[static_cast<std::size_t>(r) * cols + c];
  }

  double* ptr() { return data.data(); }
  const double* ptr() const { return data.data(); }
  double* row_ptr(int r) { return data.data() + static_cast<std::size_t>(r) * cols; }
  const double* row_ptr(int r) const {
    return data.data() + static_cast<std::size_t>(r) * cols;
  }

  bool all_finite() const;
  Tensor transposed() const;
};

bool approx_equal(const Tensor& a, const Tensor& b, double tol);
double max_abs_diff(const Tensor& a, const Tensor& b);

}  // namespace m2ef
