#include "m2ef/tensor.hpp"

#include <cmath>
#include <cstdlib>

#include "m2ef/errors.hpp"

namespace m2ef {

Tensor::Tensor(int r, int c) : rows(r), cols(c) {
  if (r < 0 || c < 0) throw ShapeError("tensor dims must be nonnegative");
  data.assign(static_cast<std::size_t>(r) * c, 0.0);
}

Tensor::Tensor(int r, int c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != static_cast<std::size_t>(r) * c)
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str());
}

Tensor::Tensor(std::initializer_list<std::initializer_list<double>> rows_init) {
  rows = static_cast<int>(rows_init.size());
  cols = rows > 0 ? static_cast<int>(rows_init.begin()->size()) : 0;
  data.reserve(static_cast<std::size_t>(rows) * cols);
  for (const auto& r : rows_init) {
    if (static_cast<int>(r.size()) != cols)
      throw ShapeError("ragged initializer for tensor");
    data.insert(data.end(), r.begin(), r.end());
  }
}

Tensor Tensor::full(int r, int c, double v) {
  Tensor t(r, c);
  for (auto& x : t.data) x = v;
  return t;
}

Tensor Tensor::identity(int n) {
  Tensor t(n, n);
  for (int i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::row(std::initializer_list<double> values) {
  return Tensor(1, static_cast<int>(values.size()),
                std::vector<double>(values));
}

std::string Tensor::shape_str() const {
  return std::to_string(rows) + "x" + std::to_string(cols);
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::transposed() const {
  Tensor t(cols, rows);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) t(c, r) = (*this)(r, c);
  return t;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("shape mismatch " + a.shape_str() + " vs " + b.shape_str());
  double m = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    m = std::max(m, std::fabs(a.data[i] - b.data[i]));
  return m;
}

bool approx_equal(const Tensor& a, const Tensor& b, double tol) {
  return a.same_shape(b) && max_abs_diff(a, b) <= tol;
}

}  // namespace m2ef
