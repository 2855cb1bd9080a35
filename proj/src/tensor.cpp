#include "mpe/tensor.hpp"

#include <algorithm>
#include <numeric>

namespace mpe::ad {

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) out += (i ? "," : "") + std::to_string(s[i]);
  return out + ")";
}

std::size_t shape_size(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

Tensor::Tensor(Shape s, double fill) : shape(std::move(s)), values(shape_size(shape), fill) {}

Tensor::Tensor(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v)) {
  if (values.size() != shape_size(shape))
    throw ShapeError("tensor of shape " + shape_str(shape) + " given " + std::to_string(values.size()) + " values");
}

Tensor Tensor::vector(std::vector<double> v) {
  const std::size_t n = v.size();
  return Tensor(Shape{n}, std::move(v));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> v) {
  return Tensor(Shape{rows, cols}, std::move(v));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw ShapeError("rows() of non-matrix " + shape_str(shape));
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw ShapeError("cols() of non-matrix " + shape_str(shape));
  return shape[1];
}

std::vector<double>& Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  return grad;
}

void Tensor::zero_grad() {
  if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0);
}

void Tensor::clear_grad() {
  grad.clear();
  grad.shrink_to_fit();
}

void init_uniform(Tensor& t, double scale, Rng& rng) {
  for (auto& v : t.values) v = rng.uniform(-scale, scale);
}

}  // namespace mpe::ad
