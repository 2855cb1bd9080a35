#pragma once

#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "mpe/common.hpp"

namespace mpe::ad {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_size(const Shape& s);

class ShapeError : public std::runtime_error {
 public:
  explicit ShapeError(const std::string& what) : std::runtime_error(what) {}
  ShapeError(const std::string& op, const Shape& a, const Shape& b)
      : std::runtime_error(op + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b)) {}
};

// Dense row-major tensor of doubles. The gradient buffer is allocated on first use.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0);
  Tensor(Shape s, std::vector<double> v);

  static Tensor scalar(double x) { return Tensor(Shape{}, std::vector<double>{x}); }
  static Tensor vector(std::vector<double> v);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> v);

  std::size_t size() const { return values.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  bool has_grad() const { return !grad.empty(); }
  std::vector<double>& ensure_grad();
  void zero_grad();   // keeps the buffer, fills with zeros
  void clear_grad();  // releases the buffer
};

// Uniform initialization in [-scale, scale].
void init_uniform(Tensor& t, double scale, Rng& rng);

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
  bool trainable = true;
};
using ParamList = std::vector<NamedTensor>;

}  // namespace mpe::ad
