#include "mpe/ops.hpp"

#include <cmath>
#include <limits>

namespace mpe::ad {

namespace {

void same_tape(Var a, Var b) {
  if (a.tape != b.tape || !a.tape) throw std::logic_error("operands recorded on different tapes");
}

void require_same_shape(const char* op, Var a, Var b) {
  same_tape(a, b);
  if (a.shape() != b.shape()) throw ShapeError(op, a.shape(), b.shape());
}

template <typename F>
Var unary_map(Var a, F f, std::function<double(double x, double y)> dfdx) {
  const Tensor& x = a.value();
  Tensor y(x.shape);
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  const std::size_t ai = a.id;
  return a.tape->record(std::move(y), [ai, dfdx](Tape& t, std::size_t self) {
    const auto& x = t.value(ai).values;
    const auto& y = t.value(self).values;
    const auto& gy = t.grad(self);
    auto& gx = t.grad(ai);
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += gy[i] * dfdx(x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  same_tape(a, b);
  const Tensor& A = a.value();
  const Tensor& B = b.value();
  if (A.rank() < 1 || A.rank() > 2 || B.rank() < 1 || B.rank() > 2) throw ShapeError("matmul", A.shape, B.shape);
  const std::size_t m = A.rank() == 2 ? A.shape[0] : 1;
  const std::size_t k = A.shape.back();
  const std::size_t kb = B.shape[0];
  const std::size_t n = B.rank() == 2 ? B.shape[1] : 1;
  if (k != kb) throw ShapeError("matmul", A.shape, B.shape);
  Shape out;
  if (A.rank() == 2) out.push_back(m);
  if (B.rank() == 2) out.push_back(n);
  Tensor C(out);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      if (aip == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) C[i * n + j] += aip * B[p * n + j];
    }
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(C), [ai, bi, m, k, n](Tape& t, std::size_t self) {
    const auto& A = t.value(ai).values;
    const auto& B = t.value(bi).values;
    const std::vector<double> gc = t.grad(self);
    {
      auto& ga = t.grad(ai);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += gc[i * n + j] * B[p * n + j];
          ga[i * k + p] += s;
        }
    }
    auto& gb = t.grad(bi);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < k; ++p) {
        const double aip = A[i * k + p];
        if (aip == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) gb[p * n + j] += aip * gc[i * n + j];
      }
  });
}

Var add(Var a, Var b) {
  require_same_shape("add", a, b);
  Tensor y = a.value();
  y.grad.clear();
  const auto& bv = b.value().values;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(y), [ai, bi](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    for (std::size_t id : {ai, bi}) {
      auto& gx = t.grad(id);
      for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var mul(Var a, Var b) {
  require_same_shape("mul", a, b);
  const auto& av = a.value().values;
  const auto& bv = b.value().values;
  Tensor y(a.shape());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * bv[i];
  const std::size_t ai = a.id, bi = b.id;
  return a.tape->record(std::move(y), [ai, bi](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    const auto& av = t.value(ai).values;
    const auto& bv = t.value(bi).values;
    {
      auto& ga = t.grad(ai);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    auto& gb = t.grad(bi);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var scale(Var a, double s) {
  Tensor y(a.shape());
  const auto& av = a.value().values;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = av[i] * s;
  const std::size_t ai = a.id;
  return a.tape->record(std::move(y), [ai, s](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * s;
  });
}

Var add_cols(Var m, Var v) {
  same_tape(m, v);
  const Tensor& M = m.value();
  const Tensor& V = v.value();
  if (M.rank() != 2 || V.rank() != 1 || V.size() != M.shape[0]) throw ShapeError("add_cols", M.shape, V.shape);
  const std::size_t rows = M.shape[0], cols = M.shape[1];
  Tensor y(M.shape);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) y[r * cols + c] = M[r * cols + c] + V[r];
  const std::size_t mi = m.id, vi = v.id;
  return m.tape->record(std::move(y), [mi, vi, rows, cols](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    {
      auto& gm = t.grad(mi);
      for (std::size_t i = 0; i < g.size(); ++i) gm[i] += g[i];
    }
    auto& gv = t.grad(vi);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) gv[r] += g[r * cols + c];
  });
}

Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }

Var concat(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  std::vector<double> values;
  std::vector<std::size_t> ids, offsets;
  for (const Var& p : parts) {
    same_tape(parts[0], p);
    if (p.value().rank() != 1) throw ShapeError("concat", parts[0].shape(), p.shape());
    ids.push_back(p.id);
    offsets.push_back(values.size());
    const auto& v = p.value().values;
    values.insert(values.end(), v.begin(), v.end());
  }
  return parts[0].tape->record(Tensor::vector(std::move(values)), [ids, offsets](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      auto& gp = t.grad(ids[k]);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[offsets[k] + i];
    }
  });
}

Var stack_columns(std::span<const Var> cols) {
  if (cols.empty()) throw ShapeError("stack_columns of zero vectors");
  const std::size_t rows = cols[0].size(), n = cols.size();
  Tensor y(Shape{rows, n});
  std::vector<std::size_t> ids;
  for (std::size_t j = 0; j < n; ++j) {
    same_tape(cols[0], cols[j]);
    if (cols[j].value().rank() != 1 || cols[j].size() != rows)
      throw ShapeError("stack_columns", cols[0].shape(), cols[j].shape());
    ids.push_back(cols[j].id);
    for (std::size_t r = 0; r < rows; ++r) y[r * n + j] = cols[j].value()[r];
  }
  return cols[0].tape->record(std::move(y), [ids, rows, n](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    for (std::size_t j = 0; j < n; ++j) {
      auto& gc = t.grad(ids[j]);
      for (std::size_t r = 0; r < rows; ++r) gc[r] += g[r * n + j];
    }
  });
}

Var column(Var m, std::size_t j) {
  const Tensor& M = m.value();
  if (M.rank() != 2 || j >= M.shape[1]) throw ShapeError("column " + std::to_string(j) + " of " + shape_str(M.shape));
  const std::size_t rows = M.shape[0], cols = M.shape[1];
  Tensor y(Shape{rows});
  for (std::size_t r = 0; r < rows; ++r) y[r] = M[r * cols + j];
  const std::size_t mi = m.id;
  return m.tape->record(std::move(y), [mi, rows, cols, j](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    auto& gm = t.grad(mi);
    for (std::size_t r = 0; r < rows; ++r) gm[r * cols + j] += g[r];
  });
}

Var slice(Var v, std::size_t begin, std::size_t length) {
  const Tensor& V = v.value();
  if (V.rank() != 1 || begin + length > V.size())
    throw ShapeError("slice [" + std::to_string(begin) + ", +" + std::to_string(length) + ") of " + shape_str(V.shape));
  std::vector<double> vals(V.values.begin() + static_cast<std::ptrdiff_t>(begin),
                           V.values.begin() + static_cast<std::ptrdiff_t>(begin + length));
  const std::size_t vi = v.id;
  return v.tape->record(Tensor::vector(std::move(vals)), [vi, begin](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    auto& gv = t.grad(vi);
    for (std::size_t i = 0; i < g.size(); ++i) gv[begin + i] += g[i];
  });
}

Var reshape(Var a, Shape shape) {
  if (shape_size(shape) != a.size()) throw ShapeError("reshape", a.shape(), shape);
  Tensor y(std::move(shape), a.value().values);
  const std::size_t ai = a.id;
  return a.tape->record(std::move(y), [ai](Tape& t, std::size_t self) {
    const std::vector<double> g = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().values) s += x;
  const std::size_t ai = a.id;
  return a.tape->record(Tensor::scalar(s), [ai](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    for (auto& x : t.grad(ai)) x += g;
  });
}

Var sum(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("sum of zero tensors");
  Var acc = parts[0];
  for (std::size_t i = 1; i < parts.size(); ++i) acc = add(acc, parts[i]);
  return acc;
}

Var tanh(Var a) {
  return unary_map(a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var sigmoid(Var a) {
  return unary_map(
      a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

double log_sum_exp(std::span<const double> x) {
  if (x.empty()) throw ShapeError("log-sum-exp over an empty axis");
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double v : x) s += std::exp(v - mx);
  return mx + std::log(s);
}

std::vector<double> softmax_values(std::span<const double> logits) {
  if (logits.empty()) throw ShapeError("softmax over an empty axis");
  double mx = logits[0];
  for (double v : logits) mx = std::max(mx, v);
  std::vector<double> p(logits.size());
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] = std::exp(logits[i] - mx));
  for (double& v : p) v /= s;
  return p;
}

Var softmax(Var a, std::size_t axis) {
  const Tensor& X = a.value();
  std::size_t groups, len, stride_group, stride_elem;
  if (X.rank() == 1 && axis == 0) {
    groups = 1, len = X.size(), stride_group = 0, stride_elem = 1;
  } else if (X.rank() == 2 && axis < 2) {
    const std::size_t r = X.shape[0], c = X.shape[1];
    if (axis == 1) groups = r, len = c, stride_group = c, stride_elem = 1;
    else groups = c, len = r, stride_group = 1, stride_elem = c;
  } else {
    throw ShapeError("softmax axis " + std::to_string(axis) + " of " + shape_str(X.shape));
  }
  if (len == 0) throw ShapeError("softmax over an empty axis of " + shape_str(X.shape));
  Tensor Y(X.shape);
  std::vector<double> buf(len);
  for (std::size_t g = 0; g < groups; ++g) {
    for (std::size_t i = 0; i < len; ++i) buf[i] = X[g * stride_group + i * stride_elem];
    auto p = softmax_values(buf);
    for (std::size_t i = 0; i < len; ++i) Y[g * stride_group + i * stride_elem] = p[i];
  }
  const std::size_t ai = a.id;
  return a.tape->record(std::move(Y), [ai, groups, len, stride_group, stride_elem](Tape& t, std::size_t self) {
    const auto& y = t.value(self).values;
    const std::vector<double> gy = t.grad(self);
    auto& gx = t.grad(ai);
    for (std::size_t g = 0; g < groups; ++g) {
      double dot = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t k = g * stride_group + i * stride_elem;
        dot += gy[k] * y[k];
      }
      for (std::size_t i = 0; i < len; ++i) {
        const std::size_t k = g * stride_group + i * stride_elem;
        gx[k] += y[k] * (gy[k] - dot);
      }
    }
  });
}

Var dropout(Var a, double keep_prob, Rng* rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0))
    throw std::invalid_argument("dropout keep_prob must lie in (0, 1], got " + std::to_string(keep_prob));
  if (!rng || keep_prob == 1.0) return a;
  std::vector<double> mask(a.size());
  for (auto& m : mask) m = rng->bernoulli(keep_prob) ? 1.0 / keep_prob : 0.0;
  Tensor y(a.shape());
  const auto& x = a.value().values;
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = x[i] * mask[i];
  const std::size_t ai = a.id;
  return a.tape->record(std::move(y), [ai, mask = std::move(mask)](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& ga = t.grad(ai);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * mask[i];
  });
}

Var embedding(Tape& tape, Tensor& table, std::size_t row, bool frozen) {
  if (table.rank() != 2) throw ShapeError("embedding table must be a matrix, got " + shape_str(table.shape));
  if (row >= table.shape[0])
    throw std::out_of_range("embedding row " + std::to_string(row) + " of " + shape_str(table.shape));
  const std::size_t dim = table.shape[1];
  std::vector<double> v(table.values.begin() + static_cast<std::ptrdiff_t>(row * dim),
                        table.values.begin() + static_cast<std::ptrdiff_t>((row + 1) * dim));
  if (frozen) return tape.constant(Tensor::vector(std::move(v)));
  Tensor* tp = &table;
  return tape.record(Tensor::vector(std::move(v)), [tp, row, dim](Tape& t, std::size_t self) {
    const auto& g = t.grad(self);
    auto& gt = tp->ensure_grad();
    for (std::size_t i = 0; i < dim; ++i) gt[row * dim + i] += g[i];
  });
}

Var cross_entropy(Var logits, std::size_t cls) {
  const Tensor& z = logits.value();
  if (z.rank() != 1) throw ShapeError("cross_entropy expects a logit vector, got " + shape_str(z.shape));
  if (cls >= z.size()) throw std::out_of_range("class " + std::to_string(cls) + " out of " + std::to_string(z.size()));
  const double loss = log_sum_exp(z.values) - z[cls];
  const std::size_t zi = logits.id;
  return logits.tape->record(Tensor::scalar(loss), [zi, cls](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    auto p = softmax_values(t.value(zi).values);
    auto& gz = t.grad(zi);
    for (std::size_t i = 0; i < p.size(); ++i) gz[i] += g * (p[i] - (i == cls ? 1.0 : 0.0));
  });
}

}  // namespace mpe::ad
