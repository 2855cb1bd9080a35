#pragma once

#include <span>

#include "mpe/tape.hpp"

namespace mpe::ad {

// Matrix product. A vector on the left acts as a row, on the right as a column, and
// the corresponding dimension is dropped from the result.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
// Adds vector v (length rows) to every column of matrix m.
Var add_cols(Var m, Var v);
// Concatenates vectors.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
// Vectors of equal length k become the columns of a (k, n) matrix.
Var stack_columns(std::span<const Var> cols);
Var column(Var m, std::size_t j);
Var slice(Var v, std::size_t begin, std::size_t length);
Var reshape(Var a, Shape shape);
Var sum(Var a);
Var sum(std::span<const Var> parts);  // elementwise sum of equal shapes

Var tanh(Var a);
Var sigmoid(Var a);
// Vectors use axis 0. For matrices axis 0 normalizes each column, axis 1 each row.
Var softmax(Var a, std::size_t axis = 0);
// Inverted dropout: kept units are scaled by 1/keep_prob. Identity when rng is null.
Var dropout(Var a, double keep_prob, Rng* rng);
// Row lookup into an embedding table of shape (vocab, dim). The gradient is added
// directly to the table's gradient rows unless `frozen` is set.
Var embedding(Tape& tape, Tensor& table, std::size_t row, bool frozen = false);
// Negative log-probability of `cls` under softmax(logits).
Var cross_entropy(Var logits, std::size_t cls);

std::vector<double> softmax_values(std::span<const double> logits);
double log_sum_exp(std::span<const double> x);

}  // namespace mpe::ad
