#pragma once

// Dense kernels behind the probe. `parallel` splits work across OpenMP
// threads by output element; `serial` is the plain reference kept for tests
// and benchmarks. Every output element is accumulated in the same order in
// both, so results agree bit for bit.
//
// Layouts are row-major. X is n x in, W is out x in, Y is n x out.

#include <cstddef>
#include <span>

namespace synprobe::kernels {

namespace serial {

/// Y = X W^T (+ b when b is non-empty).
void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, std::size_t n, std::size_t in, std::size_t out);

/// dW = dY^T X; db = column sums of dY (skipped when db is empty).
void affine_weight_grad(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        std::span<double> db, std::size_t n, std::size_t in, std::size_t out);

/// dX = dY W.
void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t n, std::size_t in, std::size_t out);

/// Row-wise softmax in place, max-subtracted.
void softmax_rows(std::span<double> z, std::size_t n, std::size_t k);

/// Number of rows whose argmax (first maximum) equals the label.
std::size_t count_correct(std::span<const double> scores, std::span<const int> labels, std::size_t n,
                          std::size_t k);

}  // namespace serial

namespace parallel {

void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, std::size_t n, std::size_t in, std::size_t out);
void affine_weight_grad(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        std::span<double> db, std::size_t n, std::size_t in, std::size_t out);
void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t n, std::size_t in, std::size_t out);
void softmax_rows(std::span<double> z, std::size_t n, std::size_t k);
std::size_t count_correct(std::span<const double> scores, std::span<const int> labels, std::size_t n,
                          std::size_t k);

}  // namespace parallel

/// Elementwise max(0, v) in place.
void relu(std::span<double> v);
/// grad[i] = 0 where activation[i] <= 0.
void relu_backward(std::span<const double> activation, std::span<double> grad);

/// Threads used by the parallel kernels; 0 restores the OpenMP default.
void set_num_threads(int threads);

}  // namespace synprobe::kernels
