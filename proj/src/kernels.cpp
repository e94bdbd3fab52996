#include "synprobe/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace synprobe::kernels {
namespace {

int g_threads = 0;

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

inline void softmax_row(double* z, std::size_t k) {
  double mx = z[0];
  for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, z[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    z[j] = std::exp(z[j] - mx);
    sum += z[j];
  }
  const double inv = 1.0 / sum;
  for (std::size_t j = 0; j < k; ++j) z[j] *= inv;
}

inline std::size_t argmax(const double* s, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j) {
    if (s[j] > s[best]) best = j;
  }
  return best;
}

}  // namespace

void set_num_threads(int threads) { g_threads = std::max(threads, 0); }

void relu(std::span<double> v) {
  for (double& x : v) x = x > 0.0 ? x : 0.0;
}

void relu_backward(std::span<const double> activation, std::span<double> grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (activation[i] <= 0.0) grad[i] = 0.0;
  }
}

namespace serial {

void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, std::size_t n, std::size_t in, std::size_t out) {
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t o = 0; o < out; ++o) {
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += w[o * in + i] * x[r * in + i];
      y[r * out + o] = b.empty() ? acc : acc + b[o];
    }
  }
}

void affine_weight_grad(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        std::span<double> db, std::size_t n, std::size_t in, std::size_t out) {
  for (std::size_t o = 0; o < out; ++o) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += dy[r * out + o] * x[r * in + i];
      dw[o * in + i] = acc;
    }
    if (!db.empty()) {
      double acc = 0.0;
      for (std::size_t r = 0; r < n; ++r) acc += dy[r * out + o];
      db[o] = acc;
    }
  }
}

void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t n, std::size_t in, std::size_t out) {
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < out; ++o) acc += dy[r * out + o] * w[o * in + i];
      dx[r * in + i] = acc;
    }
  }
}

void softmax_rows(std::span<double> z, std::size_t n, std::size_t k) {
  for (std::size_t r = 0; r < n; ++r) softmax_row(z.data() + r * k, k);
}

std::size_t count_correct(std::span<const double> scores, std::span<const int> labels, std::size_t n,
                          std::size_t k) {
  std::size_t correct = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (static_cast<int>(argmax(scores.data() + r * k, k)) == labels[r]) ++correct;
  }
  return correct;
}

}  // namespace serial

namespace parallel {

// Each output element keeps the serial accumulation order; only the
// assignment of elements to threads changes.

void affine(std::span<const double> x, std::span<const double> w, std::span<const double> b,
            std::span<double> y, std::size_t n, std::size_t in, std::size_t out) {
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (n * out * in > 32768)
  for (std::int64_t r = 0; r < rows; ++r) {
    const double* xr = x.data() + static_cast<std::size_t>(r) * in;
    double* yr = y.data() + static_cast<std::size_t>(r) * out;
    std::size_t o = 0;
    for (; o + 4 <= out; o += 4) {
      const double* w0 = w.data() + o * in;
      const double* w1 = w0 + in;
      const double* w2 = w1 + in;
      const double* w3 = w2 + in;
      double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
      for (std::size_t i = 0; i < in; ++i) {
        const double xi = xr[i];
        a0 += w0[i] * xi;
        a1 += w1[i] * xi;
        a2 += w2[i] * xi;
        a3 += w3[i] * xi;
      }
      yr[o] = a0;
      yr[o + 1] = a1;
      yr[o + 2] = a2;
      yr[o + 3] = a3;
    }
    for (; o < out; ++o) {
      const double* wo = w.data() + o * in;
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += wo[i] * xr[i];
      yr[o] = acc;
    }
    if (!b.empty()) {
      for (std::size_t k = 0; k < out; ++k) yr[k] += b[k];
    }
  }
}

void affine_weight_grad(std::span<const double> dy, std::span<const double> x, std::span<double> dw,
                        std::span<double> db, std::size_t n, std::size_t in, std::size_t out) {
  const auto outs = static_cast<std::int64_t>(out);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (n * out * in > 32768)
  for (std::int64_t oo = 0; oo < outs; ++oo) {
    const auto o = static_cast<std::size_t>(oo);
    double* row = dw.data() + o * in;
    std::fill(row, row + in, 0.0);
    double bias = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double g = dy[r * out + o];
      bias += g;
      const double* xr = x.data() + r * in;
      for (std::size_t i = 0; i < in; ++i) row[i] += g * xr[i];
    }
    if (!db.empty()) db[o] = bias;
  }
}

void affine_input_grad(std::span<const double> dy, std::span<const double> w, std::span<double> dx,
                       std::size_t n, std::size_t in, std::size_t out) {
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (n * out * in > 32768)
  for (std::int64_t r = 0; r < rows; ++r) {
    double* dxr = dx.data() + static_cast<std::size_t>(r) * in;
    const double* dyr = dy.data() + static_cast<std::size_t>(r) * out;
    std::fill(dxr, dxr + in, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyr[o];
      const double* wo = w.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) dxr[i] += g * wo[i];
    }
  }
}

void softmax_rows(std::span<double> z, std::size_t n, std::size_t k) {
  const auto rows = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(static) num_threads(thread_count()) if (n * k > 4096)
  for (std::int64_t r = 0; r < rows; ++r) softmax_row(z.data() + static_cast<std::size_t>(r) * k, k);
}

std::size_t count_correct(std::span<const double> scores, std::span<const int> labels, std::size_t n,
                          std::size_t k) {
  const auto rows = static_cast<std::int64_t>(n);
  std::int64_t correct = 0;
#pragma omp parallel for schedule(static) reduction(+ : correct) num_threads(thread_count()) if (n > 1024)
  for (std::int64_t r = 0; r < rows; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    if (static_cast<int>(argmax(scores.data() + ru * k, k)) == labels[ru]) ++correct;
  }
  return static_cast<std::size_t>(correct);
}

}  // namespace parallel
}  // namespace synprobe::kernels
