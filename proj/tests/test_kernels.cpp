#include <gtest/gtest.h>

#include <cstring>
#include <vector>

#include "synprobe/kernels.hpp"
#include "synprobe/random.hpp"

using namespace synprobe;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal();
  return v;
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

struct Shape {
  std::size_t n, in, out;
};

class KernelEquivalence : public ::testing::TestWithParam<int> {
 protected:
  void SetUp() override { kernels::set_num_threads(GetParam()); }
  void TearDown() override { kernels::set_num_threads(0); }
};

// Small shapes stay under the parallel threshold, large ones cross it.
const Shape kShapes[] = {{1, 1, 1}, {3, 5, 7}, {64, 33, 300}, {200, 130, 300}, {97, 301, 3}, {513, 64, 5}};

}  // namespace

TEST_P(KernelEquivalence, Affine) {
  Rng rng(1);
  for (const auto& s : kShapes) {
    const auto x = random_vector(rng, s.n * s.in);
    const auto w = random_vector(rng, s.out * s.in);
    const auto b = random_vector(rng, s.out);
    std::vector<double> ys(s.n * s.out), yp(s.n * s.out);
    kernels::serial::affine(x, w, b, ys, s.n, s.in, s.out);
    kernels::parallel::affine(x, w, b, yp, s.n, s.in, s.out);
    EXPECT_TRUE(same_bits(ys, yp)) << s.n << "x" << s.in << "x" << s.out;
    kernels::serial::affine(x, w, {}, ys, s.n, s.in, s.out);
    kernels::parallel::affine(x, w, {}, yp, s.n, s.in, s.out);
    EXPECT_TRUE(same_bits(ys, yp));
  }
}

TEST_P(KernelEquivalence, Gradients) {
  Rng rng(2);
  for (const auto& s : kShapes) {
    const auto dy = random_vector(rng, s.n * s.out);
    const auto x = random_vector(rng, s.n * s.in);
    const auto w = random_vector(rng, s.out * s.in);
    std::vector<double> dws(s.out * s.in), dwp(s.out * s.in), dbs(s.out), dbp(s.out);
    kernels::serial::affine_weight_grad(dy, x, dws, dbs, s.n, s.in, s.out);
    kernels::parallel::affine_weight_grad(dy, x, dwp, dbp, s.n, s.in, s.out);
    EXPECT_TRUE(same_bits(dws, dwp));
    EXPECT_TRUE(same_bits(dbs, dbp));
    std::vector<double> dxs(s.n * s.in), dxp(s.n * s.in);
    kernels::serial::affine_input_grad(dy, w, dxs, s.n, s.in, s.out);
    kernels::parallel::affine_input_grad(dy, w, dxp, s.n, s.in, s.out);
    EXPECT_TRUE(same_bits(dxs, dxp));
  }
}

TEST_P(KernelEquivalence, SoftmaxAndCount) {
  Rng rng(3);
  for (const auto& s : kShapes) {
    auto zs = random_vector(rng, s.n * s.out);
    auto zp = zs;
    kernels::serial::softmax_rows(zs, s.n, s.out);
    kernels::parallel::softmax_rows(zp, s.n, s.out);
    EXPECT_TRUE(same_bits(zs, zp));
    std::vector<int> labels(s.n);
    for (auto& l : labels) l = static_cast<int>(rng.uniform_index(s.out));
    EXPECT_EQ(kernels::serial::count_correct(zs, labels, s.n, s.out),
              kernels::parallel::count_correct(zp, labels, s.n, s.out));
  }
}

INSTANTIATE_TEST_SUITE_P(Threads, KernelEquivalence, ::testing::Values(1, 2, 3, 4));

TEST(Kernels, AffineMatchesHandComputation) {
  // X = [[1,2]], W = [[1,0],[0,1],[1,1]], b = [0.5, 0, -1]
  const std::vector<double> x = {1, 2}, w = {1, 0, 0, 1, 1, 1}, b = {0.5, 0, -1};
  std::vector<double> y(3);
  kernels::serial::affine(x, w, b, y, 1, 2, 3);
  EXPECT_EQ(y, (std::vector<double>{1.5, 2, 2}));
}

TEST(Kernels, SoftmaxRowsSumToOne) {
  std::vector<double> z = {1000, 1000, 0, -5, 3, 2};
  kernels::serial::softmax_rows(z, 2, 3);
  EXPECT_DOUBLE_EQ(z[0], 0.5);
  EXPECT_DOUBLE_EQ(z[0] + z[1] + z[2], 1.0);
  EXPECT_NEAR(z[3] + z[4] + z[5], 1.0, 1e-15);
}

TEST(Kernels, CountCorrectUsesFirstMaximum) {
  const std::vector<double> s = {0.5, 0.5, 0.1, 0.9};
  EXPECT_EQ(kernels::serial::count_correct(s, std::vector<int>{0, 1}, 2, 2), 2u);
  EXPECT_EQ(kernels::serial::count_correct(s, std::vector<int>{1, 0}, 2, 2), 0u);
  EXPECT_EQ(kernels::serial::count_correct(s, std::vector<int>{-1, 1}, 2, 2), 1u);
}

TEST(Kernels, Relu) {
  std::vector<double> v = {-1, 0, 2};
  kernels::relu(v);
  EXPECT_EQ(v, (std::vector<double>{0, 0, 2}));
  std::vector<double> g = {5, 5, 5};
  kernels::relu_backward(v, g);
  EXPECT_EQ(g, (std::vector<double>{0, 0, 5}));
}
