#include <doctest.h>

#include <cmath>
#include <random>

#include "skm/param_store.hpp"
#include "skm/tensor.hpp"

using namespace skm;
using Td = Tensor<double>;
using Arr = Td::Array;

namespace {

Arr values(std::initializer_list<double> v) {
  Arr a(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) a[i++] = x;
  return a;
}

}  // namespace

TEST_CASE("elementwise ops and their gradients") {
  Td a({2, 2}, values({1, 2, 3, 4}), true);
  Td b({2, 2}, values({5, 6, 7, 8}), true);
  Td y = sum(a * b + scale(a, 2.0));
  CHECK(y.item() == doctest::Approx(5 + 12 + 21 + 32 + 20));
  y.backward();
  for (Index i = 0; i < 4; ++i) {
    CHECK(a.grad()[i] == doctest::Approx(b.value()[i] + 2));
    CHECK(b.grad()[i] == doctest::Approx(a.value()[i]));
  }
}

TEST_CASE("matmul matches hand computation") {
  Td a({2, 3}, values({1, 2, 3, 4, 5, 6}), true);
  Td b({3, 1}, values({1, 0, -1}), true);
  Td c = matmul(a, b);
  REQUIRE(c.shape() == Shape{2, 1});
  CHECK(c.value()[0] == doctest::Approx(-2));
  CHECK(c.value()[1] == doctest::Approx(-2));
  sum(c).backward();
  CHECK(b.grad()[0] == doctest::Approx(5));
  CHECK(b.grad()[2] == doctest::Approx(9));
  CHECK(a.grad()[2] == doctest::Approx(-1));
}

TEST_CASE("shape errors are reported") {
  Td a = Td::zeros({2, 3});
  Td b = Td::zeros({3, 2});
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
  CHECK_THROWS_AS(a.reshape({5}), ShapeError);
}

TEST_CASE("gradients accumulate on leaves across backward calls") {
  Td a({1}, values({3}), true);
  square(a).reshape({}).backward();
  square(a).reshape({}).backward();
  CHECK(a.grad()[0] == doctest::Approx(12));
  a.zero_grad();
  CHECK_FALSE(a.has_grad());
}

TEST_CASE("detach stops gradient flow") {
  Td a({1}, values({2}), true);
  Td y = sum(mul(a, a.detach()));
  y.backward();
  CHECK(a.grad()[0] == doctest::Approx(2));
}

TEST_CASE("conv1d with a delta kernel is the identity") {
  Td x({5, 1}, values({1, 2, 3, 4, 5}));
  Td w({3, 1}, values({0, 1, 0}));
  Td b({1}, values({0}));
  Td y = conv1d(x, w, b, 3, 1);
  for (Index i = 0; i < 5; ++i) CHECK(y.value()[i] == doctest::Approx(x.value()[i]));
  Td y2 = conv1d(x, w, b, 3, 2);
  CHECK(y2.dim(0) == 3);
  CHECK(y2.value()[1] == doctest::Approx(3));
}

TEST_CASE("normalize yields unit groups") {
  Td x({2, 4}, values({1, 1, 1, 1, 0, 3, 0, 4}));
  Td n = normalize(x, 4);
  CHECK(n.value()[0] == doctest::Approx(0.5));
  CHECK(n.value()[5] == doctest::Approx(0.6));
  CHECK(n.value()[7] == doctest::Approx(0.8));
}

TEST_CASE("Adam first step moves every weight by about lr against the gradient") {
  ParamStore<double> store;
  auto& w = store.add("w", {3}, values({1.0, -2.0, 0.5}));
  const Arr before = w.value();
  sum(mul(w, Td({3}, values({4.0, -0.1, 1e-3})))).backward();
  AdamConfig cfg;
  cfg.lr = 0.01;
  store.adam_step(cfg);
  const Arr delta = w.value() - before;
  // m_hat = g, v_hat = g^2 after bias correction.
  CHECK(delta[0] == doctest::Approx(-0.01 * 4.0 / (4.0 + 1e-8)));
  CHECK(delta[1] == doctest::Approx(0.01 * 0.1 / (0.1 + 1e-8)));
  CHECK(delta[2] == doctest::Approx(-0.01 * 1e-3 / (1e-3 + 1e-8)));
  CHECK(store.step_count(0) == 1);
}

TEST_CASE("Adam descends a quadratic bowl") {
  ParamStore<double> store;
  auto& w = store.add("w", {2}, values({3.0, -4.0}));
  AdamConfig cfg;
  cfg.lr = 0.05;
  cfg.beta1 = 0.9;
  for (int it = 0; it < 2000; ++it) {
    store.zero_grad();
    sum(square(w)).backward();
    store.adam_step(cfg);
  }
  CHECK(std::abs(w.value()[0]) < 1e-3);
  CHECK(std::abs(w.value()[1]) < 1e-3);
}

TEST_CASE("checkpoints round trip and reject corruption") {
  std::mt19937_64 rng(3);
  ParamStore<float> a;
  a.add_uniform("enc.w0", {4, 3}, 0.5, rng);
  a.add_uniform("enc.b0", {3}, 0.5, rng);
  const std::string bytes = a.serialize();
  CHECK(bytes.substr(0, 8) == "SKMCKPT1");

  ParamStore<float> b;
  b.add("enc.w0", {4, 3}, Tensor<float>::Array::Zero(12));
  b.add("enc.b0", {3}, Tensor<float>::Array::Zero(3));
  b.deserialize(bytes);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK((a.at(i).value() == b.at(i).value()).all());

  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(b.deserialize(bad_magic), CheckpointError);
  CHECK_THROWS_AS(b.deserialize(bytes.substr(0, bytes.size() - 5)), CheckpointError);

  ParamStore<float> wrong;
  wrong.add("enc.w0", {3, 4}, Tensor<float>::Array::Zero(12));
  CHECK_THROWS_AS(wrong.deserialize(bytes), CheckpointError);
}
