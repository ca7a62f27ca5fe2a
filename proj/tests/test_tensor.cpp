#include <cmath>
#include <functional>

#include "doctest.h"
#include "egg/grad_check.hpp"
#include "egg/ops.hpp"
#include "helpers.hpp"

using namespace egg;
using egg::test::bitwise_equal;
using egg::test::random_tensor;
using egg::test::to_vec;

TEST_CASE("ops: elementwise examples") {
  CHECK(to_vec(add(Tensor::vector({1, 2}), Tensor::vector({3, 4})).values()) ==
        std::vector<double>{4, 6});
  CHECK(to_vec(div(Tensor::vector({2, 4}), Tensor::scalar(2)).values()) ==
        std::vector<double>{1, 2});
  CHECK_THROWS_AS(add(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3})), ShapeError);
  CHECK_THROWS(div(Tensor::vector({1}), Tensor::vector({0})));

  Tensor x = Tensor::vector({1.5, -2.0, 3.0}, true);
  backward(sum(mul(x, Tensor::vector({0, 0, 0}))));
  CHECK(to_vec(x.grad()) == std::vector<double>{0, 0, 0});
}

TEST_CASE("ops: shape errors name both shapes") {
  try {
    add(Tensor({2, 3}), Tensor({3, 2}));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    CHECK(what.find("[2, 3]") != std::string::npos);
    CHECK(what.find("[3, 2]") != std::string::npos);
  }
}

TEST_CASE("ops: matmul examples") {
  const Tensor id = Tensor::matrix(2, 2, {1, 0, 0, 1});
  CHECK(to_vec(matmul(id, Tensor::matrix(2, 1, {5, 7})).values()) == std::vector<double>{5, 7});
  CHECK(to_vec(matmul(Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::matrix(2, 1, {1, 1})).values()) ==
        std::vector<double>{3, 7});
  CHECK_THROWS(matmul(Tensor({2, 3}), Tensor({2, 3})));
}

TEST_CASE("ops: activations and softmax examples") {
  CHECK(tanh(Tensor::scalar(0)).item() == 0.0);
  CHECK(sigmoid(Tensor::scalar(0)).item() == 0.5);
  Tensor r = Tensor::vector({-3}, true);
  const Tensor y = relu(r);
  CHECK(y[0] == 0.0);
  backward(sum(y));
  CHECK(r.grad()[0] == 0.0);

  CHECK(to_vec(softmax(Tensor::vector({0, 0}), 0).values()) == std::vector<double>{0.5, 0.5});
  const auto ls = log_softmax(Tensor::vector({0, 0}), 0);
  CHECK(ls[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-15));
  const auto big = softmax(Tensor::vector({1000, 0}), 0);
  CHECK(std::isfinite(big[0]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] >= 0.0);
  CHECK(big[1] < 1e-300);
}

TEST_CASE("ops: softmax rows are a distribution along either axis") {
  Rng rng(11);
  const Tensor x = random_tensor({5, 7}, rng, false, -20, 20);
  for (std::size_t axis : {0u, 1u}) {
    const Tensor s = softmax(x, axis);
    const Tensor total = sum(s, axis);
    for (double v : s.values()) CHECK(v >= 0.0);
    for (double v : total.values()) CHECK(std::abs(v - 1.0) < 1e-12);
  }
}

TEST_CASE("ops: reductions") {
  const Tensor x = Tensor::vector({1, 2, 3}, true);
  CHECK(sum(x).item() == 6.0);
  const Tensor m = mean(x);
  CHECK(m.item() == 2.0);
  backward(m);
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const Tensor a = Tensor::matrix(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(to_vec(sum(a, 0).values()) == std::vector<double>{5, 7, 9});
  CHECK(to_vec(mean(a, 1).values()) == std::vector<double>{2, 5});
}

TEST_CASE("ops: embedding lookup accumulates repeated rows") {
  Tensor table = Tensor::matrix(3, 2, {0, 1, 2, 3, 4, 5}, true);
  const std::vector<std::size_t> two{2};
  CHECK(to_vec(embedding_lookup(table, two).values()) == std::vector<double>{4, 5});
  const std::vector<std::size_t> ones{1, 1};
  backward(sum(embedding_lookup(table, ones)));
  CHECK(to_vec(table.grad()) == std::vector<double>{0, 0, 2, 2, 0, 0});
  const std::vector<std::size_t> bad{3};
  try {
    embedding_lookup(table, bad);
    FAIL("expected out_of_range");
  } catch (const std::out_of_range& e) {
    const std::string what = e.what();
    CHECK(what.find('3') != std::string::npos);
  }
}

TEST_CASE("backward: polynomial, single use, non-scalar root") {
  Tensor x = Tensor::vector({1, -2, 3}, true);
  const Tensor y = sum(x * x);
  backward(y);
  CHECK(to_vec(x.grad()) == std::vector<double>{2, -4, 6});
  CHECK_THROWS_AS(backward(y), TapeError);

  Tensor z = Tensor::vector({1, 2}, true);
  CHECK_THROWS_AS(backward(z * z), TapeError);
  Tape::current().discard();
  CHECK_THROWS_AS(backward(Tensor::scalar(1.0)), TapeError);
}

TEST_CASE("backward: two identical graphs double the gradient exactly") {
  Rng rng(2);
  Tensor x = random_tensor({4}, rng, true);
  backward(sum(tanh(x) * x));
  const auto once = to_vec(x.grad());
  backward(sum(tanh(x) * x));
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(x.grad()[i] == 2 * once[i]);
}

TEST_CASE("ops: results do not depend on requires_grad") {
  Rng rng(3);
  const Tensor a = random_tensor({3, 4}, rng), w = random_tensor({5, 4}, rng),
               b = random_tensor({5}, rng);
  const Tensor y0 = log_softmax(tanh(linear(a, w, b)), 1);
  Tensor a1 = a.clone(), w1 = w.clone(), b1 = b.clone();
  a1.set_requires_grad(true);
  w1.set_requires_grad(true);
  b1.set_requires_grad(true);
  const Tensor y1 = log_softmax(tanh(linear(a1, w1, b1)), 1);
  CHECK(bitwise_equal(y0.values(), y1.values()));
  Tape::current().discard();
}

TEST_CASE("grad_check: utility examples") {
  Rng rng(4);
  const Tensor x = random_tensor({6}, rng);
  CHECK(grad_check([](const Tensor& t) { return sum(t * t); }, x) < 1e-8);
  CHECK(grad_check([](const Tensor&) { return Tensor::scalar(3.0); }, x) == 0.0);
  Tensor z({4}, true);
  backward(sum(sigmoid(z)));
  for (double g : z.grad()) CHECK(g == 0.25);
  CHECK(grad_check([](const Tensor& t) { return sum(sigmoid(t)); }, Tensor({4})) < 1e-8);
}

namespace {

using Fn = std::function<Tensor(const Tensor&)>;

void check_op(const std::string& name, const Fn& f, const Tensor& x, double tol = 1e-5) {
  const double err = grad_check(f, x);
  INFO(name << " relative error " << err);
  CHECK(err < tol);
}

}  // namespace

TEST_CASE("grad_check: every differentiable op") {
  Rng rng(2024);
  const Tensor a = random_tensor({3, 4}, rng);
  const Tensor b = random_tensor({3, 4}, rng);
  const Tensor m = random_tensor({4, 2}, rng);
  const Tensor w = random_tensor({5, 4}, rng);
  const Tensor bias = random_tensor({5}, rng);
  const Tensor pos = random_tensor({3, 4}, rng, false, 0.5, 2.0);
  const Tensor s = Tensor::scalar(0.7);
  const Tensor weights = random_tensor({3, 4}, rng);  // breaks symmetry of sums

  auto wsum = [&](const Tensor& y) { return sum(y * weights); };
  check_op("add", [&](const Tensor& x) { return wsum(x + b); }, a);
  check_op("sub", [&](const Tensor& x) { return wsum(b - x); }, a);
  check_op("mul", [&](const Tensor& x) { return wsum(x * b); }, a);
  check_op("div numerator", [&](const Tensor& x) { return wsum(x / pos); }, a);
  check_op("div denominator", [&](const Tensor& x) { return wsum(b / x); }, pos);
  check_op("scalar broadcast", [&](const Tensor& x) { return wsum(b * x); }, s);
  check_op("neg/scale", [&](const Tensor& x) { return wsum(scale(-x, 2.5)); }, a);
  check_op("matmul left", [&](const Tensor& x) { return sum(tanh(matmul(x, m))); }, a);
  check_op("matmul right", [&](const Tensor& x) { return sum(tanh(matmul(a, x))); }, m);
  check_op("linear x", [&](const Tensor& x) { return sum(tanh(linear(x, w, bias))); }, a);
  check_op("linear W", [&](const Tensor& x) { return sum(tanh(linear(a, x, bias))); }, w);
  check_op("linear b", [&](const Tensor& x) { return sum(tanh(linear(a, w, x))); }, bias);
  check_op("transpose", [&](const Tensor& x) { return sum(tanh(matmul(transpose(x), b))); }, a);
  check_op("reshape", [&](const Tensor& x) { return sum(tanh(matmul(reshape(x, {4, 3}), a))); }, a);
  check_op("expand_rows", [&](const Tensor& x) { return wsum(tanh(expand_rows(x, 3))); },
           random_tensor({4}, rng));
  check_op("slice_cols", [&](const Tensor& x) { return sum(tanh(slice_cols(x, 1, 2)) * slice_cols(b, 0, 2)); }, a);
  check_op("concat_cols", [&](const Tensor& x) {
    const Tensor parts[] = {x, tanh(x), b};
    return sum(tanh(concat_cols(parts)));
  }, a);
  check_op("tanh", [&](const Tensor& x) { return wsum(tanh(x)); }, a);
  check_op("sigmoid", [&](const Tensor& x) { return wsum(sigmoid(x)); }, a);
  check_op("relu", [&](const Tensor& x) { return wsum(relu(x)); }, a);
  check_op("exp", [&](const Tensor& x) { return wsum(exp(x)); }, a);
  check_op("log", [&](const Tensor& x) { return wsum(log(x)); }, pos);
  check_op("clamp", [&](const Tensor& x) { return wsum(clamp(x, -0.5, 0.5)); }, a);
  check_op("softmax axis 1", [&](const Tensor& x) { return wsum(softmax(x, 1)); }, a);
  check_op("softmax axis 0", [&](const Tensor& x) { return wsum(softmax(x, 0)); }, a);
  check_op("log_softmax axis 1", [&](const Tensor& x) { return wsum(log_softmax(x, 1)); }, a);
  check_op("log_softmax axis 0", [&](const Tensor& x) { return wsum(log_softmax(x, 0)); }, a);
  check_op("sum axis", [&](const Tensor& x) { return sum(tanh(sum(x, 0))); }, a);
  check_op("mean axis", [&](const Tensor& x) { return sum(tanh(mean(x, 1))); }, a);
  check_op("mean all", [&](const Tensor& x) { return tanh(mean(x)); }, a);
  const std::vector<std::size_t> idx{2, 0, 2};
  check_op("embedding_lookup", [&](const Tensor& x) { return sum(tanh(embedding_lookup(x, idx))); }, a);
  check_op("pick", [&](const Tensor& x) { return sum(tanh(pick(x, idx))); }, a);
  const std::vector<std::size_t> which{1, 0, 1};
  check_op("select_rows", [&](const Tensor& x) {
    const Tensor c[] = {tanh(x), x * b};
    return wsum(select_rows(c, which));
  }, a);
  const std::vector<bool> keep{true, false, true};
  check_op("keep_where", [&](const Tensor& x) { return wsum(tanh(keep_where(x, keep))); }, a);
  const Tensor c3 = random_tensor({3, 4, 2}, rng);
  const Tensor v = random_tensor({3, 2}, rng);
  check_op("batched_matvec c", [&](const Tensor& x) { return wsum(tanh(batched_matvec(x, v))); }, c3);
  check_op("batched_matvec v", [&](const Tensor& x) { return wsum(tanh(batched_matvec(c3, x))); }, v);
}

TEST_CASE("straight_through: one-hot forward, relaxed gradient") {
  Rng rng(12);
  const Tensor w = random_tensor({3, 4}, rng);
  Tensor x1 = random_tensor({3, 4}, rng, true);
  Tensor x2 = x1.clone();
  const Tensor hard = straight_through(softmax(x1, 1));
  const auto idx = argmax_rows(x1);
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(hard[r * 4 + c] == (c == idx[r] ? 1.0 : 0.0));
  }
  backward(sum(hard * w));
  backward(sum(softmax(x2, 1) * w));
  CHECK(bitwise_equal(x1.grad(), x2.grad()));
}

TEST_CASE("ops: keep_where writes exact +0") {
  Tensor x = Tensor::vector({-1.0, 2.0}, true);
  const std::vector<bool> keep{false, true};
  const Tensor y = keep_where(scale(x, -1.0), keep);
  CHECK(!std::signbit(y[0]));
  CHECK(y[0] == 0.0);
  backward(sum(y));
  CHECK(!std::signbit(x.grad()[0]));
}

TEST_CASE("backward: composite f(x) = mean(tanh(Wx + b)) matches finite differences") {
  Rng rng(9);
  Tensor w = random_tensor({3, 4}, rng, true), b = random_tensor({3}, rng, true);
  const Tensor x = random_tensor({2, 4}, rng);
  Tensor params[] = {w, b};
  CHECK(grad_check([&] { return mean(tanh(linear(x, w, b))); }, params) < 1e-6);
}

TEST_CASE("ops: argmax breaks ties toward the lowest index") {
  const auto idx = argmax_rows(Tensor::matrix(2, 3, {1, 3, 3, 2, 2, 2}));
  CHECK(idx == std::vector<std::size_t>{1, 0});
}
