#include <cmath>

#include "doctest.h"
#include "egg/grad_check.hpp"
#include "egg/nn.hpp"
#include "egg/optim.hpp"
#include "helpers.hpp"

using namespace egg;
using egg::test::bitwise_equal;
using egg::test::random_tensor;
using egg::test::to_vec;

namespace {

Tensor param(const RnnCell& cell, const std::string& name) {
  for (auto& p : cell.parameters()) {
    if (p.name == name) return p.tensor;
  }
  FAIL("no parameter " << name);
  return {};
}

void fill(Tensor t, double v) {
  for (double& x : t.mutable_values()) x = v;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Scalar re-implementation of one step for a single sample, from the gate
// equations with the blocks W[g*H + j, :].
struct Oracle {
  const RnnCell& cell;
  std::vector<double> pre(const Tensor& w, const std::vector<double>& v, std::size_t gate) const {
    const std::size_t H = cell.hidden_size(), n = v.size();
    std::vector<double> out(H, 0.0);
    for (std::size_t j = 0; j < H; ++j) {
      for (std::size_t i = 0; i < n; ++i) out[j] += w[(gate * H + j) * n + i] * v[i];
    }
    return out;
  }
  double bias(const std::string& name, std::size_t gate, std::size_t j) const {
    return param(cell, name)[gate * cell.hidden_size() + j];
  }

  std::pair<std::vector<double>, std::vector<double>> step(const std::vector<double>& x,
                                                           const std::vector<double>& h,
                                                           const std::vector<double>& c) const {
    const Tensor wx = param(cell, "W_x"), wh = param(cell, "W_h");
    const std::size_t H = cell.hidden_size();
    std::vector<double> h2(H), c2(H);
    switch (cell.kind()) {
      case CellKind::elman: {
        const auto a = pre(wx, x, 0), b = pre(wh, h, 0);
        for (std::size_t j = 0; j < H; ++j) h2[j] = std::tanh(a[j] + b[j] + bias("b_x", 0, j));
        break;
      }
      case CellKind::gru: {
        for (std::size_t j = 0; j < H; ++j) {
          const double r = sig(pre(wx, x, 0)[j] + bias("b_x", 0, j) + pre(wh, h, 0)[j] + bias("b_h", 0, j));
          const double z = sig(pre(wx, x, 1)[j] + bias("b_x", 1, j) + pre(wh, h, 1)[j] + bias("b_h", 1, j));
          const double n = std::tanh(pre(wx, x, 2)[j] + bias("b_x", 2, j) +
                                     r * (pre(wh, h, 2)[j] + bias("b_h", 2, j)));
          h2[j] = (1 - z) * n + z * h[j];
        }
        break;
      }
      case CellKind::lstm: {
        for (std::size_t j = 0; j < H; ++j) {
          auto g = [&](std::size_t k) { return pre(wx, x, k)[j] + pre(wh, h, k)[j] + bias("b_x", k, j); };
          const double i = sig(g(0)), f = sig(g(1)), gg = std::tanh(g(2)), o = sig(g(3));
          c2[j] = f * c[j] + i * gg;
          h2[j] = o * std::tanh(c2[j]);
        }
        break;
      }
    }
    return {h2, c2};
  }
};

}  // namespace

TEST_CASE("linear: identity and constant layers") {
  Rng rng(1);
  Linear l(3, 3, rng);
  auto p = l.parameters();
  fill(p[0].tensor, 0.0);
  for (std::size_t i = 0; i < 3; ++i) p[0].tensor.mutable_values()[i * 3 + i] = 1.0;
  const Tensor x = random_tensor({2, 3}, rng);
  CHECK(bitwise_equal(l.forward(x).values(), x.values()));
  fill(p[0].tensor, 0.0);
  fill(p[1].tensor, 1.25);
  for (double v : l.forward(x).values()) CHECK(v == 1.25);
  CHECK_THROWS(l.forward(random_tensor({2, 4}, rng)));
}

TEST_CASE("linear: gradient check") {
  Rng rng(2);
  Linear l(4, 3, rng);
  const Tensor x = random_tensor({5, 4}, rng);
  std::vector<Tensor> ps{l.weight(), l.bias()};
  CHECK(grad_check([&] { return sum(tanh(l.forward(x))); }, ps) < 1e-6);
}

TEST_CASE("init_params: bounds, zero biases, determinism, errors") {
  Rng a(5), b(5);
  const auto p1 = init_params({{"W", {3, 4}, 4, ParamRole::weight}, {"b", {3}, 0, ParamRole::bias}}, a);
  const auto p2 = init_params({{"W", {3, 4}, 4, ParamRole::weight}, {"b", {3}, 0, ParamRole::bias}}, b);
  CHECK(bitwise_equal(p1[0].tensor.values(), p2[0].tensor.values()));
  for (double v : p1[0].tensor.values()) CHECK(std::abs(v) <= 0.5);
  for (double v : p1[1].tensor.values()) CHECK(v == 0.0);
  CHECK(p1[0].tensor.requires_grad());
  CHECK_THROWS(init_params({{"W", {0, 4}, 4, ParamRole::weight}}, a));
  CHECK_THROWS(init_params({{"W", {3, 4}, 0, ParamRole::weight}}, a));
}

TEST_CASE("cells: zero parameters and zero state give zero output") {
  Rng rng(3);
  const Tensor x = random_tensor({2, 3}, rng);
  for (CellKind k : {CellKind::elman, CellKind::gru, CellKind::lstm}) {
    RnnCell cell(k, 3, 4, rng);
    for (auto& p : cell.parameters()) fill(p.tensor, 0.0);
    const RnnState s = cell.step(x, cell.zero_state(2));
    for (double v : s.h.values()) CHECK(v == 0.0);
    if (k == CellKind::lstm) {
      for (double v : s.c->values()) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("cells: one step matches the written equations") {
  Rng rng(4);
  for (CellKind k : {CellKind::elman, CellKind::gru, CellKind::lstm}) {
    CAPTURE(to_string(k));
    RnnCell cell(k, 3, 4, rng);
    for (auto& p : cell.parameters()) {
      for (double& v : p.tensor.mutable_values()) v = rng.uniform(-1, 1);
    }
    const Tensor x = random_tensor({1, 3}, rng), h = random_tensor({1, 4}, rng),
                 c = random_tensor({1, 4}, rng);
    RnnState st{h, std::nullopt};
    if (k == CellKind::lstm) st.c = c;
    const RnnState got = cell.step(x, st);
    const auto [h2, c2] = Oracle{cell}.step(to_vec(x.values()), to_vec(h.values()), to_vec(c.values()));
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(got.h[j] == doctest::Approx(h2[j]).epsilon(1e-13));
      if (k == CellKind::lstm) CHECK((*got.c)[j] == doctest::Approx(c2[j]).epsilon(1e-13));
    }
  }
}

TEST_CASE("cells: saturated gates carry or overwrite state") {
  Rng rng(5);
  const Tensor x({1, 2});
  const Tensor h = Tensor::matrix(1, 3, {0.3, -0.6, 0.9});
  const Tensor c = Tensor::matrix(1, 3, {1.5, -2.0, 0.25});

  // GRU: z -> 1 keeps h; z -> 0 with a zero candidate wipes it.
  RnnCell gru(CellKind::gru, 2, 3, rng);
  for (auto& p : gru.parameters()) fill(p.tensor, 0.0);
  Tensor bx = param(gru, "b_x");
  for (std::size_t j = 0; j < 3; ++j) bx.mutable_values()[3 + j] = 30.0;
  auto kept = gru.step(x, {h, std::nullopt}).h;
  for (std::size_t j = 0; j < 3; ++j) CHECK(kept[j] == doctest::Approx(h[j]).epsilon(1e-12));
  for (std::size_t j = 0; j < 3; ++j) bx.mutable_values()[3 + j] = -30.0;
  auto wiped = gru.step(x, {h, std::nullopt}).h;
  for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(wiped[j]) < 1e-12);

  // LSTM: f -> 1, i -> 0 carries c; f -> 0, i -> 1 overwrites it with g.
  RnnCell lstm(CellKind::lstm, 2, 3, rng);
  for (auto& p : lstm.parameters()) fill(p.tensor, 0.0);
  Tensor lb = param(lstm, "b_x");
  auto set_gate = [&](std::size_t gate, double v) {
    for (std::size_t j = 0; j < 3; ++j) lb.mutable_values()[gate * 3 + j] = v;
  };
  set_gate(0, -30.0);
  set_gate(1, 30.0);
  set_gate(2, 0.5);
  auto carried = lstm.step(x, {h, c});
  for (std::size_t j = 0; j < 3; ++j) CHECK((*carried.c)[j] == doctest::Approx(c[j]).epsilon(1e-12));
  set_gate(0, 30.0);
  set_gate(1, -30.0);
  auto replaced = lstm.step(x, {h, c});
  for (std::size_t j = 0; j < 3; ++j) CHECK((*replaced.c)[j] == doctest::Approx(std::tanh(0.5)).epsilon(1e-12));
}

TEST_CASE("cells: state shape mismatch is an error") {
  Rng rng(6);
  RnnCell cell(CellKind::lstm, 3, 4, rng);
  CHECK_THROWS_AS(cell.step(Tensor({2, 3}), cell.zero_state(3)), ShapeError);
  CHECK_THROWS_AS(cell.step(Tensor({2, 3}), RnnState{Tensor({2, 4}), std::nullopt}), ShapeError);
  CHECK_THROWS_AS(cell.step(Tensor({2, 5}), cell.zero_state(2)), ShapeError);
}

TEST_CASE("cells: three-step unrolled gradients match finite differences") {
  Rng rng(7);
  for (CellKind k : {CellKind::elman, CellKind::gru, CellKind::lstm}) {
    CAPTURE(to_string(k));
    RnnCell cell(k, 3, 4, rng);
    std::vector<Tensor> ps;
    for (auto& p : cell.parameters()) {
      for (double& v : p.tensor.mutable_values()) v = rng.uniform(-1, 1);
      ps.push_back(p.tensor);
    }
    Tensor h0 = random_tensor({2, 4}, rng, true);
    ps.push_back(h0);
    std::vector<Tensor> xs;
    for (int t = 0; t < 3; ++t) {
      xs.push_back(random_tensor({2, 3}, rng, true));
      ps.push_back(xs.back());
    }
    const Tensor w = random_tensor({2, 4}, rng);
    auto f = [&] {
      RnnState s = cell.state_from(h0);
      for (const auto& x : xs) s = cell.step(x, s);
      return sum(s.h * w);
    };
    CHECK(grad_check(f, ps) < 1e-5);
  }
}

TEST_CASE("adam: zero gradient, first step, lr 0, shape errors") {
  Tensor p = Tensor::vector({1.0, -2.0}, true);
  ParamList params{{"p", p}};
  AdamState st = make_adam_state(params, {});
  adam_step(st, params);
  CHECK(to_vec(p.values()) == std::vector<double>{1.0, -2.0});
  for (double m : st.m[0]) CHECK(m == 0.0);

  AdamConfig cfg;
  cfg.lr = 0.001;
  AdamState first = make_adam_state(params, cfg);
  for (double& g : p.mutable_grad()) g = 1.0;
  adam_step(first, params);
  // m_hat = 1, v_hat = 1 at t = 1
  CHECK(p[0] == doctest::Approx(1.0 - 0.001 / (1.0 + 1e-8)).epsilon(1e-15));
  CHECK(first.t == 1);

  Tensor q = Tensor::vector({0.5, 0.25}, true);
  ParamList qs{{"q", q}};
  AdamConfig frozen;
  frozen.lr = 0.0;
  AdamState fz = make_adam_state(qs, frozen);
  for (int i = 0; i < 10; ++i) {
    for (double& g : q.mutable_grad()) g = 3.0;
    adam_step(fz, qs);
  }
  CHECK(to_vec(q.values()) == std::vector<double>{0.5, 0.25});

  ParamList other{{"r", Tensor::vector({1, 2, 3}, true)}};
  CHECK_THROWS(adam_step(fz, other));
}

TEST_CASE("zero_grads: clears, idempotent, leaves values") {
  Tensor p = Tensor::vector({1, 2}, true);
  backward(sum(p * p));
  ParamList ps{{"p", p}};
  zero_grads(ps);
  zero_grads(ps);
  CHECK(to_vec(p.grad()) == std::vector<double>{0, 0});
  CHECK(to_vec(p.values()) == std::vector<double>{1, 2});
}

TEST_CASE("optimizer: export/import round trip continues identically") {
  Rng rng(8);
  auto make = [](Tensor p) { return Adam(ParamList{{"p", p}}, AdamConfig{0.1, 0.9, 0.999, 1e-8}); };
  Tensor a = random_tensor({3}, rng, true);
  Tensor b = a.clone();
  Adam oa = make(a);
  Adam ob = make(b);
  auto step = [](Adam& o, Tensor& p) {
    o.zero_grad();
    backward(sum(tanh(p) * p));
    o.step();
  };
  step(oa, a);
  step(ob, b);
  std::map<std::string, Tensor> saved;
  for (auto& s : ob.export_state()) saved[s.name] = s.tensor.clone();
  Adam oc = make(b);
  oc.import_state(saved);
  step(oa, a);
  step(oc, b);
  CHECK(bitwise_equal(a.values(), b.values()));
}
