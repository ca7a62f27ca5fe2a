#include <cmath>
#include <numbers>

#include "doctest.h"
#include "egg/agents.hpp"
#include "egg/grad_check.hpp"
#include "helpers.hpp"

using namespace egg;
using egg::test::bitwise_equal;
using egg::test::random_tensor;
using egg::test::to_vec;

TEST_CASE("message_lengths: first eos plus one, else L") {
  const std::vector<std::size_t> grid{0, 4, 7, 3, 0, 5, 2, 3, 4};
  CHECK(message_lengths(grid, 3, 3) == std::vector<std::size_t>{1, 2, 3});
  CHECK_THROWS(message_lengths(grid, 2, 3));
}

TEST_CASE("vocab: validation") {
  CHECK_THROWS(VocabSpec{1, 1}.validate());
  CHECK_THROWS(VocabSpec{4, 0}.validate());
  CHECK_NOTHROW(VocabSpec{2, 1}.validate());
  CHECK(VocabSpec::eos == 0);
}

TEST_CASE("gumbel: deterministic, finite, mean is the Euler-Mascheroni constant") {
  Rng a(1), b(1);
  CHECK(bitwise_equal(sample_gumbel({100}, a).values(), sample_gumbel({100}, b).values()));
  Rng r(2);
  const std::size_t n = 1000000;
  const Tensor g = sample_gumbel({n}, r);
  double total = 0.0;
  bool finite = true;
  for (double v : g.values()) {
    total += v;
    finite = finite && std::isfinite(v);
  }
  CHECK(finite);
  const double sd = std::numbers::pi / std::sqrt(6.0) / std::sqrt(static_cast<double>(n));
  CHECK(std::abs(total / n - std::numbers::egamma) < 3 * sd);
}

TEST_CASE("gs: temperature must be positive") {
  Rng r(3);
  CHECK_THROWS_AS(gs_sample(Tensor({1, 3}), 0.0, r), std::invalid_argument);
  CHECK_THROWS_AS(gs_sample(Tensor({1, 3}), -1.0, r), std::invalid_argument);
}

TEST_CASE("gs: uniform logits with equal noise give a uniform sample") {
  const Tensor y = gs_relax(Tensor({1, 4}), Tensor::full({1, 4}, 0.3), 0.7);
  for (double v : y.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("gs: low temperature approaches the one-hot of argmax(logits + g)") {
  Rng r(4);
  const Tensor logits = random_tensor({3, 5}, r, false, -2, 2);
  const Tensor g = sample_gumbel({3, 5}, r);
  const Tensor y = gs_relax(logits, g, 1e-4);
  const auto idx = argmax_rows(logits + g);
  for (std::size_t b = 0; b < 3; ++b) CHECK(y[b * 5 + idx[b]] > 1 - 1e-9);
}

TEST_CASE("gs: samples are normalised for any temperature") {
  Rng r(5);
  const Tensor logits = random_tensor({50, 6}, r, false, -3, 3);
  for (double tau : {0.1, 1.0, 10.0}) {
    const Tensor y = gs_sample(logits, tau, r);
    for (std::size_t b = 0; b < 50; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) {
        CHECK(y[b * 6 + j] >= 0.0);
        s += y[b * 6 + j];
      }
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("gs: relaxation is differentiable in the logits") {
  Rng r(6);
  const Tensor g = sample_gumbel({2, 5}, r);
  const Tensor w = random_tensor({2, 5}, r);
  for (double tau : {0.5, 1.0, 3.0}) {
    CHECK(grad_check([&](const Tensor& x) { return sum(gs_relax(log_softmax(x, 1), g, tau) * w); },
                     random_tensor({2, 5}, r)) < 1e-5);
  }
}

TEST_CASE("categorical: degenerate logits, frequencies, log-prob gradient") {
  Rng r(7);
  const auto s = categorical_sample(Tensor::matrix(1, 2, {0, -1e9}), r);
  CHECK(s.index[0] == 0);
  CHECK(std::abs(s.log_prob[0]) < 1e-12);

  const Tensor logits = Tensor::matrix(1, 4, {0.5, -1.0, 1.5, 0.0});
  const Tensor p = softmax(logits, 1);
  const int n = 100000;
  std::vector<int> counts(4);
  Rng freq(70);
  for (int i = 0; i < n; ++i) ++counts[categorical_sample(logits, freq).index[0]];
  for (std::size_t j = 0; j < 4; ++j) {
    const double sd = std::sqrt(n * p[j] * (1 - p[j]));
    CHECK(std::abs(counts[j] - n * p[j]) < 3 * sd);
  }

  Tensor x = Tensor::matrix(1, 4, {0.5, -1.0, 1.5, 0.0}, true);
  const std::vector<std::size_t> idx{2};
  backward(sum(categorical_log_prob(x, idx)));
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(x.grad()[j] == doctest::Approx((j == 2 ? 1.0 : 0.0) - p[j]).epsilon(1e-14));
  }
  CHECK(grad_check([&](const Tensor& t) { return sum(categorical_log_prob(t, idx)); }, logits) < 1e-6);
  CHECK(grad_check([&](const Tensor& t) { return sum(categorical_entropy(t)); }, logits) < 1e-6);
}

TEST_CASE("baseline: running mean") {
  RunningMeanBaseline b;
  CHECK(b.value() == 0.0);
  b.update(1);
  b.update(2);
  b.update(3);
  CHECK(b.value() == 2.0);
  RunningMeanBaseline c;
  for (int i = 0; i < 100; ++i) {
    c.update(0.3);
    CHECK(c.value() == 0.3);
  }
}

TEST_CASE("surrogate: zero advantage, mismatch error, baseline read before update") {
  Tensor logits = Tensor::matrix(3, 2, {0.1, 0.2, -0.3, 0.4, 0.5, -0.6}, true);
  const std::vector<std::size_t> idx{0, 1, 1};
  RunningMeanBaseline b;
  b.update(2.0);
  const Tensor loss = Tensor::vector({2.0, 2.0, 2.0});
  const Tensor s = reinforce_surrogate(loss, categorical_log_prob(logits, idx), b);
  CHECK(s.recorded());
  backward(s);
  for (double g : logits.grad()) CHECK(g == 0.0);
  CHECK(b.count() == 2);

  CHECK_THROWS_AS(reinforce_surrogate(Tensor::vector({1, 2}), Tensor::vector({1, 2, 3}), b),
                  ShapeError);

  // value = mean((L - b_old) * logp + L)
  RunningMeanBaseline b2;
  b2.update(1.0);
  const Tensor v = reinforce_surrogate(Tensor::vector({3.0, 5.0}), Tensor::vector({-1.0, -2.0}), b2);
  CHECK(v.item() == doctest::Approx(((2.0 * -1.0 + 3.0) + (4.0 * -2.0 + 5.0)) / 2.0));
  CHECK(b2.value() == doctest::Approx((1.0 + 4.0) / 2.0));
}

namespace {

// Sender core returning fixed logits; receiver core passing its input on.
struct ConstCore : SenderCore {
  Tensor logits;
  explicit ConstCore(Tensor l) : logits(std::move(l)) {}
  Tensor forward(const Tensor& x) const override {
    std::vector<Tensor> rows;
    Tensor out({x.dim(0), logits.numel()});
    auto v = out.mutable_values();
    for (std::size_t b = 0; b < x.dim(0); ++b) {
      std::copy(logits.values().begin(), logits.values().end(), v.begin() + b * logits.numel());
    }
    return out;
  }
  std::size_t output_size() const override { return logits.numel(); }
  ParamList parameters() const override { return {}; }
};

struct LinearSender : SenderCore {
  Linear l;
  LinearSender(std::size_t in, std::size_t out, Rng& rng) : l(in, out, rng) {}
  Tensor forward(const Tensor& x) const override { return l.forward(x); }
  std::size_t output_size() const override { return l.out_features(); }
  ParamList parameters() const override { return l.parameters(); }
};

struct IdentityReceiver : ReceiverCore {
  std::size_t n;
  explicit IdentityReceiver(std::size_t size) : n(size) {}
  Tensor forward(const Tensor& r, const std::optional<Tensor>&) const override { return r; }
  std::size_t input_size() const override { return n; }
  ParamList parameters() const override { return {}; }
};

}  // namespace

TEST_CASE("symbol wrappers: GS rows sum to 1, REINFORCE degenerate, determinism, V mismatch") {
  Rng rng(8);
  const VocabSpec vocab{4, 1};
  auto core = std::make_shared<LinearSender>(3, 4, rng);
  auto gs = wrap_symbol_gs(core, vocab);
  const Tensor x = random_tensor({5, 3}, rng);
  const auto m = std::get<RelaxedMessage>(gs->send(x, rng, true));
  REQUIRE(m.steps.size() == 1);
  for (std::size_t b = 0; b < 5; ++b) {
    double s = 0.0;
    for (std::size_t j = 0; j < 4; ++j) s += m.steps[0][b * 4 + j];
    CHECK(std::abs(s - 1.0) < 1e-12);
  }

  auto fixed = wrap_symbol_reinforce(std::make_shared<ConstCore>(Tensor::vector({0, -1e9, -1e9, -1e9})), vocab);
  for (int i = 0; i < 20; ++i) {
    CHECK(std::get<DiscreteMessage>(fixed->send(x, rng, true)).symbols ==
          std::vector<std::size_t>(5, 0));
  }

  auto rf = wrap_symbol_reinforce(core, vocab);
  Rng r1(9), r2(9);
  CHECK(std::get<DiscreteMessage>(rf->send(x, r1, true)).symbols ==
        std::get<DiscreteMessage>(rf->send(x, r2, true)).symbols);

  CHECK_THROWS(wrap_symbol_reinforce(std::make_shared<LinearSender>(3, 5, rng), vocab));
}

namespace {

struct SeqFixture {
  Rng rng{10};
  VocabSpec vocab{6, 3};
  RnnCell cell{CellKind::lstm, 4, 5, rng};
  Embedding embed{6, 4, rng};
  Linear to_vocab{5, 6, rng};
  Tensor start = random_tensor({4}, rng, true);
  Tensor h0 = random_tensor({2, 5}, rng);

  SequenceSenderParts parts() const { return {cell, embed, to_vocab, start}; }
};

}  // namespace

TEST_CASE("unroll: forced [3,0,5] stops at eos and sums two steps") {
  SeqFixture f;
  const std::vector<std::size_t> forced{3, 0, 5, 1, 2, 4};
  UnrollMode mode;
  mode.forced = forced;
  const auto msg = std::get<DiscreteMessage>(unroll_sender(f.h0, f.parts(), f.vocab, mode, f.rng));
  CHECK(msg.lengths == std::vector<std::size_t>{2, 3});
  CHECK(msg.symbols == std::vector<std::size_t>{3, 0, 0, 1, 2, 4});

  // Oracle: step the cell by hand.
  RnnState s = f.cell.state_from(f.h0);
  Tensor x = expand_rows(f.start, 2);
  std::vector<double> lp(2, 0.0);
  for (std::size_t t = 0; t < 3; ++t) {
    s = f.cell.step(x, s);
    const Tensor l = log_softmax(f.to_vocab.forward(s.h), 1);
    const std::vector<std::size_t> col{forced[t], forced[3 + t]};
    if (t < 2) lp[0] += l[0 * 6 + col[0]];
    lp[1] += l[1 * 6 + col[1]];
    x = f.embed.lookup(col);
  }
  CHECK(msg.log_prob[0] == doctest::Approx(lp[0]).epsilon(1e-14));
  CHECK(msg.log_prob[1] == doctest::Approx(lp[1]).epsilon(1e-14));
  CHECK(msg.log_prob[0] <= 0.0);
  Tape::current().discard();
}

TEST_CASE("unroll: post-eos forced symbols do not matter") {
  SeqFixture f;
  const std::vector<std::size_t> a{0, 5, 5, 2, 0, 1}, b{0, 1, 3, 2, 0, 4};
  UnrollMode ma, mb;
  ma.forced = a;
  mb.forced = b;
  const auto x = std::get<DiscreteMessage>(unroll_sender(f.h0, f.parts(), f.vocab, ma, f.rng));
  const auto y = std::get<DiscreteMessage>(unroll_sender(f.h0, f.parts(), f.vocab, mb, f.rng));
  CHECK(bitwise_equal(x.log_prob.values(), y.log_prob.values()));
  CHECK(bitwise_equal(x.entropy.values(), y.entropy.values()));
  CHECK(x.symbols == y.symbols);
  Tape::current().discard();
}

TEST_CASE("unroll: no eos means full length; GS steps are distributions") {
  SeqFixture f;
  const std::vector<std::size_t> forced{1, 2, 3, 4, 5, 1};
  UnrollMode mode;
  mode.forced = forced;
  const auto msg = std::get<DiscreteMessage>(unroll_sender(f.h0, f.parts(), f.vocab, mode, f.rng));
  CHECK(msg.lengths == std::vector<std::size_t>{3, 3});

  UnrollMode gs;
  gs.channel = ChannelMode::gs;
  const auto rel = std::get<RelaxedMessage>(unroll_sender(f.h0, f.parts(), f.vocab, gs, f.rng));
  CHECK(rel.steps.size() == 3);
  for (const auto& y : rel.steps) {
    for (std::size_t b = 0; b < 2; ++b) {
      double s = 0.0;
      for (std::size_t j = 0; j < 6; ++j) s += y[b * 6 + j];
      CHECK(std::abs(s - 1.0) < 1e-9);
    }
  }
  const auto hard = rel.hard_symbols();
  CHECK(rel.lengths == message_lengths(hard, 2, 3));
  Tape::current().discard();
}

TEST_CASE("receive_sequence: one step, post-eos invariance, relaxed one-hot equals discrete") {
  Rng rng(11);
  RnnCell cell(CellKind::gru, 3, 4, rng);
  Embedding embed(5, 3, rng);

  DiscreteMessage m;
  m.batch = 2;
  m.max_len = 3;
  m.symbols = {0, 0, 0, 2, 3, 0};
  m.lengths = message_lengths(m.symbols, 2, 3);
  m.log_prob = Tensor({2});
  m.entropy = Tensor({2});
  const Tensor h = receive_sequence(m, cell, embed);

  const std::vector<std::size_t> first{0, 2};
  const Tensor one = cell.step(embed.lookup(first), cell.zero_state(2)).h;
  for (std::size_t j = 0; j < 4; ++j) CHECK(h[j] == one[j]);

  DiscreteMessage p = m;
  p.symbols = {0, 4, 1, 2, 3, 0};
  CHECK(bitwise_equal(receive_sequence(p, cell, embed).values(), h.values()));

  RelaxedMessage r;
  for (std::size_t t = 0; t < 3; ++t) {
    Tensor y({2, 5});
    for (std::size_t b = 0; b < 2; ++b) y.mutable_values()[b * 5 + m.at(b, t)] = 1.0;
    r.steps.push_back(y);
  }
  r.lengths = m.lengths;
  const Tensor hr = receive_sequence(r, cell, embed);
  for (std::size_t i = 0; i < h.numel(); ++i) CHECK(hr[i] == doctest::Approx(h[i]).epsilon(1e-15));

  DiscreteMessage bad = m;
  bad.symbols[5] = 9;
  CHECK_THROWS(receive_sequence(bad, cell, embed));
}

TEST_CASE("wrappers: sequence sender score reproduces the sampled log-probabilities") {
  Rng rng(12);
  const VocabSpec vocab{5, 3};
  auto core = std::make_shared<LinearSender>(3, 6, rng);
  auto sender = wrap_sequence_reinforce(core, vocab, {CellKind::gru, 4}, rng);
  const Tensor x = random_tensor({4, 3}, rng);
  const auto sent = std::get<DiscreteMessage>(sender->send(x, rng, true));
  const auto scored = sender->score(x, sent.symbols);
  CHECK(bitwise_equal(sent.log_prob.values(), scored.log_prob.values()));
  CHECK(sent.lengths == scored.lengths);
  Tape::current().discard();
}

TEST_CASE("wrappers: game-level agents agree on mode and kind") {
  Rng rng(13);
  AgentSpec spec;
  spec.vocab = {4, 1};
  for (auto mode : {ChannelMode::gs, ChannelMode::reinforce}) {
    spec.mode = mode;
    auto [s, r] = wrap_agents(std::make_shared<LinearSender>(3, 4, rng),
                              std::make_shared<IdentityReceiver>(6), spec, rng);
    CHECK(s->mode() == mode);
    CHECK(r->mode() == mode);
    const Tensor x = random_tensor({2, 3}, rng);
    const auto out = r->receive(s->send(x, rng, true), std::nullopt, rng, true);
    CHECK(out.output.shape() == Shape{2, 6});
    Tape::current().discard();
  }
}
