#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <cmath>
#include <cstring>
#include <vector>

#include "catgen/nn.hpp"
#include "catgen/rng.hpp"
#include "catgen/tensor.hpp"

using namespace catgen;
using namespace catgen::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

bool close(double a, double n) {
  const double diff = std::abs(a - n);
  return diff <= 1e-4 * std::max(std::abs(a), std::abs(n)) || diff <= 1e-7;
}

// Checks d(sum(weights * f(t)))/dt against central differences.
template <class Loss>
void check_gradient(Tensor& t, const Tensor& analytic, Loss loss) {
  constexpr double eps = 1e-5;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double saved = t[i];
    t[i] = saved + eps;
    const double up = loss();
    t[i] = saved - eps;
    const double down = loss();
    t[i] = saved;
    const double numeric = (up - down) / (2 * eps);
    INFO("entry " << i << " analytic " << analytic[i] << " numeric " << numeric);
    CHECK(close(analytic[i], numeric));
  }
}

double weighted_sum(const Tensor& y, const Tensor& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * w[i];
  return s;
}

}  // namespace

TEST_SUITE("affine") {
  TEST_CASE("zero parameters give zero output") {
    Rng rng(1);
    const auto p = AffineParams::zeros(3, 2);
    const auto y = affine_forward(p, random_tensor({4, 2}, rng));
    for (double v : y.values()) CHECK(v == 0.0);
  }

  TEST_CASE("identity weights pass x through") {
    AffineParams p{Tensor::matrix(2, 2, {1, 0, 0, 1}), Tensor::vector({0, 0})};
    const auto x = Tensor::matrix(1, 2, {0.25, -3});
    CHECK(bitwise_equal(affine_forward(p, x), x));
  }

  TEST_CASE("hand-computed product") {
    AffineParams p{Tensor::matrix(2, 2, {1, 2, 3, 4}), Tensor::vector({1, 1})};
    const auto y = affine_forward(p, Tensor::matrix(1, 2, {1, 1}));
    CHECK(y.at(0, 0) == 4.0);
    CHECK(y.at(0, 1) == 8.0);
  }

  TEST_CASE("backward matches finite differences") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      auto p = AffineParams::init(4, 3, rng);
      p.bias = random_tensor({4}, rng);
      auto x = random_tensor({3, 3}, rng);
      const auto w = random_tensor({3, 4}, rng);
      auto grad = AffineParams::zeros(4, 3);
      const auto gx = affine_backward(p, x, w, grad);
      auto loss = [&] { return weighted_sum(affine_forward(p, x), w); };
      check_gradient(p.weight, grad.weight, loss);
      check_gradient(p.bias, grad.bias, loss);
      check_gradient(x, gx, loss);
    }
  }

  TEST_CASE("backward is linear in the upstream gradient") {
    Rng rng(3);
    const auto p = AffineParams::init(3, 2, rng);
    const auto x = random_tensor({2, 2}, rng);
    auto g = random_tensor({2, 3}, rng);
    auto g1 = AffineParams::zeros(3, 2);
    const auto gx1 = affine_backward(p, x, g, g1);
    for (auto& v : g.values()) v *= 2;
    auto g2 = AffineParams::zeros(3, 2);
    const auto gx2 = affine_backward(p, x, g, g2);
    for (std::size_t i = 0; i < gx1.size(); ++i) CHECK(gx2[i] == 2 * gx1[i]);
    for (std::size_t i = 0; i < g1.weight.size(); ++i) CHECK(g2.weight[i] == 2 * g1.weight[i]);

    for (auto& v : g.values()) v = 0;
    auto g0 = AffineParams::zeros(3, 2);
    const auto gx0 = affine_backward(p, x, g, g0);
    for (double v : gx0.values()) CHECK(v == 0.0);
    for (double v : g0.weight.values()) CHECK(v == 0.0);
  }

  TEST_CASE("shape mismatch throws") {
    const auto p = AffineParams::zeros(3, 2);
    CHECK_THROWS(affine_forward(p, Tensor({1, 3})));
  }
}

TEST_SUITE("lstm") {
  double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

  TEST_CASE("init lays out forget bias of one") {
    Rng rng(1);
    const auto p = LstmCellParams::init(5, 3, rng);
    for (std::size_t i = 0; i < 12; ++i) CHECK(p.bias[i] == (i >= 3 && i < 6 ? 1.0 : 0.0));
    for (double v : p.w_ih.values()) CHECK(std::abs(v) <= 1 / std::sqrt(5.0));
    for (double v : p.w_hh.values()) CHECK(std::abs(v) <= 1 / std::sqrt(3.0));
  }

  TEST_CASE("all-zero parameters halve the cell") {
    const auto p = LstmCellParams::zeros(2, 3);
    const auto c0 = Tensor::matrix(1, 3, {1.0, -2.0, 0.5});
    const auto out = lstm_step(p, Tensor({1, 2}), Tensor({1, 3}), c0);
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(out.c[j] == doctest::Approx(0.5 * c0[j]).epsilon(1e-15));
      CHECK(out.h[j] == doctest::Approx(0.5 * std::tanh(0.5 * c0[j])).epsilon(1e-15));
    }
  }

  TEST_CASE("bias-only path from a zero state") {
    Rng rng(7);
    auto p = LstmCellParams::init(2, 3, rng);
    p.bias = random_tensor({12}, rng);
    const auto out = lstm_step(p, Tensor({1, 2}), Tensor({1, 3}), Tensor({1, 3}));
    for (std::size_t j = 0; j < 3; ++j) {
      const double c = sigmoid(p.bias[j]) * std::tanh(p.bias[6 + j]);
      CHECK(out.c[j] == doctest::Approx(c).epsilon(1e-14));
      CHECK(out.h[j] == doctest::Approx(sigmoid(p.bias[9 + j]) * std::tanh(c)).epsilon(1e-14));
    }
  }

  TEST_CASE("matches a scalar reference") {
    Rng rng(11);
    const std::size_t D = 3, H = 4, B = 2;
    auto p = LstmCellParams::init(D, H, rng);
    p.bias = random_tensor({4 * H}, rng);
    const auto x = random_tensor({B, D}, rng);
    const auto h0 = random_tensor({B, H}, rng);
    const auto c0 = random_tensor({B, H}, rng);
    const auto out = lstm_step(p, x, h0, c0);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t j = 0; j < H; ++j) {
        double z[4];
        for (std::size_t g = 0; g < 4; ++g) {
          const std::size_t row = g * H + j;
          double s = p.bias[row];
          for (std::size_t d = 0; d < D; ++d) s += p.w_ih.at(row, d) * x.at(b, d);
          for (std::size_t k = 0; k < H; ++k) s += p.w_hh.at(row, k) * h0.at(b, k);
          z[g] = s;
        }
        const double c = sigmoid(z[1]) * c0.at(b, j) + sigmoid(z[0]) * std::tanh(z[2]);
        CHECK(out.c.at(b, j) == doctest::Approx(c).epsilon(1e-12));
        CHECK(out.h.at(b, j) == doctest::Approx(sigmoid(z[3]) * std::tanh(c)).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("identical inputs give bitwise identical steps") {
    Rng rng(2);
    const auto p = LstmCellParams::init(3, 4, rng);
    const auto x = random_tensor({2, 3}, rng);
    const auto h = random_tensor({2, 4}, rng);
    const auto c = random_tensor({2, 4}, rng);
    const auto a = lstm_step(p, x, h, c);
    const auto b = lstm_step(p, x, h, c);
    CHECK(bitwise_equal(a.h, b.h));
    CHECK(bitwise_equal(a.c, b.c));
  }

  TEST_CASE("backward matches finite differences over ten seeds") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      Rng rng(seed);
      const std::size_t D = 4, H = 3, B = 3;
      auto p = LstmCellParams::init(D, H, rng);
      p.bias = random_tensor({4 * H}, rng);
      auto x = random_tensor({B, D}, rng);
      auto h0 = random_tensor({B, H}, rng);
      auto c0 = random_tensor({B, H}, rng);
      const auto wh = random_tensor({B, H}, rng);
      const auto wc = random_tensor({B, H}, rng);
      auto loss = [&] {
        const auto s = lstm_step(p, x, h0, c0);
        return weighted_sum(s.h, wh) + weighted_sum(s.c, wc);
      };
      const auto cache = lstm_step(p, x, h0, c0);
      auto grad = LstmCellParams::zeros(D, H);
      const auto g = lstm_step_backward(p, cache, wh, wc, grad);
      check_gradient(p.w_ih, grad.w_ih, loss);
      check_gradient(p.w_hh, grad.w_hh, loss);
      check_gradient(p.bias, grad.bias, loss);
      check_gradient(x, g.x, loss);
      check_gradient(h0, g.h_prev, loss);
      check_gradient(c0, g.c_prev, loss);
    }
  }

  TEST_CASE("unrolled steps equal sequential calls") {
    Rng rng(5);
    const auto p = LstmCellParams::init(2, 3, rng);
    std::vector<Tensor> xs;
    for (int t = 0; t < 5; ++t) xs.push_back(random_tensor({1, 2}, rng));
    Tensor h({1, 3}), c({1, 3});
    std::vector<Tensor> hs;
    for (const auto& x : xs) {
      auto s = lstm_step(p, x, h, c);
      h = s.h;
      c = s.c;
      hs.push_back(h);
    }
    Tensor h2({1, 3}), c2({1, 3});
    for (std::size_t t = 0; t < xs.size(); ++t) {
      auto s = lstm_step(p, xs[t], h2, c2);
      CHECK(bitwise_equal(s.h, hs[t]));
      h2 = std::move(s.h);
      c2 = std::move(s.c);
    }
  }
}

TEST_SUITE("embedding") {
  TEST_CASE("lookup and scatter-add") {
    EmbeddingTable e{Tensor::matrix(3, 2, {1, 2, 3, 4, 5, 6})};
    const std::vector<TokenId> ids{2, 0, 2};
    const auto rows = embedding_forward(e, ids);
    CHECK(rows.at(0, 0) == 5);
    CHECK(rows.at(1, 1) == 2);
    Tensor grad({3, 2});
    embedding_backward(ids, Tensor::matrix(3, 2, {1, 1, 2, 2, 3, 3}), grad);
    CHECK(grad.at(2, 0) == 4);
    CHECK(grad.at(0, 1) == 2);
    CHECK(grad.at(1, 0) == 0);
  }

  TEST_CASE("out-of-range id throws") {
    EmbeddingTable e{Tensor({3, 2})};
    const std::vector<TokenId> bad{3};
    CHECK_THROWS_AS(embedding_forward(e, bad), std::out_of_range);
  }
}

TEST_SUITE("dropout") {
  TEST_CASE("rate zero is identity with a ones mask") {
    Rng rng(1);
    const auto x = random_tensor({3, 4}, rng);
    const auto r = dropout_forward(x, 0.0, rng, true);
    CHECK(bitwise_equal(r.output, x));
    for (double m : r.mask.values()) CHECK(m == 1.0);
  }

  TEST_CASE("inference mode is bitwise identity and draws nothing") {
    Rng rng(1), fresh(1);
    const auto x = random_tensor({3, 4}, rng);
    Rng probe = rng;
    const auto r = dropout_forward(x, 0.2, probe, false);
    CHECK(bitwise_equal(r.output, x));
    CHECK(probe.next_u64() == rng.next_u64());
  }

  TEST_CASE("expected value is preserved at rate one half") {
    Rng rng(42);
    const auto x = Tensor::matrix(1, 4, {1.0, -2.0, 0.5, 3.0});
    std::vector<double> sum(4, 0.0);
    constexpr int reps = 100000;
    for (int r = 0; r < reps; ++r) {
      const auto y = dropout_forward(x, 0.5, rng, true);
      for (std::size_t i = 0; i < 4; ++i) sum[i] += y.output[i];
    }
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(std::abs(sum[i] / reps - x[i]) <= 0.02 * std::abs(x[i]));
    }
  }

  TEST_CASE("masks are zero or the inverted scale") {
    Rng rng(9);
    const auto r = dropout_forward(Tensor({10, 10}, 1.0), 0.2, rng, true);
    for (double m : r.mask.values()) CHECK((m == 0.0 || m == 1.0 / 0.8));
    const auto g = dropout_backward(Tensor({10, 10}, 1.0), r.mask);
    CHECK(bitwise_equal(g, r.mask));
  }

  TEST_CASE("invalid rates throw") {
    Rng rng(1);
    CHECK_THROWS_AS(dropout_forward(Tensor({1, 1}), 1.0, rng, true), std::invalid_argument);
    CHECK_THROWS_AS(dropout_forward(Tensor({1, 1}), -0.1, rng, true), std::invalid_argument);
  }
}

TEST_SUITE("softmax cross-entropy") {
  TEST_CASE("softmax rows sum to one") {
    Rng rng(4);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> logits(17);
      for (auto& v : logits) v = rng.uniform(-30, 30);
      double s = 0.0;
      for (double p : softmax(logits)) s += p;
      CHECK(std::abs(s - 1.0) <= 1e-12);
    }
  }

  TEST_CASE("uniform logits give ln V") {
    const Tensor logits({2, 12614}, 0.0);
    const std::vector<TokenId> targets{5, 12613};
    const std::vector<std::uint8_t> mask{1, 1};
    const auto r = softmax_cross_entropy(logits, targets, mask);
    CHECK(std::abs(r.loss - std::log(12614.0)) <= 1e-9);
  }

  TEST_CASE("loss vanishes as the margin grows") {
    double previous = 1e300;
    for (double margin : {1.0, 5.0, 20.0, 50.0}) {
      const auto logits = Tensor::matrix(1, 3, {0.0, margin, 0.0});
      const std::vector<TokenId> t{1};
      const std::vector<std::uint8_t> m{1};
      const double loss = softmax_cross_entropy(logits, t, m).loss;
      CHECK(loss < previous);
      previous = loss;
    }
    CHECK(previous < 1e-20);
  }

  TEST_CASE("matches the naive formula and its gradient") {
    Rng rng(8);
    const std::size_t B = 4, V = 6;
    auto logits = random_tensor({B, V}, rng, 3.0);
    const std::vector<TokenId> targets{0, 5, 2, 3};
    const std::vector<std::uint8_t> mask{1, 0, 1, 1};
    auto naive = [&] {
      double total = 0.0;
      for (std::size_t b = 0; b < B; ++b) {
        if (!mask[b]) continue;
        double z = 0.0;
        for (std::size_t v = 0; v < V; ++v) z += std::exp(logits.at(b, v));
        total += -std::log(std::exp(logits.at(b, static_cast<std::size_t>(targets[b]))) / z);
      }
      return total / 3.0;
    };
    const auto r = softmax_cross_entropy(logits, targets, mask);
    CHECK(std::abs(r.loss - naive()) <= 1e-10);
    CHECK(r.count == 3);
    for (std::size_t v = 0; v < V; ++v) CHECK(r.grad_logits.at(1, v) == 0.0);
    check_gradient(logits, r.grad_logits, naive);
  }

  TEST_CASE("all rows masked gives zero loss and gradient") {
    const auto r = softmax_cross_entropy(Tensor::matrix(1, 2, {1, 2}), std::vector<TokenId>{0},
                                         std::vector<std::uint8_t>{0});
    CHECK(r.loss == 0.0);
    CHECK(r.count == 0);
    for (double g : r.grad_logits.values()) CHECK(g == 0.0);
  }

  TEST_CASE("row order does not change the loss bits") {
    Rng rng(12);
    const auto logits = random_tensor({5, 7}, rng, 4.0);
    const std::vector<TokenId> t{1, 2, 3, 4, 5};
    const std::vector<std::uint8_t> m{1, 1, 1, 1, 1};
    Tensor flipped({5, 7});
    std::vector<TokenId> tf(5);
    for (std::size_t r = 0; r < 5; ++r) {
      for (std::size_t v = 0; v < 7; ++v) flipped.at(4 - r, v) = logits.at(r, v);
      tf[4 - r] = t[r];
    }
    const double a = softmax_cross_entropy(logits, t, m).loss;
    const double b = softmax_cross_entropy(flipped, tf, m).loss;
    CHECK(std::memcmp(&a, &b, sizeof a) == 0);
  }
}

TEST_SUITE("l2") {
  TEST_CASE("factor zero adds nothing") {
    const auto w = Tensor::vector({1, 2});
    Tensor g({2}, 0.5);
    CHECK(l2_penalty(w, 0.0, &g) == 0.0);
    CHECK(g[0] == 0.5);
    CHECK(g[1] == 0.5);
  }

  TEST_CASE("single weight") {
    CHECK(l2_penalty(Tensor::vector({3.0}), 1e-5, nullptr) == doctest::Approx(9e-5).epsilon(1e-12));
  }

  TEST_CASE("gradient matches finite differences") {
    Rng rng(6);
    auto w = random_tensor({3, 3}, rng);
    Tensor g({3, 3});
    l2_penalty(w, 0.1, &g);
    check_gradient(w, g, [&] { return l2_penalty(w, 0.1, nullptr); });
  }

  TEST_CASE("negative factor throws") {
    CHECK_THROWS(l2_penalty(Tensor::vector({1.0}), -1.0, nullptr));
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    auto w = Tensor::vector({1.0, -2.0});
    const auto before = w;
    AdamMoments m;
    for (int step = 1; step <= 5; ++step) adam_update(w, Tensor({2}), m, {}, step);
    CHECK(bitwise_equal(w, before));
  }

  TEST_CASE("first step by hand") {
    // m = 0.1 g, v = 0.001 g^2; bias-corrected both give g and g^2, so the
    // step is lr * g / (|g| + eps).
    auto w = Tensor::vector({0.5});
    AdamMoments m;
    const AdamConfig cfg{0.01, 0.9, 0.999, 1e-8};
    adam_update(w, Tensor::vector({-4.0}), m, cfg, 1);
    const double expected = 0.5 - 0.01 * (-4.0) / (4.0 + 1e-8);
    CHECK(w[0] == doctest::Approx(expected).epsilon(1e-14));
    CHECK(m.m[0] == doctest::Approx(-0.4).epsilon(1e-14));
    CHECK(m.v[0] == doctest::Approx(0.016).epsilon(1e-14));
  }

  TEST_CASE("minimizes a quadratic") {
    auto w = Tensor::vector({5.0});
    AdamMoments m;
    const AdamConfig cfg{0.05, 0.9, 0.999, 1e-8};
    for (int step = 1; step <= 2000; ++step) {
      adam_update(w, Tensor::vector({2 * w[0]}), m, cfg, step);
    }
    CHECK(std::abs(w[0]) < 1e-3);
  }
}
