#include <doctest.h>

#include "obo/nn.hpp"

using namespace obo;
using namespace obo::nn;

namespace {

Mat<double> random_mat(Eigen::Index r, Eigen::Index c, Rng& rng, double lo = -1.0,
                       double hi = 1.0) {
  return uniform_init<double>(r, c, lo, hi, rng);
}

}  // namespace

TEST_CASE("dense_tanh: zero input gives zero output") {
  Rng rng(1);
  Mat<double> x = Mat<double>::Zero(3, 4);
  Mat<double> W = random_mat(4, 2, rng);
  Mat<double> y = dense_tanh_forward(x, W, false, 0.0, rng);
  CHECK(y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense_tanh: p=0 in train mode equals eval mode") {
  Rng rng(2);
  Mat<double> x = random_mat(3, 4, rng);
  Mat<double> W = random_mat(4, 2, rng);
  Rng r1(7), r2(7);
  Mat<double> train = dense_tanh_forward(x, W, true, 0.0, r1);
  Mat<double> eval = dense_tanh_forward(x, W, false, 0.0, r2);
  CHECK((train - eval).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("dense_tanh: train-mode dropout scales by 1/(1-p) and is seeded") {
  Rng rng(3);
  Mat<double> x = random_mat(8, 4, rng);
  Mat<double> W = random_mat(4, 6, rng);
  Rng r1(9), r2(9);
  Mat<double> y1 = dense_tanh_forward(x, W, true, 0.5, r1);
  Mat<double> y2 = dense_tanh_forward(x, W, true, 0.5, r2);
  CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
  Rng r3(9);
  Mat<double> a = dense_tanh_forward(x, W, false, 0.5, r3);
  int zeros = 0, scaled = 0;
  for (Eigen::Index i = 0; i < y1.rows(); ++i)
    for (Eigen::Index j = 0; j < y1.cols(); ++j) {
      if (y1(i, j) == 0.0) ++zeros;
      else if (std::abs(y1(i, j) - 2.0 * a(i, j)) < 1e-12) ++scaled;
    }
  CHECK(zeros + scaled == y1.size());
  CHECK(zeros > 0);
  CHECK(scaled > 0);
}

TEST_CASE("dense_tanh: gradient matches central finite differences (1e-6)") {
  Rng rng(4);
  ParamStore<double> store;
  store.add("W", random_mat(4, 2, rng, -0.5, 0.5));
  store.add("x", random_mat(3, 4, rng));
  Mat<double> R = random_mat(3, 2, rng);  // fixed projection making a scalar loss

  auto loss = [&]() -> double {
    Rng unused(0);
    DenseTanhCache<double> cache;
    Mat<double> y =
        dense_tanh_forward<double>(store.at("x").value, store.at("W").value, false, 0.0, unused, &cache);
    double L = (y.cwiseProduct(R)).sum();
    Mat<double> dy = R;
    Mat<double> dx = dense_tanh_backward<double>(dy, store.at("W").value, cache, store.at("W").grad);
    store.at("x").grad += dx;
    return L;
  };
  auto report = grad_check(loss, store, 1e-5);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("masked_attention: one unmasked slot takes all the weight") {
  Rng rng(5);
  Mat<double> ctx = random_mat(4, 3, rng);
  Vec<double> a = random_mat(3, 1, rng).col(0);
  std::vector<char> mask = {0, 0, 1, 0};
  auto out = masked_attention(ctx, a, mask);
  CHECK(out.weights(2) == doctest::Approx(1.0));
  CHECK(out.weights(0) == 0.0);
  CHECK(out.weights(1) == 0.0);
  CHECK(out.weights(3) == 0.0);
  CHECK((out.pooled - ctx.row(2).transpose()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("masked_attention: identical contexts get uniform weights") {
  Rng rng(6);
  Vec<double> one = random_mat(3, 1, rng).col(0);
  Mat<double> ctx(5, 3);
  for (int i = 0; i < 5; ++i) ctx.row(i) = one.transpose();
  Vec<double> a = random_mat(3, 1, rng).col(0);
  std::vector<char> mask(5, 1);
  auto out = masked_attention(ctx, a, mask);
  for (int i = 0; i < 5; ++i) CHECK(out.weights(i) == doctest::Approx(0.2));
}

TEST_CASE("masked_attention: masked slots get exactly zero and weights sum to 1") {
  Rng rng(7);
  Mat<double> ctx = random_mat(6, 4, rng);
  Vec<double> a = random_mat(4, 1, rng).col(0);
  std::vector<char> mask = {1, 0, 1, 0, 1, 0};
  auto out = masked_attention(ctx, a, mask);
  CHECK(out.weights(1) == 0.0);
  CHECK(out.weights(3) == 0.0);
  CHECK(out.weights(5) == 0.0);
  CHECK(out.weights.sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("masked_attention: all-masked input is an error") {
  Rng rng(8);
  Mat<double> ctx = random_mat(3, 2, rng);
  Vec<double> a = random_mat(2, 1, rng).col(0);
  std::vector<char> mask = {0, 0, 0};
  CHECK_THROWS_AS(masked_attention(ctx, a, mask), Error);
}

TEST_CASE("masked_attention: gradient matches finite differences") {
  Rng rng(9);
  ParamStore<double> store;
  store.add("ctx", random_mat(5, 3, rng, -0.8, 0.8));
  store.add("a", random_mat(3, 1, rng, -0.8, 0.8));
  std::vector<char> mask = {1, 1, 0, 1, 0};
  Vec<double> R = random_mat(3, 1, rng).col(0);

  auto loss = [&]() -> double {
    AttentionCache<double> cache;
    Vec<double> a = store.at("a").value.col(0);
    auto out = masked_attention<double>(store.at("ctx").value, a, mask, &cache);
    double L = out.pooled.dot(R);
    Vec<double> da = Vec<double>::Zero(3);
    Mat<double> dctx = masked_attention_backward<double>(R, nullptr, a, cache, da);
    store.at("ctx").grad += dctx;
    store.at("a").grad += da;
    return L;
  };
  auto report = grad_check(loss, store, 1e-5);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("lstm: zero input, zero state, zero weights gives zero hidden state") {
  LstmParams<double> p;
  p.Wx = Mat<double>::Zero(3, 8);
  p.Wh = Mat<double>::Zero(2, 8);
  p.b = Vec<double>::Zero(8);
  p.b.segment(2, 2).setConstant(1.0);  // forget bias 1
  auto [h, c] = lstm_cell_step<double>(Vec<double>::Zero(3), Vec<double>::Zero(2),
                                       Vec<double>::Zero(2), p);
  CHECK(h.cwiseAbs().maxCoeff() == 0.0);  // o*tanh(c): c = f*0 + i*tanh(0) = 0
  CHECK(c.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("lstm: forget-gate bias initializes to 1") {
  Rng rng(10);
  LstmParams<double> p = lstm_init<double>(3, 4, rng);
  for (int k = 0; k < 4; ++k) {
    CHECK(p.b(4 + k) == 1.0);   // f segment
    CHECK(p.b(k) == 0.0);       // i segment
  }
}

TEST_CASE("lstm: single-step gradient matches finite differences (1e-6)") {
  Rng rng(11);
  ParamStore<double> store;
  store.add("Wx", xavier_init<double>(3, 16, rng));
  store.add("Wh", xavier_init<double>(4, 16, rng));
  store.add("b", random_mat(16, 1, rng, -0.2, 0.2));
  store.add("x", random_mat(1, 3, rng));
  store.add("h0", random_mat(1, 4, rng, -0.5, 0.5));
  store.add("c0", random_mat(1, 4, rng, -0.5, 0.5));
  Vec<double> R = random_mat(4, 1, rng).col(0);

  auto loss = [&]() -> double {
    LstmParams<double> p{store.at("Wx").value, store.at("Wh").value, store.at("b").value.col(0)};
    LstmBatchCache<double> cache;
    Mat<double> h, c;
    lstm_batch_step<double>(store.at("x").value, store.at("h0").value, store.at("c0").value, p,
                            h, c, &cache);
    double L = (h.row(0) * R)(0, 0);
    LstmGrads<double> grads;
    grads.init_like(p);
    Mat<double> dh = R.transpose(), dc = Mat<double>::Zero(1, 4), dx, dh0, dc0;
    lstm_batch_backward<double>(dh, dc, p, cache, grads, dx, dh0, dc0);
    store.at("Wx").grad += grads.dWx;
    store.at("Wh").grad += grads.dWh;
    store.at("b").grad += grads.db;
    store.at("x").grad += dx;
    store.at("h0").grad += dh0;
    store.at("c0").grad += dc0;
    return L;
  };
  auto report = grad_check(loss, store, 1e-5);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("lstm: 3-step unrolled gradient through time matches finite differences (1e-5)") {
  Rng rng(12);
  ParamStore<double> store;
  store.add("Wx", xavier_init<double>(3, 16, rng));
  store.add("Wh", xavier_init<double>(4, 16, rng));
  store.add("b", random_mat(16, 1, rng, -0.2, 0.2));
  store.add("x0", random_mat(1, 3, rng));
  store.add("x1", random_mat(1, 3, rng));
  store.add("x2", random_mat(1, 3, rng));
  Vec<double> R = random_mat(4, 1, rng).col(0);

  auto loss = [&]() -> double {
    LstmParams<double> p{store.at("Wx").value, store.at("Wh").value, store.at("b").value.col(0)};
    std::vector<LstmBatchCache<double>> caches(3);
    Mat<double> h = Mat<double>::Zero(1, 4), c = Mat<double>::Zero(1, 4);
    const char* names[] = {"x0", "x1", "x2"};
    for (int t = 0; t < 3; ++t) {
      Mat<double> h_next, c_next;
      lstm_batch_step<double>(store.at(names[t]).value, h, c, p, h_next, c_next, &caches[t]);
      h = h_next;
      c = c_next;
    }
    double L = (h.row(0) * R)(0, 0);
    LstmGrads<double> grads;
    grads.init_like(p);
    Mat<double> dh = R.transpose(), dc = Mat<double>::Zero(1, 4);
    for (int t = 2; t >= 0; --t) {
      Mat<double> dx, dh_prev, dc_prev;
      lstm_batch_backward<double>(dh, dc, p, caches[t], grads, dx, dh_prev, dc_prev);
      store.at(names[t]).grad += dx;
      dh = dh_prev;
      dc = dc_prev;
    }
    store.at("Wx").grad += grads.dWx;
    store.at("Wh").grad += grads.dWh;
    store.at("b").grad += grads.db;
    return L;
  };
  auto report = grad_check(loss, store, 1e-5);
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("softmax_cross_entropy: uniform logits, k=2 gives ln 2") {
  Mat<double> logits = Mat<double>::Zero(1, 2);
  auto [loss, grad] = softmax_cross_entropy(logits, {1});
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("softmax_cross_entropy: +20 margin saturates the loss below 1e-8") {
  Mat<double> logits(1, 3);
  logits << 20.0, 0.0, 0.0;
  auto [loss, grad] = softmax_cross_entropy(logits, {0});
  CHECK(loss < 1e-8);
}

TEST_CASE("softmax_cross_entropy: invalid target index is rejected") {
  Mat<double> logits = Mat<double>::Zero(2, 3);
  CHECK_THROWS_AS(softmax_cross_entropy(logits, std::vector<int>{0, 3}), Error);
}

TEST_CASE("softmax_cross_entropy: gradient matches finite differences") {
  Rng rng(13);
  ParamStore<double> store;
  store.add("logits", random_mat(4, 3, rng, -2.0, 2.0));
  std::vector<int> targets = {0, 2, 1, 2};
  auto loss = [&]() -> double {
    auto [L, grad] = softmax_cross_entropy<double>(store.at("logits").value, targets);
    store.at("logits").grad += grad;
    return L;
  };
  auto report = grad_check(loss, store, 1e-5);
  CHECK(report.max_rel_error < 1e-6);
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(14);
  Mat<double> logits = random_mat(6, 5, rng, -30, 30);
  Mat<double> p = softmax_rows(logits);
  for (Eigen::Index i = 0; i < p.rows(); ++i)
    CHECK(p.row(i).sum() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("adam: zero gradients leave parameters unchanged") {
  Rng rng(15);
  ParamStore<double> store;
  store.add("w", random_mat(3, 3, rng));
  Mat<double> before = store.at("w").value;
  store.zero_grad();
  adam_step(store, AdamConfig{});
  CHECK((store.at("w").value - before).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("adam: first step with constant gradient 1 moves by ~lr") {
  ParamStore<double> store;
  store.add("w", Mat<double>::Constant(1, 1, 5.0));
  store.at("w").grad.setConstant(1.0);
  AdamConfig cfg;
  cfg.lr = 0.1;
  adam_step(store, cfg);
  // Bias-corrected first step: lr * g / (|g| + eps') ~ lr.
  CHECK(store.at("w").value(0, 0) == doctest::Approx(5.0 - 0.1).epsilon(1e-4));
}

TEST_CASE("adam: quadratic bowl on 10 dims converges below 1e-3 in 500 steps") {
  Rng rng(16);
  ParamStore<double> store;
  store.add("w", random_mat(10, 1, rng, -1.0, 1.0));
  AdamConfig cfg;
  cfg.lr = 0.05;
  for (int step = 0; step < 500; ++step) {
    store.zero_grad();
    store.at("w").grad = 2.0 * store.at("w").value;  // d/dw of w^T w
    adam_step(store, cfg);
  }
  CHECK(store.at("w").value.norm() < 1e-3);
}

TEST_CASE("grad_check: linear model reports error below 1e-8") {
  Rng rng(17);
  ParamStore<double> store;
  store.add("w", random_mat(5, 1, rng));
  Vec<double> x = random_mat(5, 1, rng).col(0);
  auto loss = [&]() -> double {
    double L = store.at("w").value.col(0).dot(x);
    store.at("w").grad += x;
    return L;
  };
  auto report = grad_check(loss, store, 1e-5);
  CHECK(report.max_rel_error < 1e-8);
  CHECK(report.coords_checked == 5);
}

TEST_CASE("f32 and f64 forward results agree within 1e-4 relative") {
  Rng rng(18);
  Mat<double> xd = random_mat(4, 6, rng);
  Mat<double> Wd = random_mat(6, 3, rng, -0.5, 0.5);
  Mat<float> xf = xd.cast<float>();
  Mat<float> Wf = Wd.cast<float>();
  Rng r1(0), r2(0);
  Mat<double> yd = dense_tanh_forward(xd, Wd, false, 0.0, r1);
  Mat<float> yf = dense_tanh_forward(xf, Wf, false, 0.0, r2);
  for (Eigen::Index i = 0; i < yd.rows(); ++i)
    for (Eigen::Index j = 0; j < yd.cols(); ++j) {
      double rel = std::abs(yd(i, j) - double(yf(i, j))) /
                   std::max(1.0, std::abs(yd(i, j)));
      CHECK(rel < 1e-4);
    }
}

TEST_CASE("forward passes are pure given fixed inputs and RNG state") {
  Rng rng(19);
  Mat<double> x = random_mat(3, 4, rng);
  Mat<double> W = random_mat(4, 2, rng);
  Rng ra(5), rb(5);
  Mat<double> y1 = dense_tanh_forward(x, W, true, 0.25, ra);
  Mat<double> y2 = dense_tanh_forward(x, W, true, 0.25, rb);
  CHECK((y1 - y2).cwiseAbs().maxCoeff() == 0.0);
}
