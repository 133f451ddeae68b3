#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "obo/error.hpp"
#include "obo/rng.hpp"

namespace obo::nn {

template <typename S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using Vec = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// ---------------------------------------------------------------------------
// Initialization
// ---------------------------------------------------------------------------

template <typename S>
Mat<S> uniform_init(Eigen::Index rows, Eigen::Index cols, double lo, double hi, Rng& rng) {
  Mat<S> m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = static_cast<S>(rng.uniform(lo, hi));
  return m;
}

template <typename S>
Mat<S> xavier_init(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  double bound = std::sqrt(6.0 / double(rows + cols));
  return uniform_init<S>(rows, cols, -bound, bound, rng);
}

// ---------------------------------------------------------------------------
// Dense layer with tanh activation and inverted dropout
// ---------------------------------------------------------------------------

template <typename S>
struct DenseTanhCache {
  Mat<S> x;     // input
  Mat<S> a;     // tanh activations before dropout
  Mat<S> mask;  // dropout mask (scaled); empty when not applied
};

// y = dropout(tanh(x * W)). Dropout is applied in train mode only, scaled by
// 1/(1-p); evaluation applies neither the mask nor the scale.
template <typename S>
Mat<S> dense_tanh_forward(const Mat<S>& x, const Mat<S>& W, bool train, double dropout_p,
                          Rng& rng, DenseTanhCache<S>* cache = nullptr) {
  if (x.cols() != W.rows())
    fail(Errc::ShapeMismatch, "dense_tanh: x has " + std::to_string(x.cols()) +
                                  " columns, W has " + std::to_string(W.rows()) + " rows");
  if (dropout_p < 0.0 || dropout_p >= 1.0)
    fail(Errc::ShapeMismatch, "dense_tanh: dropout rate out of [0,1)");
  Mat<S> a = (x * W).array().tanh().matrix();
  Mat<S> y;
  Mat<S> mask;
  if (train && dropout_p > 0.0) {
    S scale = static_cast<S>(1.0 / (1.0 - dropout_p));
    mask.resize(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j)
        mask(i, j) = rng.uniform() < dropout_p ? S(0) : scale;
    y = a.cwiseProduct(mask);
  } else {
    y = a;
  }
  if (cache) {
    cache->x = x;
    cache->a = std::move(a);
    cache->mask = std::move(mask);
  }
  return y;
}

// Accumulates dW; returns dx.
template <typename S>
Mat<S> dense_tanh_backward(const Mat<S>& dy, const Mat<S>& W, const DenseTanhCache<S>& cache,
                           Mat<S>& dW) {
  Mat<S> da = cache.mask.size() ? dy.cwiseProduct(cache.mask).eval() : dy;
  Mat<S> dpre = da.cwiseProduct((1 - cache.a.array().square()).matrix());
  dW.noalias() += cache.x.transpose() * dpre;
  return dpre * W.transpose();
}

// ---------------------------------------------------------------------------
// Masked attention pooling
// ---------------------------------------------------------------------------

template <typename S>
struct AttentionCache {
  Mat<S> contexts;  // C x h
  Vec<S> weights;   // C
};

template <typename S>
struct AttentionResult {
  Vec<S> weights;  // exactly 0 at masked slots
  Vec<S> pooled;   // h
};

// weights = softmax over unmasked scores a . c_i, masked slots pinned to 0;
// pooled = sum_i weights_i c_i. Throws AllMasked when no slot is real.
template <typename S>
AttentionResult<S> masked_attention(const Mat<S>& contexts, const Vec<S>& a,
                                    const std::vector<char>& mask,
                                    AttentionCache<S>* cache = nullptr) {
  if (contexts.cols() != a.size())
    fail(Errc::ShapeMismatch, "attention: context width != attention vector size");
  if (static_cast<std::size_t>(contexts.rows()) != mask.size())
    fail(Errc::ShapeMismatch, "attention: mask length != context count");
  Eigen::Index n = contexts.rows();
  Vec<S> scores = contexts * a;
  S max_score = S(0);
  bool any = false;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    if (!any || scores(i) > max_score) max_score = scores(i);
    any = true;
  }
  if (!any) fail(Errc::AllMasked, "attention: all slots masked");
  Vec<S> weights = Vec<S>::Zero(n);
  S denom = S(0);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!mask[i]) continue;
    weights(i) = std::exp(scores(i) - max_score);
    denom += weights(i);
  }
  weights /= denom;
  AttentionResult<S> out;
  out.pooled = contexts.transpose() * weights;
  out.weights = weights;
  if (cache) {
    cache->contexts = contexts;
    cache->weights = weights;
  }
  return out;
}

// Backward for pooled (and optionally the raw weights). Accumulates da;
// returns dcontexts.
template <typename S>
Mat<S> masked_attention_backward(const Vec<S>& dpooled, const Vec<S>* dweights_in,
                                 const Vec<S>& a, const AttentionCache<S>& cache, Vec<S>& da) {
  const Mat<S>& ctx = cache.contexts;
  const Vec<S>& w = cache.weights;
  Eigen::Index n = ctx.rows();
  Vec<S> dw = ctx * dpooled;  // from pooled = ctx^T w
  if (dweights_in) dw += *dweights_in;
  // Softmax backward restricted to unmasked slots (w is 0 elsewhere, which
  // zeroes their contribution automatically).
  S wdot = w.dot(dw);
  Vec<S> dscores(n);
  for (Eigen::Index i = 0; i < n; ++i) dscores(i) = w(i) * (dw(i) - wdot);
  da.noalias() += ctx.transpose() * dscores;
  Mat<S> dctx = dscores * a.transpose();
  for (Eigen::Index i = 0; i < n; ++i) dctx.row(i) += w(i) * dpooled.transpose();
  return dctx;
}

// ---------------------------------------------------------------------------
// LSTM cell (gate order i, f, g, o; forget bias initialized to 1)
// ---------------------------------------------------------------------------

template <typename S>
struct LstmParams {
  Mat<S> Wx;  // in x 4h
  Mat<S> Wh;  // h x 4h
  Vec<S> b;   // 4h

  Eigen::Index hidden() const { return Wh.rows(); }
};

template <typename S>
LstmParams<S> lstm_init(Eigen::Index in, Eigen::Index hidden, Rng& rng) {
  LstmParams<S> p;
  p.Wx = xavier_init<S>(in, 4 * hidden, rng);
  p.Wh = xavier_init<S>(hidden, 4 * hidden, rng);
  p.b = Vec<S>::Zero(4 * hidden);
  p.b.segment(hidden, hidden).setConstant(S(1));  // forget gate bias
  return p;
}

template <typename S>
struct LstmBatchCache {
  Mat<S> x, h_prev, c_prev;
  Mat<S> i, f, g, o, c, tanh_c;
};

template <typename S>
inline Mat<S> sigmoid(const Mat<S>& z) {
  return (1.0 / (1.0 + (-z.array()).exp())).matrix();
}

// One step over a batch of sequences: rows are independent lanes.
template <typename S>
void lstm_batch_step(const Mat<S>& x, const Mat<S>& h_prev, const Mat<S>& c_prev,
                     const LstmParams<S>& p, Mat<S>& h_out, Mat<S>& c_out,
                     LstmBatchCache<S>* cache = nullptr) {
  if (x.cols() != p.Wx.rows() || h_prev.cols() != p.Wh.rows())
    fail(Errc::ShapeMismatch, "lstm: input/state width mismatch");
  Eigen::Index h = p.hidden();
  Mat<S> z = x * p.Wx + h_prev * p.Wh;
  z.rowwise() += p.b.transpose();
  Mat<S> gi = sigmoid<S>(z.leftCols(h));
  Mat<S> gf = sigmoid<S>(z.middleCols(h, h));
  Mat<S> gg = z.middleCols(2 * h, h).array().tanh().matrix();
  Mat<S> go = sigmoid<S>(z.rightCols(h));
  c_out = gf.cwiseProduct(c_prev) + gi.cwiseProduct(gg);
  Mat<S> tc = c_out.array().tanh().matrix();
  h_out = go.cwiseProduct(tc);
  if (cache) {
    cache->x = x;
    cache->h_prev = h_prev;
    cache->c_prev = c_prev;
    cache->i = std::move(gi);
    cache->f = std::move(gf);
    cache->g = std::move(gg);
    cache->o = std::move(go);
    cache->c = c_out;
    cache->tanh_c = std::move(tc);
  }
}

template <typename S>
struct LstmGrads {
  Mat<S> dWx, dWh;
  Vec<S> db;

  void init_like(const LstmParams<S>& p) {
    dWx = Mat<S>::Zero(p.Wx.rows(), p.Wx.cols());
    dWh = Mat<S>::Zero(p.Wh.rows(), p.Wh.cols());
    db = Vec<S>::Zero(p.b.size());
  }
};

// Backward through one step. dh/dc are gradients arriving at this step's
// outputs; dh_prev/dc_prev/dx receive the upstream gradients.
template <typename S>
void lstm_batch_backward(const Mat<S>& dh, const Mat<S>& dc_in, const LstmParams<S>& p,
                         const LstmBatchCache<S>& cc, LstmGrads<S>& grads, Mat<S>& dx,
                         Mat<S>& dh_prev, Mat<S>& dc_prev) {
  Eigen::Index h = p.hidden();
  Mat<S> do_ = dh.cwiseProduct(cc.tanh_c);
  Mat<S> dc = dc_in + dh.cwiseProduct(cc.o).cwiseProduct(
                          (1 - cc.tanh_c.array().square()).matrix());
  Mat<S> di = dc.cwiseProduct(cc.g);
  Mat<S> df = dc.cwiseProduct(cc.c_prev);
  Mat<S> dg = dc.cwiseProduct(cc.i);
  dc_prev = dc.cwiseProduct(cc.f);
  Mat<S> dz(dh.rows(), 4 * h);
  dz.leftCols(h) = di.cwiseProduct(cc.i).cwiseProduct((1 - cc.i.array()).matrix());
  dz.middleCols(h, h) = df.cwiseProduct(cc.f).cwiseProduct((1 - cc.f.array()).matrix());
  dz.middleCols(2 * h, h) = dg.cwiseProduct((1 - cc.g.array().square()).matrix());
  dz.rightCols(h) = do_.cwiseProduct(cc.o).cwiseProduct((1 - cc.o.array()).matrix());
  grads.dWx.noalias() += cc.x.transpose() * dz;
  grads.dWh.noalias() += cc.h_prev.transpose() * dz;
  grads.db.noalias() += dz.colwise().sum().transpose();
  dx = dz * p.Wx.transpose();
  dh_prev = dz * p.Wh.transpose();
}

// Single-lane convenience wrappers matching the cell contract.
template <typename S>
std::pair<Vec<S>, Vec<S>> lstm_cell_step(const Vec<S>& x, const Vec<S>& h_prev,
                                         const Vec<S>& c_prev, const LstmParams<S>& p,
                                         LstmBatchCache<S>* cache = nullptr) {
  Mat<S> h_out, c_out;
  lstm_batch_step<S>(x.transpose(), h_prev.transpose(), c_prev.transpose(), p, h_out, c_out,
                     cache);
  return {h_out.row(0).transpose(), c_out.row(0).transpose()};
}

// ---------------------------------------------------------------------------
// Softmax + cross entropy
// ---------------------------------------------------------------------------

template <typename S>
Mat<S> softmax_rows(const Mat<S>& logits) {
  Mat<S> out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    S mx = logits.row(i).maxCoeff();
    Eigen::Array<S, 1, Eigen::Dynamic> e = (logits.row(i).array() - mx).exp();
    out.row(i) = (e / e.sum()).matrix();
  }
  return out;
}

// loss = mean negative log-likelihood; grad = (softmax - onehot) / n.
template <typename S>
std::pair<S, Mat<S>> softmax_cross_entropy(const Mat<S>& logits, const std::vector<int>& targets) {
  if (static_cast<std::size_t>(logits.rows()) != targets.size())
    fail(Errc::LengthMismatch, "softmax_cross_entropy: rows != targets");
  Mat<S> probs = softmax_rows(logits);
  S loss = S(0);
  Mat<S> grad = probs;
  S inv_n = S(1) / S(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int t = targets[static_cast<std::size_t>(i)];
    if (t < 0 || t >= logits.cols())
      fail(Errc::IndexOutOfRange, "softmax_cross_entropy: target " + std::to_string(t));
    loss -= std::log(std::max(probs(i, t), std::numeric_limits<S>::min()));
    grad(i, t) -= S(1);
  }
  grad *= inv_n;
  return {loss * inv_n, grad};
}

// ---------------------------------------------------------------------------
// Parameter store + Adam
// ---------------------------------------------------------------------------

template <typename S>
struct Param {
  Mat<S> value;
  Mat<S> grad;
  Mat<S> m;  // Adam first moment
  Mat<S> v;  // Adam second moment
};

template <typename S>
struct ParamStore {
  std::map<std::string, Param<S>> params;  // name-sorted update order
  std::uint64_t seed = 0;
  std::int64_t step = 0;

  Mat<S>& add(const std::string& name, Mat<S> value) {
    Param<S> p;
    p.grad = Mat<S>::Zero(value.rows(), value.cols());
    p.m = Mat<S>::Zero(value.rows(), value.cols());
    p.v = Mat<S>::Zero(value.rows(), value.cols());
    p.value = std::move(value);
    auto [it, inserted] = params.emplace(name, std::move(p));
    if (!inserted) fail(Errc::ShapeMismatch, "duplicate parameter '" + name + "'");
    return it->second.value;
  }

  Param<S>& at(const std::string& name) {
    auto it = params.find(name);
    if (it == params.end()) fail(Errc::IndexOutOfRange, "no parameter '" + name + "'");
    return it->second;
  }
  const Param<S>& at(const std::string& name) const {
    auto it = params.find(name);
    if (it == params.end()) fail(Errc::IndexOutOfRange, "no parameter '" + name + "'");
    return it->second;
  }

  void zero_grad() {
    for (auto& [name, p] : params) p.grad.setZero();
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, p] : params) n += static_cast<std::size_t>(p.value.size());
    return n;
  }
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename S>
void adam_step(ParamStore<S>& store, const AdamConfig& cfg) {
  store.step += 1;
  double b1t = 1.0 - std::pow(cfg.beta1, double(store.step));
  double b2t = 1.0 - std::pow(cfg.beta2, double(store.step));
  for (auto& [name, p] : store.params) {
    p.m = cfg.beta1 * p.m + (1.0 - cfg.beta1) * p.grad;
    p.v = (cfg.beta2 * p.v.array() + (1.0 - cfg.beta2) * p.grad.array().square()).matrix();
    Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> mhat = p.m.array() / S(b1t);
    Eigen::Array<S, Eigen::Dynamic, Eigen::Dynamic> vhat = p.v.array() / S(b2t);
    p.value.array() -= S(cfg.lr) * mhat / (vhat.sqrt() + S(cfg.eps));
  }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient checking (f64)
// ---------------------------------------------------------------------------

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
};

// `loss_and_grad` must zero nothing itself: grad_check clears gradients,
// calls it once for the analytic gradients, then probes a coordinate
// subsample with central differences (all coordinates when fewer than
// min_coords exist). Differences below abs_tol are round-off noise of the
// difference quotient itself and count as exact; a genuine gradient error at
// any meaningful magnitude sits orders of magnitude above it.
inline GradCheckReport grad_check(const std::function<double()>& loss_and_grad,
                                  ParamStore<double>& store, double eps = 1e-5,
                                  std::size_t min_coords = 200, std::uint64_t seed = 17,
                                  double abs_tol = 1e-9) {
  store.zero_grad();
  loss_and_grad();
  std::map<std::string, Mat<double>> analytic;
  for (auto& [name, p] : store.params) analytic[name] = p.grad;

  std::vector<std::pair<std::string, Eigen::Index>> coords;
  for (auto& [name, p] : store.params)
    for (Eigen::Index k = 0; k < p.value.size(); ++k) coords.emplace_back(name, k);

  std::vector<std::size_t> chosen;
  if (coords.size() <= min_coords) {
    for (std::size_t i = 0; i < coords.size(); ++i) chosen.push_back(i);
  } else {
    Rng rng(seed);
    chosen = rng.sample_indices(coords.size(), min_coords);
  }

  GradCheckReport report;
  report.coords_checked = chosen.size();
  for (std::size_t ci : chosen) {
    const auto& [name, k] = coords[ci];
    double* w = store.at(name).value.data() + k;
    double saved = *w;
    *w = saved + eps;
    store.zero_grad();
    double lp = loss_and_grad();
    *w = saved - eps;
    store.zero_grad();
    double lm = loss_and_grad();
    *w = saved;
    double fd = (lp - lm) / (2.0 * eps);
    double g = analytic[name](k);
    double diff = std::abs(fd - g);
    if (diff < abs_tol) continue;
    double rel = diff / std::max({std::abs(fd), std::abs(g), 1e-8});
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  // Restore the analytic gradients for callers that keep using the store.
  for (auto& [name, p] : store.params) p.grad = analytic[name];
  return report;
}

}  // namespace obo::nn
