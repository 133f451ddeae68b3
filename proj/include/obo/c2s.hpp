#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "obo/nn.hpp"
#include "obo/pathctx.hpp"

namespace obo {

struct C2SConfig {
  int d_s = 32;    // subtoken embedding size
  int d_n = 32;    // path-step embedding size
  int h_p = 32;    // per-direction path LSTM hidden size
  int h = 64;      // combined context / decoder hidden size
  int d_dec = 32;  // decoder input embedding size
  double dropout = 0.25;
};

// Decoder output vocabulary.
struct C2SToken {
  static constexpr int kPad = 0;
  static constexpr int kSos = 1;
  static constexpr int kEos = 2;
  static constexpr int kZero = 3;  // non-defective
  static constexpr int kOne = 4;   // defective
  static constexpr int kCount = 5;
};

// Sequence model over path contexts: subtoken-sum terminal encodings,
// bidirectional LSTM path encodings, shared tanh combination, mean-pooled
// initial decoder state, two greedy decoder steps with dot-product attention
// over the combined contexts.
template <typename S>
struct C2SModel {
  C2SConfig cfg;
  nn::ParamStore<S> store;

  static C2SModel init(std::size_t subtoken_vocab, std::size_t node_vocab, const C2SConfig& cfg,
                       std::uint64_t seed) {
    C2SModel m;
    m.cfg = cfg;
    m.store.seed = seed;
    Rng rng(seed);
    m.store.add("b_out", nn::Mat<S>::Zero(C2SToken::kCount, 1));
    {
      nn::LstmParams<S> dec = nn::lstm_init<S>(cfg.d_dec, cfg.h, rng);
      m.store.add("dec_Wh", dec.Wh);
      m.store.add("dec_Wx", dec.Wx);
      m.store.add("dec_b", dec.b);
    }
    m.store.add("emb_node", nn::uniform_init<S>(node_vocab, cfg.d_n, -0.1, 0.1, rng));
    m.store.add("emb_out", nn::uniform_init<S>(C2SToken::kCount, cfg.d_dec, -0.1, 0.1, rng));
    m.store.add("emb_sub", nn::uniform_init<S>(subtoken_vocab, cfg.d_s, -0.1, 0.1, rng));
    m.store.at("emb_sub").value.row(Vocab::kPad).setZero();  // PAD pinned to zero
    {
      nn::LstmParams<S> f = nn::lstm_init<S>(cfg.d_n, cfg.h_p, rng);
      nn::LstmParams<S> b = nn::lstm_init<S>(cfg.d_n, cfg.h_p, rng);
      m.store.add("lstm_bwd_Wh", b.Wh);
      m.store.add("lstm_bwd_Wx", b.Wx);
      m.store.add("lstm_bwd_b", b.b);
      m.store.add("lstm_fwd_Wh", f.Wh);
      m.store.add("lstm_fwd_Wx", f.Wx);
      m.store.add("lstm_fwd_b", f.b);
    }
    m.store.add("w_att", nn::xavier_init<S>(2 * cfg.h, cfg.h, rng));
    m.store.add("w_combine", nn::xavier_init<S>(2 * cfg.d_s + 2 * cfg.h_p, cfg.h, rng));
    m.store.add("w_out", nn::xavier_init<S>(cfg.h, C2SToken::kCount, rng));
    return m;
  }

  nn::LstmParams<S> lstm_params(const std::string& prefix) const {
    return nn::LstmParams<S>{store.at(prefix + "_Wx").value, store.at(prefix + "_Wh").value,
                             store.at(prefix + "_b").value.col(0)};
  }

  struct PathGroup {
    std::int32_t len = 0;
    std::vector<std::size_t> rows;                 // context-local row indices
    std::vector<nn::LstmBatchCache<S>> fwd_caches; // len caches
    std::vector<nn::LstmBatchCache<S>> bwd_caches;
  };

  struct DecoderStep {
    int input_token = C2SToken::kPad;
    nn::LstmBatchCache<S> lstm;
    nn::AttentionCache<S> attn;
    nn::Vec<S> h;     // decoder hidden state (h)
    nn::Vec<S> u;     // [h; ctx] (2h)
    nn::Vec<S> s;     // attentional state tanh(W_att^T u)
    nn::Vec<S> logits;
  };

  struct Cache {
    std::vector<std::size_t> real;
    nn::Mat<S> term_s, term_t;   // n x d_s
    nn::Mat<S> path_enc;         // n x 2h_p
    std::vector<PathGroup> groups;
    nn::DenseTanhCache<S> dense;
    nn::Mat<S> combined;         // n x h
    DecoderStep step1, step2;
  };

  struct ForwardOut {
    nn::Vec<S> step1_probs;  // over the 5-token vocabulary
    nn::Vec<S> step2_probs;
    double defect_score = 0.0;  // P(1) renormalized over {0, 1}
    int greedy_token1 = C2SToken::kPad;
    int greedy_token2 = C2SToken::kPad;
  };

  nn::Mat<S> sum_subtokens(const EncodedExample& ex, const std::vector<std::size_t>& real,
                           bool start_side) const {
    const nn::Mat<S>& emb = store.at("emb_sub").value;
    nn::Mat<S> out = nn::Mat<S>::Zero(real.size(), cfg.d_s);
    for (std::size_t r = 0; r < real.size(); ++r) {
      const EncodedSlot& slot = ex.slots[real[r]];
      const std::vector<std::int32_t>& ids = start_side ? slot.sub_s : slot.sub_t;
      for (std::int32_t id : ids)
        if (id != Vocab::kPad) out.row(r) += emb.row(id);
    }
    return out;
  }

  DecoderStep decode_step(int input_token, const nn::Vec<S>& h_prev, const nn::Vec<S>& c_prev,
                          const nn::Mat<S>& combined, nn::Vec<S>& c_out) const {
    DecoderStep step;
    step.input_token = input_token;
    nn::Mat<S> h1, c1;
    nn::lstm_batch_step<S>(store.at("emb_out").value.row(input_token), h_prev.transpose(),
                           c_prev.transpose(), lstm_params("dec"), h1, c1, &step.lstm);
    step.h = h1.row(0).transpose();
    c_out = c1.row(0).transpose();
    std::vector<char> mask(combined.rows(), 1);
    auto att = nn::masked_attention<S>(combined, step.h, mask, &step.attn);
    step.u.resize(2 * cfg.h);
    step.u.head(cfg.h) = step.h;
    step.u.tail(cfg.h) = att.pooled;
    step.s = (store.at("w_att").value.transpose() * step.u).array().tanh().matrix();
    step.logits =
        store.at("w_out").value.transpose() * step.s + store.at("b_out").value.col(0);
    return step;
  }

  ForwardOut forward(const EncodedExample& ex, bool train, Rng& rng,
                     Cache* cache = nullptr) const {
    Cache local;
    Cache& cc = cache ? *cache : local;
    for (std::size_t i = 0; i < ex.slots.size(); ++i)
      if (ex.slots[i].real) cc.real.push_back(i);
    if (cc.real.empty()) fail(Errc::AllMasked, "c2s: example has no real contexts");
    Eigen::Index n = static_cast<Eigen::Index>(cc.real.size());

    cc.term_s = sum_subtokens(ex, cc.real, true);
    cc.term_t = sum_subtokens(ex, cc.real, false);

    std::map<std::int32_t, std::vector<std::size_t>> by_len;
    for (std::size_t r = 0; r < cc.real.size(); ++r) {
      const EncodedSlot& slot = ex.slots[cc.real[r]];
      if (slot.path_len < 1) fail(Errc::EmptyPath, "c2s: empty path in slot");
      by_len[slot.path_len].push_back(r);
    }
    for (auto& [len, rows] : by_len) {
      PathGroup g;
      g.len = len;
      g.rows = rows;
      cc.groups.push_back(std::move(g));
    }
    cc.path_enc = nn::Mat<S>::Zero(n, 2 * cfg.h_p);
    {
      std::vector<std::vector<nn::LstmBatchCache<S>>> fwd(cc.groups.size()),
          bwd(cc.groups.size());
      run_paths_local(ex, cc, false, fwd);
      run_paths_local(ex, cc, true, bwd);
      for (std::size_t g = 0; g < cc.groups.size(); ++g) {
        cc.groups[g].fwd_caches = std::move(fwd[g]);
        cc.groups[g].bwd_caches = std::move(bwd[g]);
      }
    }

    nn::Mat<S> x(n, 2 * cfg.d_s + 2 * cfg.h_p);
    x << cc.term_s, cc.path_enc, cc.term_t;
    cc.combined = nn::dense_tanh_forward<S>(x, store.at("w_combine").value, train,
                                            train ? cfg.dropout : 0.0, rng, &cc.dense);

    nn::Vec<S> h0 = cc.combined.colwise().mean().transpose();
    nn::Vec<S> c0 = nn::Vec<S>::Zero(cfg.h);

    nn::Vec<S> c1;
    cc.step1 = decode_step(C2SToken::kSos, h0, c0, cc.combined, c1);
    ForwardOut out;
    out.step1_probs = nn::softmax_rows<S>(cc.step1.logits.transpose()).row(0).transpose();
    Eigen::Index arg1 = 0;
    cc.step1.logits.maxCoeff(&arg1);
    out.greedy_token1 = static_cast<int>(arg1);

    int token2_in;
    if (train) {
      token2_in = ex.label == 1 ? C2SToken::kOne : C2SToken::kZero;
    } else {
      token2_in = out.greedy_token1;
    }
    nn::Vec<S> c2;
    cc.step2 = decode_step(token2_in, cc.step1.h, c1, cc.combined, c2);
    out.step2_probs = nn::softmax_rows<S>(cc.step2.logits.transpose()).row(0).transpose();
    Eigen::Index arg2 = 0;
    cc.step2.logits.maxCoeff(&arg2);
    out.greedy_token2 = static_cast<int>(arg2);

    double p0 = double(out.step1_probs(C2SToken::kZero));
    double p1 = double(out.step1_probs(C2SToken::kOne));
    out.defect_score = p1 / (p0 + p1);
    return out;
  }

  // Helper used by forward: LSTM over the path steps of every group, writing
  // into cc.path_enc at context-local rows.
  void run_paths_local(const EncodedExample& ex, Cache& cc, bool reversed,
                       std::vector<std::vector<nn::LstmBatchCache<S>>>& caches_out) const {
    const nn::Mat<S>& emb = store.at("emb_node").value;
    nn::LstmParams<S> params = lstm_params(reversed ? "lstm_bwd" : "lstm_fwd");
    Eigen::Index offset = reversed ? cfg.h_p : 0;
    for (std::size_t g = 0; g < cc.groups.size(); ++g) {
      PathGroup& group = cc.groups[g];
      Eigen::Index rows = static_cast<Eigen::Index>(group.rows.size());
      nn::Mat<S> h = nn::Mat<S>::Zero(rows, cfg.h_p);
      nn::Mat<S> c = nn::Mat<S>::Zero(rows, cfg.h_p);
      std::vector<nn::LstmBatchCache<S>> caches(group.len);
      for (std::int32_t t = 0; t < group.len; ++t) {
        std::int32_t step = reversed ? group.len - 1 - t : t;
        nn::Mat<S> x(rows, cfg.d_n);
        for (Eigen::Index r = 0; r < rows; ++r) {
          const EncodedSlot& slot = ex.slots[cc.real[group.rows[static_cast<std::size_t>(r)]]];
          x.row(r) = emb.row(slot.path_steps[static_cast<std::size_t>(step)]);
        }
        nn::Mat<S> h_next, c_next;
        nn::lstm_batch_step<S>(x, h, c, params, h_next, c_next, &caches[t]);
        h = std::move(h_next);
        c = std::move(c_next);
      }
      for (Eigen::Index r = 0; r < rows; ++r)
        cc.path_enc.row(static_cast<Eigen::Index>(group.rows[static_cast<std::size_t>(r)]))
            .segment(offset, cfg.h_p) = h.row(r);
      caches_out[g] = std::move(caches);
    }
  }

  // Backward through one decoder step. Accumulates parameter grads and the
  // combined-context gradient; returns (dh_prev, dc_prev).
  std::pair<nn::Vec<S>, nn::Vec<S>> decode_step_backward(const DecoderStep& step,
                                                         const nn::Vec<S>& dlogits,
                                                         const nn::Vec<S>& dh_extra,
                                                         const nn::Vec<S>& dc_extra,
                                                         nn::Mat<S>& dcombined) {
    store.at("b_out").grad.col(0) += dlogits;
    store.at("w_out").grad.noalias() += step.s * dlogits.transpose();
    nn::Vec<S> ds = store.at("w_out").value * dlogits;
    nn::Vec<S> dpre = ds.cwiseProduct((1 - step.s.array().square()).matrix());
    store.at("w_att").grad.noalias() += step.u * dpre.transpose();
    nn::Vec<S> du = store.at("w_att").value * dpre;
    nn::Vec<S> dh = du.head(cfg.h) + dh_extra;
    nn::Vec<S> dctx = du.tail(cfg.h);

    nn::Vec<S> da = nn::Vec<S>::Zero(cfg.h);
    dcombined += nn::masked_attention_backward<S>(dctx, nullptr, step.h, step.attn, da);
    dh += da;

    nn::LstmParams<S> params = lstm_params("dec");
    nn::LstmGrads<S> grads;
    grads.init_like(params);
    nn::Mat<S> dx, dh_prev, dc_prev;
    nn::lstm_batch_backward<S>(dh.transpose(), dc_extra.transpose(), params, step.lstm, grads,
                               dx, dh_prev, dc_prev);
    store.at("dec_Wx").grad += grads.dWx;
    store.at("dec_Wh").grad += grads.dWh;
    store.at("dec_b").grad.col(0) += grads.db;
    store.at("emb_out").grad.row(step.input_token) += dx.row(0);
    return {dh_prev.row(0).transpose(), dc_prev.row(0).transpose()};
  }

  std::pair<S, std::size_t> batch_loss_grad(const std::vector<const EncodedExample*>& batch,
                                            Rng& rng) {
    S total_loss = S(0);
    std::size_t correct = 0;
    S inv_batch = S(1) / S(batch.size());
    for (const EncodedExample* ex : batch) {
      Cache cc;
      ForwardOut out = forward(*ex, true, rng, &cc);
      int t1 = ex->label == 1 ? C2SToken::kOne : C2SToken::kZero;

      nn::Mat<S> logits(2, C2SToken::kCount);
      logits.row(0) = cc.step1.logits.transpose();
      logits.row(1) = cc.step2.logits.transpose();
      auto [loss, dlogits] = nn::softmax_cross_entropy<S>(logits, {t1, C2SToken::kEos});
      // Loss is summed over the two steps, then averaged over the batch.
      total_loss += loss * S(2);
      nn::Vec<S> dl1 = dlogits.row(0).transpose() * S(2) * inv_batch;
      nn::Vec<S> dl2 = dlogits.row(1).transpose() * S(2) * inv_batch;

      if (out.defect_score >= 0.5 ? ex->label == 1 : ex->label == 0) ++correct;

      Eigen::Index n = static_cast<Eigen::Index>(cc.real.size());
      nn::Mat<S> dcombined = nn::Mat<S>::Zero(n, cfg.h);
      auto [dh1, dc1] =
          decode_step_backward(cc.step2, dl2, nn::Vec<S>::Zero(cfg.h), nn::Vec<S>::Zero(cfg.h),
                               dcombined);
      auto [dh0, dc0] = decode_step_backward(cc.step1, dl1, dh1, dc1, dcombined);
      (void)dc0;  // the initial cell state is a constant zero

      // h0 = column mean of the combined contexts.
      dcombined.rowwise() += (dh0 / S(n)).transpose();

      nn::Mat<S> dx = nn::dense_tanh_backward<S>(dcombined, store.at("w_combine").value,
                                                 cc.dense, store.at("w_combine").grad);
      nn::Mat<S> de_s = dx.leftCols(cfg.d_s);
      nn::Mat<S> dpath = dx.middleCols(cfg.d_s, 2 * cfg.h_p);
      nn::Mat<S> de_t = dx.rightCols(cfg.d_s);

      nn::Mat<S>& d_sub = store.at("emb_sub").grad;
      for (std::size_t r = 0; r < cc.real.size(); ++r) {
        const EncodedSlot& slot = ex->slots[cc.real[r]];
        for (std::int32_t id : slot.sub_s)
          if (id != Vocab::kPad) d_sub.row(id) += de_s.row(static_cast<Eigen::Index>(r));
        for (std::int32_t id : slot.sub_t)
          if (id != Vocab::kPad) d_sub.row(id) += de_t.row(static_cast<Eigen::Index>(r));
      }

      backward_paths(*ex, cc, dpath, false);
      backward_paths(*ex, cc, dpath, true);
    }
    // PAD rows never move.
    store.at("emb_sub").grad.row(Vocab::kPad).setZero();
    store.at("emb_node").grad.row(Vocab::kPad).setZero();
    return {total_loss, correct};
  }

  void backward_paths(const EncodedExample& ex, Cache& cc, const nn::Mat<S>& dpath,
                      bool reversed) {
    nn::LstmParams<S> params = lstm_params(reversed ? "lstm_bwd" : "lstm_fwd");
    const std::string prefix = reversed ? "lstm_bwd" : "lstm_fwd";
    nn::LstmGrads<S> grads;
    grads.init_like(params);
    nn::Mat<S>& d_node = store.at("emb_node").grad;
    Eigen::Index offset = reversed ? cfg.h_p : 0;
    for (PathGroup& group : cc.groups) {
      Eigen::Index rows = static_cast<Eigen::Index>(group.rows.size());
      nn::Mat<S> dh(rows, cfg.h_p);
      for (Eigen::Index r = 0; r < rows; ++r)
        dh.row(r) =
            dpath.row(static_cast<Eigen::Index>(group.rows[static_cast<std::size_t>(r)]))
                .segment(offset, cfg.h_p);
      nn::Mat<S> dc = nn::Mat<S>::Zero(rows, cfg.h_p);
      std::vector<nn::LstmBatchCache<S>>& caches =
          reversed ? group.bwd_caches : group.fwd_caches;
      for (std::int32_t t = group.len - 1; t >= 0; --t) {
        nn::Mat<S> dx, dh_prev, dc_prev;
        nn::lstm_batch_backward<S>(dh, dc, params, caches[t], grads, dx, dh_prev, dc_prev);
        std::int32_t step = reversed ? group.len - 1 - t : t;
        for (Eigen::Index r = 0; r < rows; ++r) {
          const EncodedSlot& slot = ex.slots[cc.real[group.rows[static_cast<std::size_t>(r)]]];
          d_node.row(slot.path_steps[static_cast<std::size_t>(step)]) += dx.row(r);
        }
        dh = std::move(dh_prev);
        dc = std::move(dc_prev);
      }
    }
    store.at(prefix + "_Wx").grad += grads.dWx;
    store.at(prefix + "_Wh").grad += grads.dWh;
    store.at(prefix + "_b").grad.col(0) += grads.db;
  }

  double defect_score(const EncodedExample& ex) const {
    Rng rng(0);
    ForwardOut out = forward(ex, false, rng);
    return out.defect_score;
  }

  std::size_t parameter_count() const { return store.parameter_count(); }
};

}  // namespace obo
