#pragma once

#include <string>
#include <vector>

#include "obo/nn.hpp"
#include "obo/pathctx.hpp"

namespace obo {

struct C2VConfig {
  int d_t = 32;           // token embedding size
  int d_p = 32;           // path embedding size
  int h = 64;             // combined context / code vector size
  double dropout = 0.25;  // on combined context vectors, train mode only
};

// Attention classifier over (token, path, token) embeddings: per-slot context
// vectors are projected through a shared tanh dense layer, pooled by a global
// attention vector, and scored against one tag embedding per label.
template <typename S>
struct C2VModel {
  C2VConfig cfg;
  nn::ParamStore<S> store;

  static C2VModel init(std::size_t token_vocab, std::size_t path_vocab, const C2VConfig& cfg,
                       std::uint64_t seed) {
    C2VModel m;
    m.cfg = cfg;
    m.store.seed = seed;
    Rng rng(seed);
    m.store.add("a_attn", nn::uniform_init<S>(cfg.h, 1, -0.1, 0.1, rng));
    m.store.add("emb_path", nn::uniform_init<S>(path_vocab, cfg.d_p, -0.1, 0.1, rng));
    m.store.add("emb_token", nn::uniform_init<S>(token_vocab, cfg.d_t, -0.1, 0.1, rng));
    m.store.add("tags", nn::uniform_init<S>(2, cfg.h, -0.1, 0.1, rng));
    m.store.add("w_dense", nn::xavier_init<S>(2 * cfg.d_t + cfg.d_p, cfg.h, rng));
    return m;
  }

  struct ForwardOut {
    nn::Vec<S> probs;    // (non_defective, defective)
    nn::Vec<S> code;     // code vector v
    nn::Vec<S> weights;  // attention weights per slot (0 at padded slots)
  };

  struct Cache {
    std::vector<std::size_t> real;  // slot indices
    nn::DenseTanhCache<S> dense;
    nn::AttentionCache<S> attn;
    nn::Vec<S> code;
    nn::Mat<S> logits;  // 1 x 2
  };

  nn::Mat<S> gather_contexts(const EncodedExample& ex, std::vector<std::size_t>& real) const {
    const nn::Mat<S>& et = store.at("emb_token").value;
    const nn::Mat<S>& ep = store.at("emb_path").value;
    for (std::size_t i = 0; i < ex.slots.size(); ++i)
      if (ex.slots[i].real) real.push_back(i);
    nn::Mat<S> x(real.size(), 2 * cfg.d_t + cfg.d_p);
    for (std::size_t r = 0; r < real.size(); ++r) {
      const EncodedSlot& slot = ex.slots[real[r]];
      x.row(r).segment(0, cfg.d_t) = et.row(slot.token_s);
      x.row(r).segment(cfg.d_t, cfg.d_p) = ep.row(slot.path_id);
      x.row(r).segment(cfg.d_t + cfg.d_p, cfg.d_t) = et.row(slot.token_t);
    }
    return x;
  }

  ForwardOut forward(const EncodedExample& ex, bool train, Rng& rng,
                     Cache* cache = nullptr) const {
    std::vector<std::size_t> real;
    nn::Mat<S> x = gather_contexts(ex, real);
    if (real.empty()) fail(Errc::AllMasked, "c2v: example has no real contexts");
    nn::DenseTanhCache<S> dense_cache;
    nn::Mat<S> combined = nn::dense_tanh_forward<S>(x, store.at("w_dense").value, train,
                                                    train ? cfg.dropout : 0.0, rng,
                                                    cache ? &cache->dense : &dense_cache);
    std::vector<char> mask(real.size(), 1);
    nn::AttentionCache<S> attn_cache;
    auto pooled = nn::masked_attention<S>(combined, store.at("a_attn").value.col(0), mask,
                                          cache ? &cache->attn : &attn_cache);
    nn::Mat<S> logits = (store.at("tags").value * pooled.pooled).transpose();  // 1 x 2
    ForwardOut out;
    out.probs = nn::softmax_rows<S>(logits).row(0).transpose();
    out.code = pooled.pooled;
    out.weights = nn::Vec<S>::Zero(ex.slots.size());
    for (std::size_t r = 0; r < real.size(); ++r) out.weights(real[r]) = pooled.weights(r);
    if (cache) {
      cache->real = real;
      cache->code = pooled.pooled;
      cache->logits = logits;
    }
    return out;
  }

  // Cross-entropy over a mini-batch; accumulates gradients. Returns the
  // summed loss and the number of correct threshold-0.5 predictions.
  std::pair<S, std::size_t> batch_loss_grad(const std::vector<const EncodedExample*>& batch,
                                            Rng& rng) {
    std::vector<Cache> caches(batch.size());
    nn::Mat<S> logits(batch.size(), 2);
    std::vector<int> targets(batch.size());
    for (std::size_t b = 0; b < batch.size(); ++b) {
      forward(*batch[b], true, rng, &caches[b]);
      logits.row(b) = caches[b].logits.row(0);
      targets[b] = batch[b]->label;
    }
    auto [loss, dlogits] = nn::softmax_cross_entropy<S>(logits, targets);

    std::size_t correct = 0;
    nn::Mat<S> probs = nn::softmax_rows<S>(logits);
    for (std::size_t b = 0; b < batch.size(); ++b) {
      int predicted = probs(b, 1) >= S(0.5) ? 1 : 0;
      if (predicted == targets[b]) ++correct;
    }

    nn::Mat<S>& d_tags = store.at("tags").grad;
    nn::Mat<S>& d_token = store.at("emb_token").grad;
    nn::Mat<S>& d_path = store.at("emb_path").grad;
    nn::Mat<S>& d_dense = store.at("w_dense").grad;
    nn::Mat<S>& d_attn = store.at("a_attn").grad;
    const nn::Mat<S>& tags = store.at("tags").value;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      Cache& cc = caches[b];
      nn::Vec<S> dl = dlogits.row(b).transpose();  // 2
      d_tags.noalias() += dl * cc.code.transpose();
      nn::Vec<S> dcode = tags.transpose() * dl;
      nn::Vec<S> da = nn::Vec<S>::Zero(cfg.h);
      nn::Mat<S> dcombined = nn::masked_attention_backward<S>(
          dcode, nullptr, store.at("a_attn").value.col(0), cc.attn, da);
      d_attn.col(0) += da;
      nn::Mat<S> dx =
          nn::dense_tanh_backward<S>(dcombined, store.at("w_dense").value, cc.dense, d_dense);
      for (std::size_t r = 0; r < cc.real.size(); ++r) {
        const EncodedSlot& slot = batch[b]->slots[cc.real[r]];
        d_token.row(slot.token_s) += dx.row(r).segment(0, cfg.d_t);
        d_path.row(slot.path_id) += dx.row(r).segment(cfg.d_t, cfg.d_p);
        d_token.row(slot.token_t) += dx.row(r).segment(cfg.d_t + cfg.d_p, cfg.d_t);
      }
    }
    return {loss * S(batch.size()), correct};
  }

  double defect_score(const EncodedExample& ex) const {
    Rng rng(0);
    ForwardOut out = forward(ex, false, rng);
    return double(out.probs(1));
  }

  std::size_t parameter_count() const { return store.parameter_count(); }
};

}  // namespace obo
