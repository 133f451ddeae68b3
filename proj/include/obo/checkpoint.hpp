#pragma once

#include <cstring>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "obo/baseline.hpp"
#include "obo/c2s.hpp"
#include "obo/c2v.hpp"
#include "obo/pathctx.hpp"

namespace obo {

// Self-describing model container: magic + version, a JSON header carrying
// the model kind, hyperparameters, all vocabularies and the tensor directory,
// then raw row-major little-endian payloads.
struct Checkpoint {
  struct Tensor {
    std::vector<std::int64_t> dims;
    std::string dtype;  // "f32" | "f64"
    std::vector<unsigned char> bytes;  // row-major payload
  };

  std::string model_kind;  // "c2v" | "c2s" | "baseline"
  nlohmann::ordered_json hparams;
  nlohmann::ordered_json meta;  // extraction limits, forest/tfidf payloads
  Vocabularies vocab;
  std::map<std::string, Tensor> tensors;
};

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& out);
Checkpoint read_checkpoint(const std::filesystem::path& in);

// --- ParamStore glue --------------------------------------------------------

template <typename S>
const char* dtype_name() {
  return sizeof(S) == 4 ? "f32" : "f64";
}

template <typename S>
void store_to_checkpoint(const nn::ParamStore<S>& store, Checkpoint& ckpt) {
  for (const auto& [name, param] : store.params) {
    Checkpoint::Tensor t;
    t.dims = {param.value.rows(), param.value.cols()};
    t.dtype = dtype_name<S>();
    t.bytes.resize(sizeof(S) * static_cast<std::size_t>(param.value.size()));
    // Row-major on disk regardless of the in-memory layout.
    S* out = reinterpret_cast<S*>(t.bytes.data());
    for (Eigen::Index i = 0; i < param.value.rows(); ++i)
      for (Eigen::Index j = 0; j < param.value.cols(); ++j) *out++ = param.value(i, j);
    ckpt.tensors.emplace(name, std::move(t));
  }
}

template <typename S>
void checkpoint_to_store(const Checkpoint& ckpt, nn::ParamStore<S>& store) {
  for (auto& [name, param] : store.params) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end()) fail(Errc::IoError, "checkpoint lacks tensor '" + name + "'");
    const Checkpoint::Tensor& t = it->second;
    if (t.dtype != dtype_name<S>())
      fail(Errc::IoError, "tensor '" + name + "' holds dtype " + t.dtype);
    if (t.dims.size() != 2 || t.dims[0] != param.value.rows() || t.dims[1] != param.value.cols())
      fail(Errc::ShapeMismatch, "tensor '" + name + "' dims differ from the model layout");
    const S* in = reinterpret_cast<const S*>(t.bytes.data());
    for (Eigen::Index i = 0; i < param.value.rows(); ++i)
      for (Eigen::Index j = 0; j < param.value.cols(); ++j) param.value(i, j) = *in++;
  }
}

// --- Model-specific packing -------------------------------------------------

nlohmann::ordered_json limits_to_json(const ExtractLimits& limits);
ExtractLimits limits_from_json(const nlohmann::ordered_json& j);

template <typename S>
Checkpoint make_c2v_checkpoint(const C2VModel<S>& model, const Vocabularies& vocab,
                               const ExtractLimits& limits) {
  Checkpoint ckpt;
  ckpt.model_kind = "c2v";
  ckpt.hparams = {{"d_t", model.cfg.d_t},
                  {"d_p", model.cfg.d_p},
                  {"h", model.cfg.h},
                  {"dropout", model.cfg.dropout}};
  ckpt.meta = {{"limits", limits_to_json(limits)}};
  ckpt.vocab = vocab;
  store_to_checkpoint(model.store, ckpt);
  return ckpt;
}

template <typename S>
C2VModel<S> c2v_from_checkpoint(const Checkpoint& ckpt, ExtractLimits& limits_out) {
  if (ckpt.model_kind != "c2v") fail(Errc::IoError, "checkpoint kind is " + ckpt.model_kind);
  C2VConfig cfg;
  cfg.d_t = ckpt.hparams.at("d_t").get<int>();
  cfg.d_p = ckpt.hparams.at("d_p").get<int>();
  cfg.h = ckpt.hparams.at("h").get<int>();
  cfg.dropout = ckpt.hparams.at("dropout").get<double>();
  limits_out = limits_from_json(ckpt.meta.at("limits"));
  C2VModel<S> model =
      C2VModel<S>::init(ckpt.vocab.token.size(), ckpt.vocab.path.size(), cfg, 0);
  checkpoint_to_store(ckpt, model.store);
  return model;
}

template <typename S>
Checkpoint make_c2s_checkpoint(const C2SModel<S>& model, const Vocabularies& vocab,
                               const ExtractLimits& limits) {
  Checkpoint ckpt;
  ckpt.model_kind = "c2s";
  ckpt.hparams = {{"d_s", model.cfg.d_s},   {"d_n", model.cfg.d_n}, {"h_p", model.cfg.h_p},
                  {"h", model.cfg.h},       {"d_dec", model.cfg.d_dec},
                  {"dropout", model.cfg.dropout}};
  ckpt.meta = {{"limits", limits_to_json(limits)}};
  ckpt.vocab = vocab;
  store_to_checkpoint(model.store, ckpt);
  return ckpt;
}

template <typename S>
C2SModel<S> c2s_from_checkpoint(const Checkpoint& ckpt, ExtractLimits& limits_out) {
  if (ckpt.model_kind != "c2s") fail(Errc::IoError, "checkpoint kind is " + ckpt.model_kind);
  C2SConfig cfg;
  cfg.d_s = ckpt.hparams.at("d_s").get<int>();
  cfg.d_n = ckpt.hparams.at("d_n").get<int>();
  cfg.h_p = ckpt.hparams.at("h_p").get<int>();
  cfg.h = ckpt.hparams.at("h").get<int>();
  cfg.d_dec = ckpt.hparams.at("d_dec").get<int>();
  cfg.dropout = ckpt.hparams.at("dropout").get<double>();
  limits_out = limits_from_json(ckpt.meta.at("limits"));
  C2SModel<S> model =
      C2SModel<S>::init(ckpt.vocab.subtoken.size(), ckpt.vocab.node_kind.size(), cfg, 0);
  checkpoint_to_store(ckpt, model.store);
  return model;
}

Checkpoint make_baseline_checkpoint(const TfidfModel& tfidf, const Forest& forest,
                                    const ExtractLimits& limits);
void baseline_from_checkpoint(const Checkpoint& ckpt, TfidfModel& tfidf, Forest& forest,
                              ExtractLimits& limits_out);

}  // namespace obo
