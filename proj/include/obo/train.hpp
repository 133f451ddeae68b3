#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "obo/metrics.hpp"
#include "obo/nn.hpp"
#include "obo/pathctx.hpp"

namespace obo {

struct TrainConfig {
  int batch_size = 64;
  int max_epochs = 300;
  int patience = 3;        // epochs without validation-precision gain
  double threshold = 0.5;  // decision threshold during validation
  nn::AdamConfig adam;
  std::uint64_t seed = 0;
  double stop_at_train_accuracy = -1.0;  // optional overfit-run exit
};

struct EpochStats {
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_precision = 0.0;
  double val_recall = 0.0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  int best_epoch = 0;  // 1-based epoch whose checkpoint was returned
};

// Stop after `patience` consecutive epochs without strict improvement.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience) : patience_(patience) {}

  // epoch is 1-based; returns true when training should stop after it.
  bool observe(int epoch, double metric) {
    if (metric > best_) {
      best_ = metric;
      best_epoch_ = epoch;
      streak_ = 0;
    } else {
      ++streak_;
    }
    return streak_ >= patience_;
  }

  int best_epoch() const { return best_epoch_; }
  double best_metric() const { return best_; }
  bool improved_at(int epoch) const { return best_epoch_ == epoch; }

 private:
  int patience_;
  double best_ = -std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int streak_ = 0;
};

// Mini-batch training with early stopping on validation precision at the
// configured threshold; the best-precision parameter snapshot is restored
// into the model before returning.
template <typename Model>
TrainHistory train_model(Model& model, const std::vector<EncodedExample>& train,
                         const std::vector<EncodedExample>& val, const TrainConfig& cfg) {
  if (train.empty()) fail(Errc::EmptyTraining, "no training examples");
  Rng shuffle_rng = Rng(cfg.seed).fork(0xbeefULL);
  Rng dropout_rng = Rng(cfg.seed).fork(0xd0d0ULL);

  TrainHistory history;
  EarlyStopper stopper(cfg.patience);
  auto best_params = model.store.params;  // value snapshot

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      std::size_t end = std::min(order.size(), begin + cfg.batch_size);
      std::vector<const EncodedExample*> batch;
      batch.reserve(end - begin);
      for (std::size_t k = begin; k < end; ++k) {
        if (train[order[k]].real_count == 0) continue;  // unscorable: skipped
        batch.push_back(&train[order[k]]);
      }
      if (batch.empty()) continue;
      model.store.zero_grad();
      auto [batch_loss, batch_correct] = model.batch_loss_grad(batch, dropout_rng);
      if (!std::isfinite(double(batch_loss)))
        fail(Errc::Diverged, "loss became non-finite at epoch " + std::to_string(epoch));
      nn::adam_step(model.store, cfg.adam);
      loss_sum += double(batch_loss);
      correct += batch_correct;
      seen += batch.size();
    }

    EpochStats stats;
    stats.train_loss = seen ? loss_sum / double(seen) : 0.0;
    stats.train_accuracy = seen ? double(correct) / double(seen) : 0.0;

    std::vector<double> scores;
    std::vector<int> labels;
    scores.reserve(val.size());
    for (const EncodedExample& ex : val) {
      if (ex.real_count == 0) continue;
      scores.push_back(model.defect_score(ex));
      labels.push_back(ex.label);
    }
    PrecisionRecall pr = precision_recall(confusion(scores, labels, cfg.threshold));
    stats.val_precision = pr.precision;
    stats.val_recall = pr.recall;
    history.epochs.push_back(stats);

    bool stop = stopper.observe(epoch, stats.val_precision);
    if (stopper.improved_at(epoch)) best_params = model.store.params;
    if (cfg.stop_at_train_accuracy > 0.0 && stats.train_accuracy >= cfg.stop_at_train_accuracy) {
      // Overfit-run exit: the current parameters are the ones wanted.
      history.best_epoch = epoch;
      return history;
    }
    if (stop) break;
  }
  history.best_epoch = stopper.best_epoch();
  model.store.params = std::move(best_params);
  return history;
}

}  // namespace obo
