#include "obo/metrics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "obo/error.hpp"

namespace obo {

ConfusionMatrix confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold) {
  if (scores.size() != labels.size())
    fail(Errc::LengthMismatch, "confusion: " + std::to_string(scores.size()) + " scores vs " +
                                   std::to_string(labels.size()) + " labels");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    bool flagged = scores[i] >= threshold;
    bool defective = labels[i] == 1;
    if (flagged && defective) ++cm.tp;
    else if (flagged && !defective) ++cm.fp;
    else if (!flagged && defective) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

PrecisionRecall precision_recall(const ConfusionMatrix& cm) {
  PrecisionRecall pr;
  pr.precision = (cm.tp + cm.fp) == 0 ? 1.0 : double(cm.tp) / double(cm.tp + cm.fp);
  pr.recall = (cm.tp + cm.fn) == 0 ? 1.0 : double(cm.tp) / double(cm.tp + cm.fn);
  return pr;
}

ClassRates class_rates(const ConfusionMatrix& cm) {
  ClassRates r;
  r.tpr = (cm.tp + cm.fn) == 0 ? 0.0 : double(cm.tp) / double(cm.tp + cm.fn);
  r.fpr = (cm.fp + cm.tn) == 0 ? 0.0 : double(cm.fp) / double(cm.fp + cm.tn);
  return r;
}

namespace {

// Indices sorted by score descending; distinct scores become thresholds.
std::vector<std::size_t> order_by_score(const std::vector<double>& scores) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return idx;
}

void check_both_classes(const std::vector<int>& labels) {
  bool pos = false, neg = false;
  for (int l : labels) (l == 1 ? pos : neg) = true;
  if (!pos || !neg) fail(Errc::SingleClass, "curve needs both classes present");
}

}  // namespace

Curve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) fail(Errc::LengthMismatch, "pr_curve: length mismatch");
  check_both_classes(labels);
  std::vector<std::size_t> idx = order_by_score(scores);
  std::uint64_t pos = 0;
  for (int l : labels) pos += l == 1;

  Curve curve;
  std::uint64_t tp = 0, fp = 0;
  double prev_recall = 0.0, prev_precision = 1.0;
  double area = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    double threshold = scores[idx[i]];
    // Take every example tied at this score.
    while (i < idx.size() && scores[idx[i]] == threshold) {
      if (labels[idx[i]] == 1) ++tp;
      else ++fp;
      ++i;
    }
    double recall = double(tp) / double(pos);
    double precision = (tp + fp) == 0 ? 1.0 : double(tp) / double(tp + fp);
    curve.points.push_back(CurvePoint{threshold, recall, precision});
    area += (recall - prev_recall) * 0.5 * (precision + prev_precision);
    prev_recall = recall;
    prev_precision = precision;
  }
  curve.area = area;
  return curve;
}

Curve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) fail(Errc::LengthMismatch, "roc_curve: length mismatch");
  check_both_classes(labels);
  std::vector<std::size_t> idx = order_by_score(scores);
  std::uint64_t pos = 0;
  for (int l : labels) pos += l == 1;
  std::uint64_t neg = labels.size() - pos;

  Curve curve;
  std::uint64_t tp = 0, fp = 0;
  double prev_fpr = 0.0, prev_tpr = 0.0, area = 0.0;
  std::size_t i = 0;
  while (i < idx.size()) {
    double threshold = scores[idx[i]];
    while (i < idx.size() && scores[idx[i]] == threshold) {
      if (labels[idx[i]] == 1) ++tp;
      else ++fp;
      ++i;
    }
    double tpr = double(tp) / double(pos);
    double fpr = double(fp) / double(neg);
    curve.points.push_back(CurvePoint{threshold, fpr, tpr});
    area += (fpr - prev_fpr) * 0.5 * (tpr + prev_tpr);
    prev_fpr = fpr;
    prev_tpr = tpr;
  }
  curve.area = area;
  return curve;
}

void write_pr_csv(const Curve& curve, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + path + " for writing");
  os << "threshold,precision,recall\n";
  os.precision(17);
  for (const CurvePoint& p : curve.points)
    os << p.threshold << ',' << p.y << ',' << p.x << '\n';
}

void write_roc_csv(const Curve& curve, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(Errc::IoError, "cannot open " + path + " for writing");
  os << "threshold,fpr,tpr\n";
  os.precision(17);
  for (const CurvePoint& p : curve.points)
    os << p.threshold << ',' << p.x << ',' << p.y << '\n';
}

}  // namespace obo
