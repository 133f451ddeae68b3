#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace obo {

struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
};

// Predicted defective iff score >= threshold (inclusive).
ConfusionMatrix confusion(const std::vector<double>& scores, const std::vector<int>& labels,
                          double threshold);

// precision = tp/(tp+fp), recall = tp/(tp+fn). Empty denominators fall back
// to the vacuous conventions: precision 1.0 when nothing was flagged, recall
// 1.0 when nothing was defective.
struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
};
PrecisionRecall precision_recall(const ConfusionMatrix& cm);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;  // recall (PR) or false-positive rate (ROC)
  double y = 0.0;  // precision (PR) or true-positive rate (ROC)
};

struct Curve {
  std::vector<CurvePoint> points;  // thresholds strictly decreasing
  double area = 0.0;
};

// One point per distinct score threshold. PR ends at recall 1 with precision
// equal to prevalence; ROC area is the trapezoid integral.
Curve pr_curve(const std::vector<double>& scores, const std::vector<int>& labels);
Curve roc_curve(const std::vector<double>& scores, const std::vector<int>& labels);

// Per-class rates used by the prevalence relation: tpr = recall on the
// defective class, fpr = flagged fraction of the non-defective class.
struct ClassRates {
  double tpr = 0.0;
  double fpr = 0.0;
};
ClassRates class_rates(const ConfusionMatrix& cm);

// "threshold,precision,recall" for PR curves, "threshold,fpr,tpr" for ROC.
void write_pr_csv(const Curve& curve, const std::string& path);
void write_roc_csv(const Curve& curve, const std::string& path);

}  // namespace obo
