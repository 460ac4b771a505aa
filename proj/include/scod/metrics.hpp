#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "scod/numeric.hpp"

namespace scod {

/// One evaluated sample: ground truth plus the rule's outputs.
struct EvalRecord {
    bool is_outlier = false;
    std::optional<int> label;  // inliers only
    int predicted = -1;        // classifier output (argmax), abstain-independent
    bool abstained = false;
    double rejection_score = 0.0;  // larger = more abstain-worthy
};

struct RiskValue {
    double value = 0.0;
    bool all_abstained = false;  // Z = 0 convention: risk defined as 0, flagged
};

/// Conditional joint risk on accepted samples:
///   (1/Z) [ (1-c_fn) sum_in 1(err, acc) + c_fn sum_out 1(acc) ],
/// Z = number of accepted samples.
RiskValue joint_risk(std::span<const EvalRecord> records, double c_fn);

/// Inlier accuracy over accepted samples (denominator includes accepted
/// outliers); Z = 0 convention as joint_risk.
RiskValue inlier_accuracy(std::span<const EvalRecord> records);

struct CurvePoint {
    double target_fraction = 0.0;
    double realized_fraction = 0.0;
    double joint_risk = 0.0;
    double inlier_accuracy = 0.0;
    double ood_precision = 0.0;
    double ood_recall = 0.0;
};

struct RiskCoverageCurve {
    std::vector<CurvePoint> points;  // one per grid target, targets increasing
    double auc_rc = 0.0;             // trapezoid over realized fractions
                                     // (repeated fractions add zero width)
    bool degenerate = false;         // constant score: only extremes reachable
};

/// Sweep thresholds over the score's empirical quantiles to hit each
/// target abstention fraction k/(grid_size-1). Under ties the largest
/// threshold whose abstention does not exceed the target is used, so the
/// realized fraction is conservative on the budget.
RiskCoverageCurve risk_coverage_curve(std::span<const EvalRecord> records,
                                      double c_fn, int grid_size = 101);

struct OodDetectionMetrics {
    double auc_roc = 0.0;
    double fpr_at_95tpr = 0.0;
    double precision = 0.0;  // at the 95%-TPR threshold
    double recall = 0.0;
};

/// Convention: higher score = more OOD. AUC-ROC by the rank statistic
/// with ties counted 1/2; FPR@95TPR thresholds at the 5th-percentile
/// outlier score (lower interpolation).
OodDetectionMetrics ood_detection_metrics(std::span<const double> inlier_scores,
                                          std::span<const double> outlier_scores);

/// CSV with one row per curve grid point; byte-stable formatting.
std::string curve_to_csv(const RiskCoverageCurve& curve);

}  // namespace scod
