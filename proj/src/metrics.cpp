#include "scod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace scod {

RiskValue joint_risk(std::span<const EvalRecord> records, double c_fn) {
    if (c_fn < 0.0 || c_fn > 1.0) throw std::invalid_argument("c_fn must be in [0,1]");
    if (records.empty()) throw std::invalid_argument("empty evaluation set");
    size_t accepted = 0, in_err = 0, out_acc = 0;
    for (const auto& r : records) {
        if (r.abstained) continue;
        ++accepted;
        if (r.is_outlier)
            ++out_acc;
        else if (r.label && *r.label != r.predicted)
            ++in_err;
    }
    RiskValue out;
    if (accepted == 0) {
        out.all_abstained = true;
        return out;
    }
    out.value = ((1.0 - c_fn) * static_cast<double>(in_err) +
                 c_fn * static_cast<double>(out_acc)) /
                static_cast<double>(accepted);
    return out;
}

RiskValue inlier_accuracy(std::span<const EvalRecord> records) {
    if (records.empty()) throw std::invalid_argument("empty evaluation set");
    size_t accepted = 0, in_correct = 0;
    for (const auto& r : records) {
        if (r.abstained) continue;
        ++accepted;
        if (!r.is_outlier && r.label && *r.label == r.predicted) ++in_correct;
    }
    RiskValue out;
    if (accepted == 0) {
        out.all_abstained = true;
        return out;
    }
    out.value = static_cast<double>(in_correct) / static_cast<double>(accepted);
    return out;
}

namespace {

struct ThresholdStats {
    size_t abstained = 0;
    size_t abstained_out = 0;
    size_t accepted = 0;
    size_t accepted_in_err = 0;
    size_t accepted_in_correct = 0;
    size_t accepted_out = 0;
};

// Abstain iff rejection_score > t.
ThresholdStats stats_at(std::span<const EvalRecord> records, double t) {
    ThresholdStats s;
    for (const auto& r : records) {
        if (r.rejection_score > t) {
            ++s.abstained;
            if (r.is_outlier) ++s.abstained_out;
        } else {
            ++s.accepted;
            if (r.is_outlier) {
                ++s.accepted_out;
            } else if (r.label) {
                if (*r.label == r.predicted)
                    ++s.accepted_in_correct;
                else
                    ++s.accepted_in_err;
            }
        }
    }
    return s;
}

}  // namespace

RiskCoverageCurve risk_coverage_curve(std::span<const EvalRecord> records,
                                      double c_fn, int grid_size) {
    if (grid_size < 2) throw std::invalid_argument("grid_size must be >= 2");
    if (records.empty()) throw std::invalid_argument("empty evaluation set");
    const size_t n = records.size();
    size_t total_out = 0;
    for (const auto& r : records)
        if (r.is_outlier) ++total_out;

    // Achievable abstention counts are prefix sums over the distinct score
    // groups in descending order; the matching threshold is the next lower
    // distinct score (or just under the minimum for full abstention).
    Vec sorted;
    sorted.reserve(n);
    for (const auto& r : records) sorted.push_back(r.rejection_score);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    std::vector<size_t> counts{0};  // achievable abstention counts
    Vec thresholds{sorted.front()};  // threshold realizing each count
    for (size_t i = 1; i <= n; ++i) {
        if (i == n || sorted[i] != sorted[i - 1]) {
            counts.push_back(i);
            thresholds.push_back(i == n ? sorted.back() - 1.0 : sorted[i]);
        }
    }

    RiskCoverageCurve curve;
    curve.degenerate = counts.size() == 2;  // constant score
    for (int k = 0; k < grid_size; ++k) {
        const double target = static_cast<double>(k) / (grid_size - 1);
        const size_t budget =
            static_cast<size_t>(std::floor(target * static_cast<double>(n) + 1e-12));
        // Largest achievable count not exceeding the budget.
        size_t idx = 0;
        for (size_t j = 0; j < counts.size(); ++j)
            if (counts[j] <= budget) idx = j;
        const double realized =
            static_cast<double>(counts[idx]) / static_cast<double>(n);

        const ThresholdStats s = stats_at(records, thresholds[idx]);
        CurvePoint pt;
        pt.target_fraction = target;
        pt.realized_fraction = realized;
        if (s.accepted > 0) {
            pt.joint_risk = ((1.0 - c_fn) * static_cast<double>(s.accepted_in_err) +
                             c_fn * static_cast<double>(s.accepted_out)) /
                            static_cast<double>(s.accepted);
            pt.inlier_accuracy = static_cast<double>(s.accepted_in_correct) /
                                 static_cast<double>(s.accepted);
        }
        pt.ood_precision = s.abstained > 0 ? static_cast<double>(s.abstained_out) /
                                                 static_cast<double>(s.abstained)
                                           : 0.0;
        pt.ood_recall = total_out > 0 ? static_cast<double>(s.abstained_out) /
                                            static_cast<double>(total_out)
                                      : 0.0;
        curve.points.push_back(pt);
    }

    for (size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        curve.auc_rc += 0.5 * (a.joint_risk + b.joint_risk) *
                        (b.realized_fraction - a.realized_fraction);
    }
    return curve;
}

OodDetectionMetrics ood_detection_metrics(std::span<const double> inlier_scores,
                                          std::span<const double> outlier_scores) {
    if (inlier_scores.empty() || outlier_scores.empty())
        throw std::invalid_argument("both score sets must be nonempty");
    const size_t n = inlier_scores.size();
    const size_t m = outlier_scores.size();

    // Rank statistic with midranks for ties:
    //   AUC = (R_out - m(m+1)/2) / (n m).
    struct Tagged {
        double score;
        bool outlier;
    };
    std::vector<Tagged> all;
    all.reserve(n + m);
    for (double s : inlier_scores) all.push_back({s, false});
    for (double s : outlier_scores) all.push_back({s, true});
    std::sort(all.begin(), all.end(),
              [](const Tagged& a, const Tagged& b) { return a.score < b.score; });

    double rank_sum_out = 0.0;
    size_t i = 0;
    while (i < all.size()) {
        size_t j = i;
        size_t out_in_group = 0;
        while (j < all.size() && all[j].score == all[i].score) {
            if (all[j].outlier) ++out_in_group;
            ++j;
        }
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // ranks 1-based
        rank_sum_out += midrank * static_cast<double>(out_in_group);
        i = j;
    }

    OodDetectionMetrics metrics;
    metrics.auc_roc =
        (rank_sum_out - 0.5 * static_cast<double>(m) * static_cast<double>(m + 1)) /
        (static_cast<double>(n) * static_cast<double>(m));

    // Threshold at the 5th-percentile outlier score (lower interpolation);
    // flagging rule: score strictly above the threshold.
    Vec out_sorted(outlier_scores.begin(), outlier_scores.end());
    std::sort(out_sorted.begin(), out_sorted.end());
    const size_t pct_idx =
        static_cast<size_t>(std::floor(0.05 * static_cast<double>(m - 1)));
    const double threshold = out_sorted[pct_idx];

    size_t in_flagged = 0, out_flagged = 0;
    for (double s : inlier_scores)
        if (s > threshold) ++in_flagged;
    for (double s : outlier_scores)
        if (s > threshold) ++out_flagged;

    metrics.fpr_at_95tpr = static_cast<double>(in_flagged) / static_cast<double>(n);
    const size_t flagged = in_flagged + out_flagged;
    metrics.precision =
        flagged > 0 ? static_cast<double>(out_flagged) / static_cast<double>(flagged)
                    : 0.0;
    metrics.recall = static_cast<double>(out_flagged) / static_cast<double>(m);
    return metrics;
}

std::string curve_to_csv(const RiskCoverageCurve& curve) {
    std::ostringstream os;
    os << "target_fraction,realized_fraction,joint_risk,inlier_accuracy,"
          "ood_precision,ood_recall\n";
    for (const auto& p : curve.points) {
        os << format_double(p.target_fraction) << ','
           << format_double(p.realized_fraction) << ','
           << format_double(p.joint_risk) << ','
           << format_double(p.inlier_accuracy) << ','
           << format_double(p.ood_precision) << ','
           << format_double(p.ood_recall) << '\n';
    }
    return os.str();
}

}  // namespace scod
