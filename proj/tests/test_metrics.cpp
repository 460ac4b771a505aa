#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scod/metrics.hpp"
#include "scod/rng.hpp"
#include "oracles.hpp"

using namespace scod;

namespace {

EvalRecord inlier(int label, int predicted, bool abstained, double score = 0.0) {
    EvalRecord r;
    r.label = label;
    r.predicted = predicted;
    r.abstained = abstained;
    r.rejection_score = score;
    return r;
}

EvalRecord outlier(bool abstained, double score = 0.0) {
    EvalRecord r;
    r.is_outlier = true;
    r.abstained = abstained;
    r.rejection_score = score;
    return r;
}

}  // namespace

TEST_CASE("joint risk hand counts") {
    // 4 accepted inliers, 2 in error; 4 outliers all rejected; c_fn = 0.75:
    // (0.25 * 2) / 4 = 0.125.
    std::vector<EvalRecord> recs{inlier(0, 0, false), inlier(0, 0, false),
                                 inlier(0, 1, false), inlier(1, 0, false),
                                 outlier(true),       outlier(true),
                                 outlier(true),       outlier(true)};
    RiskValue r = joint_risk(recs, 0.75);
    CHECK(r.value == doctest::Approx(0.125).epsilon(1e-15));
    CHECK_FALSE(r.all_abstained);

    // No rejections, all inliers correct, equal counts: 0.75 * 4 / 8 = 0.375.
    std::vector<EvalRecord> none{inlier(0, 0, false), inlier(1, 1, false),
                                 inlier(0, 0, false), inlier(1, 1, false),
                                 outlier(false),      outlier(false),
                                 outlier(false),      outlier(false)};
    r = joint_risk(none, 0.75);
    CHECK(r.value == doctest::Approx(0.375).epsilon(1e-15));

    // Perfect rule: zero risk.
    std::vector<EvalRecord> perfect{inlier(0, 0, false), outlier(true)};
    CHECK(joint_risk(perfect, 0.75).value == 0.0);

    CHECK_THROWS(joint_risk({}, 0.75));
    CHECK_THROWS(joint_risk(perfect, 1.5));
}

TEST_CASE("joint risk: all-abstained convention") {
    std::vector<EvalRecord> recs{inlier(0, 0, true), outlier(true)};
    const RiskValue r = joint_risk(recs, 0.5);
    CHECK(r.value == 0.0);
    CHECK(r.all_abstained);
}

TEST_CASE("inlier accuracy over accepted samples") {
    // 2 correct inliers, 1 wrong, 1 accepted outlier: 2/4 = 0.5.
    std::vector<EvalRecord> recs{inlier(0, 0, false), inlier(1, 1, false),
                                 inlier(0, 1, false), outlier(false)};
    CHECK(inlier_accuracy(recs).value == doctest::Approx(0.5).epsilon(1e-15));

    // Only accepted outliers: accuracy 0, not flagged.
    std::vector<EvalRecord> outs{outlier(false), outlier(false)};
    RiskValue r = inlier_accuracy(outs);
    CHECK(r.value == 0.0);
    CHECK_FALSE(r.all_abstained);

    // All correct inliers: 1.
    std::vector<EvalRecord> all{inlier(0, 0, false), inlier(2, 2, false)};
    CHECK(inlier_accuracy(all).value == 1.0);

    // Everything abstained: flagged.
    std::vector<EvalRecord> gone{inlier(0, 0, true)};
    CHECK(inlier_accuracy(gone).all_abstained);
}

namespace {

// 10 samples, two score levels: risks 0.4 / 0.2 / 0 at abstention
// fractions 0 / 0.5 / 1 under c_fn = 1.
std::vector<EvalRecord> staircase_records() {
    std::vector<EvalRecord> recs;
    // High-score group (abstains first): 3 outliers + 2 correct inliers.
    for (int i = 0; i < 3; ++i) recs.push_back(outlier(false, 1.0));
    for (int i = 0; i < 2; ++i) recs.push_back(inlier(0, 0, false, 1.0));
    // Low-score group: 1 outlier + 4 correct inliers.
    recs.push_back(outlier(false, 0.0));
    for (int i = 0; i < 4; ++i) recs.push_back(inlier(0, 0, false, 0.0));
    return recs;
}

}  // namespace

TEST_CASE("risk-coverage curve on a two-level staircase") {
    const auto recs = staircase_records();
    const RiskCoverageCurve curve = risk_coverage_curve(recs, 1.0, 3);
    REQUIRE(curve.points.size() == 3);
    CHECK(curve.points[0].realized_fraction == 0.0);
    CHECK(curve.points[0].joint_risk == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(curve.points[1].realized_fraction == doctest::Approx(0.5));
    CHECK(curve.points[1].joint_risk == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(curve.points[2].realized_fraction == 1.0);
    CHECK(curve.points[2].joint_risk == 0.0);
    // Trapezoid: 0.5(0.4+0.2)0.5 + 0.5(0.2+0)0.5 = 0.2, exactly.
    CHECK(std::fabs(curve.auc_rc - 0.2) < 1e-12);
    CHECK_FALSE(curve.degenerate);

    // The fraction-0 point reproduces the unabstained joint risk.
    std::vector<EvalRecord> accepted = recs;
    CHECK(curve.points[0].joint_risk ==
          doctest::Approx(joint_risk(accepted, 1.0).value).epsilon(1e-15));

    // OOD precision/recall at the half-abstention point: 3 of 5 abstained
    // are outliers; 3 of 4 outliers caught.
    CHECK(curve.points[1].ood_precision == doctest::Approx(0.6));
    CHECK(curve.points[1].ood_recall == doctest::Approx(0.75));
}

TEST_CASE("risk-coverage curve: zero-risk rule has zero area") {
    std::vector<EvalRecord> recs;
    for (int i = 0; i < 5; ++i) recs.push_back(inlier(0, 0, false, 0.1 * i));
    const RiskCoverageCurve curve = risk_coverage_curve(recs, 0.75);
    CHECK(curve.auc_rc == 0.0);
    CHECK(curve.points.size() == 101);  // default grid
}

TEST_CASE("risk-coverage curve: constant scores flag degenerate") {
    std::vector<EvalRecord> recs{inlier(0, 1, false, 0.5), outlier(false, 0.5),
                                 inlier(0, 0, false, 0.5)};
    const RiskCoverageCurve curve = risk_coverage_curve(recs, 0.5, 5);
    CHECK(curve.degenerate);
    for (const auto& p : curve.points)
        CHECK((p.realized_fraction == 0.0 || p.realized_fraction == 1.0));
}

TEST_CASE("risk-coverage curve is invariant to monotone score transforms") {
    Rng rng(401);
    std::vector<EvalRecord> recs;
    for (int i = 0; i < 200; ++i) {
        EvalRecord r;
        r.is_outlier = rng.bernoulli(0.4);
        if (!r.is_outlier) {
            r.label = 0;
            r.predicted = rng.bernoulli(0.8) ? 0 : 1;
        }
        r.rejection_score = rng.uniform(-3.0, 3.0);
        recs.push_back(r);
    }
    const RiskCoverageCurve base = risk_coverage_curve(recs, 0.75);
    for (auto& r : recs) r.rejection_score = std::exp(r.rejection_score);
    const RiskCoverageCurve mapped = risk_coverage_curve(recs, 0.75);
    CHECK(base.auc_rc == doctest::Approx(mapped.auc_rc).epsilon(1e-12));
    for (size_t i = 0; i < base.points.size(); ++i) {
        CHECK(base.points[i].realized_fraction == mapped.points[i].realized_fraction);
        CHECK(base.points[i].joint_risk == mapped.points[i].joint_risk);
    }
}

TEST_CASE("risk-coverage curve input validation") {
    std::vector<EvalRecord> recs{inlier(0, 0, false, 0.0)};
    CHECK_THROWS(risk_coverage_curve({}, 0.5));
    CHECK_THROWS(risk_coverage_curve(recs, 0.5, 1));
}

TEST_CASE("ood detection: hand cases") {
    // {1,2,3,4} vs {3,4,5,6}: 12 wins + 2 ties of 16 pairs = 0.875.
    const OodDetectionMetrics m =
        ood_detection_metrics(Vec{1, 2, 3, 4}, Vec{3, 4, 5, 6});
    CHECK(m.auc_roc == doctest::Approx(0.875).epsilon(1e-15));

    // Perfect separation.
    const OodDetectionMetrics sep =
        ood_detection_metrics(Vec{0.0, 0.1, 0.2}, Vec{1.0, 1.1, 1.2});
    CHECK(sep.auc_roc == 1.0);
    CHECK(sep.fpr_at_95tpr == 0.0);
    CHECK(sep.precision == 1.0);

    // Identical multisets: chance level.
    const OodDetectionMetrics same =
        ood_detection_metrics(Vec{1, 2, 3}, Vec{1, 2, 3});
    CHECK(same.auc_roc == doctest::Approx(0.5).epsilon(1e-15));

    CHECK_THROWS(ood_detection_metrics(Vec{}, Vec{1.0}));
    CHECK_THROWS(ood_detection_metrics(Vec{1.0}, Vec{}));
}

TEST_CASE("ood detection: fpr at the 95% tpr threshold") {
    Vec outs;
    for (int i = 1; i <= 20; ++i) outs.push_back(static_cast<double>(i));
    // Threshold = floor(0.05 * 19) = index 0 -> score 1; flag iff > 1.
    const Vec ins{0.5, 1.0, 1.5, 2.0};
    const OodDetectionMetrics m = ood_detection_metrics(ins, outs);
    CHECK(m.fpr_at_95tpr == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.recall == doctest::Approx(19.0 / 20.0).epsilon(1e-15));
    CHECK(m.precision == doctest::Approx(19.0 / 21.0).epsilon(1e-15));
}

TEST_CASE("ood detection rank statistic equals brute-force pair counting") {
    Rng rng(403);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform() * 200);
        const int m = 1 + static_cast<int>(rng.uniform() * 200);
        Vec ins, outs;
        // Coarse lattice scores force plenty of ties.
        for (int i = 0; i < n; ++i)
            ins.push_back(std::floor(rng.uniform(0.0, 8.0)));
        for (int i = 0; i < m; ++i)
            outs.push_back(std::floor(rng.uniform(2.0, 10.0)));
        const double fast = ood_detection_metrics(ins, outs).auc_roc;
        const double slow = oracles::auc_pair_count(ins, outs);
        CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
    }
}

TEST_CASE("curve CSV serialization") {
    const RiskCoverageCurve curve = risk_coverage_curve(staircase_records(), 1.0, 3);
    const std::string csv = curve_to_csv(curve);
    std::istringstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line ==
          "target_fraction,realized_fraction,joint_risk,inlier_accuracy,"
          "ood_precision,ood_recall");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 5);
    }
    CHECK(rows == 3);
    CHECK(csv.find("0.4") != std::string::npos);
}
