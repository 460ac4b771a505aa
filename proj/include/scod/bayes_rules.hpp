#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "scod/numeric.hpp"

namespace scod {

/// Cost pair for the soft-penalty SCOD risk; the misclassification term
/// carries the residual weight 1 - c_in - c_out.
struct CostSpec {
    double c_in = 0.0;
    double c_out = 0.0;

    CostSpec() = default;
    CostSpec(double in, double out) : c_in(in), c_out(out) { validate(); }

    double error_weight() const { return 1.0 - c_in - c_out; }

    void validate() const {
        if (c_in < 0.0 || c_in > 1.0 || c_out < 0.0 || c_out > 1.0)
            throw std::invalid_argument("costs must lie in [0,1]");
        if (c_in + c_out > 1.0 + 1e-12)
            throw std::invalid_argument("c_in + c_out must not exceed 1");
    }
};

/// Budget form of the SCOD objective: false-negative outlier cost,
/// abstention budget, and the test-time inlier proportion.
struct BudgetSpec {
    double c_fn = 0.75;
    double b_rej = 0.1;
    double pi_in_star = 0.5;

    void validate() const {
        if (c_fn < 0.0 || c_fn > 1.0) throw std::invalid_argument("c_fn out of [0,1]");
        if (b_rej < 0.0 || b_rej > 1.0) throw std::invalid_argument("b_rej out of [0,1]");
        if (!(pi_in_star > 0.0 && pi_in_star < 1.0))
            throw std::invalid_argument("pi_in_star out of (0,1)");
    }
};

/// Per-sample outcome: predicted label or abstention, plus the score and
/// threshold that produced it (abstain iff score > threshold; boundary
/// ties accept).
struct Decision {
    bool abstain = false;
    int label = -1;  // valid when !abstain
    double rejection_score = 0.0;
    double threshold = 0.0;
};

/// Chow's rule: abstain iff 1 - max_y P(y|x) > c_in / (1 - c_in).
Decision chow_rule(std::span<const double> posterior, double c_in);

/// Density-based rejection: abstain iff P_out(x)/P_in(x) > c_in/(1-c_in).
/// Carries no label; the classifier is supplied separately.
Decision density_rejection(double ratio_out_in, double c_in);

/// Bayes-optimal SCOD rule: abstain iff
///   (1 - c_in - c_out)(1 - max_y P_in(y|x)) + c_out * P_out(x)/P_in(x) > c_in,
/// with forced abstention at P_in(x) = 0 (ratio = +inf) when c_out > 0.
/// Reduces to chow_rule at c_out = 0 and to density_rejection at
/// c_in + c_out = 1.
Decision scod_bayes(std::span<const double> posterior, double ratio_out_in,
                    const CostSpec& costs);

struct OpenSetDecision {
    Decision decision;
    double t_osc = 0.0;           // threshold on P_te(L|x)
    bool threshold_form = false;  // P_te(L|x) > t_osc
    bool msp_form = false;        // equivalent max-inlier-posterior form
};

/// Open-set Bayes rule (c_in + c_out = 1 required): abstain iff the
/// held-out posterior strictly exceeds t_osc = F(c_in P_te(L) / (c_out P_te(!=L))),
/// F(z) = z/(1+z). Also evaluates the equivalent sample-dependent form on
/// the inlier posterior and reports both.
OpenSetDecision open_set_bayes(std::span<const double> full_posterior,
                               int held_out,
                               std::span<const double> te_priors,
                               const CostSpec& costs);

/// Constructed distribution on which MSP-style thresholding and the
/// open-set Bayes rule disagree, per the two-case construction: the
/// held-out posterior takes mass 1-eps (case 1, t_msp <= 1/(L-1)) or eps
/// (case 2), with the rest spread uniformly.
struct MspWitness {
    Vec p_te;              // full posterior over L classes (held-out last)
    Vec p_in;              // restricted inlier posterior over L-1 classes
    int proof_case = 0;    // 1 or 2
    double bayes_t_lo = 0; // open interval of Bayes thresholds with disagreement
    double bayes_t_hi = 0;
};

MspWitness msp_disagreement_witness(int num_classes, double t_msp, double epsilon);

}  // namespace scod
