#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "scod/bayes_rules.hpp"
#include "scod/distributions.hpp"
#include "scod/numeric.hpp"
#include "scod/scorer.hpp"

namespace scod {

inline constexpr double kPiMixClamp = 1e-6;   // pi_mix_hat kept <= 1 - this
inline constexpr double kRatioFloor = 1e-9;   // floor for corrected ratios

/// Inputs to the black-box rejector: an SC confidence (canonically
/// max_y P_in(y|x)) and an estimate of P_in(x)/P_out(x).
struct PluginInputs {
    double s_sc = 0.0;
    double s_ood = kInf;  // positive extended real
};

/// Black-box rejector:
///   reject iff (1 - c_in - c_out) s_sc + c_out * (-1 / s_ood) < 1 - 2 c_in - c_out.
/// s_ood = +inf degenerates to pure Chow behavior; s_ood = 0 forces
/// rejection whenever c_out > 0. `posterior` (optional) supplies the
/// predicted label on acceptance.
Decision black_box_reject(const PluginInputs& inputs, const CostSpec& costs,
                          std::span<const double> posterior = {});

struct MixtureEstimate {
    double pi_mix_hat = 0.0;
    Vec per_sample;  // exp(-s_hat(x)) over the strict-inlier set
    bool clamped = false;
};

/// pi_mix estimate: mean of exp(-s_hat) over the strict-inlier set,
/// clamped into [0, 1 - 1e-6].
MixtureEstimate estimate_pi_mix(std::span<const double> ood_logit_values);

struct CorrectedRatio {
    double s_ood = kInf;  // estimate of P_in/P_out
    double ratio_out_in = 0.0;
    bool clamped = false;
};

/// Wild-noise correction: P_out/P_in = (P_mix/P_in - pi_mix) / (1 - pi_mix),
/// inverted to yield s_ood. Negative corrected ratios (estimation noise)
/// clamp to kRatioFloor and set the flag; an exactly-zero corrected ratio
/// yields s_ood = +inf.
CorrectedRatio noise_correct(double p_mix_over_p_in, double pi_mix);

/// A classifier+rejector pair evaluated per sample, plus the structured
/// configuration report embedded into CLI outputs.
struct RejectionRule {
    std::function<Decision(const Vec&)> evaluate;
    std::string report;  // key=value lines (costs, thresholds, pi_mix_hat, lambda)
};

/// Algorithm composition for the decoupled-trained model: probability
/// estimates -> pi_mix estimate over the strict-inlier set ->
/// noise-correct the per-sample ratio -> black-box rejector.
RejectionRule loss_based_reject(const ScorerModel& model,
                                const std::vector<Sample>& strict_inlier_set,
                                const CostSpec& costs);

/// Coupled plug-in: reject iff max_y zeta_y(x) < zeta_reject(x) under the
/// (L+1)-way softmax; predicted label is the argmax over the first L.
RejectionRule coupled_reject(const ScorerModel& model);

Decision coupled_reject_decision(std::span<const double> logits_with_reject);

/// One grid point of the budget Lagrangian with its effective weights
///   (w_err, w_in, w_out) = (1 - c_fn, lambda pi*_in, c_fn - lambda (1 - pi*_in))
/// and the achieved empirical quantities.
struct LagrangianPoint {
    double lambda = 0.0;
    double w_err = 0.0, w_in = 0.0, w_out = 0.0;
    double nu = 0.0;
    double abstention_rate = 0.0;
    double objective = 0.0;  // empirical (1-c_fn) P_in(err,acc) + c_fn P_out(acc)
    bool feasible = false;
    bool negative_out_weight = false;
};

/// Per-sample scores precomputed once and reused across the lambda grid.
struct ScoredSample {
    double s_sc = 0.0;
    double s_ood = kInf;
    int predicted = -1;
    std::optional<int> label;
    bool is_outlier = false;
};

struct BudgetSearchResult {
    LagrangianPoint best;
    std::vector<LagrangianPoint> grid;
    bool any_feasible = false;
};

/// Threshold search over the lambda grid: rules with empirical abstention
/// <= b_rej compete on the budget objective; when none is feasible the
/// minimal-violation point is returned flagged.
BudgetSearchResult budget_search(const std::vector<ScoredSample>& eval_set,
                                 const BudgetSpec& budget,
                                 std::span<const double> lambda_grid);

/// Default grid: zero plus 41 geometric points over (0, 4 c_fn / (1 - pi*_in)].
Vec default_lambda_grid(const BudgetSpec& budget);

/// Decision of the scale-invariant Lagrangian rule
///   reject iff w_err (1 - s_sc) + w_out / s_ood > w_in
/// at one grid point.
bool lagrangian_reject(const ScoredSample& s, double w_err, double w_in, double w_out);

struct KatzSamuelsReport {
    double objective = 0.0;       // empirical P_out(r = 0)
    double inlier_abstain = 0.0;  // empirical P_in(r = 1)
    double inlier_error = 0.0;    // empirical P_in(err, r = 0)
    bool feasible = false;
};

/// Evaluation-only alternative objective: minimize P_out(r=0) subject to
/// P_in(r=1) <= kappa and P_in(err, r=0) <= tau.
KatzSamuelsReport katz_samuels_objective(
    const std::vector<ScoredSample>& eval_set,
    const std::function<bool(const ScoredSample&)>& rejects, double kappa, double tau);

}  // namespace scod
