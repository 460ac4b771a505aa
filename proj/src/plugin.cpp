#include "scod/plugin.hpp"

#include <cmath>
#include <sstream>

#include "scod/parallel.hpp"

namespace scod {

Decision black_box_reject(const PluginInputs& inputs, const CostSpec& costs,
                          std::span<const double> posterior) {
    costs.validate();
    if (std::isnan(inputs.s_ood) || inputs.s_ood < 0.0)
        throw std::invalid_argument("s_ood must be a nonnegative extended real");

    const double t_bb = 1.0 - 2.0 * costs.c_in - costs.c_out;
    double score = costs.error_weight() * inputs.s_sc;
    if (costs.c_out > 0.0) {
        if (inputs.s_ood == 0.0) {
            score = -kInf;  // theta = -inf, always reject
        } else if (std::isinf(inputs.s_ood)) {
            // theta = 0: pure Chow behavior.
        } else {
            score += costs.c_out * (-1.0 / inputs.s_ood);
        }
    }

    Decision d;
    d.rejection_score = -score;  // larger = more abstain-worthy
    d.threshold = -t_bb;
    d.abstain = score < t_bb;
    if (!d.abstain && !posterior.empty())
        d.label = argmax_lowest_tie(posterior);
    return d;
}

MixtureEstimate estimate_pi_mix(std::span<const double> ood_logit_values) {
    if (ood_logit_values.empty())
        throw std::invalid_argument("empty strict-inlier set");
    MixtureEstimate est;
    est.per_sample.reserve(ood_logit_values.size());
    double total = 0.0;
    for (double s : ood_logit_values) {
        const double v = std::exp(-s);
        est.per_sample.push_back(v);
        total += v;
    }
    est.pi_mix_hat = total / static_cast<double>(ood_logit_values.size());
    if (est.pi_mix_hat < 0.0) {
        est.pi_mix_hat = 0.0;
        est.clamped = true;
    } else if (est.pi_mix_hat > 1.0 - kPiMixClamp) {
        est.pi_mix_hat = 1.0 - kPiMixClamp;
        est.clamped = true;
    }
    return est;
}

CorrectedRatio noise_correct(double p_mix_over_p_in, double pi_mix) {
    if (pi_mix >= 1.0) throw std::invalid_argument("pi_mix must be < 1");
    if (pi_mix < 0.0) throw std::invalid_argument("pi_mix must be nonnegative");
    if (std::isnan(p_mix_over_p_in) || p_mix_over_p_in < 0.0)
        throw std::invalid_argument("density ratio must be nonnegative");

    CorrectedRatio out;
    double corrected = (p_mix_over_p_in - pi_mix) / (1.0 - pi_mix);
    if (corrected < 0.0) {
        corrected = kRatioFloor;
        out.clamped = true;
    }
    out.ratio_out_in = corrected;
    out.s_ood = corrected == 0.0 ? kInf : 1.0 / corrected;
    return out;
}

RejectionRule loss_based_reject(const ScorerModel& model,
                                const std::vector<Sample>& strict_inlier_set,
                                const CostSpec& costs) {
    costs.validate();
    if (strict_inlier_set.empty())
        throw std::invalid_argument("empty strict-inlier set");

    Vec logits;
    logits.reserve(strict_inlier_set.size());
    for (const auto& s : strict_inlier_set)
        logits.push_back(model.forward(s.features).ood_logit);
    const MixtureEstimate mix = estimate_pi_mix(logits);
    const double pi_hat = mix.pi_mix_hat;

    std::ostringstream rep;
    rep << "rule=plugin-loss-based\n"
        << "c_in=" << format_double(costs.c_in) << "\n"
        << "c_out=" << format_double(costs.c_out) << "\n"
        << "t_bb=" << format_double(1.0 - 2.0 * costs.c_in - costs.c_out) << "\n"
        << "pi_mix_hat=" << format_double(pi_hat) << "\n"
        << "pi_mix_clamped=" << (mix.clamped ? 1 : 0) << "\n";

    ScorerModel m = model;  // rules are immutable once constructed
    RejectionRule rule;
    rule.report = rep.str();
    rule.evaluate = [m = std::move(m), pi_hat, costs](const Vec& x) {
        auto est = m.probability_estimates(x);
        PluginInputs in;
        in.s_sc = est.class_probs[argmax_lowest_tie(est.class_probs)];
        in.s_ood = noise_correct(std::exp(-est.ood_logit), pi_hat).s_ood;
        return black_box_reject(in, costs, est.class_probs);
    };
    return rule;
}

Decision coupled_reject_decision(std::span<const double> logits_with_reject) {
    if (logits_with_reject.size() < 2)
        throw std::invalid_argument("need at least one class plus the reject logit");
    const Vec zeta = softmax(logits_with_reject);
    const int L = static_cast<int>(zeta.size()) - 1;
    int best = 0;
    for (int y = 1; y < L; ++y)
        if (zeta[y] > zeta[best]) best = y;
    Decision d;
    d.rejection_score = zeta[L];
    d.threshold = zeta[best];
    d.abstain = zeta[best] < zeta[L];  // strict; ties accept
    d.label = d.abstain ? -1 : best;
    return d;
}

RejectionRule coupled_reject(const ScorerModel& model) {
    if (!model.architecture().coupled)
        throw std::invalid_argument("coupled_reject requires a coupled model");
    std::ostringstream rep;
    rep << "rule=plugin-coupled\n";
    ScorerModel m = model;
    RejectionRule rule;
    rule.report = rep.str();
    rule.evaluate = [m = std::move(m)](const Vec& x) {
        return coupled_reject_decision(m.forward(x).class_logits);
    };
    return rule;
}

bool lagrangian_reject(const ScoredSample& s, double w_err, double w_in,
                       double w_out) {
    double score = w_err * (1.0 - s.s_sc);
    if (w_out != 0.0) {
        if (s.s_ood == 0.0) return w_out > 0.0 ? true : false;
        if (!std::isinf(s.s_ood)) score += w_out / s.s_ood;
    }
    return score > w_in;
}

Vec default_lambda_grid(const BudgetSpec& budget) {
    budget.validate();
    Vec grid{0.0};
    const double hi = 4.0 * std::max(budget.c_fn, 1e-3) / (1.0 - budget.pi_in_star);
    const double lo = hi * 1e-3;
    const int points = 41;
    for (int i = 0; i < points; ++i) {
        const double t = static_cast<double>(i) / (points - 1);
        grid.push_back(lo * std::pow(hi / lo, t));
    }
    return grid;
}

namespace {

LagrangianPoint evaluate_lambda(const std::vector<ScoredSample>& eval_set,
                                const BudgetSpec& budget, double lambda) {
    LagrangianPoint pt;
    pt.lambda = lambda;
    pt.w_err = 1.0 - budget.c_fn;
    pt.w_in = lambda * budget.pi_in_star;
    pt.w_out = budget.c_fn - lambda * (1.0 - budget.pi_in_star);
    pt.nu = lambda * (1.0 - budget.pi_in_star) - lambda * budget.b_rej;
    pt.negative_out_weight = pt.w_out < 0.0;

    const size_t n = eval_set.size();
    size_t abstained = 0, n_in = 0, n_out = 0, in_err_acc = 0, out_acc = 0;
    for (const auto& s : eval_set) {
        const bool rej = lagrangian_reject(s, pt.w_err, pt.w_in, pt.w_out);
        if (rej) ++abstained;
        if (s.is_outlier) {
            ++n_out;
            if (!rej) ++out_acc;
        } else {
            ++n_in;
            if (!rej && s.label && *s.label != s.predicted) ++in_err_acc;
        }
    }
    pt.abstention_rate = static_cast<double>(abstained) / static_cast<double>(n);
    const double p_in_err =
        n_in > 0 ? static_cast<double>(in_err_acc) / static_cast<double>(n_in) : 0.0;
    const double p_out_acc =
        n_out > 0 ? static_cast<double>(out_acc) / static_cast<double>(n_out) : 0.0;
    pt.objective = (1.0 - budget.c_fn) * p_in_err + budget.c_fn * p_out_acc;
    pt.feasible = pt.abstention_rate <= budget.b_rej;
    return pt;
}

}  // namespace

BudgetSearchResult budget_search(const std::vector<ScoredSample>& eval_set,
                                 const BudgetSpec& budget,
                                 std::span<const double> lambda_grid) {
    budget.validate();
    if (eval_set.empty()) throw std::invalid_argument("empty eval set");
    if (lambda_grid.empty()) throw std::invalid_argument("empty lambda grid");

    BudgetSearchResult result;
    result.grid.resize(lambda_grid.size());
    parallel_for(lambda_grid.size(), [&](size_t i) {
        result.grid[i] = evaluate_lambda(eval_set, budget, lambda_grid[i]);
    });

    // Deterministic reduction in grid order: best feasible objective,
    // falling back to minimal constraint violation.
    int best_feasible = -1, least_violating = -1;
    for (size_t i = 0; i < result.grid.size(); ++i) {
        const auto& pt = result.grid[i];
        if (pt.feasible) {
            if (best_feasible < 0 || pt.objective < result.grid[best_feasible].objective)
                best_feasible = static_cast<int>(i);
        }
        if (least_violating < 0 ||
            pt.abstention_rate < result.grid[least_violating].abstention_rate)
            least_violating = static_cast<int>(i);
    }
    result.any_feasible = best_feasible >= 0;
    result.best = result.grid[result.any_feasible ? best_feasible : least_violating];
    return result;
}

KatzSamuelsReport katz_samuels_objective(
    const std::vector<ScoredSample>& eval_set,
    const std::function<bool(const ScoredSample&)>& rejects, double kappa,
    double tau) {
    if (eval_set.empty()) throw std::invalid_argument("empty eval set");
    size_t n_in = 0, n_out = 0, in_rej = 0, in_err_acc = 0, out_acc = 0;
    for (const auto& s : eval_set) {
        const bool rej = rejects(s);
        if (s.is_outlier) {
            ++n_out;
            if (!rej) ++out_acc;
        } else {
            ++n_in;
            if (rej)
                ++in_rej;
            else if (s.label && *s.label != s.predicted)
                ++in_err_acc;
        }
    }
    if (n_in == 0 || n_out == 0)
        throw std::invalid_argument("eval set must contain inliers and outliers");
    KatzSamuelsReport rep;
    rep.objective = static_cast<double>(out_acc) / static_cast<double>(n_out);
    rep.inlier_abstain = static_cast<double>(in_rej) / static_cast<double>(n_in);
    rep.inlier_error = static_cast<double>(in_err_acc) / static_cast<double>(n_in);
    rep.feasible = rep.inlier_abstain <= kappa && rep.inlier_error <= tau;
    return rep;
}

}  // namespace scod
