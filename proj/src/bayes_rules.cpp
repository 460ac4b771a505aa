#include "scod/bayes_rules.hpp"

#include <cmath>

namespace scod {

namespace {
void check_simplex(std::span<const double> p) {
    if (p.empty()) throw std::invalid_argument("empty posterior");
    double total = 0.0;
    for (double v : p) {
        if (std::isnan(v) || v < -1e-9) throw std::invalid_argument("invalid posterior");
        total += v;
    }
    if (std::abs(total - 1.0) > 1e-6)
        throw std::invalid_argument("posterior does not sum to 1");
}
}  // namespace

Decision chow_rule(std::span<const double> posterior, double c_in) {
    if (c_in >= 1.0) throw std::invalid_argument("chow_rule requires c_in < 1");
    if (c_in < 0.0) throw std::invalid_argument("c_in must be nonnegative");
    check_simplex(posterior);
    const int best = argmax_lowest_tie(posterior);
    Decision d;
    d.rejection_score = 1.0 - posterior[best];
    d.threshold = c_in / (1.0 - c_in);
    d.abstain = d.rejection_score > d.threshold;
    d.label = d.abstain ? -1 : best;
    return d;
}

Decision density_rejection(double ratio_out_in, double c_in) {
    if (c_in >= 1.0) throw std::invalid_argument("density_rejection requires c_in < 1");
    if (c_in < 0.0) throw std::invalid_argument("c_in must be nonnegative");
    if (std::isnan(ratio_out_in) || ratio_out_in < 0.0)
        throw std::invalid_argument("ratio must be a nonnegative extended real");
    Decision d;
    d.rejection_score = ratio_out_in;
    d.threshold = c_in / (1.0 - c_in);
    d.abstain = ratio_out_in > d.threshold;  // +inf always abstains
    return d;
}

Decision scod_bayes(std::span<const double> posterior, double ratio_out_in,
                    const CostSpec& costs) {
    costs.validate();
    check_simplex(posterior);
    if (std::isnan(ratio_out_in) || ratio_out_in < 0.0)
        throw std::invalid_argument("ratio must be a nonnegative extended real");
    const int best = argmax_lowest_tie(posterior);
    const double sc_term = costs.error_weight() * (1.0 - posterior[best]);
    // 0 * inf must not poison the score when the OOD cost is switched off.
    const double ood_term =
        costs.c_out > 0.0 ? costs.c_out * ratio_out_in : 0.0;
    Decision d;
    d.rejection_score = sc_term + ood_term;
    d.threshold = costs.c_in;
    d.abstain = d.rejection_score > d.threshold;
    d.label = d.abstain ? -1 : best;
    return d;
}

OpenSetDecision open_set_bayes(std::span<const double> full_posterior,
                               int held_out,
                               std::span<const double> te_priors,
                               const CostSpec& costs) {
    costs.validate();
    if (std::abs(costs.c_in + costs.c_out - 1.0) > 1e-12)
        throw std::invalid_argument("open_set_bayes requires c_in + c_out = 1");
    check_simplex(full_posterior);
    check_simplex(te_priors);
    const int L = static_cast<int>(full_posterior.size());
    if (te_priors.size() != full_posterior.size())
        throw std::invalid_argument("prior/posterior size mismatch");
    if (held_out < 0 || held_out >= L)
        throw std::invalid_argument("held-out index out of range");
    const double prior_held = te_priors[held_out];
    const double prior_rest = 1.0 - prior_held;
    if (prior_rest <= 0.0)
        throw std::invalid_argument("P_te(y != held_out) must be positive");

    const double z = costs.c_in * prior_held / (costs.c_out * prior_rest);
    const double t_osc = z / (1.0 + z);

    const double p_held = full_posterior[held_out];
    const double p_rest = 1.0 - p_held;

    // Form 1: threshold the held-out posterior.
    const bool reject_threshold = p_held > t_osc;

    // Form 2: sample-dependent threshold on the max inlier posterior,
    //   max_{y != held} P_in(y|x) > max_{y != held} P_te(y|x) / (1 - t_osc),
    // with P_in(y|x) = P_te(y|x) / P_te(y != held | x).
    double max_te_rest = 0.0;
    int best_rest = -1;
    for (int y = 0; y < L; ++y) {
        if (y == held_out) continue;
        if (best_rest < 0 || full_posterior[y] > max_te_rest) {
            max_te_rest = full_posterior[y];
            best_rest = y;
        }
    }
    bool reject_msp_form;
    if (p_rest <= 0.0) {
        reject_msp_form = true;  // posterior fully on the held-out class
    } else {
        const double max_in = max_te_rest / p_rest;
        reject_msp_form = max_in * (1.0 - t_osc) > max_te_rest;
    }

    OpenSetDecision out;
    out.t_osc = t_osc;
    out.threshold_form = reject_threshold;
    out.msp_form = reject_msp_form;
    out.decision.abstain = reject_threshold;
    out.decision.rejection_score = p_held;
    out.decision.threshold = t_osc;
    out.decision.label = reject_threshold ? -1 : best_rest;
    return out;
}

MspWitness msp_disagreement_witness(int num_classes, double t_msp, double epsilon) {
    if (num_classes < 2) throw std::invalid_argument("need at least two classes");
    if (!(t_msp > 0.0 && t_msp < 1.0)) throw std::invalid_argument("t_msp out of (0,1)");
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon out of (0,1)");

    const int L = num_classes;
    MspWitness w;
    w.p_te.assign(L, 0.0);
    const double uniform_in = 1.0 / (L - 1);
    if (t_msp <= uniform_in) {
        // Held-out class dominates; the restricted posterior is uniform, so
        // MSP accepts while the Bayes rule rejects for thresholds below 1-eps.
        w.proof_case = 1;
        for (int y = 0; y < L - 1; ++y) w.p_te[y] = epsilon / (L - 1);
        w.p_te[L - 1] = 1.0 - epsilon;
        w.bayes_t_lo = 0.0;
        w.bayes_t_hi = 1.0 - epsilon;
    } else {
        // Held-out class is negligible; MSP rejects (uniform restricted
        // posterior below t_msp) while the Bayes rule accepts above eps.
        w.proof_case = 2;
        for (int y = 0; y < L - 1; ++y) w.p_te[y] = (1.0 - epsilon) / (L - 1);
        w.p_te[L - 1] = epsilon;
        w.bayes_t_lo = epsilon;
        w.bayes_t_hi = 1.0;
    }
    w.p_in.assign(L - 1, uniform_in);
    return w;
}

}  // namespace scod
