#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "scod/numeric.hpp"

namespace scod {

/// max_y softmax(logits)_y, shift-invariant.
double msp(std::span<const double> logits);

double max_logit(std::span<const double> logits);

/// Energy score -log sum_y exp(f_y), via log-sum-exp.
double energy(std::span<const double> logits);

double embed_l1(std::span<const double> embedding);

/// Principal-subspace projector fit by deflated power iteration on the
/// sample covariance. residual() is the norm of the component of
/// (x - mean) orthogonal to the fitted span.
class ResidualProjector {
  public:
    /// embeddings: row-major n x dim. Throws when the centered data has
    /// rank below subspace_dim (message names the achieved rank).
    static ResidualProjector fit(const std::vector<Vec>& embeddings, int subspace_dim);

    double residual(std::span<const double> embedding) const;

    int subspace_dim() const { return static_cast<int>(directions_.size()); }
    const Vec& mean() const { return mean_; }
    const std::vector<Vec>& directions() const { return directions_; }

  private:
    Vec mean_;
    std::vector<Vec> directions_;  // orthonormal
};

/// SIRC combiner parameters. `s_ood` fed to sirc() must follow the
/// "larger = more inlier" orientation; adapters negate raw scores that
/// grow with outlierness (see fit_from_inliers).
struct SircParams {
    double a1 = 1.0;
    double a2 = 1.0;
    double a3 = 0.0;

    /// Default fit rule: a1 = 1, a2 = 1/std of the OOD score on held-out
    /// inliers, a3 = -mean/std of the same.
    static SircParams fit_from_inliers(std::span<const double> inlier_ood_scores);
};

/// (s_sc - a1) * (1 + exp(-(a2 * s_ood + a3))). Larger = safer; the
/// rejection rule thresholds with "<".
double sirc(double s_sc, double s_ood, const SircParams& params);

}  // namespace scod
