#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scod/numeric.hpp"
#include "scod/rng.hpp"

namespace scod {

/// Gaussian with diagonal covariance. Isotropic distributions store the
/// same variance in every coordinate.
struct GaussianClassConditional {
    Vec mean;
    Vec variance;  // per-coordinate, all > 0

    GaussianClassConditional() = default;
    GaussianClassConditional(Vec m, Vec var);
    static GaussianClassConditional isotropic(Vec m, double var);

    int dim() const { return static_cast<int>(mean.size()); }
    double log_density(const Vec& x) const;
    Vec sample(Rng& rng) const;
};

/// Finite mixture of labeled Gaussian class-conditionals with exact
/// posteriors and densities. Immutable after construction.
class LabeledMixtureDistribution {
  public:
    LabeledMixtureDistribution(Vec class_priors,
                               std::vector<GaussianClassConditional> conditionals);

    int num_classes() const { return static_cast<int>(priors_.size()); }
    int dim() const { return conditionals_.front().dim(); }
    const Vec& class_priors() const { return priors_; }
    const GaussianClassConditional& conditional(int y) const { return conditionals_.at(y); }

    /// Exact P(y|x), log-space; all-underflow points fall back to the prior.
    Vec posterior(const Vec& x) const;
    double log_density(const Vec& x) const;

    /// Draw (x, y).
    std::pair<Vec, int> sample(Rng& rng) const;

  private:
    Vec priors_;
    std::vector<GaussianClassConditional> conditionals_;
};

/// Outlier density abstraction. `strictly_zero` is exact for
/// compactly-supported variants and drives strict-inlier certification.
class OutlierDensity {
  public:
    virtual ~OutlierDensity() = default;
    virtual double log_density(const Vec& x) const = 0;
    virtual Vec sample(Rng& rng) const = 0;
    virtual bool strictly_zero(const Vec& x) const {
        return log_density(x) == -kInf;
    }
    /// True when the density vanishes on a set of positive inlier mass,
    /// making exact strict-inlier sampling possible.
    virtual bool has_zero_density_region() const { return false; }
};

class GaussianOutlier final : public OutlierDensity {
  public:
    explicit GaussianOutlier(GaussianClassConditional g) : g_(std::move(g)) {}
    double log_density(const Vec& x) const override { return g_.log_density(x); }
    Vec sample(Rng& rng) const override { return g_.sample(rng); }

  private:
    GaussianClassConditional g_;
};

class MixtureOutlier final : public OutlierDensity {
  public:
    MixtureOutlier(Vec weights, std::vector<GaussianClassConditional> comps);
    double log_density(const Vec& x) const override;
    Vec sample(Rng& rng) const override;

  private:
    Vec weights_;
    std::vector<GaussianClassConditional> comps_;
};

/// Uniform density on an axis-aligned box; zero outside (compact support).
class UniformBoxOutlier final : public OutlierDensity {
  public:
    UniformBoxOutlier(Vec lo, Vec hi);
    double log_density(const Vec& x) const override;
    Vec sample(Rng& rng) const override;
    bool has_zero_density_region() const override { return true; }

  private:
    Vec lo_, hi_;
    double log_volume_;
};

/// Gaussian restricted to an axis-aligned box, renormalized; exact density
/// inside, exactly zero outside. Sampling by rejection.
class TruncatedGaussianOutlier final : public OutlierDensity {
  public:
    TruncatedGaussianOutlier(GaussianClassConditional g, Vec lo, Vec hi);
    double log_density(const Vec& x) const override;
    Vec sample(Rng& rng) const override;
    bool has_zero_density_region() const override { return true; }

  private:
    GaussianClassConditional g_;
    Vec lo_, hi_;
    double log_mass_;  // log of Gaussian mass inside the box
};

enum class SampleOrigin { kInlier, kOutlier, kWild, kStrictInlier };
enum class SampleSource { kInlier, kOutlier, kWild, kTest };

struct Sample {
    Vec features;
    std::optional<int> label;  // inlier-origin only
    SampleOrigin origin;
};

/// Inlier mixture + outlier density + the test/wild mixing weights.
/// P_te = pi_in_star * P_in + (1 - pi_in_star) * P_out,
/// P_mix = pi_mix * P_in + (1 - pi_mix) * P_out.
class ScodEnvironment {
  public:
    ScodEnvironment(LabeledMixtureDistribution inlier,
                    std::shared_ptr<const OutlierDensity> outlier,
                    double pi_in_star, double pi_mix);

    const LabeledMixtureDistribution& inlier() const { return inlier_; }
    const OutlierDensity& outlier() const { return *outlier_; }
    double pi_in_star() const { return pi_in_star_; }
    double pi_mix() const { return pi_mix_; }

    double log_inlier_density(const Vec& x) const { return inlier_.log_density(x); }
    double log_outlier_density(const Vec& x) const { return outlier_->log_density(x); }
    double log_mix_density(const Vec& x) const;
    double log_test_density(const Vec& x) const;

    /// P_out(x) / P_in(x), exact in log-space. +inf when P_in(x) = 0
    /// (including when both densities vanish, which forces rejection).
    double density_ratio_out_in(const Vec& x) const;

    /// Deterministic given seed. Wild draws inlier with probability
    /// pi_mix, test with probability pi_in_star. Labels attach to
    /// inlier-origin samples only.
    std::vector<Sample> sample(SampleSource source, int n, std::uint64_t seed) const;

    /// Samples certified to satisfy P_out(x) = 0. Exact (rejection
    /// sampling) when the outlier has a zero-density region, otherwise a
    /// documented surrogate that draws from P_in and flags the sample.
    std::vector<Sample> sample_strict_inlier(int n, std::uint64_t seed) const;

  private:
    LabeledMixtureDistribution inlier_;
    std::shared_ptr<const OutlierDensity> outlier_;
    double pi_in_star_;
    double pi_mix_;
};

/// Open-set restriction: hold out one class of `full` as the outlier
/// distribution; remaining priors renormalize. pi_mix defaults to
/// pi_in_star when not given.
ScodEnvironment open_set_restrict(const LabeledMixtureDistribution& full,
                                  int held_out_class,
                                  std::optional<double> pi_mix = std::nullopt);

}  // namespace scod
