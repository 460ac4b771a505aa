#include "scod/distributions.hpp"

#include <cmath>
#include <numeric>

namespace scod {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_finite(const Vec& x) {
    for (double v : x)
        if (std::isnan(v)) throw std::invalid_argument("NaN feature value");
}
}  // namespace

GaussianClassConditional::GaussianClassConditional(Vec m, Vec var)
    : mean(std::move(m)), variance(std::move(var)) {
    if (mean.empty() || mean.size() != variance.size())
        throw std::invalid_argument("mean/variance dimension mismatch");
    for (double v : variance)
        if (!(v > 0.0)) throw std::invalid_argument("variance must be positive");
}

GaussianClassConditional GaussianClassConditional::isotropic(Vec m, double var) {
    Vec v(m.size(), var);
    return GaussianClassConditional(std::move(m), std::move(v));
}

double GaussianClassConditional::log_density(const Vec& x) const {
    if (x.size() != mean.size())
        throw std::invalid_argument("feature dimension mismatch");
    double acc = 0.0;
    for (size_t i = 0; i < mean.size(); ++i) {
        const double d = x[i] - mean[i];
        acc += -0.5 * (kLog2Pi + std::log(variance[i]) + d * d / variance[i]);
    }
    return acc;
}

Vec GaussianClassConditional::sample(Rng& rng) const {
    Vec x(mean.size());
    for (size_t i = 0; i < mean.size(); ++i)
        x[i] = mean[i] + std::sqrt(variance[i]) * rng.normal();
    return x;
}

LabeledMixtureDistribution::LabeledMixtureDistribution(
    Vec class_priors, std::vector<GaussianClassConditional> conditionals)
    : priors_(std::move(class_priors)), conditionals_(std::move(conditionals)) {
    if (priors_.empty() || priors_.size() != conditionals_.size())
        throw std::invalid_argument("priors/conditionals size mismatch");
    double total = 0.0;
    for (double p : priors_) {
        if (p < 0.0) throw std::invalid_argument("negative class prior");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("class priors must sum to 1");
    const int d = conditionals_.front().dim();
    for (const auto& c : conditionals_)
        if (c.dim() != d) throw std::invalid_argument("conditional dimension mismatch");
}

Vec LabeledMixtureDistribution::posterior(const Vec& x) const {
    check_finite(x);
    const int L = num_classes();
    Vec log_joint(L);
    for (int y = 0; y < L; ++y)
        log_joint[y] = (priors_[y] > 0.0 ? std::log(priors_[y]) : -kInf) +
                       conditionals_[y].log_density(x);
    const double lse = log_sum_exp(log_joint);
    if (!std::isfinite(lse)) return priors_;  // all-underflow fallback
    Vec p(L);
    for (int y = 0; y < L; ++y) p[y] = std::exp(log_joint[y] - lse);
    return p;
}

double LabeledMixtureDistribution::log_density(const Vec& x) const {
    check_finite(x);
    const int L = num_classes();
    Vec log_joint(L);
    for (int y = 0; y < L; ++y)
        log_joint[y] = (priors_[y] > 0.0 ? std::log(priors_[y]) : -kInf) +
                       conditionals_[y].log_density(x);
    return log_sum_exp(log_joint);
}

std::pair<Vec, int> LabeledMixtureDistribution::sample(Rng& rng) const {
    const double u = rng.uniform();
    double cum = 0.0;
    int y = num_classes() - 1;
    for (int k = 0; k < num_classes(); ++k) {
        cum += priors_[k];
        if (u < cum) {
            y = k;
            break;
        }
    }
    return {conditionals_[y].sample(rng), y};
}

MixtureOutlier::MixtureOutlier(Vec weights, std::vector<GaussianClassConditional> comps)
    : weights_(std::move(weights)), comps_(std::move(comps)) {
    if (weights_.empty() || weights_.size() != comps_.size())
        throw std::invalid_argument("mixture weights/components mismatch");
    double total = std::accumulate(weights_.begin(), weights_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-12)
        throw std::invalid_argument("mixture weights must sum to 1");
}

double MixtureOutlier::log_density(const Vec& x) const {
    Vec terms(weights_.size());
    for (size_t k = 0; k < weights_.size(); ++k)
        terms[k] = (weights_[k] > 0.0 ? std::log(weights_[k]) : -kInf) +
                   comps_[k].log_density(x);
    return log_sum_exp(terms);
}

Vec MixtureOutlier::sample(Rng& rng) const {
    const double u = rng.uniform();
    double cum = 0.0;
    size_t k = weights_.size() - 1;
    for (size_t i = 0; i < weights_.size(); ++i) {
        cum += weights_[i];
        if (u < cum) {
            k = i;
            break;
        }
    }
    return comps_[k].sample(rng);
}

UniformBoxOutlier::UniformBoxOutlier(Vec lo, Vec hi)
    : lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.empty() || lo_.size() != hi_.size())
        throw std::invalid_argument("box bounds mismatch");
    log_volume_ = 0.0;
    for (size_t i = 0; i < lo_.size(); ++i) {
        if (!(hi_[i] > lo_[i])) throw std::invalid_argument("degenerate box");
        log_volume_ += std::log(hi_[i] - lo_[i]);
    }
}

double UniformBoxOutlier::log_density(const Vec& x) const {
    check_finite(x);
    if (x.size() != lo_.size()) throw std::invalid_argument("dimension mismatch");
    for (size_t i = 0; i < lo_.size(); ++i)
        if (x[i] < lo_[i] || x[i] > hi_[i]) return -kInf;
    return -log_volume_;
}

Vec UniformBoxOutlier::sample(Rng& rng) const {
    Vec x(lo_.size());
    for (size_t i = 0; i < lo_.size(); ++i) x[i] = rng.uniform(lo_[i], hi_[i]);
    return x;
}

TruncatedGaussianOutlier::TruncatedGaussianOutlier(GaussianClassConditional g,
                                                   Vec lo, Vec hi)
    : g_(std::move(g)), lo_(std::move(lo)), hi_(std::move(hi)) {
    if (lo_.size() != hi_.size() || static_cast<int>(lo_.size()) != g_.dim())
        throw std::invalid_argument("truncation box dimension mismatch");
    log_mass_ = 0.0;
    for (size_t i = 0; i < lo_.size(); ++i) {
        if (!(hi_[i] > lo_[i])) throw std::invalid_argument("degenerate box");
        const double sd = std::sqrt(g_.variance[i]);
        const double mass = std_normal_cdf((hi_[i] - g_.mean[i]) / sd) -
                            std_normal_cdf((lo_[i] - g_.mean[i]) / sd);
        if (!(mass > 0.0))
            throw std::invalid_argument("truncation box has negligible mass");
        log_mass_ += std::log(mass);
    }
}

double TruncatedGaussianOutlier::log_density(const Vec& x) const {
    check_finite(x);
    for (size_t i = 0; i < lo_.size(); ++i)
        if (x[i] < lo_[i] || x[i] > hi_[i]) return -kInf;
    return g_.log_density(x) - log_mass_;
}

Vec TruncatedGaussianOutlier::sample(Rng& rng) const {
    // Per-coordinate inverse-free rejection; box mass is validated at
    // construction so this terminates quickly in practice.
    for (int tries = 0; tries < 100000; ++tries) {
        Vec x = g_.sample(rng);
        bool inside = true;
        for (size_t i = 0; i < lo_.size(); ++i)
            if (x[i] < lo_[i] || x[i] > hi_[i]) {
                inside = false;
                break;
            }
        if (inside) return x;
    }
    throw std::runtime_error("truncated Gaussian rejection sampling stalled");
}

ScodEnvironment::ScodEnvironment(LabeledMixtureDistribution inlier,
                                 std::shared_ptr<const OutlierDensity> outlier,
                                 double pi_in_star, double pi_mix)
    : inlier_(std::move(inlier)),
      outlier_(std::move(outlier)),
      pi_in_star_(pi_in_star),
      pi_mix_(pi_mix) {
    if (!outlier_) throw std::invalid_argument("null outlier density");
    if (!(pi_in_star_ > 0.0 && pi_in_star_ < 1.0))
        throw std::invalid_argument("pi_in_star must lie in (0,1)");
    if (!(pi_mix_ >= 0.0 && pi_mix_ < 1.0))
        throw std::invalid_argument("pi_mix must lie in [0,1)");
}

double ScodEnvironment::log_mix_density(const Vec& x) const {
    const double a = (pi_mix_ > 0.0 ? std::log(pi_mix_) + log_inlier_density(x) : -kInf);
    const double b = std::log1p(-pi_mix_) + log_outlier_density(x);
    const double terms[2] = {a, b};
    return log_sum_exp(terms);
}

double ScodEnvironment::log_test_density(const Vec& x) const {
    const double a = std::log(pi_in_star_) + log_inlier_density(x);
    const double b = std::log1p(-pi_in_star_) + log_outlier_density(x);
    const double terms[2] = {a, b};
    return log_sum_exp(terms);
}

double ScodEnvironment::density_ratio_out_in(const Vec& x) const {
    const double lin = log_inlier_density(x);
    const double lout = log_outlier_density(x);
    if (lin == -kInf) return kInf;  // includes the both-zero case
    if (lout == -kInf) return 0.0;
    return std::exp(lout - lin);
}

std::vector<Sample> ScodEnvironment::sample(SampleSource source, int n,
                                            std::uint64_t seed) const {
    if (n < 0) throw std::invalid_argument("negative sample count");
    Rng rng(seed);
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        switch (source) {
            case SampleSource::kInlier: {
                auto [x, y] = inlier_.sample(rng);
                out.push_back({std::move(x), y, SampleOrigin::kInlier});
                break;
            }
            case SampleSource::kOutlier:
                out.push_back({outlier_->sample(rng), std::nullopt, SampleOrigin::kOutlier});
                break;
            case SampleSource::kWild:
                if (rng.bernoulli(pi_mix_)) {
                    auto [x, y] = inlier_.sample(rng);
                    out.push_back({std::move(x), y, SampleOrigin::kInlier});
                } else {
                    out.push_back({outlier_->sample(rng), std::nullopt, SampleOrigin::kOutlier});
                }
                break;
            case SampleSource::kTest:
                if (rng.bernoulli(pi_in_star_)) {
                    auto [x, y] = inlier_.sample(rng);
                    out.push_back({std::move(x), y, SampleOrigin::kInlier});
                } else {
                    out.push_back({outlier_->sample(rng), std::nullopt, SampleOrigin::kOutlier});
                }
                break;
        }
    }
    return out;
}

std::vector<Sample> ScodEnvironment::sample_strict_inlier(int n,
                                                          std::uint64_t seed) const {
    if (n < 0) throw std::invalid_argument("negative sample count");
    Rng rng(seed);
    std::vector<Sample> out;
    out.reserve(static_cast<size_t>(n));
    const bool exact = outlier_->has_zero_density_region();
    for (int i = 0; i < n; ++i) {
        if (exact) {
            bool found = false;
            for (int tries = 0; tries < 100000; ++tries) {
                auto [x, y] = inlier_.sample(rng);
                if (outlier_->strictly_zero(x)) {
                    out.push_back({std::move(x), y, SampleOrigin::kStrictInlier});
                    found = true;
                    break;
                }
            }
            if (!found)
                throw std::runtime_error(
                    "strict-inlier rejection sampling stalled; outlier support "
                    "nearly covers the inlier support");
        } else {
            // Overlapping supports: practical surrogate, drawn from P_in.
            auto [x, y] = inlier_.sample(rng);
            out.push_back({std::move(x), y, SampleOrigin::kStrictInlier});
        }
    }
    return out;
}

ScodEnvironment open_set_restrict(const LabeledMixtureDistribution& full,
                                  int held_out_class,
                                  std::optional<double> pi_mix) {
    const int L = full.num_classes();
    if (L < 2) throw std::invalid_argument("need at least two classes");
    if (held_out_class < 0 || held_out_class >= L)
        throw std::invalid_argument("held-out class out of range");
    const double held_prior = full.class_priors()[held_out_class];
    if (held_prior <= 0.0 || held_prior >= 1.0)
        throw std::invalid_argument("held-out class prior must lie in (0,1)");

    Vec priors;
    std::vector<GaussianClassConditional> conds;
    for (int y = 0; y < L; ++y) {
        if (y == held_out_class) continue;
        priors.push_back(full.class_priors()[y] / (1.0 - held_prior));
        conds.push_back(full.conditional(y));
    }
    // Renormalization may leave the sum a few ulps off 1.
    double total = std::accumulate(priors.begin(), priors.end(), 0.0);
    for (double& p : priors) p /= total;

    const double pi_in_star = 1.0 - held_prior;
    auto outlier = std::make_shared<GaussianOutlier>(full.conditional(held_out_class));
    return ScodEnvironment(LabeledMixtureDistribution(std::move(priors), std::move(conds)),
                           std::move(outlier), pi_in_star,
                           pi_mix.value_or(pi_in_star));
}

}  // namespace scod
