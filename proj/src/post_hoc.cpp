#include "scod/post_hoc.hpp"

#include <cmath>
#include <string>

namespace scod {

double msp(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("empty logits");
    const int best = argmax_lowest_tie(logits);
    return std::exp(logits[best] - log_sum_exp(logits));
}

double max_logit(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("empty logits");
    return logits[argmax_lowest_tie(logits)];
}

double energy(std::span<const double> logits) {
    if (logits.empty()) throw std::invalid_argument("empty logits");
    return -log_sum_exp(logits);
}

double embed_l1(std::span<const double> embedding) {
    double acc = 0.0;
    for (double v : embedding) acc += std::abs(v);
    return acc;
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

constexpr double kPowerTol = 1e-10;
constexpr int kPowerMaxIter = 1000;

}  // namespace

ResidualProjector ResidualProjector::fit(const std::vector<Vec>& embeddings,
                                         int subspace_dim) {
    if (embeddings.empty()) throw std::invalid_argument("no embeddings");
    const int dim = static_cast<int>(embeddings.front().size());
    const int n = static_cast<int>(embeddings.size());
    if (subspace_dim < 1 || subspace_dim >= dim)
        throw std::invalid_argument("subspace_dim must lie in [1, dim)");
    if (n < subspace_dim + 1)
        throw std::invalid_argument("need at least subspace_dim + 1 embeddings");

    ResidualProjector proj;
    proj.mean_.assign(dim, 0.0);
    for (const auto& e : embeddings) {
        if (static_cast<int>(e.size()) != dim)
            throw std::invalid_argument("inconsistent embedding dimension");
        for (int k = 0; k < dim; ++k) proj.mean_[k] += e[k];
    }
    for (int k = 0; k < dim; ++k) proj.mean_[k] /= n;

    std::vector<Vec> centered(embeddings);
    for (auto& e : centered)
        for (int k = 0; k < dim; ++k) e[k] -= proj.mean_[k];

    // Covariance (dim is small at desk scale).
    std::vector<Vec> cov(dim, Vec(dim, 0.0));
    for (const auto& e : centered)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) cov[i][j] += e[i] * e[j] / n;

    for (int d = 0; d < subspace_dim; ++d) {
        // Power iteration with a fixed deterministic start vector.
        Vec v(dim, 0.0);
        v[d % dim] = 1.0;
        // Orthogonalize the start against found directions.
        for (const auto& u : proj.directions_) {
            const double c = dot(v, u);
            for (int k = 0; k < dim; ++k) v[k] -= c * u[k];
        }
        double norm = std::sqrt(dot(v, v));
        if (norm < 1e-12) {
            v.assign(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
            for (const auto& u : proj.directions_) {
                const double c = dot(v, u);
                for (int k = 0; k < dim; ++k) v[k] -= c * u[k];
            }
            norm = std::sqrt(dot(v, v));
        }
        for (int k = 0; k < dim; ++k) v[k] /= norm;

        double eig = 0.0;
        for (int it = 0; it < kPowerMaxIter; ++it) {
            Vec w(dim, 0.0);
            for (int i = 0; i < dim; ++i)
                for (int j = 0; j < dim; ++j) w[i] += cov[i][j] * v[j];
            // Deflate.
            for (const auto& u : proj.directions_) {
                const double c = dot(w, u);
                for (int k = 0; k < dim; ++k) w[k] -= c * u[k];
            }
            const double new_eig = std::sqrt(dot(w, w));
            if (new_eig < 1e-14) {
                throw std::runtime_error(
                    "rank deficiency while fitting residual projector: achieved rank " +
                    std::to_string(d));
            }
            for (int k = 0; k < dim; ++k) w[k] /= new_eig;
            // Sign-aligned movement of the direction itself; the eigenvalue
            // alone converges quadratically faster than the vector and would
            // stop too early for the residual accuracy we need.
            const double sign = dot(w, v) >= 0.0 ? 1.0 : -1.0;
            double step = 0.0;
            for (int k = 0; k < dim; ++k)
                step = std::max(step, std::abs(sign * w[k] - v[k]));
            v = std::move(w);
            const double rel = std::abs(new_eig - eig) / std::max(new_eig, 1e-300);
            eig = new_eig;
            if (rel < kPowerTol && step < kPowerTol) break;
        }
        proj.directions_.push_back(std::move(v));
    }
    return proj;
}

double ResidualProjector::residual(std::span<const double> embedding) const {
    if (embedding.size() != mean_.size())
        throw std::invalid_argument("embedding dimension mismatch");
    Vec r(mean_.size());
    for (size_t k = 0; k < r.size(); ++k) r[k] = embedding[k] - mean_[k];
    for (const auto& u : directions_) {
        const double c = dot(r, u);
        for (size_t k = 0; k < r.size(); ++k) r[k] -= c * u[k];
    }
    return std::sqrt(dot(r, r));
}

SircParams SircParams::fit_from_inliers(std::span<const double> inlier_ood_scores) {
    if (inlier_ood_scores.empty())
        throw std::invalid_argument("no inlier scores for SIRC fit");
    double mean = 0.0;
    for (double v : inlier_ood_scores) mean += v;
    mean /= static_cast<double>(inlier_ood_scores.size());
    double var = 0.0;
    for (double v : inlier_ood_scores) var += (v - mean) * (v - mean);
    var /= static_cast<double>(inlier_ood_scores.size());
    const double sd = std::sqrt(var);
    SircParams p;
    p.a1 = 1.0;
    p.a2 = sd > 0.0 ? 1.0 / sd : 1.0;
    p.a3 = sd > 0.0 ? -mean / sd : 0.0;
    return p;
}

double sirc(double s_sc, double s_ood, const SircParams& params) {
    return (s_sc - params.a1) * (1.0 + std::exp(-(params.a2 * s_ood + params.a3)));
}

}  // namespace scod
