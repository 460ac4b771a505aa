#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace scod {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

using Vec = std::vector<double>;

/// Stable log(sum(exp(v))). Returns -inf for an empty or all -inf input.
inline double log_sum_exp(std::span<const double> v) {
    double m = -kInf;
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double acc = 0.0;
    for (double x : v) acc += std::exp(x - m);
    return m + std::log(acc);
}

/// Softmax computed in log-space. All -inf input yields the uniform simplex.
inline std::vector<double> softmax(std::span<const double> logits) {
    std::vector<double> p(logits.size());
    const double lse = log_sum_exp(logits);
    if (!std::isfinite(lse)) {
        std::fill(p.begin(), p.end(), 1.0 / static_cast<double>(p.size()));
        return p;
    }
    for (size_t i = 0; i < p.size(); ++i) p[i] = std::exp(logits[i] - lse);
    return p;
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// log(1 + e^{-z}) without overflow for large |z|.
inline double log1p_exp_neg(double z) {
    if (z >= 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

/// Shortest decimal representation that round-trips to the same double.
/// Used everywhere numbers are written to CSV/JSON so outputs are
/// byte-stable across runs.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline int argmax_lowest_tie(std::span<const double> v) {
    int best = 0;
    for (size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = static_cast<int>(i);
    return best;
}

}  // namespace scod
