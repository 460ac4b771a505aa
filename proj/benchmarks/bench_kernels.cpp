// Timing comparison of the OpenMP kernels against the serial reference
// path. The two paths share the same chunk decomposition, so outputs are
// bit-identical; this binary reports throughput and verifies that claim.
#include <chrono>
#include <cstdio>
#include <vector>

#include "scod/parallel.hpp"
#include "scod/plugin.hpp"
#include "scod/rng.hpp"
#include "scod/scorer.hpp"

using namespace scod;

namespace {

template <typename F>
double time_best_of(int reps, F&& body) {
    double best = 1e300;
    for (int r = 0; r < reps; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body();
        const double s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        if (s < best) best = s;
    }
    return best;
}

void print_row(const char* name, double serial_s, double parallel_s, bool match) {
    std::printf("%-24s serial %8.2f ms   parallel %8.2f ms   speedup %5.2fx   %s\n",
                name, serial_s * 1e3, parallel_s * 1e3, serial_s / parallel_s,
                match ? "outputs identical" : "OUTPUT MISMATCH");
}

}  // namespace

int main() {
    Rng rng(9001);

    // 1. Sample scoring: the lagrangian rule over a large eval set.
    {
        std::vector<ScoredSample> set;
        for (int i = 0; i < 2'000'000; ++i) {
            ScoredSample s;
            s.is_outlier = rng.bernoulli(0.4);
            s.s_sc = rng.uniform(0.5, 1.0);
            s.s_ood = rng.uniform(0.05, 40.0);
            s.predicted = 0;
            if (!s.is_outlier) s.label = rng.bernoulli(0.85) ? 0 : 1;
            set.push_back(s);
        }
        auto count_rejections = [&]() {
            return chunked_sum(set.size(), [&](std::size_t i) {
                return lagrangian_reject(set[i], 0.25, 0.4, 0.3) ? 1.0 : 0.0;
            });
        };
        parallel_enabled() = false;
        double serial_out = 0.0;
        const double ts = time_best_of(3, [&] { serial_out = count_rejections(); });
        parallel_enabled() = true;
        double parallel_out = 0.0;
        const double tp = time_best_of(3, [&] { parallel_out = count_rejections(); });
        print_row("sample scoring", ts, tp, serial_out == parallel_out);
    }

    // 2. Lambda-grid search: budget_search over a dense grid.
    {
        std::vector<ScoredSample> set;
        for (int i = 0; i < 200'000; ++i) {
            ScoredSample s;
            s.is_outlier = rng.bernoulli(0.4);
            s.s_sc = rng.uniform(0.5, 1.0);
            s.s_ood = s.is_outlier ? rng.uniform(0.05, 0.9) : rng.uniform(0.7, 40.0);
            s.predicted = 0;
            if (!s.is_outlier) s.label = rng.bernoulli(0.85) ? 0 : 1;
            set.push_back(s);
        }
        BudgetSpec budget{0.75, 0.2, 0.6};
        Vec grid;
        for (int i = 0; i <= 128; ++i) grid.push_back(0.05 * i);
        BudgetSearchResult rs, rp;
        parallel_enabled() = false;
        const double ts = time_best_of(3, [&] { rs = budget_search(set, budget, grid); });
        parallel_enabled() = true;
        const double tp = time_best_of(3, [&] { rp = budget_search(set, budget, grid); });
        bool match = rs.best.lambda == rp.best.lambda &&
                     rs.best.objective == rp.best.objective;
        for (size_t i = 0; i < rs.grid.size(); ++i)
            match = match && rs.grid[i].objective == rp.grid[i].objective;
        print_row("lambda-grid search", ts, tp, match);
    }

    // 3. Gradient accumulation: the decoupled loss on a large batch.
    {
        ScorerModel model(Architecture{4, 16, 3, false, true});
        model.initialize(7);
        LabeledBatch in;
        std::vector<Vec> mix;
        for (int i = 0; i < 100'000; ++i) {
            Vec x(4);
            for (double& v : x) v = rng.normal();
            in.features.push_back(x);
            in.labels.push_back(static_cast<int>(rng.uniform() * 3));
            for (double& v : x) v = rng.normal();
            mix.push_back(x);
        }
        LossReport rs, rp;
        parallel_enabled() = false;
        const double ts = time_best_of(3, [&] { rs = decoupled_loss(model, in, mix); });
        parallel_enabled() = true;
        const double tp = time_best_of(3, [&] { rp = decoupled_loss(model, in, mix); });
        const bool match = rs.total == rp.total && rs.gradient == rp.gradient;
        print_row("gradient accumulation", ts, tp, match);
    }

    parallel_enabled() = true;
    return 0;
}
