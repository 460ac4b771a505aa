#pragma once

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "scod/bayes_rules.hpp"
#include "scod/distributions.hpp"
#include "scod/logits_io.hpp"
#include "scod/metrics.hpp"
#include "scod/scorer.hpp"

namespace scod {

// CLI exit-code taxonomy: 2 = config, 3 = data, 4 = numeric failure.
class ConfigError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class DataError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};
class NumericError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Registered method names: msp, maxlogit, energy, sirc, plugin-bb,
/// plugin-lb, coupled.
const std::vector<std::string>& registered_methods();
bool is_registered_method(const std::string& name);

struct SampleCounts {
    int train = 1500;
    int wild = 1500;
    int test = 3000;
    double strict_inlier_fraction = 0.05;  // of the test size

    int strict_inlier_count() const;
};

struct ExperimentConfig {
    std::string scenario;     // bundled synthetic scenario, or
    std::string logits_file;  // external model outputs (mutually exclusive)
    std::vector<std::string> methods;
    CostSpec costs{0.2, 0.3};
    double c_fn = 0.75;
    int grid_size = 101;
    std::vector<std::uint64_t> seeds;
    std::string output_dir = "scod-out";
    SampleCounts samples;
    TrainConfig train;
    int hidden_dim = 16;

    bool has_budget = false;
    BudgetSpec budget;
    bool budget_pi_given = false;  // else pi*_in defaults to pi_mix_hat
    Vec lambda_grid;               // empty -> default grid

    void validate() const;
};

/// JSON config text -> validated config; unknown keys and unknown method
/// names are rejected here.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config_file(const std::string& path);

struct Scenario {
    ScodEnvironment env;
    CostSpec costs;
};

/// Bundled synthetic scenarios: "open-set" (4 collinear isotropic
/// Gaussians, last class held out), "uniform-outlier" (box-supported
/// outlier), "wild-mixture" (truncated-Gaussian outlier, pi_mix = 0.1).
Scenario make_scenario(const std::string& name);
ExperimentConfig demo_config(const std::string& scenario);

/// Snapshot of a model's outputs on test + strict-inlier samples in the
/// exchange format. Coupled models store the reject logit in the
/// ood-logit column.
LogitsFile export_model_logits(const ScorerModel& model,
                               const std::vector<Sample>& test,
                               const std::vector<Sample>& strict_inliers);

struct MethodOutput {
    std::vector<EvalRecord> records;  // test-partition records only
    Vec inlier_scores, outlier_scores;  // rejection scores by true origin
};

/// Model-free scoring of an ingested file with one registered method.
MethodOutput score_method(const std::string& method, const LogitsFile& file,
                          const CostSpec& costs);

// Subcommand drivers; they throw the typed errors above.
void run_experiment(const ExperimentConfig& config, std::ostream& diag);
void run_budget(const ExperimentConfig& config, std::ostream& diag);
void run_curve(const std::string& logits_path, const std::string& method,
               double c_fn, int grid_size, const std::string& output_dir,
               std::ostream& diag);
void run_ingest_check(const std::string& logits_path, std::ostream& diag);

}  // namespace scod
