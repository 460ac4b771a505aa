#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "scod/bayes_rules.hpp"
#include "scod/numeric.hpp"

namespace scod {

/// Network shape: linear (hidden_dim = 0) or one tanh hidden layer.
/// Coupled models carry an extra reject logit after the L class logits.
/// The OOD logit s always exists; by default it reads the same embedding
/// as the class head, with an optional separate hidden layer.
struct Architecture {
    int input_dim = 0;
    int hidden_dim = 0;
    int num_classes = 0;
    bool coupled = false;
    bool shared_embedding = true;

    int class_outputs() const { return num_classes + (coupled ? 1 : 0); }
    int embedding_dim() const { return hidden_dim > 0 ? hidden_dim : input_dim; }

    void validate() const {
        if (input_dim < 1 || num_classes < 2 || hidden_dim < 0)
            throw std::invalid_argument("invalid architecture");
    }
};

struct ForwardResult {
    Vec class_logits;  // L entries, or L+1 when coupled (reject logit last)
    double ood_logit = 0.0;
    Vec embedding;
};

struct ProbabilityEstimates {
    Vec class_probs;   // simplex over class_outputs()
    double p_bot = 0.0;  // sigmoid of the OOD logit
    Vec embedding;
    Vec class_logits;
    double ood_logit = 0.0;
};

struct LossReport {
    double total = 0.0;
    double ce_term = 0.0;
    double bc_inlier_term = 0.0;  // reject-class inlier term for the coupled loss
    double bc_mix_term = 0.0;     // reject-class outlier term for the coupled loss
    Vec gradient;
};

struct LabeledBatch {
    std::vector<Vec> features;
    std::vector<int> labels;
};

class ScorerModel {
  public:
    ScorerModel() = default;
    explicit ScorerModel(Architecture arch);

    /// Uniform init in [-a, a], a = sqrt(6 / (fan_in + fan_out)) per layer.
    void initialize(std::uint64_t seed);

    const Architecture& architecture() const { return arch_; }
    const Vec& parameters() const { return params_; }
    Vec& parameters() { return params_; }
    int parameter_count() const { return static_cast<int>(params_.size()); }

    ForwardResult forward(const Vec& x) const;
    ProbabilityEstimates probability_estimates(const Vec& x) const;

    /// Versioned text round-trip (architecture header + parameter array).
    void save(std::ostream& os) const;
    static ScorerModel load(std::istream& is);

  private:
    friend struct ParamLayout;
    Architecture arch_;
    Vec params_;
};

/// Cross-entropy on inlier labels plus the binary inlier-vs-mix
/// discrimination loss on the OOD logit; positive class = inlier, so the
/// optimal s is log(P_in / P_mix). Gradients are analytic.
LossReport decoupled_loss(const ScorerModel& model, const LabeledBatch& inlier_batch,
                          const std::vector<Vec>& mix_batch);

/// (L+1)-way cross-entropy with a reject class:
///   E_in[l(y)] + (1 - c_in) E_in[l(reject)] + c_out E_out[l(reject)].
/// An empty outlier batch is permitted when c_out = 0 (term dropped).
LossReport coupled_loss(const ScorerModel& model, const LabeledBatch& inlier_batch,
                        const std::vector<Vec>& outlier_batch, const CostSpec& costs);

enum class Objective { kDecoupled, kCoupled };

struct TrainConfig {
    int epochs = 50;
    int batch_size = 64;
    double learning_rate = 0.1;
    double momentum = 0.9;
    std::vector<int> anneal_epochs;  // learning rate /= 10 at each
    std::uint64_t seed = 1;
};

struct TrainResult {
    ScorerModel model;
    Vec epoch_losses;  // full-training-set loss after each epoch
};

class TrainingError : public std::runtime_error {
  public:
    TrainingError(const std::string& msg, int epoch)
        : std::runtime_error(msg), epoch_(epoch) {}
    int epoch() const { return epoch_; }

  private:
    int epoch_;
};

/// Minibatch SGD with momentum. Deterministic given the config seed; the
/// second unlabeled set is the wild mixture for the decoupled objective
/// and the outlier set for the coupled one. Throws TrainingError naming
/// the epoch if the loss turns non-finite.
TrainResult train(const ScorerModel& model, Objective objective,
                  const LabeledBatch& inlier_data, const std::vector<Vec>& other_data,
                  const CostSpec& costs, const TrainConfig& config);

}  // namespace scod
