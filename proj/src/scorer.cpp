#include "scod/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "scod/parallel.hpp"
#include "scod/rng.hpp"

namespace scod {

// Flat parameter layout. Hidden models:
//   W1 [H x D], b1 [H], (W1s [H x D], b1s [H] when not shared),
//   Wf [C x H], bf [C], ws [H], bs [1]
// Linear models: Wf [C x D], bf [C], ws [D], bs [1].
struct ParamLayout {
    int D, H, C;
    bool shared;
    int w1, b1, w1s, b1s, wf, bf, ws, bs, total;

    explicit ParamLayout(const Architecture& a)
        : D(a.input_dim), H(a.hidden_dim), C(a.class_outputs()),
          shared(a.shared_embedding || a.hidden_dim == 0) {
        int off = 0;
        if (H > 0) {
            w1 = off; off += H * D;
            b1 = off; off += H;
            if (!shared) {
                w1s = off; off += H * D;
                b1s = off; off += H;
            } else {
                w1s = b1s = -1;
            }
            wf = off; off += C * H;
            bf = off; off += C;
            ws = off; off += H;
        } else {
            w1 = b1 = w1s = b1s = -1;
            wf = off; off += C * D;
            bf = off; off += C;
            ws = off; off += D;
        }
        bs = off; off += 1;
        total = off;
    }
};

namespace {

void tanh_layer(const Vec& p, int w_off, int b_off, int rows, int cols,
                const Vec& x, Vec& out) {
    out.resize(rows);
    for (int r = 0; r < rows; ++r) {
        double acc = p[b_off + r];
        const int base = w_off + r * cols;
        for (int c = 0; c < cols; ++c) acc += p[base + c] * x[c];
        out[r] = std::tanh(acc);
    }
}

}  // namespace

ScorerModel::ScorerModel(Architecture arch) : arch_(arch) {
    arch_.validate();
    params_.assign(ParamLayout(arch_).total, 0.0);
}

void ScorerModel::initialize(std::uint64_t seed) {
    Rng rng(seed);
    const ParamLayout lay(arch_);
    auto fill = [&](int off, int count, int fan_in, int fan_out) {
        const double a = std::sqrt(6.0 / (fan_in + fan_out));
        for (int i = 0; i < count; ++i) params_[off + i] = rng.uniform(-a, a);
    };
    if (lay.H > 0) {
        fill(lay.w1, lay.H * lay.D, lay.D, lay.H);
        fill(lay.b1, lay.H, lay.D, lay.H);
        if (!lay.shared) {
            fill(lay.w1s, lay.H * lay.D, lay.D, lay.H);
            fill(lay.b1s, lay.H, lay.D, lay.H);
        }
        fill(lay.wf, lay.C * lay.H, lay.H, lay.C);
        fill(lay.bf, lay.C, lay.H, lay.C);
        fill(lay.ws, lay.H, lay.H, 1);
        fill(lay.bs, 1, lay.H, 1);
    } else {
        fill(lay.wf, lay.C * lay.D, lay.D, lay.C);
        fill(lay.bf, lay.C, lay.D, lay.C);
        fill(lay.ws, lay.D, lay.D, 1);
        fill(lay.bs, 1, lay.D, 1);
    }
}

ForwardResult ScorerModel::forward(const Vec& x) const {
    if (static_cast<int>(x.size()) != arch_.input_dim)
        throw std::invalid_argument("input dimension mismatch");
    const ParamLayout lay(arch_);
    ForwardResult out;
    if (lay.H > 0) {
        Vec h;
        tanh_layer(params_, lay.w1, lay.b1, lay.H, lay.D, x, h);
        Vec hs;
        const Vec* s_embed = &h;
        if (!lay.shared) {
            tanh_layer(params_, lay.w1s, lay.b1s, lay.H, lay.D, x, hs);
            s_embed = &hs;
        }
        out.class_logits.resize(lay.C);
        for (int c = 0; c < lay.C; ++c) {
            double acc = params_[lay.bf + c];
            const int base = lay.wf + c * lay.H;
            for (int k = 0; k < lay.H; ++k) acc += params_[base + k] * h[k];
            out.class_logits[c] = acc;
        }
        double s = params_[lay.bs];
        for (int k = 0; k < lay.H; ++k) s += params_[lay.ws + k] * (*s_embed)[k];
        out.ood_logit = s;
        out.embedding = std::move(h);
    } else {
        out.class_logits.resize(lay.C);
        for (int c = 0; c < lay.C; ++c) {
            double acc = params_[lay.bf + c];
            const int base = lay.wf + c * lay.D;
            for (int k = 0; k < lay.D; ++k) acc += params_[base + k] * x[k];
            out.class_logits[c] = acc;
        }
        double s = params_[lay.bs];
        for (int k = 0; k < lay.D; ++k) s += params_[lay.ws + k] * x[k];
        out.ood_logit = s;
        out.embedding = x;
    }
    return out;
}

ProbabilityEstimates ScorerModel::probability_estimates(const Vec& x) const {
    ForwardResult f = forward(x);
    ProbabilityEstimates est;
    est.class_probs = softmax(f.class_logits);
    est.p_bot = sigmoid(f.ood_logit);
    est.embedding = std::move(f.embedding);
    est.class_logits = std::move(f.class_logits);
    est.ood_logit = f.ood_logit;
    return est;
}

void ScorerModel::save(std::ostream& os) const {
    os << "scod-scorer v1\n";
    os << arch_.input_dim << ' ' << arch_.hidden_dim << ' ' << arch_.num_classes
       << ' ' << (arch_.coupled ? 1 : 0) << ' ' << (arch_.shared_embedding ? 1 : 0)
       << '\n';
    os << params_.size() << '\n';
    for (size_t i = 0; i < params_.size(); ++i) {
        if (i) os << ' ';
        os << format_double(params_[i]);
    }
    os << '\n';
}

ScorerModel ScorerModel::load(std::istream& is) {
    std::string header, version;
    is >> header >> version;
    if (header != "scod-scorer" || version != "v1")
        throw std::runtime_error("unrecognized scorer file header");
    Architecture arch;
    int coupled = 0, shared = 0;
    is >> arch.input_dim >> arch.hidden_dim >> arch.num_classes >> coupled >> shared;
    arch.coupled = coupled != 0;
    arch.shared_embedding = shared != 0;
    size_t count = 0;
    is >> count;
    ScorerModel model(arch);
    if (count != model.params_.size())
        throw std::runtime_error("parameter count does not match architecture");
    for (size_t i = 0; i < count; ++i)
        if (!(is >> model.params_[i]))
            throw std::runtime_error("truncated parameter array");
    return model;
}

namespace {

struct BackpropContext {
    const ScorerModel& model;
    const ParamLayout lay;

    explicit BackpropContext(const ScorerModel& m)
        : model(m), lay(m.architecture()) {}

    // Forward pass keeping pre-activations needed for the backward pass.
    struct Trace {
        Vec h, hs;  // tanh activations (hs only when not shared)
        Vec logits;
        double s = 0.0;
    };

    Trace run(const Vec& x) const {
        Trace t;
        const Vec& p = model.parameters();
        if (lay.H > 0) {
            tanh_layer(p, lay.w1, lay.b1, lay.H, lay.D, x, t.h);
            if (!lay.shared) tanh_layer(p, lay.w1s, lay.b1s, lay.H, lay.D, x, t.hs);
            const Vec& se = lay.shared ? t.h : t.hs;
            t.logits.resize(lay.C);
            for (int c = 0; c < lay.C; ++c) {
                double acc = p[lay.bf + c];
                const int base = lay.wf + c * lay.H;
                for (int k = 0; k < lay.H; ++k) acc += p[base + k] * t.h[k];
                t.logits[c] = acc;
            }
            t.s = p[lay.bs];
            for (int k = 0; k < lay.H; ++k) t.s += p[lay.ws + k] * se[k];
        } else {
            t.logits.resize(lay.C);
            for (int c = 0; c < lay.C; ++c) {
                double acc = p[lay.bf + c];
                const int base = lay.wf + c * lay.D;
                for (int k = 0; k < lay.D; ++k) acc += p[base + k] * x[k];
                t.logits[c] = acc;
            }
            t.s = p[lay.bs];
            for (int k = 0; k < lay.D; ++k) t.s += p[lay.ws + k] * x[k];
        }
        return t;
    }

    // Adds gradients given dL/dlogits and dL/ds for one sample.
    void accumulate(const Vec& x, const Trace& t, const Vec& dlogits, double ds,
                    Vec& grad) const {
        const Vec& p = model.parameters();
        if (lay.H > 0) {
            Vec dh(lay.H, 0.0);
            for (int c = 0; c < lay.C; ++c) {
                if (dlogits[c] == 0.0) continue;
                const int base = lay.wf + c * lay.H;
                for (int k = 0; k < lay.H; ++k) {
                    grad[base + k] += dlogits[c] * t.h[k];
                    dh[k] += dlogits[c] * p[base + k];
                }
                grad[lay.bf + c] += dlogits[c];
            }
            if (ds != 0.0) {
                const Vec& se = lay.shared ? t.h : t.hs;
                for (int k = 0; k < lay.H; ++k)
                    grad[lay.ws + k] += ds * se[k];
                grad[lay.bs] += ds;
                if (lay.shared) {
                    for (int k = 0; k < lay.H; ++k) dh[k] += ds * p[lay.ws + k];
                } else {
                    for (int k = 0; k < lay.H; ++k) {
                        const double dpre = ds * p[lay.ws + k] * (1.0 - t.hs[k] * t.hs[k]);
                        const int base = lay.w1s + k * lay.D;
                        for (int d = 0; d < lay.D; ++d) grad[base + d] += dpre * x[d];
                        grad[lay.b1s + k] += dpre;
                    }
                }
            }
            for (int k = 0; k < lay.H; ++k) {
                if (dh[k] == 0.0) continue;
                const double dpre = dh[k] * (1.0 - t.h[k] * t.h[k]);
                const int base = lay.w1 + k * lay.D;
                for (int d = 0; d < lay.D; ++d) grad[base + d] += dpre * x[d];
                grad[lay.b1 + k] += dpre;
            }
        } else {
            for (int c = 0; c < lay.C; ++c) {
                if (dlogits[c] == 0.0) continue;
                const int base = lay.wf + c * lay.D;
                for (int d = 0; d < lay.D; ++d) grad[base + d] += dlogits[c] * x[d];
                grad[lay.bf + c] += dlogits[c];
            }
            if (ds != 0.0) {
                for (int d = 0; d < lay.D; ++d) grad[lay.ws + d] += ds * x[d];
                grad[lay.bs] += ds;
            }
        }
    }
};

void check_labels(const LabeledBatch& batch, int num_classes) {
    if (batch.features.empty()) throw std::invalid_argument("empty inlier batch");
    if (batch.features.size() != batch.labels.size())
        throw std::invalid_argument("features/labels size mismatch");
    for (int y : batch.labels)
        if (y < 0 || y >= num_classes)
            throw std::invalid_argument("label out of range");
}

}  // namespace

LossReport decoupled_loss(const ScorerModel& model, const LabeledBatch& inlier_batch,
                          const std::vector<Vec>& mix_batch) {
    const Architecture& arch = model.architecture();
    check_labels(inlier_batch, arch.num_classes);
    if (mix_batch.empty()) throw std::invalid_argument("empty mix batch");

    const BackpropContext ctx(model);
    const size_t n_in = inlier_batch.features.size();
    const size_t n_mix = mix_batch.size();
    const double w_in = 1.0 / static_cast<double>(n_in);
    const double w_mix = 1.0 / static_cast<double>(n_mix);
    const int P = model.parameter_count();
    const int L = arch.class_outputs();

    LossReport report;
    // Loss terms and gradient are accumulated with the chunk-deterministic
    // kernels; the gradient carries the loss pieces in 3 extra slots.
    Vec acc = chunked_vector_sum(n_in + n_mix, static_cast<size_t>(P) + 3,
        [&](size_t i, Vec& part) {
            if (i < n_in) {
                const Vec& x = inlier_batch.features[i];
                const int y = inlier_batch.labels[i];
                auto t = ctx.run(x);
                const double lse = log_sum_exp(t.logits);
                part[P + 0] += w_in * (lse - t.logits[y]);
                part[P + 1] += w_in * log1p_exp_neg(t.s);  // l_bc(+1, s)
                Vec dlogits(L);
                for (int c = 0; c < L; ++c)
                    dlogits[c] = w_in * (std::exp(t.logits[c] - lse) - (c == y ? 1.0 : 0.0));
                const double ds = w_in * (sigmoid(t.s) - 1.0);
                ctx.accumulate(x, t, dlogits, ds, part);
            } else {
                const Vec& x = mix_batch[i - n_in];
                auto t = ctx.run(x);
                part[P + 2] += w_mix * log1p_exp_neg(-t.s);  // l_bc(-1, s)
                Vec dlogits(L, 0.0);
                const double ds = w_mix * sigmoid(t.s);
                ctx.accumulate(x, t, dlogits, ds, part);
            }
        });

    report.ce_term = acc[P + 0];
    report.bc_inlier_term = acc[P + 1];
    report.bc_mix_term = acc[P + 2];
    report.total = report.ce_term + report.bc_inlier_term + report.bc_mix_term;
    acc.resize(P);
    report.gradient = std::move(acc);
    return report;
}

LossReport coupled_loss(const ScorerModel& model, const LabeledBatch& inlier_batch,
                        const std::vector<Vec>& outlier_batch, const CostSpec& costs) {
    const Architecture& arch = model.architecture();
    if (!arch.coupled)
        throw std::invalid_argument("coupled_loss requires a model with a reject logit");
    costs.validate();
    check_labels(inlier_batch, arch.num_classes);
    if (outlier_batch.empty() && costs.c_out > 0.0)
        throw std::invalid_argument("empty outlier batch with positive c_out");

    const BackpropContext ctx(model);
    const size_t n_in = inlier_batch.features.size();
    const size_t n_out = outlier_batch.size();
    const double w_in = 1.0 / static_cast<double>(n_in);
    const double w_out = n_out > 0 ? 1.0 / static_cast<double>(n_out) : 0.0;
    const int P = model.parameter_count();
    const int C = arch.class_outputs();
    const int reject = C - 1;

    Vec acc = chunked_vector_sum(n_in + n_out, static_cast<size_t>(P) + 3,
        [&](size_t i, Vec& part) {
            if (i < n_in) {
                const Vec& x = inlier_batch.features[i];
                const int y = inlier_batch.labels[i];
                auto t = ctx.run(x);
                const double lse = log_sum_exp(t.logits);
                part[P + 0] += w_in * (lse - t.logits[y]);
                part[P + 1] += (1.0 - costs.c_in) * w_in * (lse - t.logits[reject]);
                Vec dlogits(C);
                for (int c = 0; c < C; ++c) {
                    const double p = std::exp(t.logits[c] - lse);
                    double g = w_in * (p - (c == y ? 1.0 : 0.0));
                    g += (1.0 - costs.c_in) * w_in * (p - (c == reject ? 1.0 : 0.0));
                    dlogits[c] = g;
                }
                ctx.accumulate(x, t, dlogits, 0.0, part);
            } else {
                if (costs.c_out == 0.0) return;
                const Vec& x = outlier_batch[i - n_in];
                auto t = ctx.run(x);
                const double lse = log_sum_exp(t.logits);
                part[P + 2] += costs.c_out * w_out * (lse - t.logits[reject]);
                Vec dlogits(C);
                for (int c = 0; c < C; ++c) {
                    const double p = std::exp(t.logits[c] - lse);
                    dlogits[c] =
                        costs.c_out * w_out * (p - (c == reject ? 1.0 : 0.0));
                }
                ctx.accumulate(x, t, dlogits, 0.0, part);
            }
        });

    LossReport report;
    report.ce_term = acc[P + 0];
    report.bc_inlier_term = acc[P + 1];
    report.bc_mix_term = acc[P + 2];
    report.total = report.ce_term + report.bc_inlier_term + report.bc_mix_term;
    acc.resize(P);
    report.gradient = std::move(acc);
    return report;
}

TrainResult train(const ScorerModel& model, Objective objective,
                  const LabeledBatch& inlier_data, const std::vector<Vec>& other_data,
                  const CostSpec& costs, const TrainConfig& config) {
    if (config.epochs < 0) throw std::invalid_argument("negative epoch count");
    check_labels(inlier_data, model.architecture().num_classes);

    TrainResult result;
    result.model = model;
    if (config.epochs == 0) return result;

    auto full_loss = [&](const ScorerModel& m) {
        return objective == Objective::kDecoupled
                   ? decoupled_loss(m, inlier_data, other_data)
                   : coupled_loss(m, inlier_data, other_data, costs);
    };

    Rng rng(config.seed);
    const size_t n_in = inlier_data.features.size();
    const size_t n_other = other_data.size();
    std::vector<size_t> in_order(n_in), other_order(std::max<size_t>(n_other, 1));
    for (size_t i = 0; i < in_order.size(); ++i) in_order[i] = i;
    for (size_t i = 0; i < other_order.size(); ++i) other_order[i] = i;

    auto shuffle = [&](std::vector<size_t>& idx) {
        for (size_t i = idx.size(); i > 1; --i)
            std::swap(idx[i - 1], idx[rng.next_u64() % i]);
    };

    double lr = config.learning_rate;
    Vec velocity(result.model.parameter_count(), 0.0);
    const int batch = std::max(1, config.batch_size);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int a : config.anneal_epochs)
            if (a == epoch) lr /= 10.0;
        shuffle(in_order);
        if (n_other > 0) shuffle(other_order);

        const size_t steps = (n_in + batch - 1) / batch;
        size_t other_cursor = 0;
        for (size_t step = 0; step < steps; ++step) {
            LabeledBatch mb;
            const size_t lo = step * batch;
            const size_t hi = std::min(n_in, lo + batch);
            for (size_t i = lo; i < hi; ++i) {
                mb.features.push_back(inlier_data.features[in_order[i]]);
                mb.labels.push_back(inlier_data.labels[in_order[i]]);
            }
            std::vector<Vec> omb;
            if (n_other > 0) {
                for (int i = 0; i < batch; ++i) {
                    omb.push_back(other_data[other_order[other_cursor]]);
                    other_cursor = (other_cursor + 1) % n_other;
                }
            }
            LossReport rep = objective == Objective::kDecoupled
                                 ? decoupled_loss(result.model, mb, omb)
                                 : coupled_loss(result.model, mb, omb, costs);
            Vec& p = result.model.parameters();
            for (size_t k = 0; k < p.size(); ++k) {
                velocity[k] = config.momentum * velocity[k] - lr * rep.gradient[k];
                p[k] += velocity[k];
            }
        }

        const double epoch_loss = full_loss(result.model).total;
        if (!std::isfinite(epoch_loss))
            throw TrainingError("training diverged at epoch " + std::to_string(epoch),
                                epoch);
        result.epoch_losses.push_back(epoch_loss);
    }
    return result;
}

}  // namespace scod
