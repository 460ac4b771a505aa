#include <doctest.h>

#include <cmath>
#include <sstream>

#include "scod/distributions.hpp"
#include "scod/scorer.hpp"
#include "oracles.hpp"

using namespace scod;

namespace {

// Relative coordinate error with an absolute floor for near-zero entries.
double max_rel_error(const Vec& a, const Vec& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double scale = std::max(1e-6, std::fabs(a[i]) + std::fabs(b[i]));
        worst = std::max(worst, std::fabs(a[i] - b[i]) / scale);
    }
    return worst;
}

LabeledBatch random_batch(Rng& rng, int n, int dim, int classes) {
    LabeledBatch batch;
    for (int i = 0; i < n; ++i) {
        Vec x(dim);
        for (double& v : x) v = rng.normal();
        batch.features.push_back(std::move(x));
        batch.labels.push_back(static_cast<int>(rng.uniform() * classes));
    }
    return batch;
}

std::vector<Vec> random_features(Rng& rng, int n, int dim) {
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) {
        Vec x(dim);
        for (double& v : x) v = rng.normal();
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace

TEST_CASE("decoupled loss: uniform-logit closed form") {
    ScorerModel model(Architecture{1, 0, 2, false, true});  // all-zero params
    LabeledBatch in;
    in.features = {{0.4}};
    in.labels = {0};
    const std::vector<Vec> mix = {{-0.3}};
    const LossReport rep = decoupled_loss(model, in, mix);
    CHECK(rep.ce_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(rep.bc_inlier_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(rep.bc_mix_term == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(rep.total == doctest::Approx(3.0 * std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("decoupled loss vanishes in the perfect-fit limit") {
    ScorerModel model(Architecture{1, 0, 2, false, true});
    // Linear layout: Wf[2x1], bf[2], ws[1], bs. Drive the true class and
    // the inlier logit to +50.
    model.parameters()[2] = 50.0;  // bf[0]
    model.parameters()[5] = 50.0;  // bs
    LabeledBatch in;
    in.features = {{0.0}};
    in.labels = {0};
    // A mix point scored strongly inlier costs ~s; keep its term out of the
    // "-> 0" claim by checking ce + bc_inlier only.
    const LossReport rep = decoupled_loss(model, in, {{0.0}});
    CHECK(rep.ce_term + rep.bc_inlier_term == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("decoupled loss rejects bad batches") {
    ScorerModel model(Architecture{1, 0, 2, false, true});
    LabeledBatch in;
    CHECK_THROWS(decoupled_loss(model, in, {{0.0}}));
    in.features = {{0.0}};
    in.labels = {7};
    CHECK_THROWS(decoupled_loss(model, in, {{0.0}}));
    in.labels = {0};
    CHECK_THROWS(decoupled_loss(model, in, {}));
}

TEST_CASE("decoupled gradient matches central finite differences") {
    Rng rng(201);
    for (int trial = 0; trial < 50; ++trial) {
        const bool hidden = trial % 2 == 0;
        const bool shared = trial % 3 != 0;
        Architecture arch{2, hidden ? 4 : 0, 3, false, shared};
        ScorerModel model(arch);
        model.initialize(300 + trial);
        const LabeledBatch in = random_batch(rng, 5, 2, 3);
        const std::vector<Vec> mix = random_features(rng, 5, 2);

        const LossReport rep = decoupled_loss(model, in, mix);
        const Vec fd = oracles::finite_difference_gradient(
            [&](const Vec& p) {
                ScorerModel m = model;
                m.parameters() = p;
                return decoupled_loss(m, in, mix).total;
            },
            model.parameters());
        CHECK(max_rel_error(rep.gradient, fd) < 1e-4);
        CHECK(rep.total ==
              doctest::Approx(rep.ce_term + rep.bc_inlier_term + rep.bc_mix_term)
                  .epsilon(1e-10));
    }
}

TEST_CASE("coupled loss: uniform-logit hand case") {
    ScorerModel model(Architecture{1, 0, 2, true, true});  // 3 outputs
    LabeledBatch in;
    in.features = {{0.1}};
    in.labels = {1};
    const std::vector<Vec> out = {{-0.2}};
    const LossReport rep = coupled_loss(model, in, out, CostSpec(0.0, 1.0));
    CHECK(rep.ce_term == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(rep.bc_inlier_term == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(rep.bc_mix_term == doctest::Approx(std::log(3.0)).epsilon(1e-12));
    CHECK(rep.total == doctest::Approx(3.0 * std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("coupled loss: c_out = 0 drops the outlier term") {
    ScorerModel model(Architecture{1, 0, 2, true, true});
    model.initialize(5);
    LabeledBatch in;
    in.features = {{0.1}, {-0.4}};
    in.labels = {1, 0};
    const LossReport with_empty = coupled_loss(model, in, {}, CostSpec(0.3, 0.0));
    const LossReport with_ignored =
        coupled_loss(model, in, {{9.0}}, CostSpec(0.3, 0.0));
    CHECK(with_empty.total == doctest::Approx(with_ignored.total).epsilon(1e-12));
    CHECK(with_empty.bc_mix_term == 0.0);
    // Positive c_out requires outliers.
    CHECK_THROWS(coupled_loss(model, in, {}, CostSpec(0.3, 0.2)));
}

TEST_CASE("coupled gradient matches central finite differences") {
    Rng rng(203);
    for (int trial = 0; trial < 50; ++trial) {
        const bool hidden = trial % 2 == 0;
        Architecture arch{2, hidden ? 4 : 0, 3, true, true};
        ScorerModel model(arch);
        model.initialize(400 + trial);
        const LabeledBatch in = random_batch(rng, 5, 2, 3);
        const std::vector<Vec> out = random_features(rng, 5, 2);
        const CostSpec costs(rng.uniform(0.0, 0.5), rng.uniform(0.0, 0.5));

        const LossReport rep = coupled_loss(model, in, out, costs);
        const Vec fd = oracles::finite_difference_gradient(
            [&](const Vec& p) {
                ScorerModel m = model;
                m.parameters() = p;
                return coupled_loss(m, in, out, costs).total;
            },
            model.parameters());
        CHECK(max_rel_error(rep.gradient, fd) < 1e-4);
    }
}

TEST_CASE("probability estimates: zero model and identities") {
    ScorerModel model(Architecture{2, 0, 3, false, true});
    const auto est = model.probability_estimates({0.7, -0.1});
    for (double p : est.class_probs)
        CHECK(p == doctest::Approx(1.0 / 3).epsilon(1e-12));
    CHECK(est.p_bot == doctest::Approx(0.5).epsilon(1e-12));
    // Sigmoid round trip.
    CHECK(std::log(est.p_bot / (1.0 - est.p_bot)) ==
          doctest::Approx(est.ood_logit).epsilon(1e-9));
}

TEST_CASE("probability estimates: raising one logit raises its probability") {
    ScorerModel model(Architecture{1, 0, 3, false, true});
    model.initialize(77);
    const Vec x{0.5};
    const auto before = model.probability_estimates(x);
    // bf for class 1 in the linear layout: offset C*D + 1 = 4.
    model.parameters()[4] += 0.25;
    const auto after = model.probability_estimates(x);
    CHECK(after.class_probs[1] > before.class_probs[1]);
    // Simplex within 1e-9.
    double total = 0.0;
    for (double p : after.class_probs) total += p;
    CHECK(std::fabs(total - 1.0) < 1e-9);
}

TEST_CASE("model save/load round trip") {
    Architecture arch{3, 4, 2, true, false};
    ScorerModel model(arch);
    model.initialize(9);
    std::stringstream ss;
    model.save(ss);
    const ScorerModel loaded = ScorerModel::load(ss);
    CHECK(loaded.parameters() == model.parameters());
    CHECK(loaded.architecture().coupled == arch.coupled);
    CHECK(loaded.architecture().shared_embedding == arch.shared_embedding);

    std::stringstream bad("not-a-model v9\n");
    CHECK_THROWS(ScorerModel::load(bad));
}

TEST_CASE("training: zero epochs returns the model unchanged") {
    ScorerModel model(Architecture{2, 0, 2, false, true});
    model.initialize(21);
    LabeledBatch in;
    in.features = {{1.0, 0.0}, {-1.0, 0.0}};
    in.labels = {1, 0};
    TrainConfig cfg;
    cfg.epochs = 0;
    const TrainResult res =
        train(model, Objective::kDecoupled, in, {{0.0, 0.0}}, CostSpec(), cfg);
    CHECK(res.model.parameters() == model.parameters());
    CHECK(res.epoch_losses.empty());
}

TEST_CASE("training: linearly separable data reaches 99% accuracy") {
    Rng rng(23);
    LabeledBatch in;
    for (int i = 0; i < 400; ++i) {
        const int y = i % 2;
        in.features.push_back({(y ? 3.0 : -3.0) + 0.5 * rng.normal(),
                               0.5 * rng.normal()});
        in.labels.push_back(y);
    }
    ScorerModel model(Architecture{2, 0, 2, false, true});
    model.initialize(31);
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.seed = 31;
    const TrainResult res = train(model, Objective::kDecoupled, in,
                                  random_features(rng, 50, 2), CostSpec(), cfg);
    int correct = 0;
    for (size_t i = 0; i < in.features.size(); ++i) {
        const auto est = res.model.probability_estimates(in.features[i]);
        if (argmax_lowest_tie(est.class_probs) == in.labels[i]) ++correct;
    }
    CHECK(correct >= 396);  // >= 99%
}

TEST_CASE("training: learned posterior close to the exact one") {
    const LabeledMixtureDistribution dist(
        {0.5, 0.5}, {GaussianClassConditional::isotropic({-2.0}, 1.0),
                     GaussianClassConditional::isotropic({2.0}, 1.0)});
    Rng rng(37);
    LabeledBatch in;
    for (int i = 0; i < 10000; ++i) {
        const auto [x, y] = dist.sample(rng);
        in.features.push_back(x);
        in.labels.push_back(y);
    }
    ScorerModel model(Architecture{1, 8, 2, false, true});
    model.initialize(41);
    TrainConfig cfg;
    cfg.epochs = 15;
    cfg.seed = 41;
    const TrainResult res = train(model, Objective::kDecoupled, in,
                                  random_features(rng, 200, 1), CostSpec(), cfg);
    double mae = 0.0;
    int points = 0;
    for (double x = -4.0; x <= 4.0 + 1e-9; x += 0.1) {
        const Vec exact = dist.posterior({x});
        const auto est = res.model.probability_estimates({x});
        mae += std::fabs(exact[1] - est.class_probs[1]);
        ++points;
    }
    mae /= points;
    CHECK(mae < 0.05);
}

TEST_CASE("training is deterministic for a fixed seed") {
    Rng rng(43);
    const LabeledBatch in = random_batch(rng, 64, 2, 2);
    const std::vector<Vec> mix = random_features(rng, 64, 2);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 99;
    ScorerModel model(Architecture{2, 4, 2, false, true});
    model.initialize(99);
    const TrainResult a = train(model, Objective::kDecoupled, in, mix, CostSpec(), cfg);
    const TrainResult b = train(model, Objective::kDecoupled, in, mix, CostSpec(), cfg);
    CHECK(a.model.parameters() == b.model.parameters());
    CHECK(a.epoch_losses == b.epoch_losses);
}

TEST_CASE("training: loss non-increasing under a safe small-step config") {
    Rng rng(47);
    const LabeledBatch in = random_batch(rng, 128, 2, 2);
    const std::vector<Vec> mix = random_features(rng, 128, 2);
    ScorerModel model(Architecture{2, 0, 2, false, true});
    model.initialize(51);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.learning_rate = 0.01;  // safe config: small step, no momentum
    cfg.momentum = 0.0;
    cfg.batch_size = 128;  // full batch
    const TrainResult res = train(model, Objective::kDecoupled, in, mix, CostSpec(), cfg);
    for (size_t e = 1; e < res.epoch_losses.size(); ++e)
        CHECK(res.epoch_losses[e] <= res.epoch_losses[e - 1] + 1e-12);
}

TEST_CASE("training divergence raises an error naming the epoch") {
    Rng rng(53);
    LabeledBatch in = random_batch(rng, 32, 2, 2);
    std::vector<Vec> mix = random_features(rng, 32, 2);
    // Huge feature scale plus a huge step size overflows the weights to
    // infinity on the first update.
    for (auto& x : in.features)
        for (double& v : x) v *= 1e10;
    for (auto& x : mix)
        for (double& v : x) v *= 1e10;
    ScorerModel model(Architecture{2, 0, 2, false, true});
    model.initialize(57);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.learning_rate = 1e300;
    try {
        train(model, Objective::kDecoupled, in, mix, CostSpec(), cfg);
        FAIL("expected divergence");
    } catch (const TrainingError& e) {
        CHECK(e.epoch() >= 0);
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}
