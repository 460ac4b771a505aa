#include "scod/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "scod/plugin.hpp"
#include "scod/post_hoc.hpp"

namespace scod {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

const std::vector<std::string>& registered_methods() {
    static const std::vector<std::string> names{
        "msp", "maxlogit", "energy", "sirc", "plugin-bb", "plugin-lb", "coupled"};
    return names;
}

bool is_registered_method(const std::string& name) {
    const auto& names = registered_methods();
    return std::find(names.begin(), names.end(), name) != names.end();
}

int SampleCounts::strict_inlier_count() const {
    return std::max(1, static_cast<int>(std::lround(strict_inlier_fraction * test)));
}

void ExperimentConfig::validate() const {
    if (scenario.empty() == logits_file.empty())
        throw ConfigError("exactly one of 'scenario' or 'logits_file' is required");
    if (!scenario.empty()) make_scenario(scenario);  // name check
    if (methods.empty()) throw ConfigError("'methods' must be nonempty");
    for (const auto& m : methods)
        if (!is_registered_method(m)) throw ConfigError("unknown method '" + m + "'");
    if (seeds.empty() && !scenario.empty())
        throw ConfigError("'seeds' must list at least one seed");
    if (grid_size < 2) throw ConfigError("'grid_size' must be >= 2");
    if (c_fn < 0.0 || c_fn > 1.0) throw ConfigError("'c_fn' must lie in [0,1]");
    if (samples.train < 1 || samples.wild < 1 || samples.test < 1)
        throw ConfigError("sample counts must be positive");
    if (samples.strict_inlier_fraction <= 0.0 || samples.strict_inlier_fraction > 1.0)
        throw ConfigError("'strict_inlier_fraction' must lie in (0,1]");
    if (hidden_dim < 0) throw ConfigError("'hidden_dim' must be >= 0");
    try {
        costs.validate();
        if (has_budget) budget.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

namespace {

void require_keys(const json& obj, const std::string& section,
                  std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (std::find_if(allowed.begin(), allowed.end(), [&](const char* a) {
                return key == a;
            }) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in " + section);
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");

    ExperimentConfig cfg;
    try {
        require_keys(root, "config",
                     {"scenario", "logits_file", "methods", "costs", "c_fn",
                      "grid_size", "seeds", "output_dir", "samples", "train",
                      "hidden_dim", "budget"});
        cfg.scenario = root.value("scenario", "");
        cfg.logits_file = root.value("logits_file", "");
        if (root.contains("methods"))
            cfg.methods = root["methods"].get<std::vector<std::string>>();
        else
            cfg.methods = registered_methods();
        if (root.contains("costs")) {
            const json& c = root["costs"];
            require_keys(c, "costs", {"c_in", "c_out"});
            cfg.costs.c_in = c.value("c_in", cfg.costs.c_in);
            cfg.costs.c_out = c.value("c_out", cfg.costs.c_out);
        }
        cfg.c_fn = root.value("c_fn", cfg.c_fn);
        cfg.grid_size = root.value("grid_size", cfg.grid_size);
        if (root.contains("seeds"))
            cfg.seeds = root["seeds"].get<std::vector<std::uint64_t>>();
        cfg.output_dir = root.value("output_dir", cfg.output_dir);
        if (root.contains("samples")) {
            const json& s = root["samples"];
            require_keys(s, "samples",
                         {"train", "wild", "test", "strict_inlier_fraction"});
            cfg.samples.train = s.value("train", cfg.samples.train);
            cfg.samples.wild = s.value("wild", cfg.samples.wild);
            cfg.samples.test = s.value("test", cfg.samples.test);
            cfg.samples.strict_inlier_fraction =
                s.value("strict_inlier_fraction", cfg.samples.strict_inlier_fraction);
        }
        if (root.contains("train")) {
            const json& t = root["train"];
            require_keys(t, "train",
                         {"epochs", "batch_size", "learning_rate", "momentum",
                          "anneal_epochs"});
            cfg.train.epochs = t.value("epochs", cfg.train.epochs);
            cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
            cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
            cfg.train.momentum = t.value("momentum", cfg.train.momentum);
            if (t.contains("anneal_epochs"))
                cfg.train.anneal_epochs = t["anneal_epochs"].get<std::vector<int>>();
        }
        cfg.hidden_dim = root.value("hidden_dim", cfg.hidden_dim);
        if (root.contains("budget")) {
            const json& b = root["budget"];
            require_keys(b, "budget", {"c_fn", "b_rej", "pi_in_star", "lambda_grid"});
            cfg.has_budget = true;
            cfg.budget.c_fn = b.value("c_fn", cfg.c_fn);
            cfg.budget.b_rej = b.value("b_rej", cfg.budget.b_rej);
            if (b.contains("pi_in_star")) {
                cfg.budget.pi_in_star = b["pi_in_star"].get<double>();
                cfg.budget_pi_given = true;
            }
            if (b.contains("lambda_grid"))
                cfg.lambda_grid = b["lambda_grid"].get<Vec>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str());
}

Scenario make_scenario(const std::string& name) {
    if (name == "open-set") {
        // Four collinear isotropic Gaussians; the last class plays outlier.
        std::vector<GaussianClassConditional> comps;
        for (int k = 0; k < 4; ++k)
            comps.push_back(GaussianClassConditional::isotropic(
                {2.0 * static_cast<double>(k), 0.0}, 1.0));
        LabeledMixtureDistribution full({0.25, 0.25, 0.25, 0.25}, std::move(comps));
        return Scenario{open_set_restrict(full, 3), CostSpec{0.5, 0.5}};
    }
    if (name == "uniform-outlier") {
        std::vector<GaussianClassConditional> comps{
            GaussianClassConditional::isotropic({-2.0, 0.0}, 1.0),
            GaussianClassConditional::isotropic({2.0, 0.0}, 1.0),
            GaussianClassConditional::isotropic({0.0, 2.0}, 1.0)};
        LabeledMixtureDistribution inlier({1.0 / 3, 1.0 / 3, 1.0 / 3},
                                          std::move(comps));
        // Box kept clear of the inlier bulk so P_out(x) = 0 there and exact
        // strict-inlier sampling succeeds.
        auto outlier = std::make_shared<UniformBoxOutlier>(Vec{5.0, -8.0},
                                                           Vec{13.0, 8.0});
        return Scenario{ScodEnvironment(std::move(inlier), outlier, 0.75, 0.3),
                        CostSpec{0.2, 0.3}};
    }
    if (name == "wild-mixture") {
        std::vector<GaussianClassConditional> comps{
            GaussianClassConditional::isotropic({-2.0}, 1.0),
            GaussianClassConditional::isotropic({2.0}, 1.0)};
        LabeledMixtureDistribution inlier({0.5, 0.5}, std::move(comps));
        auto outlier = std::make_shared<TruncatedGaussianOutlier>(
            GaussianClassConditional::isotropic({6.0}, 1.0), Vec{4.0}, Vec{12.0});
        return Scenario{ScodEnvironment(std::move(inlier), outlier, 0.7, 0.1),
                        CostSpec{0.2, 0.3}};
    }
    throw ConfigError("unknown scenario '" + name + "'");
}

ExperimentConfig demo_config(const std::string& scenario) {
    make_scenario(scenario);  // name check
    ExperimentConfig cfg;
    cfg.scenario = scenario;
    cfg.methods = registered_methods();
    cfg.costs = make_scenario(scenario).costs;
    cfg.seeds = {1};
    cfg.output_dir = "demo-" + scenario;
    cfg.train.epochs = 30;
    cfg.has_budget = true;
    cfg.budget.c_fn = cfg.c_fn;
    cfg.budget.b_rej = 0.2;
    return cfg;
}

namespace {

RecordOrigin to_record_origin(SampleOrigin origin) {
    switch (origin) {
        case SampleOrigin::kInlier: return RecordOrigin::kInlier;
        case SampleOrigin::kOutlier: return RecordOrigin::kOutlier;
        case SampleOrigin::kWild: return RecordOrigin::kWild;
        case SampleOrigin::kStrictInlier: return RecordOrigin::kStrictInlier;
    }
    throw std::logic_error("unreachable origin");
}

LogitsRecord record_from_forward(const ScorerModel& model, const Sample& s) {
    const ForwardResult fwd = model.forward(s.features);
    LogitsRecord rec;
    rec.origin = to_record_origin(s.origin);
    rec.label = s.label;
    if (model.architecture().coupled) {
        // Reject logit travels in the ood-logit column.
        rec.logits.assign(fwd.class_logits.begin(), fwd.class_logits.end() - 1);
        rec.ood_logit = fwd.class_logits.back();
    } else {
        rec.logits = fwd.class_logits;
        rec.ood_logit = fwd.ood_logit;
    }
    rec.embedding = fwd.embedding;
    return rec;
}

}  // namespace

LogitsFile export_model_logits(const ScorerModel& model,
                               const std::vector<Sample>& test,
                               const std::vector<Sample>& strict_inliers) {
    LogitsFile file;
    file.num_classes = model.architecture().num_classes;
    file.embedding_dim = model.architecture().embedding_dim();
    file.records.reserve(test.size() + strict_inliers.size());
    for (const auto& s : test) file.records.push_back(record_from_forward(model, s));
    for (const auto& s : strict_inliers)
        file.records.push_back(record_from_forward(model, s));
    return file;
}

namespace {

bool is_test_origin(RecordOrigin o) {
    return o == RecordOrigin::kInlier || o == RecordOrigin::kOutlier;
}

Vec strict_inlier_ood_logits(const LogitsFile& file) {
    Vec out;
    for (const auto& r : file.records)
        if (r.origin == RecordOrigin::kStrictInlier) {
            if (!r.ood_logit)
                throw DataError("strict_in record lacks an ood logit");
            out.push_back(*r.ood_logit);
        }
    return out;
}

// Per-record scorer: predicted label, rejection score (larger = more
// abstain-worthy), and the method's own abstention decision when it
// carries a canonical threshold.
struct RecordScore {
    int predicted = -1;
    double rejection_score = 0.0;
    bool abstained = false;
};

using RecordScorer = std::function<RecordScore(const LogitsRecord&)>;

RecordScorer make_scorer(const std::string& method, const LogitsFile& file,
                         const CostSpec& costs) {
    const bool use_embedding = file.embedding_dim > 0;
    if (method == "msp") {
        return [](const LogitsRecord& r) {
            RecordScore s;
            s.predicted = argmax_lowest_tie(r.logits);
            s.rejection_score = -msp(r.logits);
            return s;
        };
    }
    if (method == "maxlogit") {
        return [](const LogitsRecord& r) {
            RecordScore s;
            s.predicted = argmax_lowest_tie(r.logits);
            s.rejection_score = -max_logit(r.logits);
            return s;
        };
    }
    if (method == "energy") {
        return [](const LogitsRecord& r) {
            RecordScore s;
            s.predicted = argmax_lowest_tie(r.logits);
            s.rejection_score = energy(r.logits);
            return s;
        };
    }
    if (method == "sirc") {
        // OOD score oriented larger-is-more-inlier: negated embedding L1
        // norm when embeddings are present, else the negated energy.
        auto raw_ood = [use_embedding](const LogitsRecord& r) {
            return use_embedding ? -embed_l1(r.embedding) : -energy(r.logits);
        };
        Vec holdout;
        for (const auto& r : file.records)
            if (r.origin == RecordOrigin::kStrictInlier) holdout.push_back(raw_ood(r));
        if (holdout.empty())
            for (const auto& r : file.records)
                if (r.origin == RecordOrigin::kInlier) holdout.push_back(raw_ood(r));
        if (holdout.size() < 2)
            throw DataError("sirc needs held-out inlier records to fit");
        const SircParams params = SircParams::fit_from_inliers(holdout);
        return [raw_ood, params](const LogitsRecord& r) {
            RecordScore s;
            s.predicted = argmax_lowest_tie(r.logits);
            s.rejection_score = -sirc(msp(r.logits), raw_ood(r), params);
            return s;
        };
    }
    if (method == "plugin-bb") {
        // Density-ratio proxy from the energy score: sum_y exp(f_y).
        return [costs](const LogitsRecord& r) {
            PluginInputs in;
            in.s_sc = msp(r.logits);
            in.s_ood = std::exp(-energy(r.logits));
            const Vec p = softmax(r.logits);
            const Decision d = black_box_reject(in, costs, p);
            RecordScore s;
            s.predicted = argmax_lowest_tie(p);
            s.rejection_score = d.rejection_score;
            s.abstained = d.abstain;
            return s;
        };
    }
    if (method == "plugin-lb") {
        const Vec strict = strict_inlier_ood_logits(file);
        if (strict.empty())
            throw DataError("plugin-lb needs strict_in records with ood logits");
        const double pi_hat = estimate_pi_mix(strict).pi_mix_hat;
        return [costs, pi_hat](const LogitsRecord& r) {
            if (!r.ood_logit) throw DataError("plugin-lb needs ood logits");
            PluginInputs in;
            in.s_sc = msp(r.logits);
            in.s_ood = noise_correct(std::exp(-*r.ood_logit), pi_hat).s_ood;
            const Vec p = softmax(r.logits);
            const Decision d = black_box_reject(in, costs, p);
            RecordScore s;
            s.predicted = argmax_lowest_tie(p);
            s.rejection_score = d.rejection_score;
            s.abstained = d.abstain;
            return s;
        };
    }
    if (method == "coupled") {
        return [](const LogitsRecord& r) {
            if (!r.ood_logit)
                throw DataError("coupled needs the reject logit in the ood column");
            Vec zeta_logits = r.logits;
            zeta_logits.push_back(*r.ood_logit);
            const Decision d = coupled_reject_decision(zeta_logits);
            RecordScore s;
            s.predicted = argmax_lowest_tie(r.logits);
            // Monotone margin form of the same rule; decision at margin > 0.
            s.rejection_score = d.rejection_score - d.threshold;
            s.abstained = d.abstain;
            return s;
        };
    }
    throw ConfigError("unknown method '" + method + "'");
}

}  // namespace

MethodOutput score_method(const std::string& method, const LogitsFile& file,
                          const CostSpec& costs) {
    const RecordScorer scorer = make_scorer(method, file, costs);
    MethodOutput out;
    for (const auto& r : file.records) {
        if (!is_test_origin(r.origin)) continue;
        const RecordScore sc = scorer(r);
        if (!std::isfinite(sc.rejection_score) && !std::isinf(sc.rejection_score))
            throw NumericError("non-finite rejection score in method " + method);
        EvalRecord rec;
        rec.is_outlier = r.origin == RecordOrigin::kOutlier;
        rec.label = r.label;
        rec.predicted = sc.predicted;
        rec.abstained = sc.abstained;
        rec.rejection_score = sc.rejection_score;
        out.records.push_back(rec);
        (rec.is_outlier ? out.outlier_scores : out.inlier_scores)
            .push_back(sc.rejection_score);
    }
    if (out.inlier_scores.empty() || out.outlier_scores.empty())
        throw DataError("evaluation needs both in and out records");
    return out;
}

namespace {

struct CellSummary {
    double auc_rc = 0.0, auc_roc = 0.0, fpr_at_95tpr = 0.0;
};

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write " + path.string());
    os << content;
}

CellSummary evaluate_cell(const std::string& method, const LogitsFile& file,
                          const ExperimentConfig& cfg, const std::string& tag,
                          std::ostream& diag) {
    const MethodOutput out = score_method(method, file, cfg.costs);
    const RiskCoverageCurve curve =
        risk_coverage_curve(out.records, cfg.c_fn, cfg.grid_size);
    const OodDetectionMetrics det =
        ood_detection_metrics(out.inlier_scores, out.outlier_scores);

    const fs::path dir(cfg.output_dir);
    write_text_file(dir / (method + "_" + tag + ".csv"), curve_to_csv(curve));

    json summary;
    summary["method"] = method;
    summary["tag"] = tag;
    summary["c_fn"] = cfg.c_fn;
    summary["auc_rc"] = curve.auc_rc;
    summary["auc_roc"] = det.auc_roc;
    summary["fpr_at_95tpr"] = det.fpr_at_95tpr;
    summary["degenerate_curve"] = curve.degenerate;
    write_text_file(dir / (method + "_" + tag + ".json"), summary.dump(2) + "\n");

    diag << method << " " << tag << ": auc_rc=" << format_double(curve.auc_rc)
         << " auc_roc=" << format_double(det.auc_roc)
         << " fpr95=" << format_double(det.fpr_at_95tpr) << "\n";
    return CellSummary{curve.auc_rc, det.auc_roc, det.fpr_at_95tpr};
}

struct GeneratedData {
    LogitsFile decoupled;  // also serves every post-hoc method
    LogitsFile coupled;    // populated only when the coupled method runs
    bool has_coupled = false;
};

GeneratedData generate_scenario_data(const ExperimentConfig& cfg,
                                     std::uint64_t seed, std::ostream& diag) {
    const Scenario sc = make_scenario(cfg.scenario);
    const ScodEnvironment& env = sc.env;
    const int dim = env.inlier().dim();
    const int L = env.inlier().num_classes();

    const auto train_samples =
        env.sample(SampleSource::kInlier, cfg.samples.train, seed * 10 + 1);
    const auto wild_samples =
        env.sample(SampleSource::kWild, cfg.samples.wild, seed * 10 + 2);
    const auto test_samples =
        env.sample(SampleSource::kTest, cfg.samples.test, seed * 10 + 3);
    const auto strict_samples =
        env.sample_strict_inlier(cfg.samples.strict_inlier_count(), seed * 10 + 4);

    LabeledBatch inlier_batch;
    for (const auto& s : train_samples) {
        inlier_batch.features.push_back(s.features);
        inlier_batch.labels.push_back(*s.label);
    }
    std::vector<Vec> wild_features;
    for (const auto& s : wild_samples) wild_features.push_back(s.features);

    TrainConfig tc = cfg.train;
    tc.seed = seed;

    GeneratedData data;
    try {
        Architecture arch{dim, cfg.hidden_dim, L, false, true};
        ScorerModel model(arch);
        model.initialize(seed);
        const TrainResult trained = train(model, Objective::kDecoupled,
                                          inlier_batch, wild_features,
                                          cfg.costs, tc);
        diag << "seed " << seed << ": decoupled final loss "
             << format_double(trained.epoch_losses.empty()
                                  ? 0.0
                                  : trained.epoch_losses.back())
             << "\n";
        data.decoupled =
            export_model_logits(trained.model, test_samples, strict_samples);
    } catch (const TrainingError& e) {
        throw NumericError(std::string("decoupled training diverged: ") + e.what());
    }

    if (std::find(cfg.methods.begin(), cfg.methods.end(), "coupled") !=
        cfg.methods.end()) {
        const auto outlier_samples =
            env.sample(SampleSource::kOutlier, cfg.samples.wild, seed * 10 + 5);
        std::vector<Vec> outlier_features;
        for (const auto& s : outlier_samples)
            outlier_features.push_back(s.features);
        try {
            Architecture arch{dim, cfg.hidden_dim, L, true, true};
            ScorerModel model(arch);
            model.initialize(seed);
            const TrainResult trained = train(model, Objective::kCoupled,
                                              inlier_batch, outlier_features,
                                              cfg.costs, tc);
            data.coupled =
                export_model_logits(trained.model, test_samples, strict_samples);
            data.has_coupled = true;
        } catch (const TrainingError& e) {
            throw NumericError(std::string("coupled training diverged: ") + e.what());
        }
    }
    return data;
}

}  // namespace

void run_experiment(const ExperimentConfig& config, std::ostream& diag) {
    config.validate();
    fs::create_directories(config.output_dir);

    // method -> per-seed summaries, in config order
    std::vector<std::vector<CellSummary>> cells(config.methods.size());

    if (!config.logits_file.empty()) {
        const LogitsFile file = read_logits_file(config.logits_file);
        for (size_t m = 0; m < config.methods.size(); ++m)
            cells[m].push_back(
                evaluate_cell(config.methods[m], file, config, "ingest", diag));
    } else {
        for (std::uint64_t seed : config.seeds) {
            const GeneratedData data = generate_scenario_data(config, seed, diag);
            const std::string tag = "seed" + std::to_string(seed);
            write_logits_file(
                (fs::path(config.output_dir) / ("logits_" + tag + ".txt")).string(),
                data.decoupled);
            if (data.has_coupled)
                write_logits_file((fs::path(config.output_dir) /
                                   ("logits_coupled_" + tag + ".txt"))
                                      .string(),
                                  data.coupled);
            for (size_t m = 0; m < config.methods.size(); ++m) {
                const std::string& method = config.methods[m];
                const LogitsFile& file =
                    method == "coupled" ? data.coupled : data.decoupled;
                cells[m].push_back(evaluate_cell(method, file, config, tag, diag));
            }
        }
    }

    json aggregate;
    for (size_t m = 0; m < config.methods.size(); ++m) {
        const auto& runs = cells[m];
        auto stats = [&](auto field) {
            double mean = 0.0;
            for (const auto& c : runs) mean += c.*field;
            mean /= static_cast<double>(runs.size());
            double var = 0.0;
            for (const auto& c : runs) var += (c.*field - mean) * (c.*field - mean);
            const double sd = runs.size() > 1
                                  ? std::sqrt(var / static_cast<double>(runs.size() - 1))
                                  : 0.0;
            json j;
            j["mean"] = mean;
            j["std"] = sd;
            return j;
        };
        json entry;
        entry["runs"] = runs.size();
        entry["auc_rc"] = stats(&CellSummary::auc_rc);
        entry["auc_roc"] = stats(&CellSummary::auc_roc);
        entry["fpr_at_95tpr"] = stats(&CellSummary::fpr_at_95tpr);
        aggregate[config.methods[m]] = entry;
    }
    write_text_file(fs::path(config.output_dir) / "aggregate.json",
                    aggregate.dump(2) + "\n");
    diag << "wrote " << config.output_dir << "/aggregate.json\n";
}

void run_budget(const ExperimentConfig& config, std::ostream& diag) {
    config.validate();
    if (!config.has_budget)
        throw ConfigError("budget run needs a 'budget' config section");
    fs::create_directories(config.output_dir);

    LogitsFile file;
    if (!config.logits_file.empty()) {
        file = read_logits_file(config.logits_file);
    } else {
        file = generate_scenario_data(config, config.seeds.front(), diag).decoupled;
    }

    // Per-sample plug-in scores, reused across the whole lambda grid.
    bool have_ood_logits = true;
    for (const auto& r : file.records)
        if (is_test_origin(r.origin) && !r.ood_logit) have_ood_logits = false;
    const Vec strict = strict_inlier_ood_logits(file);
    double pi_hat = 0.0;
    const bool lb_scoring = have_ood_logits && !strict.empty();
    if (lb_scoring) pi_hat = estimate_pi_mix(strict).pi_mix_hat;

    std::vector<ScoredSample> eval_set;
    for (const auto& r : file.records) {
        if (!is_test_origin(r.origin)) continue;
        ScoredSample s;
        const Vec p = softmax(r.logits);
        s.s_sc = p[argmax_lowest_tie(p)];
        s.s_ood = lb_scoring ? noise_correct(std::exp(-*r.ood_logit), pi_hat).s_ood
                             : std::exp(-energy(r.logits));
        s.predicted = argmax_lowest_tie(p);
        s.label = r.label;
        s.is_outlier = r.origin == RecordOrigin::kOutlier;
        eval_set.push_back(s);
    }
    if (eval_set.empty()) throw DataError("no test records for budget search");

    BudgetSpec budget = config.budget;
    if (!config.budget_pi_given && lb_scoring) {
        // Default pi*_in to the estimated mixture proportion.
        budget.pi_in_star =
            std::min(std::max(pi_hat, kPiMixClamp), 1.0 - kPiMixClamp);
    }
    budget.validate();

    const Vec grid =
        config.lambda_grid.empty() ? default_lambda_grid(budget) : config.lambda_grid;
    const BudgetSearchResult result = budget_search(eval_set, budget, grid);

    json out;
    out["c_fn"] = budget.c_fn;
    out["b_rej"] = budget.b_rej;
    out["pi_in_star"] = budget.pi_in_star;
    out["any_feasible"] = result.any_feasible;
    auto point_json = [](const LagrangianPoint& pt) {
        json j;
        j["lambda"] = pt.lambda;
        j["w_err"] = pt.w_err;
        j["w_in"] = pt.w_in;
        j["w_out"] = pt.w_out;
        j["nu"] = pt.nu;
        j["abstention_rate"] = pt.abstention_rate;
        j["objective"] = pt.objective;
        j["feasible"] = pt.feasible;
        j["negative_out_weight"] = pt.negative_out_weight;
        return j;
    };
    out["best"] = point_json(result.best);
    json grid_json = json::array();
    for (const auto& pt : result.grid) grid_json.push_back(point_json(pt));
    out["grid"] = grid_json;
    write_text_file(fs::path(config.output_dir) / "budget.json", out.dump(2) + "\n");
    diag << "budget: lambda=" << format_double(result.best.lambda)
         << " abstention=" << format_double(result.best.abstention_rate)
         << " objective=" << format_double(result.best.objective)
         << (result.any_feasible ? "" : " (infeasible, minimal violation)") << "\n";
}

void run_curve(const std::string& logits_path, const std::string& method,
               double c_fn, int grid_size, const std::string& output_dir,
               std::ostream& diag) {
    if (!is_registered_method(method))
        throw ConfigError("unknown method '" + method + "'");
    if (c_fn < 0.0 || c_fn > 1.0) throw ConfigError("c_fn must lie in [0,1]");
    const LogitsFile file = read_logits_file(logits_path);

    ExperimentConfig cfg;
    cfg.logits_file = logits_path;
    cfg.methods = {method};
    cfg.c_fn = c_fn;
    cfg.grid_size = grid_size;
    cfg.output_dir = output_dir;
    fs::create_directories(cfg.output_dir);
    evaluate_cell(method, file, cfg, "curve", diag);
}

void run_ingest_check(const std::string& logits_path, std::ostream& diag) {
    const LogitsFile file = read_logits_file(logits_path);
    size_t counts[4] = {0, 0, 0, 0};
    size_t with_ood = 0, with_label = 0;
    for (const auto& r : file.records) {
        ++counts[static_cast<int>(r.origin)];
        if (r.ood_logit) ++with_ood;
        if (r.label) ++with_label;
    }
    diag << "ok: L=" << file.num_classes << " E=" << file.embedding_dim
         << " records=" << file.records.size() << " in=" << counts[0]
         << " out=" << counts[1] << " wild=" << counts[2]
         << " strict_in=" << counts[3] << " labeled=" << with_label
         << " with_ood_logit=" << with_ood << "\n";
}

}  // namespace scod
