// Copyright 2026 The hqnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// hqnn: train, evaluate and compare the hybrid quantum-classical head and
// its classical controls on feature vectors or synthetic data.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hqnn/checkpoint.hpp"
#include "hqnn/data.hpp"
#include "hqnn/metrics.hpp"
#include "hqnn/model.hpp"
#include "hqnn/qsim.hpp"
#include "hqnn/train.hpp"
#include "hqnn/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hqnn;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;
constexpr std::size_t kBackboneParams = 23508032; // ResNet-50 without its fc layer

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Options

struct RunOptions {
    // data
    std::string synthetic;
    std::string data_path;
    double separation = 8.0;
    double train_fraction = 0.85;
    std::uint64_t seed = 0;
    // model
    std::string variant = "hqnn";
    std::size_t qubits = 10;
    std::size_t q_layers = 4;
    std::size_t bottleneck = 10;
    std::size_t hidden = 32;
    double dropout = 0.3;
    bool rescale_pi = false;
    std::string reduce_group = "head";
    // training
    std::size_t batch = 16;
    std::size_t epochs = 70;
    std::size_t patience = 15;
    double lr_q = 1e-4;
    double lr_head = 5e-5;
    double lr_bb = 1e-5;
    double lr_scale = 1.0;
    double gamma = 2.0;
    double smoothing = 0.1;
    double clip = 1.0;
    double eta_min = 0.0;
    // output
    std::string out;
    bool quiet = false;

    CLI::Option *bottleneck_opt = nullptr;
};

void add_data_options(CLI::App *app, RunOptions &o) {
    app->add_option("--synthetic", o.synthetic,
                    "Synthetic Gaussian data as CLASSESxPER_CLASSxDIM, e.g. 4x200x64");
    app->add_option("--data", o.data_path, "Feature file (text or binary)");
    app->add_option("--separation", o.separation, "Class-mean distance for --synthetic")
        ->capture_default_str();
    app->add_option("--train-fraction", o.train_fraction, "Stratified train share")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    app->add_option("--seed", o.seed, "Seed for data, split, initialization and shuffling")
        ->capture_default_str();
}

void add_model_options(CLI::App *app, RunOptions &o, bool with_variant) {
    if (with_variant) {
        app->add_option("--variant", o.variant, "Model variant")
            ->capture_default_str()
            ->check(CLI::IsMember({"hqnn", "matched", "baseline"}));
    }
    app->add_option("--qubits", o.qubits, "Circuit width")->capture_default_str();
    app->add_option("--q-layers", o.q_layers, "Variational layers")->capture_default_str();
    o.bottleneck_opt = app->add_option("--bottleneck", o.bottleneck,
                                       "Bottleneck width (defaults to --qubits)");
    app->add_option("--hidden", o.hidden, "Head hidden width")->capture_default_str();
    app->add_option("--dropout", o.dropout, "Head dropout rate")->capture_default_str();
    app->add_flag("--rescale-pi", o.rescale_pi, "Scale encoding angles by pi");
    app->add_option("--reduce-group", o.reduce_group,
                    "Optimizer group of the bottleneck layer")
        ->capture_default_str()
        ->check(CLI::IsMember({"head", "backbone"}));
}

void add_train_options(CLI::App *app, RunOptions &o) {
    app->add_option("--batch", o.batch, "Batch size")->capture_default_str();
    app->add_option("--epochs", o.epochs, "Maximum epochs")->capture_default_str();
    app->add_option("--patience", o.patience, "Early-stopping patience")->capture_default_str();
    app->add_option("--lr-q", o.lr_q, "Quantum-layer learning rate")->capture_default_str();
    app->add_option("--lr-head", o.lr_head, "Head learning rate")->capture_default_str();
    app->add_option("--lr-bb", o.lr_bb, "Backbone-group learning rate")->capture_default_str();
    app->add_option("--lr-scale", o.lr_scale, "Multiplier applied to all three rates")
        ->capture_default_str();
    app->add_option("--gamma", o.gamma, "Focal-loss focusing parameter")->capture_default_str();
    app->add_option("--smoothing", o.smoothing, "Label smoothing")->capture_default_str();
    app->add_option("--clip", o.clip, "Global gradient-norm clip")->capture_default_str();
    app->add_option("--eta-min", o.eta_min, "Cosine schedule floor")->capture_default_str();
}

void add_out_option(CLI::App *app, std::string &out, const std::string &help) {
    app->add_option("--out", out, help)
        ->envname("HQNN_OUTPUT_DIR")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

// ---------------------------------------------------------------------------
// Data

struct LoadedData {
    data::Dataset ds;
    json source;
};

std::array<std::size_t, 3> parse_synthetic(const std::string &spec) {
    std::array<std::size_t, 3> v{};
    std::istringstream is(spec);
    char x1 = 0, x2 = 0;
    if (!(is >> v[0] >> x1 >> v[1] >> x2 >> v[2]) || x1 != 'x' || x2 != 'x' || !is.eof() ||
        v[0] < 2 || v[1] < 2 || v[2] < 1) {
        throw UsageError("--synthetic expects CLASSESxPER_CLASSxDIM with at least 2 classes "
                         "and 2 samples per class, got '" + spec + "'");
    }
    return v;
}

LoadedData load_from_source(const json &src) {
    if (src.at("kind") == "synthetic") {
        const auto v = parse_synthetic(src.at("spec").get<std::string>());
        return {data::generate_synthetic(v[0], v[1], v[2], src.at("separation").get<double>(),
                                         src.at("seed").get<std::uint64_t>()),
                src};
    }
    return {data::load_features(src.at("path").get<std::string>()), src};
}

LoadedData load_data(const RunOptions &o) {
    if (o.synthetic.empty() == o.data_path.empty()) {
        throw UsageError("exactly one of --synthetic or --data is required");
    }
    json src;
    if (!o.synthetic.empty()) {
        parse_synthetic(o.synthetic);
        src = {{"kind", "synthetic"},
               {"spec", o.synthetic},
               {"separation", o.separation},
               {"seed", o.seed}};
    } else {
        src = {{"kind", "file"}, {"path", fs::absolute(o.data_path).string()}};
    }
    return load_from_source(src);
}

data::SplitSpec split_spec(const RunOptions &o) { return {o.train_fraction, o.seed, true}; }

json split_json(const data::SplitSpec &s, const data::Split &split) {
    return {{"train_fraction", s.train_fraction},
            {"seed", s.seed},
            {"stratified", s.stratified},
            {"n_train", split.train.size()},
            {"n_val", split.val.size()},
            {"hash", data::split_fingerprint(split)}};
}

// ---------------------------------------------------------------------------
// Configs

model::ModelConfig model_config(const RunOptions &o, model::Variant v, const data::Dataset &ds) {
    model::ModelConfig cfg;
    cfg.feature_dim = ds.feature_dim;
    cfg.n_classes = ds.n_classes();
    cfg.variant = v;
    cfg.circuit = {o.qubits, o.q_layers};
    cfg.bottleneck_dim = o.bottleneck_opt && o.bottleneck_opt->count() ? o.bottleneck : o.qubits;
    cfg.hidden_dim = o.hidden;
    cfg.dropout_rate = o.dropout;
    cfg.rescale_pi = o.rescale_pi;
    cfg.reduce_group =
        o.reduce_group == "backbone" ? nn::ParamGroup::BackboneSurrogate : nn::ParamGroup::Head;
    cfg.init_seed = o.seed;
    cfg.validate();
    return cfg;
}

train::TrainConfig train_config(const RunOptions &o) {
    train::TrainConfig tc;
    tc.batch_size = o.batch;
    tc.max_epochs = o.epochs;
    tc.patience = std::min(o.patience, o.epochs);
    tc.lr_quantum = o.lr_q * o.lr_scale;
    tc.lr_head = o.lr_head * o.lr_scale;
    tc.lr_backbone_surrogate = o.lr_bb * o.lr_scale;
    tc.loss = {o.gamma, o.smoothing};
    tc.clip_norm = o.clip;
    tc.eta_min = o.eta_min;
    tc.seed = o.seed;
    tc.validate();
    return tc;
}

// ---------------------------------------------------------------------------
// Files

void write_file(const fs::path &path, const std::string &content) {
    std::ofstream os(path, std::ios::binary);
    os << content;
    if (!os) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
}

void write_json(const fs::path &path, const json &j) { write_file(path, j.dump(2) + "\n"); }

fs::path output_dir(const std::string &out) {
    const fs::path dir = out.empty() ? fs::path("hqnn_out") : fs::path(out);
    fs::create_directories(dir);
    return dir;
}

json manifest(const std::string &command, const std::vector<std::string> &args,
              json config, json seeds, const std::vector<std::string> &artifacts,
              double seconds) {
    return {{"schema", "hqnn-manifest/1"},
            {"command", command},
            {"argv", args},
            {"config", std::move(config)},
            {"seeds", std::move(seeds)},
            {"artifacts", artifacts},
            {"duration_seconds", seconds},
            {"version", HQNN_VERSION}};
}

// The recorded argv always names its output directory, so a rerun does not
// depend on HQNN_OUTPUT_DIR or the working directory's default.
std::vector<std::string> recorded_args(std::vector<std::string> args, const fs::path &dir) {
    const bool has_out = std::any_of(args.begin(), args.end(), [](const std::string &a) {
        return a == "--out" || a.rfind("--out=", 0) == 0;
    });
    if (!has_out) {
        args.push_back("--out");
        args.push_back(dir.string());
    }
    return args;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Training runs

struct VariantRun {
    model::ModelConfig cfg;
    train::TrainResult result;
    metrics::MetricsReport val_report;
};

VariantRun train_variant(const RunOptions &o, model::Variant v, const LoadedData &data,
                         const data::Split &split, const json &split_info, const fs::path &dir,
                         std::vector<std::string> &artifacts) {
    VariantRun run;
    run.cfg = model_config(o, v, data.ds);
    const auto tc = train_config(o);
    const auto name = std::string(model::to_string(v));
    auto progress = [&](const train::EpochRecord &e) {
        if (!o.quiet) {
            std::fprintf(stderr, "[%s] epoch %zu/%zu  train_loss %.4f  val_loss %.4f  val_f1 %.4f\n",
                         name.c_str(), e.epoch + 1, tc.max_epochs, e.train_loss, e.val_loss,
                         e.val_macro_f1);
        }
    };
    run.result = train::train(run.cfg, model::init_model(run.cfg), split.train, split.val, tc,
                              progress);
    run.val_report = train::evaluate(run.result.best, run.cfg, split.val);

    json train_json = tc;
    json meta = {{"data", data.source},
                 {"split", split_info},
                 {"train", train_json},
                 {"best_epoch", run.result.history.best_epoch},
                 {"epochs_run", run.result.history.epochs.size()}};

    model::Checkpoint best{run.cfg, run.result.best, meta, {}};
    best.meta["kind"] = "best";
    model::Checkpoint last{run.cfg, run.result.last, meta, {{"train", run.result.rng_state}}};
    last.meta["kind"] = "last";

    const auto ck = dir / "checkpoint.bin";
    const auto ck_last = dir / "checkpoint_last.bin";
    const auto hist = dir / "history.csv";
    model::save_checkpoint(ck.string(), best);
    model::save_checkpoint(ck_last.string(), last);
    std::ostringstream h;
    train::write_history(h, run.result.history);
    write_file(hist, h.str());
    for (const auto &p : {ck, ck_last, hist}) {
        artifacts.push_back(p.string());
    }
    return run;
}

json run_config_json(const RunOptions &o, const model::ModelConfig &mc) {
    json model_json = mc;
    json train_json = train_config(o);
    return {{"model", model_json}, {"train", train_json}, {"lr_scale", o.lr_scale}};
}

int cmd_train(const RunOptions &o, const std::vector<std::string> &args) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto v = *model::parse_variant(o.variant);
    const auto dir = output_dir(o.out);
    const auto data = load_data(o);
    const auto spec = split_spec(o);
    const auto split = data::stratified_split(data.ds, spec);
    const auto split_info = split_json(spec, split);

    std::vector<std::string> artifacts;
    const auto run = train_variant(o, v, data, split, split_info, dir, artifacts);

    const auto manifest_path = dir / "manifest.json";
    artifacts.push_back(manifest_path.string());
    auto config = run_config_json(o, run.cfg);
    config["data"] = data.source;
    config["split"] = split_info;
    const json seeds = {{"data", o.seed}, {"split", o.seed}, {"init", o.seed}, {"train", o.seed}};
    auto m = manifest("train", recorded_args(args, dir), config, seeds, artifacts, seconds_since(t0));
    m["split_hash"] = split_info.at("hash");
    write_json(manifest_path, m);

    const auto &h = run.result.history;
    std::printf("%s: best epoch %zu of %zu, val macro F1 %.4f, accuracy %.4f\n",
                o.variant.c_str(), h.best_epoch, h.epochs.size(), run.val_report.macro_f1,
                run.val_report.accuracy);
    std::printf("wrote %s\n", dir.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// compare

const std::array<std::pair<const char *, double metrics::MetricsReport::*>, 6> kMetricRows{{
    {"accuracy", &metrics::MetricsReport::accuracy},
    {"macro_precision", &metrics::MetricsReport::macro_precision},
    {"macro_recall", &metrics::MetricsReport::macro_recall},
    {"macro_f1", &metrics::MetricsReport::macro_f1},
    {"roc_auc_macro", &metrics::MetricsReport::roc_auc_macro},
    {"roc_auc_weighted", &metrics::MetricsReport::roc_auc_weighted},
}};

constexpr std::array<model::Variant, 3> kVariants{model::Variant::Hqnn,
                                                  model::Variant::ClassicalMatched,
                                                  model::Variant::Baseline};

std::string parameter_table(const std::array<model::ParameterCounts, 3> &counts,
                            std::size_t feature_dim) {
    std::ostringstream os;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %12s %12s %12s\n", "parameters", "hqnn", "matched",
                  "baseline");
    os << buf;
    auto row = [&](const char *name, auto get) {
        std::snprintf(buf, sizeof buf, "%-24s %12zu %12zu %12zu\n", name, get(counts[0]),
                      get(counts[1]), get(counts[2]));
        os << buf;
    };
    row("fc_reduce", [](const auto &c) { return c.fc_reduce; });
    row("classical_block", [](const auto &c) { return c.classical_block; });
    row("q_layer", [](const auto &c) { return c.q_layer; });
    row("head", [](const auto &c) { return c.head; });
    row("trainable_total", [](const auto &c) { return c.total; });
    if (feature_dim == 2048) {
        row("with_resnet50_backbone", [](const auto &c) { return c.total + kBackboneParams; });
    }
    return os.str();
}

int cmd_compare(const RunOptions &o, const std::vector<std::string> &args) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto dir = output_dir(o.out);
    const auto data = load_data(o);
    const auto spec = split_spec(o);
    std::vector<std::string> artifacts;
    json variants = json::object();
    json split_hashes = json::object();
    json columns = json::array();
    std::array<metrics::MetricsReport, 3> reports;
    std::array<model::ParameterCounts, 3> counts;

    json config;
    for (std::size_t k = 0; k < kVariants.size(); ++k) {
        const auto v = kVariants[k];
        const std::string name(model::to_string(v));
        // Each variant re-derives the split from the same seed; the recorded
        // hashes show they agree.
        const auto split = data::stratified_split(data.ds, spec);
        const auto split_info = split_json(spec, split);
        const auto vdir = dir / name;
        fs::create_directories(vdir);
        const auto run = train_variant(o, v, data, split, split_info, vdir, artifacts);
        reports[k] = run.val_report;
        counts[k] = model::count_parameters(run.cfg);
        split_hashes[name] = split_info.at("hash");
        columns.push_back(name);
        variants[name] = {{"best_epoch", run.result.history.best_epoch},
                          {"epochs_run", run.result.history.epochs.size()},
                          {"metrics", metrics::to_json(run.val_report, data.ds.class_names)},
                          {"parameters", {{"fc_reduce", counts[k].fc_reduce},
                                          {"classical_block", counts[k].classical_block},
                                          {"q_layer", counts[k].q_layer},
                                          {"head", counts[k].head},
                                          {"total", counts[k].total}}}};
        if (config.is_null()) {
            config = run_config_json(o, run.cfg);
            config["data"] = data.source;
            config["split"] = split_info;
        }
    }

    json rows = json::array();
    std::ostringstream table;
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-24s %12s %12s %12s\n", "metric", "hqnn", "matched",
                  "baseline");
    table << buf;
    for (const auto &[metric, field] : kMetricRows) {
        json values = json::array();
        for (const auto &r : reports) {
            values.push_back(r.*field);
        }
        rows.push_back({{"metric", metric}, {"values", values}});
        std::snprintf(buf, sizeof buf, "%-24s %12.4f %12.4f %12.4f\n", metric,
                      reports[0].*field, reports[1].*field, reports[2].*field);
        table << buf;
    }
    const auto params = parameter_table(counts, data.ds.feature_dim);
    std::cout << table.str() << '\n' << params;

    const auto report_path = dir / "comparison.json";
    const auto table_path = dir / "comparison.txt";
    write_json(report_path, {{"schema", "hqnn-compare/1"},
                             {"table", {{"columns", columns}, {"rows", rows}}},
                             {"variants", variants},
                             {"split_hashes", split_hashes}});
    write_file(table_path, table.str() + "\n" + params);
    const auto manifest_path = dir / "manifest.json";
    for (const auto &p : {report_path, table_path, manifest_path}) {
        artifacts.push_back(p.string());
    }
    auto m = manifest("compare", recorded_args(args, dir), config,
                      {{"data", o.seed}, {"split", o.seed}, {"init", o.seed}, {"train", o.seed}},
                      artifacts, seconds_since(t0));
    m["split_hashes"] = split_hashes;
    write_json(manifest_path, m);
    std::printf("\nwrote %s\n", dir.string().c_str());
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
    std::string checkpoint;
    std::string data_path;
    std::string subset = "val";
    std::size_t balanced = 0;
    std::uint64_t balanced_seed = 0;
    std::optional<std::uint64_t> shots;
    double readout_flip = 0.0;
    double depolarizing = 0.0;
    std::uint64_t noise_seed = 0;
    std::string out;
    bool confusion = false;
};

int cmd_eval(const EvalOptions &o) {
    if (!fs::exists(o.checkpoint)) {
        throw LoadError("checkpoint '" + o.checkpoint + "' does not exist");
    }
    const auto ck = model::load_checkpoint(o.checkpoint);
    json source = ck.meta.at("data");
    if (!o.data_path.empty()) {
        source = {{"kind", "file"}, {"path", fs::absolute(o.data_path).string()}};
    }
    const auto data = load_from_source(source);
    const auto &split_meta = ck.meta.at("split");
    const data::SplitSpec spec{split_meta.at("train_fraction").get<double>(),
                               split_meta.at("seed").get<std::uint64_t>(),
                               split_meta.at("stratified").get<bool>()};
    const auto split = data::stratified_split(data.ds, spec);
    const auto hash = data::split_fingerprint(split);
    if (hash != split_meta.at("hash").get<std::string>()) {
        throw LoadError("split fingerprint " + hash + " differs from the checkpoint's " +
                        split_meta.at("hash").get<std::string>() + "; wrong data file?");
    }

    data::Dataset ds = o.subset == "train" ? split.train
                       : o.subset == "all" ? data.ds
                                           : split.val;
    if (o.balanced > 0) {
        ds = data::balanced_subset(ds, o.balanced, o.balanced_seed);
    }

    json noise_json = nullptr;
    qsim::NoiseConfig noise;
    if (o.shots) {
        noise.shots = *o.shots;
        noise.readout_flip_prob = o.readout_flip;
        noise.depolarizing_prob = o.depolarizing;
        noise.rng_seed = o.noise_seed;
        noise.validate();
        noise_json = {{"shots", *o.shots},
                      {"readout_flip", o.readout_flip},
                      {"depolarizing", o.depolarizing},
                      {"noise_seed", o.noise_seed}};
        if (ck.config.variant != model::Variant::Hqnn) {
            std::fprintf(stderr, "note: noise options only affect the hqnn variant\n");
        }
    } else if (o.readout_flip > 0.0 || o.depolarizing > 0.0) {
        throw UsageError("--readout-flip and --depolarizing need --shots");
    }

    nn::LossConfig loss;
    if (ck.meta.contains("train")) {
        loss = {ck.meta["train"].at("gamma").get<double>(),
                ck.meta["train"].at("smoothing").get<double>()};
    }
    const auto result = train::evaluate_full(ck.params, ck.config, ds, loss,
                                             o.shots ? &noise : nullptr);
    const json out = {{"schema", "hqnn-eval/1"},
                      {"variant", model::to_string(ck.config.variant)},
                      {"subset", o.subset},
                      {"balanced_per_class", o.balanced},
                      {"split_hash", hash},
                      {"noise", noise_json},
                      {"mean_loss", result.mean_loss},
                      {"metrics", metrics::to_json(result.report, data.ds.class_names)}};
    if (o.out.empty()) {
        std::cout << out.dump(2) << '\n';
    } else {
        write_json(o.out, out);
        std::printf("macro F1 %.4f  accuracy %.4f  (%zu samples) -> %s\n",
                    result.report.macro_f1, result.report.accuracy, ds.size(), o.out.c_str());
    }
    if (o.confusion) {
        std::ostringstream table;
        metrics::write_confusion_table(table, result.report, data.ds.class_names);
        std::cerr << table.str();
    }
    return 0;
}

// ---------------------------------------------------------------------------
// gradcheck

struct GradcheckCli {
    verify::GradcheckOptions opts;
    std::string fault = "none";
    std::string out;
};

int cmd_gradcheck(const GradcheckCli &g) {
    verify::GradientFn adjoint = qsim::adjoint_gradients;
    if (g.fault == "adjoint-sign") {
        adjoint = [](const qsim::CircuitSpec &spec, const qsim::CircuitParams &p) {
            auto grads = qsim::adjoint_gradients(spec, p);
            for (double &d : grads.d_theta) {
                d = -d;
            }
            return grads;
        };
    }
    const auto results = verify::run_gradcheck(g.opts, adjoint);
    json report = json::array();
    bool ok = true;
    for (const auto &r : results) {
        std::printf("%-4s %-52s max deviation %.3e  (tolerance %.0e, %zu trials)\n",
                    r.passed() ? "PASS" : "FAIL", r.name.c_str(), r.max_deviation, r.tolerance,
                    r.trials);
        report.push_back({{"name", r.name},
                          {"max_deviation", r.max_deviation},
                          {"tolerance", r.tolerance},
                          {"trials", r.trials},
                          {"passed", r.passed()}});
        ok = ok && r.passed();
    }
    if (!g.out.empty()) {
        write_json(g.out, {{"schema", "hqnn-gradcheck/1"}, {"seed", g.opts.seed},
                           {"fault", g.fault}, {"checks", report}});
    }
    std::fflush(stdout);
    if (!ok) {
        for (const auto &r : results) {
            if (!r.passed()) {
                std::fprintf(stderr, "gradcheck failed: %s, max deviation %.3e > %.0e\n",
                             r.name.c_str(), r.max_deviation, r.tolerance);
            }
        }
        return kExitFailure;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// Small utilities

int cmd_params(const RunOptions &o, std::size_t feature_dim, std::size_t classes) {
    data::Dataset shape;
    shape.feature_dim = feature_dim;
    shape.class_names.resize(classes);
    std::array<model::ParameterCounts, 3> counts;
    for (std::size_t k = 0; k < kVariants.size(); ++k) {
        auto cfg = model_config(o, model::Variant::Baseline, shape);
        cfg.variant = kVariants[k];
        if (cfg.variant == model::Variant::Hqnn) {
            cfg.validate();
        }
        counts[k] = model::count_parameters(cfg);
    }
    std::cout << parameter_table(counts, feature_dim);
    return 0;
}

int cmd_amplitudes(std::size_t qubits, std::size_t layers, std::uint64_t seed) {
    const qsim::CircuitSpec spec{qubits, layers};
    spec.validate();
    Rng rng(seed);
    const auto params = verify::random_params(spec, rng);
    qsim::write_amplitudes(std::cout, qsim::prepare_state(spec, params));
    return 0;
}

int cmd_make_features(const RunOptions &o, bool binary) {
    if (o.synthetic.empty() || o.out.empty()) {
        throw UsageError("make-features needs --synthetic and --out");
    }
    const auto data = load_data(o);
    data::save_features(o.out, data.ds, binary);
    std::printf("wrote %zu samples to %s\n", data.ds.size(), o.out.c_str());
    return 0;
}

int run(std::vector<std::string> args, int depth = 0);

int cmd_rerun(const std::string &path, const std::string &out, int depth) {
    std::ifstream is(path);
    if (!is) {
        throw LoadError("cannot open manifest '" + path + "'");
    }
    json m;
    try {
        m = json::parse(is);
    } catch (const json::exception &e) {
        throw LoadError("manifest '" + path + "' is not valid JSON: " + e.what());
    }
    if (m.value("schema", "") != "hqnn-manifest/1" || !m.contains("argv")) {
        throw LoadError("'" + path + "' is not an hqnn manifest");
    }
    auto args = m.at("argv").get<std::vector<std::string>>();
    if (!out.empty()) {
        args.push_back("--out");
        args.push_back(out);
    }
    if (depth > 0) {
        throw UsageError("a manifest cannot rerun another rerun");
    }
    return run(std::move(args), depth + 1);
}

// ---------------------------------------------------------------------------

int run(std::vector<std::string> args, int depth) {
    CLI::App app{"Hybrid quantum-classical classification head: training, evaluation, "
                 "noise emulation and gradient verification."};
    app.set_version_flag("--version", HQNN_VERSION);
    app.require_subcommand(1);

    RunOptions train_opts;
    auto *train_cmd = app.add_subcommand("train", "Train one variant; writes checkpoints, "
                                                  "history.csv and manifest.json");
    add_data_options(train_cmd, train_opts);
    add_model_options(train_cmd, train_opts, true);
    add_train_options(train_cmd, train_opts);
    add_out_option(train_cmd, train_opts.out, "Output directory (env HQNN_OUTPUT_DIR)");
    train_cmd->add_flag("-q,--quiet", train_opts.quiet, "No per-epoch progress");

    RunOptions cmp_opts;
    auto *cmp_cmd = app.add_subcommand("compare", "Train and evaluate all three variants on "
                                                  "the same split");
    add_data_options(cmp_cmd, cmp_opts);
    add_model_options(cmp_cmd, cmp_opts, false);
    add_train_options(cmp_cmd, cmp_opts);
    add_out_option(cmp_cmd, cmp_opts.out, "Output directory (env HQNN_OUTPUT_DIR)");
    cmp_cmd->add_flag("-q,--quiet", cmp_opts.quiet, "No per-epoch progress");

    EvalOptions eval_opts;
    auto *eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint, exactly or with "
                                                "shot sampling and noise");
    eval_cmd->add_option("--checkpoint", eval_opts.checkpoint, "Checkpoint file")->required();
    eval_cmd->add_option("--data", eval_opts.data_path,
                         "Feature file overriding the one recorded in the checkpoint");
    eval_cmd->add_option("--subset", eval_opts.subset, "Which part of the split")
        ->capture_default_str()
        ->check(CLI::IsMember({"val", "train", "all"}));
    eval_cmd->add_option("--balanced", eval_opts.balanced,
                         "Keep N samples per class (seeded by --balanced-seed)");
    eval_cmd->add_option("--balanced-seed", eval_opts.balanced_seed, "Seed for --balanced")
        ->capture_default_str();
    eval_cmd->add_option("--shots", eval_opts.shots, "Shots per circuit; enables sampling")
        ->check(CLI::PositiveNumber);
    eval_cmd->add_option("--readout-flip", eval_opts.readout_flip,
                         "Per-qubit readout flip probability")
        ->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--depolarizing", eval_opts.depolarizing,
                         "Per-gate, per-qubit Pauli error probability")
        ->check(CLI::Range(0.0, 1.0));
    eval_cmd->add_option("--noise-seed", eval_opts.noise_seed, "Sampling seed")
        ->capture_default_str();
    eval_cmd->add_option("--out", eval_opts.out, "Write the JSON report here instead of stdout")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    eval_cmd->add_flag("--confusion", eval_opts.confusion, "Print the confusion matrix to stderr");

    GradcheckCli gc;
    auto *gc_cmd = app.add_subcommand("gradcheck", "Check the simulator against a dense oracle "
                                                   "and all gradients against each other");
    gc_cmd->add_option("--seed", gc.opts.seed)->capture_default_str();
    gc_cmd->add_option("--sim-trials", gc.opts.sim_trials)->capture_default_str();
    gc_cmd->add_option("--grad-trials", gc.opts.grad_trials)->capture_default_str();
    gc_cmd->add_option("--grad-qubits", gc.opts.grad_qubits)->capture_default_str();
    gc_cmd->add_option("--grad-layers", gc.opts.grad_layers)->capture_default_str();
    gc_cmd->add_option("--nn-trials", gc.opts.nn_trials)->capture_default_str();
    gc_cmd->add_option("--model-trials", gc.opts.model_trials)->capture_default_str();
    gc_cmd->add_option("--inject-fault", gc.fault, "Deliberately break the adjoint sweep")
        ->capture_default_str()
        ->check(CLI::IsMember({"none", "adjoint-sign"}));
    gc_cmd->add_option("--out", gc.out, "Also write a JSON report")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    RunOptions param_opts;
    std::size_t feature_dim = 2048;
    std::size_t classes = 8;
    auto *params_cmd = app.add_subcommand("params", "Parameter breakdown of the three variants");
    params_cmd->add_option("--feature-dim", feature_dim)->capture_default_str();
    params_cmd->add_option("--classes", classes)->capture_default_str();
    add_model_options(params_cmd, param_opts, false);

    std::size_t amp_qubits = 3, amp_layers = 1;
    std::uint64_t amp_seed = 0;
    auto *amp_cmd = app.add_subcommand("amplitudes", "Dump the final statevector of a random "
                                                     "circuit (debugging aid)");
    amp_cmd->add_option("--qubits", amp_qubits)->capture_default_str();
    amp_cmd->add_option("--q-layers", amp_layers)->capture_default_str();
    amp_cmd->add_option("--seed", amp_seed)->capture_default_str();

    RunOptions feat_opts;
    bool feat_binary = false;
    auto *feat_cmd = app.add_subcommand("make-features", "Write a synthetic feature file");
    feat_cmd->add_option("--synthetic", feat_opts.synthetic, "CLASSESxPER_CLASSxDIM")->required();
    feat_cmd->add_option("--separation", feat_opts.separation)->capture_default_str();
    feat_cmd->add_option("--seed", feat_opts.seed)->capture_default_str();
    feat_cmd->add_option("--out", feat_opts.out, "Output file")->required();
    feat_cmd->add_flag("--binary", feat_binary, "Binary instead of text format");

    std::string manifest_path, rerun_out;
    auto *rerun_cmd = app.add_subcommand("rerun", "Repeat the command recorded in a manifest");
    rerun_cmd->add_option("manifest", manifest_path, "manifest.json")->required();
    rerun_cmd->add_option("--out", rerun_out, "Redirect outputs to another directory");

    const auto original = args;
    try {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion &e) {
        return app.exit(e);
    } catch (const CLI::ParseError &e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (*train_cmd) {
            return cmd_train(train_opts, original);
        }
        if (*cmp_cmd) {
            return cmd_compare(cmp_opts, original);
        }
        if (*eval_cmd) {
            return cmd_eval(eval_opts);
        }
        if (*gc_cmd) {
            return cmd_gradcheck(gc);
        }
        if (*params_cmd) {
            return cmd_params(param_opts, feature_dim, classes);
        }
        if (*amp_cmd) {
            return cmd_amplitudes(amp_qubits, amp_layers, amp_seed);
        }
        if (*feat_cmd) {
            return cmd_make_features(feat_opts, feat_binary);
        }
        if (*rerun_cmd) {
            return cmd_rerun(manifest_path, rerun_out, depth);
        }
    } catch (const UsageError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const ArgumentError &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    } catch (const std::exception &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitFailure;
    }
    return kExitUsage;
}

} // namespace

int main(int argc, char **argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(std::move(args));
}
