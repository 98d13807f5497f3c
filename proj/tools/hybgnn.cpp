// hybgnn command-line tool: train, cv, ablation, sweep, eval, synth.
//
// Configuration comes from an optional JSON file (--config); explicit flags
// override it, and override any preset as well. Exit status: 0 on success,
// 1 on a runtime failure, 2 on a configuration or I/O error.

#include "hybgnn/app.hpp"
#include "hybgnn/errors.hpp"
#include "hybgnn/params_io.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace hybgnn;

struct Flags {
    std::string config;
    std::optional<std::string> out;
    std::optional<std::string> preset;
    std::vector<std::string> datasets;
    bool synth = false;
    std::optional<std::size_t> synth_subjects, channels;
    std::optional<double> synth_seconds, synth_fs;
    std::optional<double> window, overlap;

    std::optional<std::string> variant, optimizer;
    std::optional<std::size_t> regions, gcn_steps, region_steps, out_dim, projection_dim, hidden;
    std::optional<double> lr, lambda;
    std::optional<std::size_t> epochs, batch_size, folds, folds_parallel;
    std::optional<std::uint64_t> seed;

    std::optional<std::string> param;
    std::optional<std::string> values;
    std::optional<std::string> params;
    bool export_graphs = false;
    bool quiet = false;
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("-c,--config", f.config, "JSON run configuration");
    cmd->add_option("-o,--out", f.out, "Output directory (default: out)");
    cmd->add_option("--preset", f.preset, "Hyperparameter preset: modma or husm");
    cmd->add_option("--dataset", f.datasets, "Dataset as NAME=MANIFEST[:PRESET]; repeatable");
    cmd->add_flag("--synth", f.synth, "Use the synthetic generator even if the config lists datasets");
    cmd->add_option("--synth-subjects", f.synth_subjects, "Synthetic subjects per class (default 20)");
    cmd->add_option("--synth-seconds", f.synth_seconds, "Synthetic seconds per subject (default 60)");
    cmd->add_option("--synth-fs", f.synth_fs, "Synthetic sampling rate in Hz (default 256)");
    cmd->add_option("--channels", f.channels, "Synthetic channel count (default 19)");
    cmd->add_option("--window", f.window, "Window length in seconds (default 4)");
    cmd->add_option("--overlap", f.overlap, "Window overlap fraction in [0, 1) (default 0)");
    cmd->add_option("--seed", f.seed, "Root seed (default 0)");
    cmd->add_flag("-q,--quiet", f.quiet, "No progress output");
}

void add_model_train(CLI::App* cmd, Flags& f) {
    cmd->add_option("--variant", f.variant, "a, b, c, d, e or full (default full)");
    cmd->add_option("--regions", f.regions, "Number of regions N_r (default 5)");
    cmd->add_option("--gcn-steps", f.gcn_steps, "Graph convolution steps L (default 2)");
    cmd->add_option("--region-steps", f.region_steps, "Region convolution steps L' (default 1)");
    cmd->add_option("--out-dim", f.out_dim, "Graph output width d (default 16)");
    cmd->add_option("--projection-dim", f.projection_dim, "Adjacency projection width F_m (default 16)");
    cmd->add_option("--hidden", f.hidden, "Classifier hidden width, 0 for none (default 0)");
    cmd->add_option("--lr", f.lr, "Learning rate (default 0.005)");
    cmd->add_option("--epochs", f.epochs, "Epochs (default 25)");
    cmd->add_option("--batch-size", f.batch_size, "Batch size (default 128)");
    cmd->add_option("--lambda", f.lambda, "Entropy regularization coefficient (default 1e-5)");
    cmd->add_option("--optimizer", f.optimizer, "sgd or adam (default adam)");
}

void add_cv(CLI::App* cmd, Flags& f) {
    cmd->add_option("--folds", f.folds, "Cross-validation folds (default 10)");
    cmd->add_option("--folds-parallel", f.folds_parallel, "Folds trained concurrently (default 1)");
}

std::vector<double> parse_values(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError("--values: cannot parse '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("--values is empty");
    return out;
}

DatasetSource parse_dataset(const std::string& s) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--dataset expects NAME=MANIFEST[:PRESET], got '" + s + "'");
    DatasetSource d;
    d.name = s.substr(0, eq);
    std::string rest = s.substr(eq + 1);
    const auto colon = rest.rfind(':');
    if (colon != std::string::npos) {
        const std::string tail = rest.substr(colon + 1);
        for (const auto& p : presets()) {
            if (p.name == tail) {
                d.preset = tail;
                rest = rest.substr(0, colon);
                break;
            }
        }
    }
    d.manifest = rest;
    return d;
}

RunConfig build_config(const Flags& f) {
    RunConfig c = f.config.empty() ? RunConfig{} : load_run_config(f.config);
    if (f.out) c.output_dir = *f.out;
    if (f.preset) c.preset = *f.preset;
    if (!f.datasets.empty()) {
        c.datasets.clear();
        for (const auto& d : f.datasets) c.datasets.push_back(parse_dataset(d));
    }
    if (f.synth) c.datasets.clear();
    if (f.synth_subjects) c.synth.subjects_per_class = *f.synth_subjects;
    if (f.synth_seconds) c.synth.seconds_per_subject = *f.synth_seconds;
    if (f.synth_fs) c.synth.sampling_rate = *f.synth_fs;
    if (f.channels) c.synth.channels = *f.channels;
    if (f.window) c.window_seconds = *f.window;
    if (f.folds) c.folds = *f.folds;
    if (f.folds_parallel) c.folds_parallel = *f.folds_parallel;
    if (f.param) c.sweep_param = *f.param;
    if (f.values) c.sweep_values = parse_values(*f.values);
    if (f.params) c.params_path = *f.params;
    if (f.export_graphs) c.export_graphs = true;

    // Fields a preset may set go through the override layer so flags win.
    nlohmann::json& o = c.overrides;
    if (f.overlap) o["data"]["overlap"] = *f.overlap;
    if (f.variant) o["model"]["variant"] = *f.variant;
    if (f.regions) o["model"]["regions"] = *f.regions;
    if (f.gcn_steps) o["model"]["gcn_steps"] = *f.gcn_steps;
    if (f.region_steps) o["model"]["region_steps"] = *f.region_steps;
    if (f.out_dim) o["model"]["out_dim"] = *f.out_dim;
    if (f.projection_dim) o["model"]["projection_dim"] = *f.projection_dim;
    if (f.hidden) o["model"]["classifier_hidden"] = *f.hidden;
    if (f.lr) o["train"]["learning_rate"] = *f.lr;
    if (f.epochs) o["train"]["max_epochs"] = *f.epochs;
    if (f.batch_size) o["train"]["batch_size"] = *f.batch_size;
    if (f.lambda) o["train"]["lambda"] = *f.lambda;
    if (f.optimizer) o["train"]["optimizer"] = *f.optimizer;
    if (f.seed) c.train.seed = *f.seed;
    c.validate();
    resolve(c, nullptr).validate();
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hybrid graph neural network for EEG depression detection"};
    app.require_subcommand(1);
    Flags f;

    auto* train = app.add_subcommand("train", "Train one model on the whole dataset");
    auto* cv = app.add_subcommand("cv", "Subject-exclusive cross-validation");
    auto* ablation = app.add_subcommand("ablation", "Cross-validate every model variant");
    auto* sweep = app.add_subcommand("sweep", "Cross-validate over a hyperparameter grid");
    auto* eval = app.add_subcommand("eval", "Evaluate a saved model");
    auto* synth = app.add_subcommand("synth", "Write a synthetic dataset in the manifest format");

    for (auto* cmd : {train, cv, ablation, sweep, eval, synth}) add_common(cmd, f);
    for (auto* cmd : {train, cv, ablation, sweep}) add_model_train(cmd, f);
    for (auto* cmd : {cv, ablation, sweep}) add_cv(cmd, f);
    sweep->add_option("--param", f.param, "n_regions or lambda (default n_regions)");
    sweep->add_option("--values", f.values, "Comma-separated values (default grid per parameter)");
    eval->add_option("--params", f.params, "Parameter file written by train")->required();
    eval->add_flag("--export-graphs", f.export_graphs, "Write per-sample A_I and R plus the trained A_C");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const Logger log = [&f](const std::string& line) {
        if (!f.quiet) std::cerr << line << '\n';
    };
    try {
        const RunConfig c = build_config(f);
        if (train->parsed()) {
            cmd_train(c, log);
        } else if (cv->parsed()) {
            for (const auto& o : cmd_cv(c, log)) std::cout << "== " << o.dataset << " ==\n" << format_table(o.report);
        } else if (ablation->parsed()) {
            cmd_ablation(c, log);
            std::cout << std::ifstream(c.output_dir / "ablation.txt").rdbuf();
        } else if (sweep->parsed()) {
            cmd_sweep(c, log);
            std::cout << std::ifstream(c.output_dir / "sweep.txt").rdbuf();
        } else if (eval->parsed()) {
            const auto out = cmd_eval(c, log);
            std::cout << to_json(out.metrics).dump(2) << '\n';
        } else if (synth->parsed()) {
            std::cout << cmd_synth(c, log).string() << '\n';
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DatasetError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 2;
    } catch (const ParamsFileError& e) {
        std::cerr << "parameter file error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
