#pragma once

// Command implementations behind the hybgnn tool. Each command reads a
// RunConfig, writes its artifacts under output_dir and returns the in-memory
// results as well.

#include "hybgnn/cv.hpp"

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace hybgnn {

// Per-dataset hyperparameters. "modma": SGD, lr 0.09, 100 epochs, N_r 5,
// 75% overlap. "husm": Adam, lr 0.001, 60 epochs, N_r 4, no overlap.
struct Preset {
    std::string name;
    OptimizerKind optimizer;
    double learning_rate;
    std::size_t max_epochs;
    std::size_t regions;
    double overlap;
};

const std::vector<Preset>& presets();
const Preset& find_preset(std::string_view name);  // throws ConfigError

struct DatasetSource {
    std::string name;
    std::filesystem::path manifest;
    std::string preset;  // empty: use the run-level preset
};

struct RunConfig {
    ModelConfig model;
    TrainConfig train;
    // No datasets means the synthetic generator, seeded from train.seed.
    std::vector<DatasetSource> datasets;
    SynthSpec synth;
    double window_seconds = 4.0;
    double overlap = 0.0;
    std::string preset;
    std::size_t folds = 10;
    std::size_t folds_parallel = 1;
    std::filesystem::path output_dir = "out";

    std::string sweep_param = "n_regions";
    std::vector<double> sweep_values;  // empty: default grid for sweep_param

    std::filesystem::path params_path;
    bool export_graphs = false;

    // Applied last, after any preset; same schema as the config file.
    // The tool puts explicit command-line flags here.
    nlohmann::json overrides = nlohmann::json::object();

    void validate() const;
};

nlohmann::json to_json(const RunConfig& c);
// Unknown keys are rejected so typos surface as configuration errors.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Effective configuration for one data source: presets applied, then
// overrides. `source` is null for synthetic data.
RunConfig resolve(const RunConfig& c, const DatasetSource* source);

std::vector<double> default_sweep_values(std::string_view param);

struct LoadedData {
    std::string name;
    RunConfig config;  // resolved, model.channels taken from the data
    std::vector<Recording> recordings;
    Dataset dataset;
};

// One entry per configured dataset, or a single synthetic one.
std::vector<LoadedData> load_data(const RunConfig& c);

using Logger = std::function<void(const std::string&)>;

struct TrainOutcome {
    std::vector<EpochSummary> history;
    Metrics metrics;  // on the training data after the final epoch
};

struct CvOutcome {
    std::string dataset;
    RunConfig config;
    FoldReport report;
};

struct SweepRow {
    double value;
    double mean_acc;
    double std_acc;
};

struct EvalOutcome {
    Metrics metrics;
    std::size_t exported_samples = 0;
};

// Writes params.bin, train_log.csv, metrics.json and config.json.
TrainOutcome cmd_train(const RunConfig& c, const Logger& log = {});
// Writes report.json and report.txt.
std::vector<CvOutcome> cmd_cv(const RunConfig& c, const Logger& log = {});
// Writes ablation.json and ablation.txt.
std::vector<std::vector<CvOutcome>> cmd_ablation(const RunConfig& c, const Logger& log = {});
// Writes sweep_<dataset>.csv, sweep.json and sweep.txt.
std::vector<std::vector<SweepRow>> cmd_sweep(const RunConfig& c, const Logger& log = {});
// Writes metrics.json, predictions.csv and, if requested, graphs/.
EvalOutcome cmd_eval(const RunConfig& c, const Logger& log = {});
// Writes manifest.json and the signal files.
std::filesystem::path cmd_synth(const RunConfig& c, const Logger& log = {});

// Table with one row per method and ACC/REC/PRE/F1 columns per dataset.
std::string format_comparison(const std::vector<std::string>& row_names, const std::vector<std::string>& datasets,
                              const std::vector<std::vector<MetricSummary>>& cells,
                              const std::vector<std::vector<MetricSummary>>& stddev);

// Plain-text matrix: one row per line, space separated, 17 significant digits.
std::string format_matrix(const Tensor& m);
Tensor parse_matrix(const std::string& text);

// Writes via a temporary sibling and rename.
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace hybgnn
