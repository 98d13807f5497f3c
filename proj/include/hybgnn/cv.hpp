#pragma once

#include "hybgnn/training.hpp"

#include <functional>
#include <string>
#include <vector>

namespace hybgnn {

// Seeded shuffle of `subjects` split into `folds` groups whose sizes differ
// by at most one. Throws ConfigError when there are fewer subjects than folds.
std::vector<std::vector<std::string>> partition_subjects(std::vector<std::string> subjects, std::size_t folds,
                                                         std::uint64_t seed);

struct FoldResult {
    std::size_t fold = 0;
    std::vector<std::string> train_subjects;
    std::vector<std::string> test_subjects;
    std::size_t train_segments = 0;
    std::size_t test_segments = 0;
    Metrics metrics;
    std::vector<EpochSummary> history;
};

struct MetricSummary {
    double acc = 0.0, rec = 0.0, pre = 0.0, f1 = 0.0;
};

struct FoldReport {
    std::vector<FoldResult> folds;
    MetricSummary mean;
    MetricSummary stddev;  // sample standard deviation across folds
    Metrics pooled;        // counts summed over every test segment
};

struct CvOptions {
    std::size_t folds = 10;
    // Worker threads; folds are independent so results do not depend on this.
    std::size_t parallel = 1;
    std::function<void(const FoldResult&)> on_fold_done;
};

FoldReport cross_validate(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                          const CvOptions& options = {});

// Ten folds, subject-exclusive.
FoldReport ten_fold_cv(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                       std::size_t parallel = 1);

void summarize(FoldReport& report);
nlohmann::json to_json(const FoldReport& report);
// Fixed-width table: fold, ACC, REC, PRE, F1, then mean and std rows.
std::string format_table(const FoldReport& report);

}  // namespace hybgnn
