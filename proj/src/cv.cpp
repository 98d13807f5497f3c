#include "hybgnn/cv.hpp"

#include "hybgnn/errors.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <thread>

namespace hybgnn {

std::vector<std::vector<std::string>> partition_subjects(std::vector<std::string> subjects, std::size_t folds,
                                                         std::uint64_t seed) {
    if (folds == 0) throw ConfigError("cross-validation needs at least one fold");
    if (subjects.size() < folds) {
        throw ConfigError("cross-validation needs at least " + std::to_string(folds) + " subjects, got " +
                          std::to_string(subjects.size()));
    }
    Rng rng(stream_seed(seed, "cv_partition"));
    rng.shuffle(subjects);
    std::vector<std::vector<std::string>> groups(folds);
    const std::size_t base = subjects.size() / folds, extra = subjects.size() % folds;
    std::size_t next = 0;
    for (std::size_t k = 0; k < folds; ++k) {
        const std::size_t size = base + (k < extra ? 1 : 0);
        groups[k].assign(subjects.begin() + next, subjects.begin() + next + size);
        next += size;
    }
    return groups;
}

namespace {

FoldResult run_fold(const Dataset& dataset, const std::vector<std::vector<std::string>>& groups, std::size_t k,
                    const ModelConfig& model_config, const TrainConfig& train_config) {
    FoldResult r;
    r.fold = k;
    r.test_subjects = groups[k];
    const std::set<std::string> test(r.test_subjects.begin(), r.test_subjects.end());
    for (std::size_t g = 0; g < groups.size(); ++g)
        if (g != k) r.train_subjects.insert(r.train_subjects.end(), groups[g].begin(), groups[g].end());

    std::vector<EegSegment> train_shard, test_shard;
    for (const auto& s : dataset.segments) (test.count(s.subject_id) ? test_shard : train_shard).push_back(s);
    r.train_segments = train_shard.size();
    r.test_segments = test_shard.size();

    const std::uint64_t fold_seed = stream_seed(train_config.seed, "fold", k);
    Model model(model_config, fold_seed);
    TrainConfig tc = train_config;
    tc.seed = fold_seed;
    Trainer trainer(model, tc);
    for (std::size_t e = 0; e < tc.max_epochs; ++e) r.history.push_back(trainer.train_epoch(train_shard));
    r.metrics = evaluate(model, test_shard);
    return r;
}

}  // namespace

FoldReport cross_validate(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                          const CvOptions& options) {
    model_config.validate();
    train_config.validate();
    if (dataset.channels != model_config.channels) {
        throw ConfigError("dataset has " + std::to_string(dataset.channels) + " channels but the model expects " +
                          std::to_string(model_config.channels));
    }
    const auto groups = partition_subjects(dataset.subjects, options.folds, train_config.seed);

    FoldReport report;
    report.folds.resize(options.folds);
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (std::size_t k = next++; k < options.folds; k = next++) {
            try {
                FoldResult r = run_fold(dataset, groups, k, model_config, train_config);
                std::lock_guard lock(mu);
                if (options.on_fold_done) options.on_fold_done(r);
                report.folds[k] = std::move(r);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
                next = options.folds;
            }
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min(options.parallel, options.folds));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
    summarize(report);
    return report;
}

FoldReport ten_fold_cv(const Dataset& dataset, const ModelConfig& model_config, const TrainConfig& train_config,
                       std::size_t parallel) {
    CvOptions opts;
    opts.folds = 10;
    opts.parallel = parallel;
    return cross_validate(dataset, model_config, train_config, opts);
}

void summarize(FoldReport& report) {
    const auto n = static_cast<double>(report.folds.size());
    MetricSummary mean, var;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& f : report.folds) {
        mean.acc += f.metrics.acc / n;
        mean.rec += f.metrics.rec / n;
        mean.pre += f.metrics.pre / n;
        mean.f1 += f.metrics.f1 / n;
        tp += f.metrics.tp;
        fp += f.metrics.fp;
        fn += f.metrics.fn;
        tn += f.metrics.tn;
    }
    for (const auto& f : report.folds) {
        var.acc += (f.metrics.acc - mean.acc) * (f.metrics.acc - mean.acc);
        var.rec += (f.metrics.rec - mean.rec) * (f.metrics.rec - mean.rec);
        var.pre += (f.metrics.pre - mean.pre) * (f.metrics.pre - mean.pre);
        var.f1 += (f.metrics.f1 - mean.f1) * (f.metrics.f1 - mean.f1);
    }
    const double dof = n > 1 ? n - 1 : 1;
    report.mean = mean;
    report.stddev = {std::sqrt(var.acc / dof), std::sqrt(var.rec / dof), std::sqrt(var.pre / dof),
                     std::sqrt(var.f1 / dof)};
    report.pooled = metrics_from_counts(tp, fp, fn, tn);
}

nlohmann::json to_json(const FoldReport& report) {
    auto summary = [](const MetricSummary& s) {
        return nlohmann::json{{"acc", s.acc}, {"rec", s.rec}, {"pre", s.pre}, {"f1", s.f1}};
    };
    nlohmann::json folds = nlohmann::json::array();
    for (const auto& f : report.folds) {
        nlohmann::json history = nlohmann::json::array();
        for (const auto& h : f.history) {
            history.push_back({{"mean_loss", h.mean_loss}, {"grad_norm", h.grad_norm},
                               {"mean_assignment_entropy", h.mean_assignment_entropy}});
        }
        folds.push_back({{"fold", f.fold},
                         {"train_subjects", f.train_subjects},
                         {"test_subjects", f.test_subjects},
                         {"train_segments", f.train_segments},
                         {"test_segments", f.test_segments},
                         {"metrics", to_json(f.metrics)},
                         {"history", history}});
    }
    return {{"folds", folds}, {"mean", summary(report.mean)}, {"std", summary(report.stddev)},
            {"pooled", to_json(report.pooled)}};
}

std::string format_table(const FoldReport& report) {
    std::string out;
    char line[128];
    std::snprintf(line, sizeof line, "%-6s %8s %8s %8s %8s\n", "fold", "ACC", "REC", "PRE", "F1");
    out += line;
    for (const auto& f : report.folds) {
        std::snprintf(line, sizeof line, "%-6zu %8.4f %8.4f %8.4f %8.4f\n", f.fold, f.metrics.acc, f.metrics.rec,
                      f.metrics.pre, f.metrics.f1);
        out += line;
    }
    std::snprintf(line, sizeof line, "%-6s %8.4f %8.4f %8.4f %8.4f\n", "mean", report.mean.acc, report.mean.rec,
                  report.mean.pre, report.mean.f1);
    out += line;
    std::snprintf(line, sizeof line, "%-6s %8.4f %8.4f %8.4f %8.4f\n", "std", report.stddev.acc, report.stddev.rec,
                  report.stddev.pre, report.stddev.f1);
    out += line;
    std::snprintf(line, sizeof line, "%-6s %8.4f %8.4f %8.4f %8.4f\n", "pooled", report.pooled.acc, report.pooled.rec,
                  report.pooled.pre, report.pooled.f1);
    out += line;
    return out;
}

}  // namespace hybgnn
