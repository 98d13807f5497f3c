#pragma once

#include "hybgnn/data.hpp"
#include "hybgnn/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace hybgnn {

enum class OptimizerKind { sgd, adam };

std::string_view to_string(OptimizerKind k);
OptimizerKind parse_optimizer(std::string_view s);

struct TrainConfig {
    double learning_rate = 0.005;
    std::size_t max_epochs = 25;
    std::size_t batch_size = 128;
    double lambda = 1e-5;
    std::uint64_t seed = 0;
    OptimizerKind optimizer = OptimizerKind::adam;

    void validate() const;
};

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Cross-entropy on one sample plus lambda * the summed row entropies of every
// assignment matrix:
//   -log p[label] - lambda * sum_R sum_ij R_ij log R_ij
Var loss(const Var& probs, std::size_t label, std::span<const Var> assignments, double lambda);

// Sum over rows of -sum_j R_ij log R_ij.
double assignment_entropy(const Tensor& r);
// Same, averaged over rows.
double mean_row_entropy(const Tensor& r);

class Optimizer {
public:
    virtual ~Optimizer() = default;
    // Applies one update from the accumulated grads.
    virtual void step(std::span<Var> params) = 0;
};

class Sgd final : public Optimizer {
public:
    explicit Sgd(double lr) : lr_(lr) {}
    void step(std::span<Var> params) override;

private:
    double lr_;
};

class Adam final : public Optimizer {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(std::span<Var> params) override;

private:
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
    std::vector<Tensor> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& config);

struct EpochSummary {
    double mean_loss = 0.0;
    // Mean over batches of the L2 norm of the batch gradient.
    double grad_norm = 0.0;
    // Mean row entropy of the assignment matrices seen this epoch (0 without pooling).
    double mean_assignment_entropy = 0.0;

    friend bool operator==(const EpochSummary&, const EpochSummary&) = default;
};

// Owns the optimizer state for one model.
class Trainer {
public:
    Trainer(Model& model, TrainConfig config);

    // One pass over shuffled mini-batches. The shuffle of epoch e is drawn from
    // the "shuffle" stream of config.seed, so runs are reproducible.
    // Throws TrainingError on a non-finite loss.
    EpochSummary train_epoch(std::span<const EegSegment> shard);

    std::size_t epochs_done() const { return epoch_; }

private:
    Model& model_;
    TrainConfig config_;
    std::vector<Var> params_;
    std::unique_ptr<Optimizer> optimizer_;
    std::size_t epoch_ = 0;
};

struct Metrics {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    double acc = 0.0, rec = 0.0, pre = 0.0, f1 = 0.0;

    std::size_t total() const { return tp + fp + fn + tn; }
    friend bool operator==(const Metrics&, const Metrics&) = default;
};

// Rates from counts; pre/rec/f1 are 0 when their denominators are 0.
Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn);

nlohmann::json to_json(const Metrics& m);

std::size_t predict(const Model& model, const Tensor& segment);
Metrics evaluate(const Model& model, std::span<const EegSegment> shard);

}  // namespace hybgnn
