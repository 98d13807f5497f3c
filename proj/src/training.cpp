#include "hybgnn/training.hpp"

#include "hybgnn/errors.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace hybgnn {

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + std::string(s) + "' (expected sgd or adam)");
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
    if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
    if (!(lambda >= 0.0)) throw ConfigError("lambda must be >= 0");
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate}, {"max_epochs", c.max_epochs}, {"batch_size", c.batch_size},
            {"lambda", c.lambda},               {"seed", c.seed},             {"optimizer", std::string(to_string(c.optimizer))}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        c.learning_rate = j.value("learning_rate", c.learning_rate);
        c.max_epochs = j.value("max_epochs", c.max_epochs);
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lambda = j.value("lambda", c.lambda);
        c.seed = j.value("seed", c.seed);
        if (j.contains("optimizer")) c.optimizer = parse_optimizer(j.at("optimizer").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    return c;
}

Var loss(const Var& probs, std::size_t label, std::span<const Var> assignments, double lambda) {
    if (label >= probs.value().size()) {
        throw ConfigError("loss: label " + std::to_string(label) + " out of range for " +
                          std::to_string(probs.value().size()) + " classes");
    }
    Var total = scale(log(slice(probs, 0, label, label + 1)), -1.0);
    if (lambda > 0.0) {
        for (const auto& r : assignments) total = sub(total, scale(sum_all(mul(r, log(r))), lambda));
    }
    return total;
}

double assignment_entropy(const Tensor& r) {
    double h = 0.0;
    for (double v : r.data()) h -= v * std::log(std::max(v, kLogFloor));
    return h;
}

double mean_row_entropy(const Tensor& r) { return assignment_entropy(r) / static_cast<double>(r.dim(0)); }

void Sgd::step(std::span<Var> params) {
    for (auto& p : params) {
        Tensor& v = p.mutable_value();
        const Tensor& g = p.grad();
        for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr_ * g[i];
    }
}

void Adam::step(std::span<Var> params) {
    if (m_.empty()) {
        for (const auto& p : params) {
            m_.emplace_back(p.shape());
            v_.emplace_back(p.shape());
        }
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor& value = params[k].mutable_value();
        const Tensor& g = params[k].grad();
        Tensor& m = m_[k];
        Tensor& v = v_[k];
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
        }
    }
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& config) {
    if (config.optimizer == OptimizerKind::sgd) return std::make_unique<Sgd>(config.learning_rate);
    return std::make_unique<Adam>(config.learning_rate);
}

Trainer::Trainer(Model& model, TrainConfig config)
    : model_(model), config_(config), params_(model.parameters()), optimizer_(make_optimizer(config)) {
    config_.validate();
}

EpochSummary Trainer::train_epoch(std::span<const EegSegment> shard) {
    if (shard.empty()) throw ConfigError("train_epoch: empty training shard");
    std::vector<std::size_t> order(shard.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(stream_seed(config_.seed, "shuffle", epoch_));
    rng.shuffle(order);

    EpochSummary summary;
    std::size_t batches = 0;
    std::size_t entropy_terms = 0;
    for (std::size_t start = 0; start < order.size(); start += config_.batch_size) {
        const std::size_t end = std::min(order.size(), start + config_.batch_size);
        const double inv_batch = 1.0 / static_cast<double>(end - start);
        zero_grad(params_);
        double batch_loss = 0.0;
        for (std::size_t i = start; i < end; ++i) {
            const EegSegment& seg = shard[order[i]];
            ForwardResult fr = model_.forward(seg.data());
            const auto assignments = fr.assignments();
            Var l = loss(fr.probs, static_cast<std::size_t>(seg.label), assignments, config_.lambda);
            const double value = l.value().item();
            if (!std::isfinite(value)) {
                std::ostringstream os;
                os << "non-finite loss in epoch " << epoch_ << ", batch " << batches << " (segment of subject '"
                   << seg.subject_id << "' at offset " << seg.offset << "); parameter norms:";
                for (const auto& np : model_.named_parameters()) os << ' ' << np.name << '=' << l2_norm(np.var.value());
                throw TrainingError(os.str());
            }
            batch_loss += value;
            for (const auto& r : assignments) {
                summary.mean_assignment_entropy += mean_row_entropy(r.value());
                ++entropy_terms;
            }
            backward(scale(l, inv_batch));
        }
        double sq = 0.0;
        for (const auto& p : params_)
            for (double g : p.grad().data()) sq += g * g;
        summary.grad_norm += std::sqrt(sq);
        summary.mean_loss += batch_loss * inv_batch;
        optimizer_->step(params_);
        ++batches;
    }
    summary.mean_loss /= static_cast<double>(batches);
    summary.grad_norm /= static_cast<double>(batches);
    if (entropy_terms) summary.mean_assignment_entropy /= static_cast<double>(entropy_terms);
    ++epoch_;
    return summary;
}

Metrics metrics_from_counts(std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
    Metrics m{tp, fp, fn, tn};
    const auto ratio = [](std::size_t num, std::size_t den) {
        return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    m.acc = ratio(tp + tn, m.total());
    m.rec = ratio(tp, tp + fn);
    m.pre = ratio(tp, tp + fp);
    m.f1 = (m.pre + m.rec) > 0.0 ? 2.0 * m.pre * m.rec / (m.pre + m.rec) : 0.0;
    return m;
}

nlohmann::json to_json(const Metrics& m) {
    return {{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn},
            {"acc", m.acc}, {"rec", m.rec}, {"pre", m.pre}, {"f1", m.f1}};
}

std::size_t predict(const Model& model, const Tensor& segment) {
    const ForwardResult fr = model.forward(segment);
    const Tensor& p = fr.probs.value();
    return p[1] > p[0] ? 1 : 0;
}

Metrics evaluate(const Model& model, std::span<const EegSegment> shard) {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& seg : shard) {
        const bool predicted_mdd = predict(model, seg.data()) == 1;
        const bool actual_mdd = seg.label == Label::mdd;
        if (predicted_mdd && actual_mdd) ++tp;
        else if (predicted_mdd) ++fp;
        else if (actual_mdd) ++fn;
        else ++tn;
    }
    return metrics_from_counts(tp, fp, fn, tn);
}

}  // namespace hybgnn
