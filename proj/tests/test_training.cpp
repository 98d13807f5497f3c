#include "hybgnn/cv.hpp"
#include "hybgnn/errors.hpp"
#include "hybgnn/training.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

using namespace hybgnn;
using oracle::random_tensor;

namespace {

Dataset small_dataset(std::uint64_t seed, std::size_t per_class = 4) {
    const auto recs = synth_generate(
        {.subjects_per_class = per_class, .seconds_per_subject = 12, .channels = 19, .sampling_rate = 64, .seed = seed});
    return build_dataset(recs, 4, 0);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
}

std::vector<std::string> names(std::size_t n) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("s" + std::to_string(1000 + i));
    return out;
}

}  // namespace

TEST(Loss, CrossEntropyOnly) {
    const Var probs = constant(Tensor({2}, {0.25, 0.75}));
    EXPECT_NEAR(loss(probs, 1, {}, 0.0).value()[0], -std::log(0.75), 1e-15);
    EXPECT_NEAR(loss(probs, 0, {}, 0.0).value()[0], -std::log(0.25), 1e-15);
}

TEST(Loss, UniformAssignmentEntropy) {
    const Var probs = constant(Tensor({2}, {0.4, 0.6}));
    for (std::size_t n : {1u, 5u, 19u})
        for (std::size_t nr : {1u, 2u, 5u}) {
            Tensor r({n, nr}, 1.0 / static_cast<double>(nr));
            const std::vector<Var> rs{constant(r)};
            const double lambda = 1e-3;
            const double reg = loss(probs, 0, rs, lambda).value()[0] - loss(probs, 0, {}, 0.0).value()[0];
            EXPECT_NEAR(reg, lambda * static_cast<double>(n) * std::log(static_cast<double>(nr)), 1e-12);
            EXPECT_NEAR(assignment_entropy(r), static_cast<double>(n) * std::log(static_cast<double>(nr)), 1e-12);
            EXPECT_NEAR(mean_row_entropy(r), std::log(static_cast<double>(nr)), 1e-12);
        }
}

TEST(Loss, OneHotAssignmentHasNoPenalty) {
    const Var probs = constant(Tensor({2}, {0.4, 0.6}));
    const std::vector<Var> rs{constant(Tensor::matrix({{1, 0}, {0, 1}, {1, 0}}))};
    EXPECT_NEAR(loss(probs, 1, rs, 1.0).value()[0], -std::log(0.6), 1e-9);
}

TEST(Metrics, WorkedExample) {
    const Metrics m = metrics_from_counts(50, 10, 5, 35);
    EXPECT_NEAR(m.acc, 0.85, 1e-4);
    EXPECT_NEAR(m.rec, 0.9091, 1e-4);
    EXPECT_NEAR(m.pre, 0.8333, 1e-4);
    EXPECT_NEAR(m.f1, 0.8696, 1e-4);
    EXPECT_EQ(m.total(), 100u);
}

TEST(Metrics, MatchesDefinitions) {
    Rng rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t tp = rng.below(30), fp = rng.below(30), fn = rng.below(30), tn = 1 + rng.below(30);
        const Metrics m = metrics_from_counts(tp, fp, fn, tn);
        const double t = static_cast<double>(tp + fp + fn + tn);
        EXPECT_DOUBLE_EQ(m.acc, static_cast<double>(tp + tn) / t);
        const double pre = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
        EXPECT_DOUBLE_EQ(m.pre, pre);
        EXPECT_DOUBLE_EQ(m.rec, rec);
        EXPECT_NEAR(m.f1, pre + rec > 0 ? 2 * pre * rec / (pre + rec) : 0.0, 1e-15);
    }
}

TEST(Metrics, ZeroDenominators) {
    const Metrics m = metrics_from_counts(0, 0, 0, 10);
    EXPECT_EQ(m.acc, 1.0);
    EXPECT_EQ(m.pre, 0.0);
    EXPECT_EQ(m.rec, 0.0);
    EXPECT_EQ(m.f1, 0.0);
}

TEST(Partition, FiftyThreeSubjects) {
    const auto folds = partition_subjects(names(53), 10, 7);
    ASSERT_EQ(folds.size(), 10u);
    for (const auto& f : folds) EXPECT_TRUE(f.size() == 5 || f.size() == 6) << f.size();
}

TEST(Partition, Properties) {
    Rng rng(2);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 10 + rng.below(60);
        const auto subjects = names(n);
        const auto folds = partition_subjects(subjects, 10, rng.next_u64());
        std::multiset<std::string> seen;
        std::size_t lo = n, hi = 0;
        for (const auto& f : folds) {
            seen.insert(f.begin(), f.end());
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
        }
        EXPECT_EQ(seen, std::multiset<std::string>(subjects.begin(), subjects.end()));
        EXPECT_LE(hi - lo, 1u);
    }
}

TEST(Partition, DeterministicAndSeedSensitive) {
    EXPECT_EQ(partition_subjects(names(40), 10, 3), partition_subjects(names(40), 10, 3));
    EXPECT_NE(partition_subjects(names(40), 10, 3), partition_subjects(names(40), 10, 4));
}

TEST(Partition, TooFewSubjects) {
    EXPECT_THROW(partition_subjects(names(9), 10, 0), ConfigError);
    EXPECT_THROW(partition_subjects(names(5), 0, 0), ConfigError);
}

TEST(TrainConfig, Validation) {
    TrainConfig c;
    c.learning_rate = -0.1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.batch_size = 0;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.lambda = -1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = TrainConfig{};
    c.learning_rate = 0.0;
    EXPECT_NO_THROW(c.validate());
    EXPECT_THROW(parse_optimizer("rmsprop"), ConfigError);
    TrainConfig j;
    j.optimizer = OptimizerKind::sgd;
    j.lambda = 3e-4;
    const TrainConfig back = train_config_from_json(to_json(j));
    EXPECT_EQ(back.optimizer, j.optimizer);
    EXPECT_EQ(back.lambda, j.lambda);
}

TEST(Optimizers, SgdStep) {
    Var p = parameter(Tensor({2}, {1.0, -2.0}));
    p.mutable_grad() = Tensor({2}, {0.5, 0.25});
    std::vector<Var> ps{p};
    Sgd(0.1).step(ps);
    EXPECT_NEAR(p.value()[0], 0.95, 1e-15);
    EXPECT_NEAR(p.value()[1], -2.025, 1e-15);
}

TEST(Optimizers, AdamFirstStepIsSignTimesLr) {
    Var p = parameter(Tensor({3}, {1.0, -2.0, 0.5}));
    p.mutable_grad() = Tensor({3}, {0.5, -3.0, 1e-3});
    std::vector<Var> ps{p};
    Adam(0.01).step(ps);
    EXPECT_NEAR(p.value()[0], 0.99, 1e-9);
    EXPECT_NEAR(p.value()[1], -1.99, 1e-9);
    EXPECT_NEAR(p.value()[2], 0.49, 1e-7);
}

TEST(Trainer, ZeroLearningRateKeepsParameters) {
    const Dataset ds = small_dataset(1, 2);
    for (OptimizerKind opt : {OptimizerKind::sgd, OptimizerKind::adam}) {
        Model m(ModelConfig{}, 1);
        const Model before = m.clone();
        TrainConfig tc;
        tc.learning_rate = 0.0;
        tc.optimizer = opt;
        Trainer(m, tc).train_epoch(ds.segments);
        const auto a = m.named_parameters(), b = before.named_parameters();
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].var.value(), b[i].var.value()) << a[i].name;
    }
}

TEST(Trainer, Deterministic) {
    const Dataset ds = small_dataset(2, 2);
    TrainConfig tc;
    tc.batch_size = 8;
    tc.seed = 5;
    auto run = [&] {
        Model m(ModelConfig{}, 3);
        Trainer t(m, tc);
        std::vector<EpochSummary> h;
        for (int e = 0; e < 2; ++e) h.push_back(t.train_epoch(ds.segments));
        return std::pair{h, m.params().head.weight.value()};
    };
    const auto [h1, w1] = run();
    const auto [h2, w2] = run();
    EXPECT_EQ(h1, h2);
    EXPECT_EQ(w1, w2);
}

TEST(Trainer, LossDecreasesOverFirstEpochs) {
    // Default generator settings and default training config.
    const auto recs = synth_generate({.seed = 3});
    const Dataset ds = build_dataset(recs, 4, 0);
    std::vector<std::vector<double>> per_epoch(5);
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Model m(ModelConfig{}, seed);
        TrainConfig tc;
        tc.seed = seed;
        Trainer t(m, tc);
        for (std::size_t e = 0; e < 5; ++e) per_epoch[e].push_back(t.train_epoch(ds.segments).mean_loss);
    }
    for (std::size_t e = 1; e < 5; ++e) EXPECT_LT(median(per_epoch[e]), median(per_epoch[e - 1])) << "epoch " << e;
}

TEST(Trainer, NonFiniteLossIsReported) {
    const Dataset ds = small_dataset(4, 1);
    Model m(ModelConfig{}, 4);
    m.params().head.weight.mutable_value().fill(std::numeric_limits<double>::quiet_NaN());
    Trainer t(m, TrainConfig{});
    EXPECT_THROW(t.train_epoch(ds.segments), TrainingError);
}

TEST(Trainer, EntropySummaryOnlyWithPooling) {
    const Dataset ds = small_dataset(5, 1);
    Model a(ModelConfig{.variant = Variant::c}, 5);
    EXPECT_EQ(Trainer(a, TrainConfig{}).train_epoch(ds.segments).mean_assignment_entropy, 0.0);
    Model full(ModelConfig{}, 5);
    const double h = Trainer(full, TrainConfig{}).train_epoch(ds.segments).mean_assignment_entropy;
    EXPECT_GT(h, 0.0);
    EXPECT_LE(h, std::log(5.0) + 1e-12);
}

TEST(Evaluate, CountsMatchPredictions) {
    const Dataset ds = small_dataset(6, 2);
    const Model m(ModelConfig{}, 6);
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (const auto& s : ds.segments) {
        const bool pred = predict(m, s.data()) == 1, truth = s.label == Label::mdd;
        (pred ? (truth ? tp : fp) : (truth ? fn : tn)) += 1;
    }
    EXPECT_EQ(evaluate(m, ds.segments), metrics_from_counts(tp, fp, fn, tn));
}

TEST(CrossValidate, SubjectExclusiveFolds) {
    const Dataset ds = small_dataset(7, 5);
    TrainConfig tc;
    tc.max_epochs = 1;
    const FoldReport r = cross_validate(ds, ModelConfig{}, tc, {.folds = 5, .parallel = 1, .on_fold_done = {}});
    ASSERT_EQ(r.folds.size(), 5u);
    std::size_t tested = 0;
    for (const auto& f : r.folds) {
        for (const auto& s : f.test_subjects)
            EXPECT_EQ(std::find(f.train_subjects.begin(), f.train_subjects.end(), s), f.train_subjects.end());
        EXPECT_EQ(f.train_subjects.size() + f.test_subjects.size(), 10u);
        EXPECT_EQ(f.metrics.total(), f.test_segments);
        tested += f.test_segments;
    }
    EXPECT_EQ(tested, ds.segments.size());
    EXPECT_EQ(r.pooled.total(), ds.segments.size());
}

TEST(CrossValidate, ParallelMatchesSerial) {
    const Dataset ds = small_dataset(8, 5);
    TrainConfig tc;
    tc.max_epochs = 1;
    const FoldReport serial = cross_validate(ds, ModelConfig{}, tc, {.folds = 5, .parallel = 1, .on_fold_done = {}});
    const FoldReport parallel = cross_validate(ds, ModelConfig{}, tc, {.folds = 5, .parallel = 3, .on_fold_done = {}});
    EXPECT_EQ(to_json(serial).dump(), to_json(parallel).dump());
}

TEST(CrossValidate, Summary) {
    FoldReport r;
    for (double acc : {0.5, 1.0, 0.75}) {
        FoldResult f;
        f.metrics.acc = acc;
        r.folds.push_back(f);
    }
    summarize(r);
    EXPECT_NEAR(r.mean.acc, 0.75, 1e-15);
    EXPECT_NEAR(r.stddev.acc, 0.25, 1e-15);
}
