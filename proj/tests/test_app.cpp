#include "hybgnn/app.hpp"
#include "hybgnn/errors.hpp"
#include "hybgnn/params_io.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace hybgnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "hybgnn_test_app" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

// Ten synthetic subjects, five folds, one epoch: small enough for unit tests.
RunConfig tiny_run(const fs::path& out) {
    RunConfig c;
    c.synth = {.subjects_per_class = 5, .seconds_per_subject = 8, .channels = 19, .sampling_rate = 64};
    c.folds = 5;
    c.train.max_epochs = 1;
    c.train.batch_size = 16;
    c.output_dir = out;
    return c;
}

}  // namespace

TEST(RunConfigJson, RoundTrip) {
    RunConfig c;
    c.model.variant = Variant::d;
    c.model.gcn_steps = 3;
    c.train.lambda = 2e-4;
    c.datasets = {{"modma", "/data/modma/manifest.json", "modma"}, {"husm", "/data/husm/manifest.json", ""}};
    c.window_seconds = 2;
    c.overlap = 0.5;
    c.preset = "husm";
    c.folds = 4;
    c.folds_parallel = 2;
    c.sweep_param = "lambda";
    c.sweep_values = {1e-5, 1e-4};
    c.params_path = "p.bin";
    c.export_graphs = true;
    c.overrides = {{"train", {{"learning_rate", 0.2}}}};
    const nlohmann::json j = to_json(c);
    EXPECT_EQ(to_json(run_config_from_json(j)), j);
}

TEST(RunConfigJson, UnknownKeysRejected) {
    EXPECT_THROW(run_config_from_json({{"modle", nlohmann::json::object()}}), ConfigError);
    EXPECT_THROW(run_config_from_json({{"data", {{"windw_seconds", 4}}}}), ConfigError);
    EXPECT_THROW(run_config_from_json({{"sweep", {{"parm", "lambda"}}}}), ConfigError);
    EXPECT_THROW(run_config_from_json({{"folds", "ten"}}), ConfigError);
    EXPECT_NO_THROW(run_config_from_json(nlohmann::json::object()));
}

TEST(RunConfigJson, LoadFromFile) {
    const fs::path dir = scratch_dir("load");
    std::ofstream(dir / "c.json") << R"({"train": {"lambda": 0.001}, "model": {"regions": 3}})";
    const RunConfig c = load_run_config(dir / "c.json");
    EXPECT_EQ(c.train.lambda, 0.001);
    EXPECT_EQ(c.model.regions, 3u);
    std::ofstream(dir / "bad.json") << "{";
    EXPECT_THROW(load_run_config(dir / "bad.json"), ConfigError);
    EXPECT_THROW(load_run_config(dir / "missing.json"), ConfigError);
}

TEST(RunConfigJson, Validation) {
    RunConfig c;
    EXPECT_NO_THROW(c.validate());
    c.preset = "unknown";
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    c.folds = 1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    c.datasets = {{"x", "a.json", ""}, {"x", "b.json", ""}};
    EXPECT_THROW(c.validate(), ConfigError);
    c = RunConfig{};
    c.sweep_param = "depth";
    EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Presets, Values) {
    const Preset& m = find_preset("modma");
    EXPECT_EQ(m.optimizer, OptimizerKind::sgd);
    EXPECT_EQ(m.learning_rate, 0.09);
    EXPECT_EQ(m.max_epochs, 100u);
    EXPECT_EQ(m.regions, 5u);
    EXPECT_EQ(m.overlap, 0.75);
    const Preset& h = find_preset("husm");
    EXPECT_EQ(h.optimizer, OptimizerKind::adam);
    EXPECT_EQ(h.learning_rate, 0.001);
    EXPECT_EQ(h.max_epochs, 60u);
    EXPECT_EQ(h.regions, 4u);
    EXPECT_EQ(h.overlap, 0.0);
    EXPECT_THROW(find_preset("tuh"), ConfigError);
}

TEST(Presets, ResolutionOrder) {
    RunConfig c;
    c.preset = "husm";
    const DatasetSource modma{"m", "m.json", "modma"}, plain{"p", "p.json", ""};

    EXPECT_EQ(resolve(c, &plain).train.learning_rate, 0.001);
    EXPECT_EQ(resolve(c, &modma).train.learning_rate, 0.09);
    EXPECT_EQ(resolve(c, &modma).overlap, 0.75);
    EXPECT_EQ(resolve(c, nullptr).model.regions, 4u);

    c.overrides = {{"train", {{"learning_rate", 0.5}}}, {"model", {{"regions", 2}}}};
    const RunConfig r = resolve(c, &modma);
    EXPECT_EQ(r.train.learning_rate, 0.5);
    EXPECT_EQ(r.model.regions, 2u);
    EXPECT_EQ(r.train.optimizer, OptimizerKind::sgd);
    EXPECT_EQ(r.train.max_epochs, 100u);
    EXPECT_TRUE(r.overrides.empty());

    RunConfig none;
    EXPECT_EQ(resolve(none, nullptr).train.learning_rate, TrainConfig{}.learning_rate);
}

TEST(Sweep, DefaultGrids) {
    EXPECT_EQ(default_sweep_values("n_regions"), (std::vector<double>{2, 3, 4, 5, 6, 7, 8}));
    EXPECT_EQ(default_sweep_values("lambda").size(), 5u);
    EXPECT_THROW(default_sweep_values("depth"), ConfigError);
}

TEST(MatrixText, RoundTripIsExact) {
    Rng rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor m = oracle::random_tensor({1 + rng.below(6), 1 + rng.below(6)}, rng, -1e3, 1e3);
        EXPECT_EQ(parse_matrix(format_matrix(m)), m);
    }
    EXPECT_EQ(format_matrix(Tensor::matrix({{1, 0.5}, {-2, 0}})), "1 0.5\n-2 0\n");
}

TEST(Comparison, Layout) {
    const std::string t = format_comparison({"variant a", "full"}, {"modma", "husm"},
                                            {{{0.9, 0.8, 0.7, 0.75}, {0.5, 0.5, 0.5, 0.5}},
                                             {{0.95, 0.9, 0.85, 0.875}, {0.6, 0.6, 0.6, 0.6}}},
                                            {{{}, {}}, {{}, {}}});
    EXPECT_NE(t.find("modma"), std::string::npos);
    EXPECT_NE(t.find("husm"), std::string::npos);
    EXPECT_NE(t.find("ACC"), std::string::npos);
    EXPECT_NE(t.find("95.00"), std::string::npos);
    EXPECT_NE(t.find("variant a"), std::string::npos);
}

TEST(LoadData, SyntheticAndManifest) {
    const fs::path dir = scratch_dir("load_data");
    RunConfig c = tiny_run(dir / "out");
    auto data = load_data(c);
    ASSERT_EQ(data.size(), 1u);
    EXPECT_EQ(data[0].name, "synthetic");
    EXPECT_EQ(data[0].dataset.subjects.size(), 10u);
    EXPECT_EQ(data[0].dataset.segments.size(), 20u);

    const auto recs = synth_generate({.subjects_per_class = 5, .seconds_per_subject = 8, .channels = 7,
                                      .sampling_rate = 64, .seed = 2});
    const fs::path manifest = save_dataset(recs, dir / "seven");
    c.datasets = {{"seven", manifest, "husm"}};
    data = load_data(c);
    ASSERT_EQ(data.size(), 1u);
    EXPECT_EQ(data[0].config.model.channels, 7u);
    EXPECT_EQ(data[0].config.model.regions, 4u);

    c.datasets = {{"gone", dir / "nope" / "manifest.json", ""}};
    try {
        load_data(c);
        FAIL();
    } catch (const DatasetError& e) {
        EXPECT_EQ(e.kind(), DatasetError::Kind::missing_file);
        EXPECT_NE(std::string(e.what()).find((dir / "nope" / "manifest.json").string()), std::string::npos);
    }
}

TEST(Commands, CrossValidationIsDeterministic) {
    const fs::path dir = scratch_dir("cv");
    RunConfig c = tiny_run(dir / "one");
    c.folds = 10;
    c.train.lambda = 3e-4;
    c.model.gcn_steps = 3;
    const auto first = cmd_cv(c);
    ASSERT_EQ(first.size(), 1u);
    EXPECT_EQ(first[0].report.folds.size(), 10u);
    for (const auto& f : first[0].report.folds) EXPECT_EQ(f.test_subjects.size(), 1u);

    const std::string bytes = read_file(dir / "one" / "report.json");
    cmd_cv(c);
    EXPECT_EQ(read_file(dir / "one" / "report.json"), bytes);

    c.output_dir = dir / "two";
    c.folds_parallel = 3;
    cmd_cv(c);
    const auto one = nlohmann::json::parse(bytes);
    const auto two = nlohmann::json::parse(read_file(dir / "two" / "report.json"));
    EXPECT_EQ(one.at("datasets")[0].at("report"), two.at("datasets")[0].at("report"));

    const auto& cfg = one.at("datasets")[0].at("config");
    EXPECT_EQ(cfg.at("train").at("lambda"), 3e-4);
    EXPECT_EQ(cfg.at("model").at("gcn_steps"), 3);
    EXPECT_EQ(cfg.at("model").at("region_steps"), 1);
    const std::string txt = read_file(dir / "one" / "report.txt");
    EXPECT_NE(txt.find("HybGNN"), std::string::npos);
}

TEST(Commands, AblationHasSixRows) {
    const fs::path dir = scratch_dir("ablation");
    const auto out = cmd_ablation(tiny_run(dir));
    EXPECT_EQ(out.size(), 6u);
    const std::string txt = read_file(dir / "ablation.txt");
    for (const char* row : {"variant a", "variant b", "variant c", "variant d", "variant e", "full"})
        EXPECT_NE(txt.find(row), std::string::npos) << row;
    const auto j = nlohmann::json::parse(read_file(dir / "ablation.json"));
    EXPECT_EQ(j.at("datasets")[0].at("variants").size(), 6u);
}

TEST(Commands, RegionSweepHasSevenRows) {
    const fs::path dir = scratch_dir("sweep");
    const auto out = cmd_sweep(tiny_run(dir));
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].size(), 7u);
    const auto rows = lines(read_file(dir / "sweep_synthetic.csv"));
    ASSERT_EQ(rows.size(), 8u);
    EXPECT_EQ(rows[0], "value,mean_acc,std_acc");
    for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i].substr(0, 2), std::to_string(i + 1) + ",");
}

TEST(Commands, SweepRejectsBadValues) {
    RunConfig c = tiny_run(scratch_dir("sweep_bad"));
    c.sweep_values = {2.5};
    EXPECT_THROW(cmd_sweep(c), ConfigError);
    c.sweep_values = {30};
    EXPECT_THROW(cmd_sweep(c), ConfigError);
}

TEST(Commands, EvalReproducesTrainMetrics) {
    const fs::path dir = scratch_dir("train_eval");
    RunConfig c = tiny_run(dir / "train");
    c.train.max_epochs = 2;
    const TrainOutcome t = cmd_train(c);
    EXPECT_EQ(t.history.size(), 2u);
    EXPECT_EQ(lines(read_file(dir / "train" / "train_log.csv")).size(), 3u);

    RunConfig e = tiny_run(dir / "eval");
    e.params_path = dir / "train" / "params.bin";
    e.export_graphs = true;
    const EvalOutcome ev = cmd_eval(e);
    EXPECT_EQ(ev.metrics, t.metrics);
    EXPECT_EQ(read_file(dir / "train" / "metrics.json"), read_file(dir / "eval" / "metrics.json"));
    EXPECT_EQ(ev.exported_samples, 20u);
    EXPECT_EQ(lines(read_file(dir / "eval" / "predictions.csv")).size(), 21u);

    const fs::path graphs = dir / "eval" / "graphs";
    EXPECT_TRUE(fs::exists(graphs / "common_adjacency.txt"));
    for (std::size_t i = 0; i < 20; ++i) {
        char name[64];
        std::snprintf(name, sizeof name, "sample_%05zu_assignment.txt", i);
        const Tensor r = parse_matrix(read_file(graphs / name));
        ASSERT_EQ(r.shape(), (Shape{19, 5}));
        for (std::size_t row = 0; row < 19; ++row) {
            double s = 0;
            for (std::size_t k = 0; k < 5; ++k) s += r(row, k);
            EXPECT_NEAR(s, 1.0, 1e-9);
        }
        std::snprintf(name, sizeof name, "sample_%05zu_individual_adjacency.txt", i);
        EXPECT_EQ(parse_matrix(read_file(graphs / name)).shape(), (Shape{19, 19}));
    }
}

TEST(Commands, EvalNeedsMatchingParams) {
    const fs::path dir = scratch_dir("eval_errors");
    RunConfig e = tiny_run(dir);
    EXPECT_THROW(cmd_eval(e), ConfigError);

    ModelConfig seven;
    seven.channels = 7;
    save_params(Model(seven, 1), dir / "seven.bin");
    e.params_path = dir / "seven.bin";
    EXPECT_THROW(cmd_eval(e), ConfigError);
}

TEST(Commands, VariantATrainsWithoutIndividualOrPooling) {
    const fs::path dir = scratch_dir("variant_a");
    RunConfig c = tiny_run(dir);
    c.model.variant = Variant::a;
    cmd_train(c);
    const Model m = load_params(dir / "params.bin");
    for (const auto& np : m.named_parameters()) {
        EXPECT_NE(np.group, ParamGroup::individual_adj);
        EXPECT_NE(np.group, ParamGroup::ignn_stack);
        EXPECT_NE(np.group, ParamGroup::gpum_cgnn);
        EXPECT_NE(np.group, ParamGroup::gpum_ignn);
    }
}

TEST(Commands, SynthWritesLoadableManifest) {
    const fs::path dir = scratch_dir("synth");
    RunConfig c = tiny_run(dir);
    const fs::path manifest = cmd_synth(c);
    const auto recs = load_dataset(manifest);
    EXPECT_EQ(recs.size(), 10u);
    EXPECT_EQ(recs[0].signal->shape(), (Shape{19, 512}));
}

#ifdef HYBGNN_CLI_PATH
namespace {

int run_cli(const std::string& args, const fs::path& stderr_file) {
    const std::string cmd = std::string(HYBGNN_CLI_PATH) + " " + args + " > /dev/null 2> " + stderr_file.string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, ExitCodes) {
    const fs::path dir = scratch_dir("cli");
    const fs::path err = dir / "stderr.txt";
    const fs::path missing = dir / "absent" / "manifest.json";
    EXPECT_EQ(run_cli("cv -q --dataset x=" + missing.string() + " -o " + dir.string(), err), 2);
    EXPECT_NE(read_file(err).find(missing.string()), std::string::npos);
    EXPECT_EQ(run_cli("train -q --synth --lr -1 -o " + dir.string(), err), 2);
    EXPECT_EQ(run_cli("train -q --no-such-flag", err), 2);
    EXPECT_EQ(run_cli("eval -q --synth --params " + (dir / "none.bin").string() + " -o " + dir.string(), err), 2);
    EXPECT_EQ(run_cli("synth -q --synth-subjects 2 --synth-seconds 4 -o " + (dir / "data").string(), err), 0);
    EXPECT_TRUE(fs::exists(dir / "data" / "manifest.json"));
}
#endif
