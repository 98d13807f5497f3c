#include "hybgnn/app.hpp"

#include "hybgnn/errors.hpp"
#include "hybgnn/params_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace hybgnn {

namespace fs = std::filesystem;

const std::vector<Preset>& presets() {
    static const std::vector<Preset> all = {
        {"modma", OptimizerKind::sgd, 0.09, 100, 5, 0.75},
        {"husm", OptimizerKind::adam, 0.001, 60, 4, 0.0},
    };
    return all;
}

const Preset& find_preset(std::string_view name) {
    for (const auto& p : presets())
        if (p.name == name) return p;
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected modma or husm)");
}

void RunConfig::validate() const {
    model.validate();
    train.validate();
    if (!(window_seconds > 0.0)) throw ConfigError("window_seconds must be positive");
    if (!(overlap >= 0.0 && overlap < 1.0)) throw ConfigError("overlap must lie in [0, 1)");
    if (folds < 2) throw ConfigError("folds must be >= 2");
    if (folds_parallel == 0) throw ConfigError("folds_parallel must be >= 1");
    if (sweep_param != "n_regions" && sweep_param != "lambda") {
        throw ConfigError("sweep param must be n_regions or lambda, got '" + sweep_param + "'");
    }
    if (!preset.empty()) find_preset(preset);
    std::set<std::string> names;
    for (const auto& d : datasets) {
        if (d.name.empty()) throw ConfigError("dataset entries need a name");
        if (!names.insert(d.name).second) throw ConfigError("dataset name '" + d.name + "' listed twice");
        if (!d.preset.empty()) find_preset(d.preset);
    }
    if (synth.subjects_per_class == 0 || !(synth.seconds_per_subject > 0.0) || synth.channels == 0 ||
        !(synth.sampling_rate > 0.0)) {
        throw ConfigError("synthetic data parameters must be positive");
    }
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json datasets = nlohmann::json::array();
    for (const auto& d : c.datasets)
        datasets.push_back({{"name", d.name}, {"manifest", d.manifest.string()}, {"preset", d.preset}});
    return {{"model", to_json(c.model)},
            {"train", to_json(c.train)},
            {"data",
             {{"datasets", datasets},
              {"synth",
               {{"subjects_per_class", c.synth.subjects_per_class},
                {"seconds_per_subject", c.synth.seconds_per_subject},
                {"channels", c.synth.channels},
                {"sampling_rate", c.synth.sampling_rate}}},
              {"window_seconds", c.window_seconds},
              {"overlap", c.overlap}}},
            {"preset", c.preset},
            {"folds", c.folds},
            {"folds_parallel", c.folds_parallel},
            {"output_dir", c.output_dir.string()},
            {"sweep", {{"param", c.sweep_param}, {"values", c.sweep_values}}},
            {"eval", {{"params", c.params_path.string()}, {"export_graphs", c.export_graphs}}},
            {"overrides", c.overrides}};
}

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<std::string_view> known, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (auto k : known) ok = ok || key == k;
        if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

}  // namespace

RunConfig run_config_from_json(const nlohmann::json& j) {
    reject_unknown(j, {"model", "train", "data", "preset", "folds", "folds_parallel", "output_dir", "sweep", "eval",
                       "overrides"},
                   "run config");
    RunConfig c;
    try {
        if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
        if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
        if (j.contains("data")) {
            const auto& d = j.at("data");
            reject_unknown(d, {"datasets", "synth", "window_seconds", "overlap"}, "data");
            for (const auto& e : d.value("datasets", nlohmann::json::array())) {
                reject_unknown(e, {"name", "manifest", "preset"}, "data.datasets entry");
                c.datasets.push_back({e.at("name").get<std::string>(), e.at("manifest").get<std::string>(),
                                      e.value("preset", std::string())});
            }
            if (d.contains("synth")) {
                const auto& s = d.at("synth");
                reject_unknown(s, {"subjects_per_class", "seconds_per_subject", "channels", "sampling_rate"},
                               "data.synth");
                c.synth.subjects_per_class = s.value("subjects_per_class", c.synth.subjects_per_class);
                c.synth.seconds_per_subject = s.value("seconds_per_subject", c.synth.seconds_per_subject);
                c.synth.channels = s.value("channels", c.synth.channels);
                c.synth.sampling_rate = s.value("sampling_rate", c.synth.sampling_rate);
            }
            c.window_seconds = d.value("window_seconds", c.window_seconds);
            c.overlap = d.value("overlap", c.overlap);
        }
        c.preset = j.value("preset", c.preset);
        c.folds = j.value("folds", c.folds);
        c.folds_parallel = j.value("folds_parallel", c.folds_parallel);
        c.output_dir = j.value("output_dir", c.output_dir.string());
        if (j.contains("sweep")) {
            const auto& s = j.at("sweep");
            reject_unknown(s, {"param", "values"}, "sweep");
            c.sweep_param = s.value("param", c.sweep_param);
            c.sweep_values = s.value("values", c.sweep_values);
        }
        if (j.contains("eval")) {
            const auto& e = j.at("eval");
            reject_unknown(e, {"params", "export_graphs"}, "eval");
            c.params_path = e.value("params", c.params_path.string());
            c.export_graphs = e.value("export_graphs", c.export_graphs);
        }
        if (j.contains("overrides")) {
            c.overrides = j.at("overrides");
            if (!c.overrides.is_object()) throw ConfigError("overrides must be a JSON object");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
    return c;
}

RunConfig load_run_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
    return run_config_from_json(j);
}

RunConfig resolve(const RunConfig& c, const DatasetSource* source) {
    RunConfig r = c;
    r.overrides = nlohmann::json::object();
    const std::string name = source && !source->preset.empty() ? source->preset : c.preset;
    if (!name.empty()) {
        const Preset& p = find_preset(name);
        r.train.optimizer = p.optimizer;
        r.train.learning_rate = p.learning_rate;
        r.train.max_epochs = p.max_epochs;
        r.model.regions = p.regions;
        r.overlap = p.overlap;
    }
    if (!c.overrides.empty()) {
        nlohmann::json j = to_json(r);
        j.merge_patch(c.overrides);
        r = run_config_from_json(j);
        r.overrides = nlohmann::json::object();
    }
    return r;
}

std::vector<double> default_sweep_values(std::string_view param) {
    if (param == "n_regions") return {2, 3, 4, 5, 6, 7, 8};
    if (param == "lambda") return {1e-7, 1e-6, 1e-5, 1e-4, 1e-3};
    throw ConfigError("sweep param must be n_regions or lambda, got '" + std::string(param) + "'");
}

std::vector<LoadedData> load_data(const RunConfig& c) {
    c.validate();
    std::vector<LoadedData> out;
    auto finish = [&](LoadedData d) {
        d.dataset = build_dataset(d.recordings, d.config.window_seconds, d.config.overlap);
        if (d.dataset.segments.empty()) {
            throw ConfigError("dataset '" + d.name + "' yields no segments of " +
                              std::to_string(d.config.window_seconds) + " s");
        }
        d.config.model.channels = d.dataset.channels;
        d.config.validate();
        out.push_back(std::move(d));
    };
    if (c.datasets.empty()) {
        LoadedData d;
        d.name = "synthetic";
        d.config = resolve(c, nullptr);
        SynthSpec spec = d.config.synth;
        spec.seed = d.config.train.seed;
        d.recordings = synth_generate(spec);
        finish(std::move(d));
    } else {
        for (const auto& src : c.datasets) {
            LoadedData d;
            d.name = src.name;
            d.config = resolve(c, &src);
            d.recordings = load_dataset(src.manifest);
            finish(std::move(d));
        }
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void emit(const Logger& log, const std::string& line) {
    if (log) log(line);
}

const LoadedData& single(const std::vector<LoadedData>& data, std::string_view command) {
    if (data.size() != 1) {
        throw ConfigError(std::string(command) + " works on exactly one dataset, got " + std::to_string(data.size()));
    }
    return data.front();
}

std::string dump(const nlohmann::json& j) { return j.dump(2) + "\n"; }

FoldReport run_cv(const LoadedData& d, const RunConfig& r, const Logger& log, const std::string& tag) {
    CvOptions opts;
    opts.folds = r.folds;
    opts.parallel = r.folds_parallel;
    opts.on_fold_done = [&](const FoldResult& f) {
        char line[160];
        std::snprintf(line, sizeof line, "[%s] fold %zu/%zu  acc %.4f  f1 %.4f", tag.c_str(), f.fold + 1, r.folds,
                      f.metrics.acc, f.metrics.f1);
        emit(log, line);
    };
    return cross_validate(d.dataset, r.model, r.train, opts);
}

}  // namespace

void write_text_file(const fs::path& path, std::string_view text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + path.string());
        out.write(text.data(), static_cast<std::streamsize>(text.size()));
        if (!out) throw ConfigError("failed writing " + path.string());
    }
    fs::rename(tmp, path);
}

std::string format_matrix(const Tensor& m) {
    if (m.rank() != 2) throw ShapeError("format_matrix", "expected a matrix, got " + to_string(m.shape()));
    std::string out;
    for (std::size_t i = 0; i < m.dim(0); ++i) {
        for (std::size_t j = 0; j < m.dim(1); ++j) {
            if (j) out += ' ';
            out += fmt(m(i, j));
        }
        out += '\n';
    }
    return out;
}

Tensor parse_matrix(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::size_t n = 0;
        double v;
        while (ls >> v) {
            values.push_back(v);
            ++n;
        }
        if (rows == 0) cols = n;
        if (n != cols) throw ShapeError("parse_matrix", "ragged rows");
        ++rows;
    }
    return Tensor({rows, cols}, std::move(values));
}

std::string format_comparison(const std::vector<std::string>& row_names, const std::vector<std::string>& datasets,
                              const std::vector<std::vector<MetricSummary>>& cells,
                              const std::vector<std::vector<MetricSummary>>& stddev) {
    std::size_t name_w = 8;
    for (const auto& n : row_names) name_w = std::max(name_w, n.size());
    const int cell_w = 15;  // "100.00 (10.00)"
    std::string out;
    char buf[64];
    auto pad = [](std::string s, std::size_t w) {
        if (s.size() < w) s.append(w - s.size(), ' ');
        return s;
    };
    out += pad("", name_w);
    for (const auto& d : datasets) out += " | " + pad(d, 4 * cell_w + 3);
    out += '\n';
    out += pad("method", name_w);
    for (std::size_t d = 0; d < datasets.size(); ++d) {
        out += " | ";
        for (const char* m : {"ACC", "REC", "PRE", "F1"}) {
            std::snprintf(buf, sizeof buf, "%-*s ", cell_w, m);
            out += buf;
        }
        out.pop_back();
    }
    out += '\n';
    for (std::size_t r = 0; r < row_names.size(); ++r) {
        out += pad(row_names[r], name_w);
        for (std::size_t d = 0; d < datasets.size(); ++d) {
            const MetricSummary& m = cells[r][d];
            const MetricSummary& s = stddev[r][d];
            out += " | ";
            for (auto [mean, sd] : {std::pair{m.acc, s.acc}, {m.rec, s.rec}, {m.pre, s.pre}, {m.f1, s.f1}}) {
                std::snprintf(buf, sizeof buf, "%6.2f (%5.2f) ", 100.0 * mean, 100.0 * sd);
                out += buf;
            }
            out.pop_back();
        }
        out += '\n';
    }
    return out;
}

TrainOutcome cmd_train(const RunConfig& c, const Logger& log) {
    const auto data = load_data(c);
    const LoadedData& d = single(data, "train");
    const RunConfig& r = d.config;
    Model model(r.model, r.train.seed);
    Trainer trainer(model, r.train);

    TrainOutcome out;
    std::string csv = "epoch,mean_loss,grad_norm,mean_assignment_entropy\n";
    for (std::size_t e = 0; e < r.train.max_epochs; ++e) {
        const EpochSummary s = trainer.train_epoch(d.dataset.segments);
        out.history.push_back(s);
        csv += std::to_string(e + 1) + ',' + fmt(s.mean_loss) + ',' + fmt(s.grad_norm) + ',' +
               fmt(s.mean_assignment_entropy) + '\n';
        char line[128];
        std::snprintf(line, sizeof line, "epoch %zu/%zu  loss %.6f", e + 1, r.train.max_epochs, s.mean_loss);
        emit(log, line);
    }
    out.metrics = evaluate(model, d.dataset.segments);

    fs::create_directories(c.output_dir);
    save_params(model, c.output_dir / "params.bin");
    write_text_file(c.output_dir / "train_log.csv", csv);
    write_text_file(c.output_dir / "metrics.json",
                    dump({{"dataset", d.name}, {"segments", d.dataset.segments.size()}, {"metrics", to_json(out.metrics)}}));
    write_text_file(c.output_dir / "config.json", dump({{"run", to_json(c)}, {"effective", to_json(r)}}));
    return out;
}

std::vector<CvOutcome> cmd_cv(const RunConfig& c, const Logger& log) {
    const auto data = load_data(c);
    std::vector<CvOutcome> out;
    nlohmann::json reports = nlohmann::json::array();
    std::string text;
    for (const auto& d : data) {
        CvOutcome o{d.name, d.config, run_cv(d, d.config, log, d.name)};
        reports.push_back({{"name", d.name}, {"config", to_json(d.config)}, {"report", to_json(o.report)}});
        text += "== " + d.name + " ==\n" + format_table(o.report) + "\n";
        out.push_back(std::move(o));
    }
    std::vector<std::string> names;
    std::vector<MetricSummary> means, sds;
    for (const auto& o : out) {
        names.push_back(o.dataset);
        means.push_back(o.report.mean);
        sds.push_back(o.report.stddev);
    }
    text += format_comparison({"HybGNN"}, names, {means}, {sds});

    fs::create_directories(c.output_dir);
    write_text_file(c.output_dir / "report.json", dump({{"config", to_json(c)}, {"datasets", reports}}));
    write_text_file(c.output_dir / "report.txt", text);
    return out;
}

std::vector<std::vector<CvOutcome>> cmd_ablation(const RunConfig& c, const Logger& log) {
    const auto data = load_data(c);
    const auto& variants = all_variants();
    std::vector<std::vector<CvOutcome>> out(variants.size());
    nlohmann::json per_dataset = nlohmann::json::array();
    std::vector<std::string> dataset_names;
    for (const auto& d : data) {
        dataset_names.push_back(d.name);
        nlohmann::json rows = nlohmann::json::array();
        for (std::size_t v = 0; v < variants.size(); ++v) {
            RunConfig r = d.config;
            r.model.variant = variants[v];
            const std::string tag = d.name + "/" + std::string(to_string(variants[v]));
            CvOutcome o{d.name, r, run_cv(d, r, log, tag)};
            rows.push_back({{"variant", std::string(to_string(variants[v]))}, {"report", to_json(o.report)}});
            out[v].push_back(std::move(o));
        }
        per_dataset.push_back({{"name", d.name}, {"config", to_json(d.config)}, {"variants", rows}});
    }
    std::vector<std::string> row_names;
    std::vector<std::vector<MetricSummary>> means(variants.size()), sds(variants.size());
    for (std::size_t v = 0; v < variants.size(); ++v) {
        row_names.push_back(variants[v] == Variant::full ? "full" : "variant " + std::string(to_string(variants[v])));
        for (const auto& o : out[v]) {
            means[v].push_back(o.report.mean);
            sds[v].push_back(o.report.stddev);
        }
    }
    fs::create_directories(c.output_dir);
    write_text_file(c.output_dir / "ablation.json", dump({{"config", to_json(c)}, {"datasets", per_dataset}}));
    write_text_file(c.output_dir / "ablation.txt", format_comparison(row_names, dataset_names, means, sds));
    return out;
}

std::vector<std::vector<SweepRow>> cmd_sweep(const RunConfig& c, const Logger& log) {
    const auto data = load_data(c);
    const std::vector<double> values = c.sweep_values.empty() ? default_sweep_values(c.sweep_param) : c.sweep_values;
    const bool regions = c.sweep_param == "n_regions";
    for (double v : values) {
        if (regions && (v < 1 || v != std::floor(v))) throw ConfigError("n_regions values must be positive integers");
        if (!regions && !(v >= 0.0)) throw ConfigError("lambda values must be non-negative");
    }
    std::vector<std::vector<SweepRow>> out;
    nlohmann::json per_dataset = nlohmann::json::array();
    std::string text;
    for (const auto& d : data) {
        std::vector<SweepRow> rows;
        nlohmann::json entries = nlohmann::json::array();
        std::string csv = "value,mean_acc,std_acc\n";
        text += "== " + d.name + " (" + c.sweep_param + ") ==\n";
        for (double v : values) {
            RunConfig r = d.config;
            if (regions) r.model.regions = static_cast<std::size_t>(v);
            else r.train.lambda = v;
            r.validate();
            const std::string label = regions ? std::to_string(static_cast<std::size_t>(v)) : fmt(v);
            const FoldReport rep = run_cv(d, r, log, d.name + "/" + c.sweep_param + "=" + label);
            rows.push_back({v, rep.mean.acc, rep.stddev.acc});
            entries.push_back({{"value", v}, {"report", to_json(rep)}});
            csv += label + ',' + fmt(rep.mean.acc) + ',' + fmt(rep.stddev.acc) + '\n';
            char line[128];
            std::snprintf(line, sizeof line, "%-10s %8.4f %8.4f\n", label.c_str(), rep.mean.acc, rep.stddev.acc);
            text += line;
        }
        text += '\n';
        fs::create_directories(c.output_dir);
        write_text_file(c.output_dir / ("sweep_" + d.name + ".csv"), csv);
        per_dataset.push_back(
            {{"name", d.name}, {"config", to_json(d.config)}, {"param", c.sweep_param}, {"values", entries}});
        out.push_back(std::move(rows));
    }
    write_text_file(c.output_dir / "sweep.json", dump({{"config", to_json(c)}, {"datasets", per_dataset}}));
    write_text_file(c.output_dir / "sweep.txt", text);
    return out;
}

EvalOutcome cmd_eval(const RunConfig& c, const Logger& log) {
    if (c.params_path.empty()) throw ConfigError("eval needs a parameter file (--params)");
    const auto data = load_data(c);
    const LoadedData& d = single(data, "eval");
    const Model model = load_params(c.params_path);
    if (model.config().channels != d.dataset.channels) {
        throw ConfigError("parameter file " + c.params_path.string() + " expects " +
                          std::to_string(model.config().channels) + " channels but dataset '" + d.name + "' has " +
                          std::to_string(d.dataset.channels));
    }
    const fs::path graphs = c.output_dir / "graphs";
    EvalOutcome out;
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::string csv = "sample,subject_id,offset,label,p_mdd,predicted\n";
    const auto& segs = d.dataset.segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        const ForwardResult fr = model.forward(segs[i].data());
        const Tensor& p = fr.probs.value();
        const bool predicted = p[1] > p[0];
        const bool actual = segs[i].label == Label::mdd;
        if (predicted && actual) ++tp;
        else if (predicted) ++fp;
        else if (actual) ++fn;
        else ++tn;
        csv += std::to_string(i) + ',' + segs[i].subject_id + ',' + std::to_string(segs[i].offset) + ',' +
               std::string(to_string(segs[i].label)) + ',' + fmt(p[1]) + ',' + (predicted ? "MDD" : "HC") + '\n';
        if (c.export_graphs) {
            char prefix[32];
            std::snprintf(prefix, sizeof prefix, "sample_%05zu_", i);
            if (i == 0 && fr.common_adjacency)
                write_text_file(graphs / "common_adjacency.txt", format_matrix(fr.common_adjacency->value()));
            if (fr.individual_adjacency)
                write_text_file(graphs / (std::string(prefix) + "individual_adjacency.txt"),
                                format_matrix(fr.individual_adjacency->value()));
            if (fr.individual_assignment)
                write_text_file(graphs / (std::string(prefix) + "assignment.txt"),
                                format_matrix(fr.individual_assignment->value()));
            if (fr.common_assignment)
                write_text_file(graphs / (std::string(prefix) + "common_assignment.txt"),
                                format_matrix(fr.common_assignment->value()));
            ++out.exported_samples;
        }
    }
    out.metrics = metrics_from_counts(tp, fp, fn, tn);
    char line[128];
    std::snprintf(line, sizeof line, "%zu segments  acc %.4f  f1 %.4f", segs.size(), out.metrics.acc, out.metrics.f1);
    emit(log, line);

    fs::create_directories(c.output_dir);
    write_text_file(c.output_dir / "predictions.csv", csv);
    write_text_file(c.output_dir / "metrics.json",
                    dump({{"dataset", d.name}, {"segments", segs.size()}, {"metrics", to_json(out.metrics)}}));
    return out;
}

fs::path cmd_synth(const RunConfig& c, const Logger& log) {
    c.validate();
    const RunConfig r = resolve(c, nullptr);
    SynthSpec spec = r.synth;
    spec.seed = r.train.seed;
    const auto recs = synth_generate(spec);
    const fs::path manifest = save_dataset(recs, c.output_dir);
    emit(log, "wrote " + std::to_string(recs.size()) + " recordings to " + manifest.string());
    return manifest;
}

}  // namespace hybgnn
