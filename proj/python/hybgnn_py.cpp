// Python bindings. Configs cross the boundary as JSON text, tensors as
// float64 numpy arrays.

#include "hybgnn/app.hpp"
#include "hybgnn/errors.hpp"
#include "hybgnn/params_io.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace hybgnn;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const Array& a) {
    Shape shape(a.shape(), a.shape() + a.ndim());
    return Tensor(std::move(shape), std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Tensor& t) {
    Array a(std::vector<py::ssize_t>(t.shape().begin(), t.shape().end()));
    std::copy(t.data().begin(), t.data().end(), a.mutable_data());
    return a;
}

RunConfig run_config(const std::string& json_text) {
    RunConfig c = run_config_from_json(nlohmann::json::parse(json_text));
    c.validate();
    return c;
}

std::string cv_json(const std::vector<CvOutcome>& outcomes) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& o : outcomes)
        out.push_back({{"dataset", o.dataset}, {"config", to_json(o.config)}, {"report", to_json(o.report)}});
    return out.dump();
}

// Commands release the GIL; logging back into Python would need it again,
// so progress output is dropped here.
std::string run_command(const std::string& command, const std::string& config_json) {
    const RunConfig c = run_config(config_json);
    py::gil_scoped_release release;
    if (command == "train") {
        const TrainOutcome t = cmd_train(c);
        nlohmann::json history = nlohmann::json::array();
        for (const auto& e : t.history)
            history.push_back({{"loss", e.mean_loss},
                               {"grad_norm", e.grad_norm},
                               {"assignment_entropy", e.mean_assignment_entropy}});
        return nlohmann::json{{"history", history}, {"metrics", to_json(t.metrics)}}.dump();
    }
    if (command == "cv") return cv_json(cmd_cv(c));
    if (command == "ablation") {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& row : cmd_ablation(c)) out.push_back(nlohmann::json::parse(cv_json(row)));
        return out.dump();
    }
    if (command == "sweep") {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& rows : cmd_sweep(c)) {
            nlohmann::json ds = nlohmann::json::array();
            for (const auto& r : rows) ds.push_back({{"value", r.value}, {"mean_acc", r.mean_acc}, {"std_acc", r.std_acc}});
            out.push_back(ds);
        }
        return out.dump();
    }
    if (command == "eval") {
        const EvalOutcome e = cmd_eval(c);
        return nlohmann::json{{"metrics", to_json(e.metrics)}, {"exported_samples", e.exported_samples}}.dump();
    }
    if (command == "synth") return nlohmann::json{{"manifest", cmd_synth(c).string()}}.dump();
    throw ConfigError("unknown command: " + command);
}

py::dict forward_dict(const Model& m, const Array& segment) {
    const ForwardResult r = m.forward(to_tensor(segment));
    py::dict out;
    out["probs"] = to_array(r.probs.value());
    out["features"] = to_array(r.features.value());
    out["merged"] = to_array(r.merged.value());
    const auto put = [&](const char* key, const std::optional<Var>& v) {
        out[key] = v ? py::object(to_array(v->value())) : py::none();
    };
    put("common_adjacency", r.common_adjacency);
    put("individual_adjacency", r.individual_adjacency);
    put("individual_assignment", r.individual_assignment);
    put("common_assignment", r.common_assignment);
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "HybGNN EEG depression detection";

    py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const ParamsFileError& e) {
            PyErr_SetString(e.kind() == ParamsFileError::Kind::io ? PyExc_OSError : PyExc_ValueError, e.what());
        } catch (const DatasetError& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        } catch (const nlohmann::json::exception& e) {
            PyErr_SetString(PyExc_ValueError, e.what());
        }
    });

    m.def("run_command", &run_command, py::arg("command"), py::arg("config_json"));
    m.def("resolve_config", [](const std::string& j) { return to_json(resolve(run_config(j), nullptr)).dump(); });
    m.def("preset_names", [] {
        std::vector<std::string> names;
        for (const auto& p : presets()) names.push_back(p.name);
        return names;
    });

    m.def("metrics_from_counts", [](std::size_t tp, std::size_t fp, std::size_t fn, std::size_t tn) {
        return to_json(metrics_from_counts(tp, fp, fn, tn)).dump();
    });
    m.def("mean_row_entropy", [](const Array& r) { return mean_row_entropy(to_tensor(r)); });

    m.def(
        "segment",
        [](const Array& signal, double sampling_rate, double window_s, double overlap) {
            Recording rec;
            rec.subject_id = "s";
            rec.sampling_rate = sampling_rate;
            rec.signal = std::make_shared<const Tensor>(to_tensor(signal));
            rec.channel_names = default_channel_names(rec.channels());
            std::vector<Array> out;
            for (const auto& s : segment_recording(rec, window_s, overlap)) out.push_back(to_array(s.data()));
            return out;
        },
        py::arg("signal"), py::arg("sampling_rate"), py::arg("window_s"), py::arg("overlap"));

    m.def(
        "synth_recordings",
        [](std::size_t per_class, double seconds, std::size_t channels, double fs, std::uint64_t seed) {
            py::list out;
            for (const auto& r : synth_generate({per_class, seconds, channels, fs, seed})) {
                py::dict d;
                d["subject_id"] = r.subject_id;
                d["label"] = std::string(to_string(r.label));
                d["sampling_rate"] = r.sampling_rate;
                d["channel_names"] = r.channel_names;
                d["signal"] = to_array(*r.signal);
                out.append(d);
            }
            return out;
        },
        py::arg("subjects_per_class") = 20, py::arg("seconds") = 60.0, py::arg("channels") = 19,
        py::arg("sampling_rate") = 256.0, py::arg("seed") = 0);

    py::class_<Model>(m, "Model")
        .def(py::init([](const std::string& j, std::uint64_t seed) {
                 ModelConfig c = model_config_from_json(nlohmann::json::parse(j));
                 c.validate();
                 return Model(c, seed);
             }),
             py::arg("config_json"), py::arg("seed") = 0)
        .def_static("load", [](const std::filesystem::path& p) { return load_params(p); })
        .def("save", [](const Model& m, const std::filesystem::path& p) { save_params(m, p); })
        .def_property_readonly("config_json", [](const Model& m) { return to_json(m.config()).dump(); })
        .def("parameters",
             [](const Model& m) {
                 py::dict out;
                 for (const auto& np : m.named_parameters()) out[py::str(np.name)] = to_array(np.var.value());
                 return out;
             })
        .def("forward", &forward_dict, py::arg("segment"))
        .def("predict", [](const Model& m, const Array& s) { return predict(m, to_tensor(s)); });
}
