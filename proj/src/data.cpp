#include "hybgnn/data.hpp"

#include "hybgnn/random.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

namespace hybgnn {

namespace fs = std::filesystem;

std::string_view to_string(Label l) { return l == Label::mdd ? "MDD" : "HC"; }

Label parse_label(std::string_view s) {
    if (s == "MDD") return Label::mdd;
    if (s == "HC") return Label::hc;
    throw DatasetError(DatasetError::Kind::unknown_label, "unknown label '" + std::string(s) + "' (expected MDD or HC)");
}

Tensor EegSegment::data() const {
    const std::size_t n = source->dim(0), total = source->dim(1);
    Tensor out({n, length});
    for (std::size_t c = 0; c < n; ++c)
        std::copy_n(source->data().begin() + c * total + offset, length, out.data().begin() + c * length);
    return out;
}

std::size_t window_samples(double window_s, double sampling_rate) {
    const double w = window_s * sampling_rate;
    const double rounded = std::round(w);
    if (!(window_s > 0.0) || !(sampling_rate > 0.0) || std::abs(w - rounded) > 1e-9 * std::max(1.0, w) || rounded < 1.0) {
        throw DatasetError(DatasetError::Kind::bad_window,
                           "window of " + std::to_string(window_s) + " s at sampling_rate " + std::to_string(sampling_rate) +
                               " Hz is not an integral number of samples");
    }
    return static_cast<std::size_t>(rounded);
}

std::vector<EegSegment> segment_recording(const Recording& rec, double window_s, double overlap_frac) {
    if (!(overlap_frac >= 0.0 && overlap_frac < 1.0)) {
        throw DatasetError(DatasetError::Kind::bad_window, "overlap fraction must lie in [0, 1)");
    }
    const std::size_t window = window_samples(window_s, rec.sampling_rate);
    const auto stride = static_cast<std::size_t>(
        std::max(1.0, std::round(static_cast<double>(window) * (1.0 - overlap_frac))));
    std::vector<EegSegment> out;
    const std::size_t total = rec.samples();
    if (total < window) return out;
    for (std::size_t off = 0; off + window <= total; off += stride) {
        out.push_back({rec.signal, off, window, rec.label, rec.subject_id});
    }
    return out;
}

namespace {

std::vector<double> read_f64_file(const fs::path& path, std::size_t expected) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw DatasetError(DatasetError::Kind::missing_file, "data file not found: " + path.string());
    const auto bytes = static_cast<std::size_t>(in.tellg());
    if (bytes != expected * 8) {
        throw DatasetError(DatasetError::Kind::size_mismatch,
                           path.string() + " holds " + std::to_string(bytes) + " bytes, manifest implies " +
                               std::to_string(expected * 8));
    }
    in.seekg(0);
    std::vector<double> out(expected);
    std::vector<unsigned char> raw(bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(bytes));
    for (std::size_t i = 0; i < expected; ++i) {
        std::uint64_t u = 0;
        for (int b = 0; b < 8; ++b) u |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
        out[i] = std::bit_cast<double>(u);
    }
    return out;
}

void write_f64_file(const fs::path& path, std::span<const double> values) {
    std::vector<unsigned char> raw(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto u = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) raw[i * 8 + b] = static_cast<unsigned char>(u >> (8 * b));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DatasetError(DatasetError::Kind::missing_file, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

}  // namespace

std::vector<Recording> load_dataset(const fs::path& manifest) {
    std::ifstream in(manifest);
    if (!in) throw DatasetError(DatasetError::Kind::missing_file, "manifest not found: " + manifest.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(DatasetError::Kind::malformed, manifest.string() + ": " + e.what());
    }

    std::vector<Recording> out;
    std::set<std::pair<std::string, std::string>> seen;
    std::map<std::string, Label> subject_labels;
    try {
        for (const auto& e : j.at("recordings")) {
            Recording r;
            r.subject_id = e.at("subject_id").get<std::string>();
            r.label = parse_label(e.at("label").get<std::string>());
            r.sampling_rate = e.at("sampling_rate").get<double>();
            r.channel_names = e.at("channels").get<std::vector<std::string>>();
            r.condition = e.value("condition", std::string());
            if (!seen.emplace(r.subject_id, r.condition).second) {
                throw DatasetError(DatasetError::Kind::duplicate_subject,
                                   "duplicate subject_id '" + r.subject_id + "'" +
                                       (r.condition.empty() ? "" : " with condition '" + r.condition + "'"));
            }
            auto [it, inserted] = subject_labels.emplace(r.subject_id, r.label);
            if (!inserted && it->second != r.label) {
                throw DatasetError(DatasetError::Kind::malformed, "subject '" + r.subject_id + "' has conflicting labels");
            }
            if (!(r.sampling_rate > 0.0) || r.channel_names.empty()) {
                throw DatasetError(DatasetError::Kind::malformed, "recording '" + r.subject_id + "' needs a positive sampling_rate and channels");
            }
            const auto n_samples = e.at("n_samples").get<std::size_t>();
            const std::size_t n = r.channel_names.size();
            const fs::path data_path = manifest.parent_path() / e.at("data_file").get<std::string>();
            auto values = read_f64_file(data_path, n * n_samples);
            Tensor signal({n, n_samples}, std::move(values));
            if (!signal.all_finite()) {
                throw DatasetError(DatasetError::Kind::malformed, data_path.string() + " contains non-finite samples");
            }
            r.signal = std::make_shared<const Tensor>(std::move(signal));
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DatasetError(DatasetError::Kind::malformed, manifest.string() + ": " + e.what());
    }
    return out;
}

fs::path save_dataset(std::span<const Recording> recordings, const fs::path& dir) {
    fs::create_directories(dir);
    nlohmann::json list = nlohmann::json::array();
    for (const auto& r : recordings) {
        const std::string file = r.subject_id + (r.condition.empty() ? "" : "_" + r.condition) + ".f64";
        write_f64_file(dir / file, r.signal->data());
        nlohmann::json e{{"subject_id", r.subject_id},
                         {"label", std::string(to_string(r.label))},
                         {"sampling_rate", r.sampling_rate},
                         {"channels", r.channel_names},
                         {"n_samples", r.samples()},
                         {"data_file", file}};
        if (!r.condition.empty()) e["condition"] = r.condition;
        list.push_back(std::move(e));
    }
    const fs::path manifest = dir / "manifest.json";
    std::ofstream out(manifest, std::ios::trunc);
    if (!out) throw DatasetError(DatasetError::Kind::missing_file, "cannot write " + manifest.string());
    out << nlohmann::json{{"format_version", 1}, {"recordings", list}}.dump(2) << '\n';
    return manifest;
}

std::vector<std::string> default_channel_names(std::size_t n) {
    static const std::vector<std::string> ten_twenty{"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3", "Cz",
                                                     "C4",  "T4",  "T5", "P3", "Pz", "P4", "T6", "O1", "O2"};
    if (n == ten_twenty.size()) return ten_twenty;
    std::vector<std::string> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back("Ch" + std::to_string(i));
    return out;
}

std::vector<std::size_t> frontal_channels(std::span<const std::string> names) {
    std::vector<std::size_t> out;
    const bool ten_twenty = names.size() == 19 && names[0] == "Fp1";
    if (ten_twenty) {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i].starts_with('F')) out.push_back(i);
    } else {
        const std::size_t k = std::min(names.size(), std::max<std::size_t>(2, names.size() / 3));
        for (std::size_t i = 0; i < k; ++i) out.push_back(i);
    }
    return out;
}

namespace {

// Shared-coupling strength of the frontal group per class; the MDD value is
// the healthy value scaled by kMddCouplingFactor.
constexpr double kFrontalCoupling = 0.9;
constexpr double kMddCouplingFactor = 0.3;
constexpr double kPosteriorCoupling = 0.5;
constexpr double kNoiseLevel = 0.5;
constexpr double kThetaMin = 0.4;
constexpr double kThetaMax = 0.8;

// Narrow-band noise from a two-pole resonator, scaled to unit variance.
std::vector<double> resonator(std::size_t n, double freq, double fs, Rng& rng) {
    const double r = 0.98;
    const double a1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * freq / fs);
    const double a2 = -r * r;
    const std::size_t burn = static_cast<std::size_t>(2.0 * fs);
    std::vector<double> out(n);
    double y1 = 0.0, y2 = 0.0;
    for (std::size_t t = 0; t < n + burn; ++t) {
        const double y = a1 * y1 + a2 * y2 + rng.normal();
        y2 = y1;
        y1 = y;
        if (t >= burn) out[t - burn] = y;
    }
    double ss = 0.0;
    for (double v : out) ss += v * v;
    const double sd = std::sqrt(ss / static_cast<double>(std::max<std::size_t>(n, 1)));
    if (sd > 0.0)
        for (double& v : out) v /= sd;
    return out;
}

Recording synth_subject(const SynthSpec& spec, Label label, std::size_t index, Rng& rng) {
    const std::size_t n = spec.channels;
    const std::size_t total = static_cast<std::size_t>(std::llround(spec.seconds_per_subject * spec.sampling_rate));
    const double fs = spec.sampling_rate;
    Recording rec;
    rec.subject_id = std::string(label == Label::mdd ? "mdd_" : "hc_") + (index < 10 ? "00" : index < 100 ? "0" : "") +
                     std::to_string(index);
    rec.label = label;
    rec.sampling_rate = fs;
    rec.channel_names = default_channel_names(n);

    const auto frontal = frontal_channels(rec.channel_names);
    std::vector<bool> is_frontal(n, false);
    for (auto c : frontal) is_frontal[c] = true;

    const double alpha_freq = rng.uniform(8.5, 11.5);
    const double theta_amp = label == Label::mdd ? rng.uniform(kThetaMin, kThetaMax) : 0.0;
    const auto shared = resonator(total, alpha_freq, fs, rng);

    Tensor signal({n, total});
    for (std::size_t c = 0; c < n; ++c) {
        const double gain = rng.uniform(0.7, 1.3);
        double k = is_frontal[c] ? kFrontalCoupling : kPosteriorCoupling;
        if (label == Label::mdd && is_frontal[c]) k *= kMddCouplingFactor;
        const double local_weight = std::sqrt(1.0 - k * k);
        const auto local = resonator(total, alpha_freq + rng.uniform(-0.5, 0.5), fs, rng);
        std::vector<double> theta;
        if (theta_amp > 0.0) theta = resonator(total, rng.uniform(4.0, 7.0), fs, rng);
        double* row = signal.data().data() + c * total;
        for (std::size_t t = 0; t < total; ++t) {
            double v = k * shared[t] + local_weight * local[t] + kNoiseLevel * rng.normal();
            if (theta_amp > 0.0) v += theta_amp * theta[t];
            row[t] = gain * v;
        }
    }
    rec.signal = std::make_shared<const Tensor>(std::move(signal));
    return rec;
}

}  // namespace

std::vector<Recording> synth_generate(const SynthSpec& spec) {
    std::vector<Recording> out;
    for (Label label : {Label::hc, Label::mdd}) {
        for (std::size_t i = 0; i < spec.subjects_per_class; ++i) {
            const std::uint64_t idx = static_cast<std::uint64_t>(label) * 1000003ULL + i;
            Rng rng(stream_seed(spec.seed, "synth", idx));
            out.push_back(synth_subject(spec, label, i, rng));
        }
    }
    return out;
}

Dataset build_dataset(std::span<const Recording> recordings, double window_s, double overlap_frac) {
    Dataset ds;
    std::set<std::string> subjects;
    for (const auto& r : recordings) {
        if (ds.channels == 0) ds.channels = r.channels();
        if (r.channels() != ds.channels) {
            throw DatasetError(DatasetError::Kind::malformed, "recording '" + r.subject_id + "' has " +
                                                                  std::to_string(r.channels()) + " channels, expected " +
                                                                  std::to_string(ds.channels));
        }
        auto segs = segment_recording(r, window_s, overlap_frac);
        subjects.insert(r.subject_id);
        ds.segments.insert(ds.segments.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
    }
    ds.subjects.assign(subjects.begin(), subjects.end());
    return ds;
}

}  // namespace hybgnn
