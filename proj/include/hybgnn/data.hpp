#pragma once

#include "hybgnn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hybgnn {

// Positive class is MDD.
enum class Label { hc = 0, mdd = 1 };

std::string_view to_string(Label l);
Label parse_label(std::string_view s);  // "MDD" or "HC"; throws DatasetError

struct Recording {
    std::string subject_id;
    Label label = Label::hc;
    double sampling_rate = 0.0;
    std::vector<std::string> channel_names;
    // Optional recording condition (e.g. "eyes_open"); one subject may own
    // several recordings as long as their conditions differ.
    std::string condition;
    std::shared_ptr<const Tensor> signal;  // [N, T_total]

    std::size_t channels() const { return signal ? signal->dim(0) : 0; }
    std::size_t samples() const { return signal ? signal->dim(1) : 0; }
};

// A window over a recording's signal; the data is materialized on demand so
// overlapping windows do not duplicate storage.
struct EegSegment {
    std::shared_ptr<const Tensor> source;
    std::size_t offset = 0;  // in samples
    std::size_t length = 0;  // T_s
    Label label = Label::hc;
    std::string subject_id;

    Tensor data() const;  // [N, T_s]
};

class DatasetError : public std::runtime_error {
public:
    enum class Kind { missing_file, size_mismatch, duplicate_subject, unknown_label, malformed, bad_window };

    DatasetError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Number of samples in a window; throws DatasetError (bad_window) unless
// window_s * sampling_rate is integral.
std::size_t window_samples(double window_s, double sampling_rate);

// Windows at offsets 0, stride, 2*stride, ... while they fit, with
// stride = round(window * (1 - overlap)) samples.
std::vector<EegSegment> segment_recording(const Recording& rec, double window_s, double overlap_frac);

// Manifest JSON:
// {
//   "format_version": 1,
//   "recordings": [
//     { "subject_id": "s01", "label": "MDD", "sampling_rate": 256,
//       "channels": ["Fp1", ...], "n_samples": 76800,
//       "data_file": "s01.f64", "condition": "eyes_closed" }
//   ]
// }
// data_file is relative to the manifest's directory and holds raw
// little-endian float64, row-major [channels, n_samples].
std::vector<Recording> load_dataset(const std::filesystem::path& manifest);

// Writes manifest.json plus one .f64 file per recording into `dir`.
std::filesystem::path save_dataset(std::span<const Recording> recordings, const std::filesystem::path& dir);

struct SynthSpec {
    std::size_t subjects_per_class = 20;
    double seconds_per_subject = 60.0;
    std::size_t channels = 19;
    double sampling_rate = 256.0;
    std::uint64_t seed = 0;
};

// Standard 10-20 names for 19 channels, "Ch<i>" otherwise.
std::vector<std::string> default_channel_names(std::size_t n);

// Indices of the channels sharing the strong low-frequency source.
std::vector<std::size_t> frontal_channels(std::span<const std::string> names);

// Class-conditional synthetic EEG. Healthy subjects carry a shared 8-12 Hz
// source strongly coupled across the frontal group; MDD subjects have that
// coupling scaled down and an additional independent 4-7 Hz component per
// channel. Deterministic in the seed.
std::vector<Recording> synth_generate(const SynthSpec& spec);

// Everything a run needs: segments plus the subject -> label map.
struct Dataset {
    std::vector<EegSegment> segments;
    std::vector<std::string> subjects;  // sorted, unique
    std::size_t channels = 0;
};

Dataset build_dataset(std::span<const Recording> recordings, double window_s, double overlap_frac);

}  // namespace hybgnn
