#pragma once

// Binary parameter file, all integers and floats little-endian:
//
//   char[8]  magic "HYBGNNP\0"
//   u32      format version (kParamsFormatVersion)
//   u64      byte length of the config JSON, then the UTF-8 JSON itself
//   u32      tensor count
//   per tensor:
//     u32    name length, then the name bytes
//     u32    rank, then rank x u64 dims
//     u64    offset (in float64 elements) into the data block
//   u64      data block length in float64 elements
//   f64[]    data block, row-major per tensor
//   u64      FNV-1a 64 checksum of every preceding byte

#include "hybgnn/model.hpp"

#include <filesystem>
#include <stdexcept>

namespace hybgnn {

inline constexpr std::uint32_t kParamsFormatVersion = 1;

class ParamsFileError : public std::runtime_error {
public:
    enum class Kind { io, version, shape_mismatch, corrupt };

    ParamsFileError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

// Writes to a temporary sibling and renames it into place.
void save_params(const Model& model, const std::filesystem::path& path);

// Rebuilds the model from the embedded config. Nothing is returned unless
// the whole file validates.
Model load_params(const std::filesystem::path& path);

// As above, additionally requiring the embedded config to match `runtime`.
Model load_params(const std::filesystem::path& path, const ModelConfig& runtime);

}  // namespace hybgnn
