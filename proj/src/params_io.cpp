#include "hybgnn/params_io.hpp"

#include "hybgnn/errors.hpp"

#include <bit>
#include <fstream>
#include <iterator>

namespace hybgnn {

namespace {

constexpr char kMagic[8] = {'H', 'Y', 'B', 'G', 'N', 'N', 'P', '\0'};

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

class Writer {
public:
    template <class T>
    void uint(T v) {
        for (std::size_t i = 0; i < sizeof(T); ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
    void bytes(const std::string& s) { buf_ += s; }
    const std::string& buffer() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(const std::string& buf) : buf_(buf) {}

    template <class T>
    T uint() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += sizeof(T);
        return v;
    }
    double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
    std::string bytes(std::uint64_t n) {
        need(n);
        std::string s = buf_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    void need(std::uint64_t n) const {
        if (n > buf_.size() - pos_) throw ParamsFileError(ParamsFileError::Kind::corrupt, "parameter file is truncated");
    }
    const std::string& buf_;
    std::size_t pos_ = 0;
};

}  // namespace

void save_params(const Model& model, const std::filesystem::path& path) {
    const auto named = model.named_parameters();
    Writer w;
    w.bytes(std::string(kMagic, sizeof(kMagic)));
    w.uint<std::uint32_t>(kParamsFormatVersion);
    const std::string config = to_json(model.config()).dump();
    w.uint<std::uint64_t>(config.size());
    w.bytes(config);
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(named.size()));
    std::uint64_t offset = 0;
    for (const auto& np : named) {
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(np.name.size()));
        w.bytes(np.name);
        const Shape& s = np.var.shape();
        w.uint<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
        for (auto d : s) w.uint<std::uint64_t>(d);
        w.uint<std::uint64_t>(offset);
        offset += np.var.value().size();
    }
    w.uint<std::uint64_t>(offset);
    for (const auto& np : named)
        for (double v : np.var.value().data()) w.f64(v);
    w.uint<std::uint64_t>(fnv1a(w.buffer()));

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ParamsFileError(ParamsFileError::Kind::io, "cannot write parameter file " + tmp.string());
        out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
        if (!out) throw ParamsFileError(ParamsFileError::Kind::io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ParamsFileError(ParamsFileError::Kind::io, "cannot move parameter file into " + path.string());
}

Model load_params(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParamsFileError(ParamsFileError::Kind::io, "cannot open parameter file " + path.string());
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    Reader r(buf);
    if (r.bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
        throw ParamsFileError(ParamsFileError::Kind::corrupt, path.string() + " is not a parameter file");
    }
    const auto version = r.uint<std::uint32_t>();
    if (version != kParamsFormatVersion) {
        throw ParamsFileError(ParamsFileError::Kind::version, "parameter file version " + std::to_string(version) +
                                                                  " is not supported (expected " +
                                                                  std::to_string(kParamsFormatVersion) + ")");
    }
    if (buf.size() < sizeof(std::uint64_t) + r.pos()) {
        throw ParamsFileError(ParamsFileError::Kind::corrupt, "parameter file is truncated");
    }
    {
        const std::string body = buf.substr(0, buf.size() - sizeof(std::uint64_t));
        Reader tail(buf);
        tail.bytes(body.size());
        if (tail.uint<std::uint64_t>() != fnv1a(body)) {
            throw ParamsFileError(ParamsFileError::Kind::corrupt, "parameter file checksum mismatch (truncated or corrupt)");
        }
    }

    ModelConfig config;
    try {
        config = model_config_from_json(nlohmann::json::parse(r.bytes(r.uint<std::uint64_t>())));
    } catch (const nlohmann::json::exception& e) {
        throw ParamsFileError(ParamsFileError::Kind::corrupt, std::string("embedded config is unreadable: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParamsFileError(ParamsFileError::Kind::corrupt, std::string("embedded config is invalid: ") + e.what());
    }

    struct Entry {
        std::string name;
        Shape shape;
        std::uint64_t offset;
    };
    std::vector<Entry> entries(r.uint<std::uint32_t>());
    for (auto& e : entries) {
        e.name = r.bytes(r.uint<std::uint32_t>());
        e.shape.resize(r.uint<std::uint32_t>());
        for (auto& d : e.shape) d = r.uint<std::uint64_t>();
        e.offset = r.uint<std::uint64_t>();
    }
    const auto total = r.uint<std::uint64_t>();
    if (total * 8 + sizeof(std::uint64_t) != r.remaining()) {
        throw ParamsFileError(ParamsFileError::Kind::corrupt, "parameter data block has the wrong length");
    }
    std::vector<double> data(total);
    for (auto& v : data) v = r.f64();

    std::vector<std::pair<std::string, Tensor>> state;
    for (const auto& e : entries) {
        const std::size_t n = numel(e.shape);
        if (e.offset + n > total) throw ParamsFileError(ParamsFileError::Kind::corrupt, "tensor '" + e.name + "' overruns data block");
        state.emplace_back(e.name, Tensor(e.shape, std::vector<double>(data.begin() + e.offset, data.begin() + e.offset + n)));
    }

    try {
        Model model(config, 0);
        model.load_state(state);
        return model;
    } catch (const ShapeError& e) {
        throw ParamsFileError(ParamsFileError::Kind::shape_mismatch, e.what());
    } catch (const ConfigError& e) {
        throw ParamsFileError(ParamsFileError::Kind::corrupt, std::string("embedded config is invalid: ") + e.what());
    }
}

Model load_params(const std::filesystem::path& path, const ModelConfig& runtime) {
    Model model = load_params(path);
    if (!(model.config() == runtime)) {
        throw ParamsFileError(ParamsFileError::Kind::shape_mismatch,
                              "parameter file config " + to_json(model.config()).dump() +
                                  " does not match runtime config " + to_json(runtime).dump());
    }
    return model;
}

}  // namespace hybgnn
