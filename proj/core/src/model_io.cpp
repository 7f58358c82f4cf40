#include "mmfusion/model_io.hpp"

#include "mmfusion/errors.hpp"
#include "mmfusion/io.hpp"

#include <bit>
#include <cstring>

namespace mmfusion {

namespace {

constexpr std::string_view kMagic = "MMFUSION";

std::uint64_t fnv1a(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : bytes) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Writer {
public:
    template <typename T>
    void put(T v) {
        static_assert(std::is_unsigned_v<T>);
        for (std::size_t i = 0; i < sizeof(T); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
    void put_f64(double v) { put(std::bit_cast<std::uint64_t>(v)); }
    void put_bytes(std::string_view s) { out_.append(s); }
    std::string& str() { return out_; }

private:
    std::string out_;
};

class Reader {
public:
    explicit Reader(std::string_view bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T v = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
        }
        pos_ += sizeof(T);
        return v;
    }
    double get_f64() { return std::bit_cast<double>(get<std::uint64_t>()); }
    std::string_view get_bytes(std::size_t n) {
        need(n);
        auto s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (bytes_.size() - pos_ < n) throw PersistenceError("model file is truncated");
    }
    std::string_view bytes_;
    std::size_t pos_ = 0;
};

} // namespace

std::string serialize_model(const FusionModel& model) {
    const FusionConfig& cfg = model.config();
    Writer w;
    w.put_bytes(kMagic);
    w.put(kModelFormatVersion);
    w.put(static_cast<std::uint8_t>(cfg.variant));
    w.put(static_cast<std::uint8_t>(cfg.gates_from_projected ? 1 : 0));
    for (std::size_t d : {cfg.image_dim, cfg.clinical_dim, cfg.proj_dim, cfg.hidden_dim, cfg.num_classes}) {
        w.put(static_cast<std::uint64_t>(d));
    }
    const auto params = model.parameters();
    w.put(static_cast<std::uint32_t>(params.size()));
    for (const auto& p : params) {
        w.put(static_cast<std::uint32_t>(p.name.size()));
        w.put_bytes(p.name);
        w.put(static_cast<std::uint32_t>(p.tensor.rank()));
        for (std::size_t d : p.tensor.shape) w.put(static_cast<std::uint64_t>(d));
        for (double v : p.tensor.value) w.put_f64(v);
    }
    w.put(fnv1a(w.str()));
    return std::move(w.str());
}

FusionModel deserialize_model(std::string_view bytes, std::optional<Variant> expected) {
    if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
        throw PersistenceError("not a model file (bad magic)");
    }
    const std::string_view body = bytes.substr(0, bytes.size() - 8);
    Reader tail(bytes.substr(bytes.size() - 8));
    if (tail.get<std::uint64_t>() != fnv1a(body)) {
        throw PersistenceError("model file checksum mismatch (corrupted or truncated)");
    }

    Reader r(body);
    r.get_bytes(kMagic.size());
    const auto version = r.get<std::uint32_t>();
    if (version != kModelFormatVersion) {
        throw PersistenceError("unsupported model file version " + std::to_string(version));
    }
    const auto variant_tag = r.get<std::uint8_t>();
    if (variant_tag > static_cast<std::uint8_t>(Variant::CrossAttention)) {
        throw PersistenceError("unknown variant tag " + std::to_string(variant_tag));
    }
    FusionConfig cfg;
    cfg.variant = static_cast<Variant>(variant_tag);
    if (expected && *expected != cfg.variant) {
        throw VariantMismatchError("model file holds a " + std::string(variant_name(cfg.variant)) +
                                   " model, expected " + std::string(variant_name(*expected)));
    }
    cfg.gates_from_projected = r.get<std::uint8_t>() != 0;
    cfg.image_dim = r.get<std::uint64_t>();
    cfg.clinical_dim = r.get<std::uint64_t>();
    cfg.proj_dim = r.get<std::uint64_t>();
    cfg.hidden_dim = r.get<std::uint64_t>();
    cfg.num_classes = r.get<std::uint64_t>();

    const auto count = r.get<std::uint32_t>();
    std::vector<FusionModel::Parameter> params;
    for (std::uint32_t i = 0; i < count; ++i) {
        FusionModel::Parameter p;
        p.name = std::string(r.get_bytes(r.get<std::uint32_t>()));
        const auto rank = r.get<std::uint32_t>();
        if (rank == 0 || rank > 2) throw PersistenceError("parameter '" + p.name + "' has invalid rank");
        Shape shape(rank);
        std::size_t n = 1;
        for (auto& d : shape) {
            d = r.get<std::uint64_t>();
            n *= d;
        }
        if (n > r.remaining() / 8) throw PersistenceError("model file is truncated");
        std::vector<double> values(n);
        for (double& v : values) v = r.get_f64();
        p.tensor = DiffTensor(std::move(shape), std::move(values));
        params.push_back(std::move(p));
    }
    if (r.remaining() != 0) throw PersistenceError("model file has unexpected trailing bytes");
    try {
        return FusionModel::from_parameters(cfg, std::move(params));
    } catch (const ConfigError& e) {
        throw PersistenceError(std::string("model file has invalid dimensions: ") + e.what());
    } catch (const DimensionError& e) {
        throw PersistenceError(std::string("model file layout mismatch: ") + e.what());
    }
}

void save_model(const FusionModel& model, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_model(model));
}

FusionModel load_model(const std::filesystem::path& path, std::optional<Variant> expected) {
    auto bytes = read_file(path);
    if (!bytes) throw PersistenceError("cannot read model file " + path.string());
    return deserialize_model(*bytes, expected);
}

} // namespace mmfusion
