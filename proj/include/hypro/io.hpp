#pragma once

#include "hypro/core.hpp"
#include "hypro/energy.hpp"
#include "hypro/error.hpp"
#include "hypro/inference.hpp"
#include "hypro/intensity.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace hypro {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Event datasets: JSON lines. An optional first line without an "events" key is a
// header {"num_types": K, "time_unit": "...", "k_base": 0|1}; every other line is
// {"seq_id": "...", "t_start": 0, "t_end": 1.0, "events": [{"t": 0.3, "k": 0}, ...]}.

namespace detail {

inline std::ifstream open_input(const std::filesystem::path& path, bool binary = false) {
    std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
    if (!in) throw ParseError("cannot open '" + path.string() + "'");
    return in;
}

inline std::ofstream open_output(const std::filesystem::path& path, bool binary = false) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    return out;
}

inline json events_to_json(const EventSequence& seq) {
    json arr = json::array();
    for (const auto& e : seq) arr.push_back({{"t", e.time}, {"k", e.type}});
    return arr;
}

inline std::vector<Event> events_from_json(const json& arr, long k_base, const std::string& where) {
    if (!arr.is_array()) throw ParseError(where + ": \"events\" must be an array");
    std::vector<Event> events;
    events.reserve(arr.size());
    for (const auto& ev : arr) {
        if (!ev.contains("t") || !ev.contains("k") || !ev["t"].is_number() || !ev["k"].is_number_integer()) {
            throw ParseError(where + ": each event needs numeric \"t\" and integer \"k\"");
        }
        const long k = ev["k"].get<long>() - k_base;
        if (k < 0) throw SchemaError(where + ": event type below k_base");
        events.push_back(Event{ev["t"].get<double>(), static_cast<TypeId>(k)});
    }
    return events;
}

} // namespace detail

/// Reads a JSON-lines dataset. K comes from the header, else from `num_types`, else
/// from the largest observed type. Tied timestamps are separated by kTieEpsilon steps.
[[nodiscard]] inline Dataset load_dataset(const std::filesystem::path& path,
                                          std::optional<std::size_t> num_types = std::nullopt) {
    auto in = detail::open_input(path);
    Dataset d;
    long k_base = 0;
    std::optional<std::size_t> declared_k;
    std::string line;
    std::size_t line_no = 0;
    std::size_t max_type = 0;
    bool any_event = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
        if (!obj.is_object()) throw ParseError(where + ": expected a JSON object");
        if (!obj.contains("events")) {
            if (!d.sequences.empty()) throw ParseError(where + ": header must precede all sequences");
            if (obj.contains("k_base")) k_base = obj["k_base"].get<long>();
            if (obj.contains("num_types")) declared_k = obj["num_types"].get<std::size_t>();
            if (obj.contains("time_unit")) d.time_unit = obj["time_unit"].get<std::string>();
            continue;
        }
        try {
            std::vector<Event> events = detail::events_from_json(obj["events"], k_base, where);
            perturb_duplicate_times(events);
            const double t_start = obj.value("t_start", 0.0);
            if (!obj.contains("t_end") || !obj["t_end"].is_number()) throw ParseError(where + ": missing \"t_end\"");
            const double t_end = obj["t_end"].get<double>();
            for (const auto& e : events) {
                max_type = std::max(max_type, e.type);
                any_event = true;
            }
            d.ids.push_back(obj.contains("seq_id") ? obj["seq_id"].get<std::string>() : std::to_string(d.size()));
            d.sequences.emplace_back(std::move(events), t_start, t_end);
        } catch (const Error& e) {
            if (dynamic_cast<const ParseError*>(&e) != nullptr) throw;
            throw SchemaError(where + ": " + e.what());
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    if (declared_k && num_types && *declared_k != *num_types) {
        throw SchemaError(path.string() + ": file declares K=" + std::to_string(*declared_k) + " but K=" +
                          std::to_string(*num_types) + " was expected");
    }
    d.num_types = declared_k ? *declared_k : num_types ? *num_types : (any_event ? max_type + 1 : 1);
    d.validate();
    return d;
}

inline void save_dataset(const std::filesystem::path& path, const Dataset& d) {
    auto out = detail::open_output(path);
    out << json{{"num_types", d.num_types}, {"time_unit", d.time_unit}, {"k_base", 0}}.dump() << '\n';
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto& s = d.sequences[i];
        out << json{{"seq_id", d.id(i)}, {"t_start", s.t_start()}, {"t_end", s.t_end()},
                    {"events", detail::events_to_json(s)}}
                   .dump()
            << '\n';
    }
}

// ---------------------------------------------------------------------------
// Model files: magic "HYPROMDL", u32 version, u32 family tag, u64 K, u64 parameter
// count, parameters as little-endian IEEE-754 doubles. Energy models append the
// feature configuration, layer widths and standardization vectors.

inline constexpr std::array<char, 8> kModelMagic{'H', 'Y', 'P', 'R', 'O', 'M', 'D', 'L'};
inline constexpr std::uint32_t kModelFormatVersion = 1;

enum class FamilyTag : std::uint32_t { kPoisson = 0, kHawkesExp = 1, kEnergyMlp = 2 };

namespace detail {

class BinaryWriter {
public:
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        put(bits, 8);
    }
    void raw(const char* p, std::size_t n) { buf_.append(p, n); }
    [[nodiscard]] const std::string& bytes() const noexcept { return buf_; }

private:
    void put(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
    }
    std::string buf_;
};

class BinaryReader {
public:
    BinaryReader(std::string bytes, std::string name) : buf_(std::move(bytes)), name_(std::move(name)) {}
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64() {
        const std::uint64_t bits = get(8);
        double v;
        std::memcpy(&v, &bits, sizeof v);
        return v;
    }
    void raw(char* p, std::size_t n) {
        need(n);
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    [[nodiscard]] std::size_t remaining() const noexcept { return buf_.size() - pos_; }
    void need(std::size_t n) const {
        if (buf_.size() - pos_ < n) throw FormatError(name_ + ": file is truncated or corrupt");
    }

private:
    std::uint64_t get(int n) {
        need(static_cast<std::size_t>(n));
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
        pos_ += static_cast<std::size_t>(n);
        return v;
    }
    std::string buf_;
    std::string name_;
    std::size_t pos_{0};
};

inline void write_header(BinaryWriter& w, FamilyTag tag, std::uint64_t k, std::span<const double> params) {
    w.raw(kModelMagic.data(), kModelMagic.size());
    w.u32(kModelFormatVersion);
    w.u32(static_cast<std::uint32_t>(tag));
    w.u64(k);
    w.u64(params.size());
    for (double p : params) w.f64(p);
}

struct ModelHeader {
    FamilyTag tag{};
    std::uint64_t num_types{0};
    std::vector<double> params;
};

inline ModelHeader read_header(BinaryReader& r, const std::string& name) {
    std::array<char, 8> magic{};
    r.raw(magic.data(), magic.size());
    if (magic != kModelMagic) throw FormatError(name + ": not a model file (bad magic)");
    const std::uint32_t version = r.u32();
    if (version != kModelFormatVersion) {
        throw FormatError(name + ": incompatible model format version " + std::to_string(version) + " (expected " +
                          std::to_string(kModelFormatVersion) + ")");
    }
    ModelHeader h;
    const std::uint32_t tag = r.u32();
    if (tag > static_cast<std::uint32_t>(FamilyTag::kEnergyMlp)) {
        throw FormatError(name + ": unknown family tag " + std::to_string(tag));
    }
    h.tag = static_cast<FamilyTag>(tag);
    h.num_types = r.u64();
    const std::uint64_t count = r.u64();
    r.need(count * 8);
    h.params.resize(count);
    for (auto& p : h.params) p = r.f64();
    return h;
}

inline std::string slurp(const std::filesystem::path& path) {
    auto in = open_input(path, /*binary=*/true);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void dump(const std::filesystem::path& path, const std::string& bytes) {
    auto out = open_output(path, /*binary=*/true);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

} // namespace detail

inline void save_model(const std::filesystem::path& path, const IntensityModel& model) {
    detail::BinaryWriter w;
    const FamilyTag tag = model.family() == ModelFamily::kPoisson ? FamilyTag::kPoisson : FamilyTag::kHawkesExp;
    const auto params = model.parameters();
    detail::write_header(w, tag, model.num_types(), params);
    detail::dump(path, w.bytes());
}

[[nodiscard]] inline std::unique_ptr<IntensityModel> load_model(const std::filesystem::path& path) {
    detail::BinaryReader r(detail::slurp(path), path.string());
    auto h = detail::read_header(r, path.string());
    if (h.tag == FamilyTag::kEnergyMlp) throw FormatError(path.string() + ": holds an energy model, not a base model");
    if (r.remaining() != 0) throw FormatError(path.string() + ": trailing bytes after parameters");
    const ModelFamily family = h.tag == FamilyTag::kPoisson ? ModelFamily::kPoisson : ModelFamily::kHawkesExp;
    return make_model(family, h.num_types, h.params);
}

inline void save_energy(const std::filesystem::path& path, const EnergyFunction& fn) {
    detail::BinaryWriter w;
    detail::write_header(w, FamilyTag::kEnergyMlp, fn.features().num_types, fn.parameters());
    w.u64(fn.features().time_basis_count);
    w.u64(fn.features().window_count);
    w.u64(fn.layers().size());
    for (std::size_t l : fn.layers()) w.u64(l);
    for (double m : fn.feature_mean()) w.f64(m);
    for (double s : fn.feature_scale()) w.f64(s);
    detail::dump(path, w.bytes());
}

[[nodiscard]] inline EnergyFunction load_energy(const std::filesystem::path& path) {
    const std::string name = path.string();
    detail::BinaryReader r(detail::slurp(path), name);
    auto h = detail::read_header(r, name);
    if (h.tag != FamilyTag::kEnergyMlp) throw FormatError(name + ": holds a base model, not an energy model");
    FeatureConfig fc;
    fc.num_types = h.num_types;
    fc.time_basis_count = r.u64();
    fc.window_count = r.u64();
    const std::uint64_t depth = r.u64();
    if (depth < 2 || depth > 64) throw FormatError(name + ": implausible layer count");
    std::vector<std::size_t> layers(depth);
    for (auto& l : layers) l = r.u64();
    const std::size_t d = layers.front();
    r.need(2 * d * 8);
    std::vector<double> mean(d);
    std::vector<double> scale(d);
    for (auto& m : mean) m = r.f64();
    for (auto& s : scale) s = r.f64();
    if (r.remaining() != 0) throw FormatError(name + ": trailing bytes after energy model");
    return EnergyFunction(fc, std::move(layers), std::move(h.params), std::move(mean), std::move(scale));
}

// ---------------------------------------------------------------------------
// Prediction dumps: one JSON object per test prefix.

struct PredictionRecord {
    std::string prefix_id;
    double T{0.0};
    double T_prime{0.0};
    EventSequence chosen;
    std::size_t chosen_index{0};
    std::vector<WeightedProposal> proposals;
    std::optional<double> observed_energy;  // energy of the true completion, when known
};

[[nodiscard]] inline json prediction_to_json(const PredictionRecord& p) {
    json props = json::array();
    for (const auto& w : p.proposals) {
        props.push_back({{"weight", w.weight}, {"energy", w.energy}, {"events", detail::events_to_json(w.continuation)}});
    }
    json j{{"prefix_id", p.prefix_id},
           {"T", p.T},
           {"T_prime", p.T_prime},
           {"chosen_index", p.chosen_index},
           {"chosen", detail::events_to_json(p.chosen)},
           {"proposals", std::move(props)}};
    if (p.observed_energy) j["observed_energy"] = *p.observed_energy;
    return j;
}

inline void save_predictions(const std::filesystem::path& path, const std::vector<PredictionRecord>& preds) {
    auto out = detail::open_output(path);
    for (const auto& p : preds) out << prediction_to_json(p).dump() << '\n';
}

[[nodiscard]] inline std::vector<PredictionRecord> load_predictions(const std::filesystem::path& path) {
    auto in = detail::open_input(path);
    std::vector<PredictionRecord> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        try {
            const json j = json::parse(line);
            PredictionRecord p;
            p.prefix_id = j.at("prefix_id").get<std::string>();
            p.T = j.at("T").get<double>();
            p.T_prime = j.at("T_prime").get<double>();
            p.chosen_index = j.value("chosen_index", std::size_t{0});
            p.chosen = EventSequence(detail::events_from_json(j.at("chosen"), 0, where), p.T, p.T_prime);
            for (const auto& w : j.value("proposals", json::array())) {
                p.proposals.push_back(
                    {EventSequence(detail::events_from_json(w.at("events"), 0, where), p.T, p.T_prime),
                     w.at("weight").get<double>(), w.at("energy").get<double>()});
            }
            if (j.contains("observed_energy")) p.observed_energy = j["observed_energy"].get<double>();
            out.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw ParseError(where + ": " + e.what());
        } catch (const Error& e) {
            throw ParseError(where + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

[[nodiscard]] inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in, nullptr, /*allow_exceptions=*/true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

inline void write_json_file(const std::filesystem::path& path, const json& j) {
    auto out = detail::open_output(path);
    out << j.dump(2) << '\n';
}

} // namespace hypro
