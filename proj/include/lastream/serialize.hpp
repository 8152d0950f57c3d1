#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "lastream/error.hpp"
#include "lastream/sketches.hpp"

namespace lastream {

// Persistent sketch state. Both encodings carry a header (format version, type
// tag, universe, shape, seeds) followed by the counters in row-major order.
// The binary form is little-endian fixed-width: "LSKT", u32 version, u8 tag,
// then u64/f64 fields in the same order as the JSON keys.

inline constexpr std::uint32_t kSketchFormatVersion = 1;

enum class SketchTag : std::uint8_t { ams = 1, count_sketch = 2, subsample = 3 };

inline nlohmann::json to_json(const AmsSketch& s) {
    return {{"version", kSketchFormatVersion}, {"type", "ams"},         {"n", s.universe()},
            {"repetitions", s.repetitions()},  {"seeds", s.seeds()},    {"counters", s.values()}};
}

inline nlohmann::json to_json(const CountSketch& s) {
    return {{"version", kSketchFormatVersion}, {"type", "count-sketch"}, {"n", s.universe()},
            {"depth", s.depth()},              {"width", s.width()},     {"seed", s.seed()},
            {"counters", s.table()}};
}

inline nlohmann::json to_json(const SubsampleFpEstimator& s) {
    std::vector<std::pair<std::uint64_t, double>> items(s.counts().begin(), s.counts().end());
    std::sort(items.begin(), items.end());
    nlohmann::json counters = nlohmann::json::array();
    for (const auto& [i, c] : items) counters.push_back({i, c});
    return {{"version", kSketchFormatVersion},
            {"type", "subsample"},
            {"n", s.universe()},
            {"p", s.p()},
            {"rate", s.rate()},
            {"seed", s.seed()},
            {"hash", s.mode() == MembershipHash::poly ? "poly" : "sha256"},
            {"counters", counters}};
}

namespace detail {

inline void check_header(const nlohmann::json& j, const char* type) {
    if (!j.is_object() || j.value("version", 0u) != kSketchFormatVersion || j.value("type", "") != type)
        throw DataError(std::string("not a version-1 '") + type + "' sketch document");
}

}  // namespace detail

inline AmsSketch ams_from_json(const nlohmann::json& j) {
    detail::check_header(j, "ams");
    AmsSketch s(j.at("n").get<std::uint64_t>(), j.at("seeds").get<std::vector<std::uint64_t>>());
    auto z = j.at("counters").get<std::vector<double>>();
    if (z.size() != s.repetitions()) throw DataError("AMS counter count does not match repetitions");
    s.values() = std::move(z);
    return s;
}

inline CountSketch count_sketch_from_json(const nlohmann::json& j) {
    detail::check_header(j, "count-sketch");
    CountSketch s(j.at("n").get<std::uint64_t>(), j.at("depth").get<std::size_t>(),
                  j.at("width").get<std::size_t>(), j.at("seed").get<std::uint64_t>());
    auto t = j.at("counters").get<std::vector<double>>();
    if (t.size() != s.counters()) throw DataError("count-sketch counter count does not match depth * width");
    s.table() = std::move(t);
    return s;
}

inline SubsampleFpEstimator subsample_from_json(const nlohmann::json& j) {
    detail::check_header(j, "subsample");
    const auto mode = j.at("hash").get<std::string>() == "sha256" ? MembershipHash::sha256 : MembershipHash::poly;
    SubsampleFpEstimator s(j.at("n").get<std::uint64_t>(), j.at("p").get<double>(), j.at("rate").get<double>(),
                           j.at("seed").get<std::uint64_t>(), mode);
    for (const auto& e : j.at("counters")) s.add_sampled(e.at(0).get<std::uint64_t>(), e.at(1).get<double>());
    return s;
}

namespace detail {

class BinaryWriter {
public:
    explicit BinaryWriter(std::ostream& out) : out_(out) {}
    template <class T>
    void put(T v) {
        char buf[sizeof(T)];
        std::memcpy(buf, &v, sizeof(T));
        out_.write(buf, sizeof(T));
    }

private:
    std::ostream& out_;
};

class BinaryReader {
public:
    explicit BinaryReader(std::istream& in) : in_(in) {}
    template <class T>
    T get() {
        char buf[sizeof(T)];
        if (!in_.read(buf, sizeof(T))) throw DataError("truncated sketch file");
        T v;
        std::memcpy(&v, buf, sizeof(T));
        return v;
    }

private:
    std::istream& in_;
};

inline void write_header(BinaryWriter& w, std::ostream& out, SketchTag tag, std::uint64_t n) {
    out.write("LSKT", 4);
    w.put<std::uint32_t>(kSketchFormatVersion);
    w.put<std::uint8_t>(static_cast<std::uint8_t>(tag));
    w.put<std::uint64_t>(n);
}

inline std::uint64_t read_header(BinaryReader& r, std::istream& in, SketchTag tag) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, "LSKT", 4) != 0) throw DataError("bad sketch magic");
    if (r.get<std::uint32_t>() != kSketchFormatVersion) throw DataError("unsupported sketch version");
    if (r.get<std::uint8_t>() != static_cast<std::uint8_t>(tag)) throw DataError("unexpected sketch type");
    return r.get<std::uint64_t>();
}

}  // namespace detail

inline void write_binary(std::ostream& out, const AmsSketch& s) {
    detail::BinaryWriter w(out);
    detail::write_header(w, out, SketchTag::ams, s.universe());
    w.put<std::uint64_t>(s.repetitions());
    for (auto seed : s.seeds()) w.put<std::uint64_t>(seed);
    for (double z : s.values()) w.put<double>(z);
}

inline void write_binary(std::ostream& out, const CountSketch& s) {
    detail::BinaryWriter w(out);
    detail::write_header(w, out, SketchTag::count_sketch, s.universe());
    w.put<std::uint64_t>(s.depth());
    w.put<std::uint64_t>(s.width());
    w.put<std::uint64_t>(s.seed());
    for (double v : s.table()) w.put<double>(v);
}

inline AmsSketch read_ams_binary(std::istream& in) {
    detail::BinaryReader r(in);
    const auto n = detail::read_header(r, in, SketchTag::ams);
    const auto reps = r.get<std::uint64_t>();
    if (reps == 0 || reps > (1u << 24)) throw DataError("implausible repetition count");
    std::vector<std::uint64_t> seeds(reps);
    for (auto& s : seeds) s = r.get<std::uint64_t>();
    AmsSketch out(n, seeds);
    for (auto& z : out.values()) z = r.get<double>();
    return out;
}

inline CountSketch read_count_sketch_binary(std::istream& in) {
    detail::BinaryReader r(in);
    const auto n = detail::read_header(r, in, SketchTag::count_sketch);
    const auto depth = r.get<std::uint64_t>();
    const auto width = r.get<std::uint64_t>();
    const auto seed = r.get<std::uint64_t>();
    if (depth == 0 || width == 0 || depth * width > (std::uint64_t{1} << 28))
        throw DataError("implausible count-sketch shape");
    CountSketch out(n, depth, width, seed);
    for (auto& v : out.table()) v = r.get<double>();
    return out;
}

}  // namespace lastream
