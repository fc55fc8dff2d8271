#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ctseg/network.hpp"

// Flat binary model container. Header: magic, version, flags, layer
// count. Per layer: kind tag, config integers, then each parameter
// buffer as a 32-bit length followed by 32-bit little-endian floats.
// Round trips are bit-exact for float parameters.

namespace ctseg {

namespace detail {

inline constexpr std::uint32_t kCheckpointMagic = 0x3154454eu; // "NET1"
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f32(std::string& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

struct Reader {
    const std::string& buf;
    size_t pos = 0;

    std::uint32_t u32() {
        if (pos + 4 > buf.size()) throw LengthError("checkpoint: truncated");
        std::uint32_t v = 0;
        for (int i = 3; i >= 0; --i)
            v = (v << 8) | static_cast<unsigned char>(buf[pos + static_cast<size_t>(i)]);
        pos += 4;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
};

inline void put_buffer(std::string& out, const std::vector<float>& v) {
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    for (float x : v) put_f32(out, x);
}

inline std::vector<float> get_buffer(Reader& r) {
    const std::uint32_t n = r.u32();
    std::vector<float> v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = r.f32();
    return v;
}

} // namespace detail

inline void save_checkpoint(const NetworkSpec& spec, const NetworkParams<float>& params,
                            const std::string& path) {
    if (spec.layers.size() != params.layers.size())
        throw ShapeError("checkpoint: spec/params layer count mismatch");
    std::string out;
    detail::put_u32(out, detail::kCheckpointMagic);
    detail::put_u32(out, detail::kCheckpointVersion);
    detail::put_u32(out, spec.global_skip ? 1u : 0u);
    detail::put_u32(out, static_cast<std::uint32_t>(spec.layers.size()));
    for (size_t i = 0; i < spec.layers.size(); ++i) {
        const LayerSpec& l = spec.layers[i];
        const LayerParams<float>& p = params.layers[i];
        detail::put_u32(out, static_cast<std::uint32_t>(l.kind));
        detail::put_u32(out, static_cast<std::uint32_t>(l.in_ch));
        detail::put_u32(out, static_cast<std::uint32_t>(l.out_ch));
        detail::put_u32(out, static_cast<std::uint32_t>(l.k));
        detail::put_u32(out, static_cast<std::uint32_t>(l.stride));
        detail::put_u32(out, static_cast<std::uint32_t>(l.pad));
        detail::put_u32(out, static_cast<std::uint32_t>(l.ch));
        detail::put_f32(out, static_cast<float>(l.alpha));
        detail::put_f32(out, static_cast<float>(l.eps));
        detail::put_f32(out, static_cast<float>(l.momentum));
        detail::put_u32(out, static_cast<std::uint32_t>(l.r));
        detail::put_u32(out, static_cast<std::uint32_t>(l.in_dim));
        detail::put_u32(out, static_cast<std::uint32_t>(l.out_dim));
        detail::put_u32(out, p.stats_ready ? 1u : 0u);
        detail::put_buffer(out, p.w);
        detail::put_buffer(out, p.b);
        detail::put_buffer(out, p.gamma);
        detail::put_buffer(out, p.beta);
        detail::put_buffer(out, p.run_mean);
        detail::put_buffer(out, p.run_var);
        detail::put_buffer(out, p.slope);
    }
    const std::string tmp = path + ".tmp";
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("checkpoint: cannot write " + tmp);
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    f.close();
    if (!f) throw IoError("checkpoint: write failed for " + tmp);
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("checkpoint: cannot rename " + tmp);
}

struct Checkpoint {
    NetworkSpec spec;
    NetworkParams<float> params;
};

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("checkpoint: cannot open " + path);
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    detail::Reader r{buf};
    if (r.u32() != detail::kCheckpointMagic) throw FormatError("checkpoint: bad magic in " + path);
    if (r.u32() != detail::kCheckpointVersion)
        throw FormatError("checkpoint: unsupported version in " + path);
    Checkpoint ck;
    ck.spec.global_skip = r.u32() != 0;
    const std::uint32_t n_layers = r.u32();
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        LayerSpec l{static_cast<LayerKind>(r.u32())};
        l.in_ch = static_cast<int>(r.u32());
        l.out_ch = static_cast<int>(r.u32());
        l.k = static_cast<int>(r.u32());
        l.stride = static_cast<int>(r.u32());
        l.pad = static_cast<int>(r.u32());
        l.ch = static_cast<int>(r.u32());
        l.alpha = r.f32();
        l.eps = r.f32();
        l.momentum = r.f32();
        l.r = static_cast<int>(r.u32());
        l.in_dim = static_cast<int>(r.u32());
        l.out_dim = static_cast<int>(r.u32());
        LayerParams<float> p;
        p.stats_ready = r.u32() != 0;
        p.w = detail::get_buffer(r);
        p.b = detail::get_buffer(r);
        p.gamma = detail::get_buffer(r);
        p.beta = detail::get_buffer(r);
        p.run_mean = detail::get_buffer(r);
        p.run_var = detail::get_buffer(r);
        p.slope = detail::get_buffer(r);
        ck.spec.layers.push_back(l);
        ck.params.layers.push_back(std::move(p));
    }
    if (r.pos != buf.size()) throw FormatError("checkpoint: trailing bytes in " + path);
    return ck;
}

} // namespace ctseg
