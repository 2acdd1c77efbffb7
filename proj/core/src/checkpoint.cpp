#include "pff/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <map>
#include <memory>

#include "pff/errors.hpp"

namespace pff {

namespace {

constexpr uint32_t kVersion = 1;

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void put_u32(FILE* f, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    std::fwrite(b, 1, 4, f);
}

void put_u64(FILE* f, uint64_t v) {
    put_u32(f, static_cast<uint32_t>(v));
    put_u32(f, static_cast<uint32_t>(v >> 32));
}

uint32_t get_u32(FILE* f, const std::string& path) {
    uint8_t b[4];
    if (std::fread(b, 1, 4, f) != 4) throw FormatError(path + ": truncated checkpoint");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

uint64_t get_u64(FILE* f, const std::string& path) {
    const uint64_t lo = get_u32(f, path);
    const uint64_t hi = get_u32(f, path);
    return lo | (hi << 32);
}

void write_tensor(FILE* f, const std::string& name, const std::vector<int>& shape,
                  const std::vector<float>& data) {
    put_u32(f, static_cast<uint32_t>(name.size()));
    std::fwrite(name.data(), 1, name.size(), f);
    put_u32(f, static_cast<uint32_t>(shape.size()));
    size_t count = 1;
    for (int d : shape) {
        put_u32(f, static_cast<uint32_t>(d));
        count *= static_cast<size_t>(d);
    }
    if (count != data.size()) throw FormatError("checkpoint: shape/payload mismatch for " + name);
    std::fwrite(data.data(), 4, data.size(), f);
}

struct RawTensor {
    std::vector<int> shape;
    std::vector<float> data;
};

RawTensor read_tensor(FILE* f, std::string& name, const std::string& path) {
    const uint32_t name_len = get_u32(f, path);
    if (name_len > 4096) throw FormatError(path + ": absurd tensor name length");
    name.resize(name_len);
    if (std::fread(name.data(), 1, name_len, f) != name_len)
        throw FormatError(path + ": truncated checkpoint");
    RawTensor t;
    const uint32_t ndim = get_u32(f, path);
    if (ndim > 8) throw FormatError(path + ": absurd tensor rank");
    size_t count = 1;
    for (uint32_t i = 0; i < ndim; ++i) {
        const uint32_t d = get_u32(f, path);
        t.shape.push_back(static_cast<int>(d));
        count *= d;
    }
    if (count > (1u << 30)) throw FormatError(path + ": absurd tensor size");
    t.data.resize(count);
    if (std::fread(t.data.data(), 4, count, f) != count)
        throw FormatError(path + ": truncated tensor payload");
    return t;
}

}  // namespace

void save_checkpoint(Network& net, const TrainState* state, const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot write " + path);
    std::fwrite("PFFC", 1, 4, f.get());
    put_u32(f.get(), kVersion);

    const std::string cfg = net.config().to_kv();
    put_u32(f.get(), static_cast<uint32_t>(cfg.size()));
    std::fwrite(cfg.data(), 1, cfg.size(), f.get());

    const uint8_t has_state = state ? 1 : 0;
    std::fwrite(&has_state, 1, 1, f.get());
    if (state) {
        put_u64(f.get(), static_cast<uint64_t>(state->step));
        for (uint64_t wrd : state->rng.state()) put_u64(f.get(), wrd);
    }

    auto params = net.params();
    auto stats = net.state_tensors();
    uint32_t count = static_cast<uint32_t>(params.size() + stats.size());
    if (state) count += static_cast<uint32_t>(2 * params.size());
    put_u32(f.get(), count);

    for (auto& p : params) write_tensor(f.get(), p.name, p.shape, *p.value);
    for (auto& s : stats) write_tensor(f.get(), s.name, s.shape, *s.value);
    if (state) {
        if (state->m.size() != params.size() || state->v.size() != params.size())
            throw FormatError("checkpoint: optimizer moments misaligned with parameters");
        for (size_t i = 0; i < params.size(); ++i)
            write_tensor(f.get(), "opt.m." + params[i].name, params[i].shape, state->m[i]);
        for (size_t i = 0; i < params.size(); ++i)
            write_tensor(f.get(), "opt.v." + params[i].name, params[i].shape, state->v[i]);
    }
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path);
    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, "PFFC", 4) != 0)
        throw FormatError(path + ": not a PFFC checkpoint");
    const uint32_t version = get_u32(f.get(), path);
    if (version != kVersion)
        throw FormatError(path + ": unsupported checkpoint version " + std::to_string(version));

    const uint32_t cfg_len = get_u32(f.get(), path);
    if (cfg_len > (1u << 20)) throw FormatError(path + ": absurd config length");
    std::string cfg_text(cfg_len, '\0');
    if (std::fread(cfg_text.data(), 1, cfg_len, f.get()) != cfg_len)
        throw FormatError(path + ": truncated checkpoint");
    const NetConfig cfg = NetConfig::from_kv(cfg_text);

    uint8_t has_state = 0;
    if (std::fread(&has_state, 1, 1, f.get()) != 1)
        throw FormatError(path + ": truncated checkpoint");

    LoadedCheckpoint out{Network(cfg), std::nullopt};
    int64_t step = 0;
    std::array<uint64_t, 4> rng_state{};
    if (has_state) {
        step = static_cast<int64_t>(get_u64(f.get(), path));
        for (auto& wrd : rng_state) wrd = get_u64(f.get(), path);
    }

    const uint32_t count = get_u32(f.get(), path);
    std::map<std::string, RawTensor> tensors;
    for (uint32_t i = 0; i < count; ++i) {
        std::string name;
        RawTensor t = read_tensor(f.get(), name, path);
        if (!tensors.emplace(name, std::move(t)).second)
            throw FormatError(path + ": duplicate tensor '" + name + "'");
    }

    auto fill = [&](const ParamRef<float>& ref, const std::string& name) {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw FormatError(path + ": missing tensor '" + name + "'");
        if (it->second.shape != ref.shape)
            throw FormatError(path + ": shape mismatch for '" + name + "'");
        *ref.value = it->second.data;
    };

    auto params = out.net.params();
    for (auto& p : params) fill(p, p.name);
    for (auto& s : out.net.state_tensors()) fill(s, s.name);

    if (has_state) {
        TrainState st;
        st.step = step;
        st.rng = Rng(0);
        st.rng.set_state(rng_state);
        for (auto& p : params) {
            auto mit = tensors.find("opt.m." + p.name);
            auto vit = tensors.find("opt.v." + p.name);
            if (mit == tensors.end() || vit == tensors.end())
                throw FormatError(path + ": missing optimizer moments for '" + p.name + "'");
            if (mit->second.shape != p.shape || vit->second.shape != p.shape)
                throw FormatError(path + ": moment shape mismatch for '" + p.name + "'");
            st.m.push_back(mit->second.data);
            st.v.push_back(vit->second.data);
        }
        out.state = std::move(st);
    }
    return out;
}

}  // namespace pff
