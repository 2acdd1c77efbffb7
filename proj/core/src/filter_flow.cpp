#include "pff/filter_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <memory>

#include "pff/detail/flow_kernels.hpp"
#include "pff/errors.hpp"

namespace pff {

FilterFlow identity_flow(int h, int w, int k) {
    if (k % 2 == 0) throw FormatError("identity_flow: k must be odd");
    FilterFlow f(h, w, k, FlowConstraint::simplex);
    const int center = (k * k - 1) / 2;  // offset (0,0)
    const int kk = k * k;
    for (int64_t p = 0; p < static_cast<int64_t>(h) * w; ++p)
        f.coeffs[p * kk + center] = 1.f;
    return f;
}

FilterFlow normalize_simplex(const FilterFlow& raw) {
    for (float v : raw.coeffs)
        if (!std::isfinite(v)) throw NumericalError("normalize_simplex: non-finite logit");
    FilterFlow out(raw.height, raw.width, raw.k, FlowConstraint::simplex);
    detail::softmax_per_pixel(raw.coeffs.data(), out.coeffs.data(),
                              static_cast<int64_t>(raw.height) * raw.width, raw.taps());
    return out;
}

Image apply_flow(const FilterFlow& flow, const Image& img) {
    if (flow.height != img.height || flow.width != img.width)
        throw FormatError("apply_flow: flow and image dimensions differ");
    Image out(img.channels, img.height, img.width);
    detail::apply_flow_kernel(flow.coeffs.data(), img.data.data(), out.data.data(),
                              img.channels, img.height, img.width, flow.k);
    return out;
}

std::vector<double> bruteforce_matrix_row(const FilterFlow& flow, int y, int x) {
    const int h = flow.height, w = flow.width, r = flow.radius();
    std::vector<double> row(static_cast<size_t>(h) * w, 0.0);
    const float* cf = flow.pixel(y, x);
    for (int dy = -r; dy <= r; ++dy) {
        const int sy = std::clamp(y + dy, 0, h - 1);
        for (int dx = -r; dx <= r; ++dx) {
            const int sx = std::clamp(x + dx, 0, w - 1);
            row[static_cast<size_t>(sy) * w + sx] += cf[(dy + r) * flow.k + (dx + r)];
        }
    }
    return row;
}

Image apply_flow_bruteforce(const FilterFlow& flow, const Image& img) {
    if (flow.height != img.height || flow.width != img.width)
        throw FormatError("apply_flow_bruteforce: flow and image dimensions differ");
    if (img.height > 64 || img.width > 64)
        throw FormatError("apply_flow_bruteforce: guarded to images <= 64x64");
    const int h = img.height, w = img.width;
    Image out(img.channels, h, w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const auto row = bruteforce_matrix_row(flow, y, x);
            for (int c = 0; c < img.channels; ++c) {
                const float* src = img.plane(c);
                double acc = 0.0;
                for (size_t i = 0; i < row.size(); ++i) acc += row[i] * src[i];
                out.at(c, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

FlowField expected_flow(const FilterFlow& flow) {
    const int r = flow.radius(), k = flow.k, kk = flow.taps();
    FlowField field;
    field.height = flow.height;
    field.width = flow.width;
    field.vx.assign(static_cast<size_t>(flow.height) * flow.width, 0.f);
    field.vy.assign(static_cast<size_t>(flow.height) * flow.width, 0.f);
    field.from_free = flow.constraint == FlowConstraint::free;

    const int64_t pixels = static_cast<int64_t>(flow.height) * flow.width;
    parallel_for(0, pixels, [&](int64_t p) {
        const float* cf = flow.coeffs.data() + p * kk;
        double sx = 0, sy = 0, norm = 0;
        if (flow.constraint == FlowConstraint::simplex) {
            for (int o = 0; o < kk; ++o) {
                sx += static_cast<double>(cf[o]) * (o % k - r);
                sy += static_cast<double>(cf[o]) * (o / k - r);
            }
        } else {
            for (int o = 0; o < kk; ++o) {
                const double a = std::fabs(cf[o]);
                norm += a;
                sx += a * (o % k - r);
                sy += a * (o / k - r);
            }
            if (norm > 0) {
                sx /= norm;
                sy /= norm;
            }
        }
        field.vx[p] = static_cast<float>(sx);
        field.vy[p] = static_cast<float>(sy);
    });
    return field;
}

namespace {

void put_u32(FILE* f, uint32_t v) {
    const uint8_t b[4] = {static_cast<uint8_t>(v), static_cast<uint8_t>(v >> 8),
                          static_cast<uint8_t>(v >> 16), static_cast<uint8_t>(v >> 24)};
    std::fwrite(b, 1, 4, f);
}

uint32_t get_u32(FILE* f, const std::string& path) {
    uint8_t b[4];
    if (std::fread(b, 1, 4, f) != 4) throw FormatError(path + ": truncated flow file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};

}  // namespace

void write_flow(const FilterFlow& flow, const std::string& path) {
    std::unique_ptr<FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot write " + path);
    std::fwrite("PFF1", 1, 4, f.get());
    put_u32(f.get(), static_cast<uint32_t>(flow.height));
    put_u32(f.get(), static_cast<uint32_t>(flow.width));
    put_u32(f.get(), static_cast<uint32_t>(flow.k));
    put_u32(f.get(), static_cast<uint32_t>(flow.constraint));
    static_assert(sizeof(float) == 4);
    // f32 payload, little-endian hosts write verbatim
    if (!flow.coeffs.empty() &&
        std::fwrite(flow.coeffs.data(), 4, flow.coeffs.size(), f.get()) != flow.coeffs.size())
        throw IoError("short write to " + path);
}

FilterFlow read_flow(const std::string& path) {
    std::unique_ptr<FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path);
    char magic[4];
    if (std::fread(magic, 1, 4, f.get()) != 4 || std::memcmp(magic, "PFF1", 4) != 0)
        throw FormatError(path + ": not a PFF1 flow file");
    const uint32_t h = get_u32(f.get(), path);
    const uint32_t w = get_u32(f.get(), path);
    const uint32_t k = get_u32(f.get(), path);
    const uint32_t code = get_u32(f.get(), path);
    if (k == 0 || k % 2 == 0 || h == 0 || w == 0 || code > 1)
        throw FormatError(path + ": bad flow header");

    const size_t count = static_cast<size_t>(h) * w * k * k;
    std::fseek(f.get(), 0, SEEK_END);
    const long size = std::ftell(f.get());
    if (static_cast<size_t>(size) != 20 + 4 * count)
        throw FormatError(path + ": flow payload length mismatch");
    std::fseek(f.get(), 20, SEEK_SET);

    FilterFlow flow(static_cast<int>(h), static_cast<int>(w), static_cast<int>(k),
                    static_cast<FlowConstraint>(code));
    if (std::fread(flow.coeffs.data(), 4, count, f.get()) != count)
        throw FormatError(path + ": truncated flow payload");

    for (float v : flow.coeffs)
        if (!std::isfinite(v)) throw FormatError(path + ": non-finite coefficient");
    if (flow.constraint == FlowConstraint::simplex) {
        const int kk = flow.taps();
        for (int64_t p = 0; p < static_cast<int64_t>(h) * w; ++p) {
            double sum = 0;
            for (int o = 0; o < kk; ++o) {
                const float v = flow.coeffs[p * kk + o];
                if (v < 0.f) throw FormatError(path + ": negative weight under simplex constraint");
                sum += v;
            }
            if (std::fabs(sum - 1.0) > 1e-5)
                throw FormatError(path + ": simplex filter does not sum to 1");
        }
    }
    return flow;
}

}  // namespace pff
