#include "pff/degrade.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pff/errors.hpp"
#include "pff/resample.hpp"

namespace pff {

const char* task_name(Task t) {
    switch (t) {
        case Task::motion_blur: return "motion-blur";
        case Task::jpeg: return "jpeg";
        case Task::super_resolution: return "super-resolution";
        case Task::none: return "none";
    }
    return "?";
}

Task parse_task(const std::string& name) {
    if (name == "motion-blur" || name == "deblur") return Task::motion_blur;
    if (name == "jpeg") return Task::jpeg;
    if (name == "super-resolution" || name == "sr") return Task::super_resolution;
    if (name == "none") return Task::none;
    throw FormatError("unknown task '" + name + "'");
}

std::string DegradeSpec::to_kv() const {
    std::ostringstream os;
    os << "task=" << task_name(task) << "\n"
       << "max_len=" << max_len << "\n"
       << "orient_lo=" << orient_lo << "\n"
       << "orient_hi=" << orient_hi << "\n"
       << "kernel_size=" << kernel_size << "\n"
       << "quality=" << quality << "\n"
       << "sr_factor=" << sr_factor << "\n"
       << "seed=" << seed << "\n";
    return os.str();
}

DegradeSpec DegradeSpec::from_kv(const std::string& text) {
    DegradeSpec s;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw FormatError("bad key=value line: " + line);
        const std::string key = line.substr(0, eq);
        const std::string val = line.substr(eq + 1);
        if (key == "task") s.task = parse_task(val);
        else if (key == "max_len") s.max_len = std::stod(val);
        else if (key == "orient_lo") s.orient_lo = std::stod(val);
        else if (key == "orient_hi") s.orient_hi = std::stod(val);
        else if (key == "kernel_size") s.kernel_size = std::stoi(val);
        else if (key == "quality") s.quality = std::stoi(val);
        else if (key == "sr_factor") s.sr_factor = std::stoi(val);
        else if (key == "seed") s.seed = std::stoull(val);
        else throw FormatError("unknown DegradeSpec key '" + key + "'");
    }
    return s;
}

BlurKernel random_linear_kernel(Rng& rng, double max_len, int size,
                                double orient_lo, double orient_hi) {
    if (size % 2 == 0) throw FormatError("random_linear_kernel: size must be odd");
    if (max_len < 1.0 || max_len > size)
        throw FormatError("random_linear_kernel: need 1 <= max_len <= size");

    const double theta = rng.uniform(orient_lo, orient_hi) * 3.14159265358979323846 / 180.0;
    const double len = rng.uniform(1.0, max_len);

    BlurKernel k;
    k.size = size;
    k.weights.assign(static_cast<size_t>(size) * size, 0.f);

    const double c = (size - 1) / 2.0;
    const double half = (len - 1.0) / 2.0;
    const double dx = std::cos(theta), dy = std::sin(theta);
    const int samples = std::max(2, static_cast<int>(std::ceil(4.0 * len)));

    std::vector<double> acc(static_cast<size_t>(size) * size, 0.0);
    for (int i = 0; i < samples; ++i) {
        const double t = -half + (2.0 * half) * i / (samples - 1);
        const double px = c + t * dx;
        const double py = c + t * dy;
        const int x0 = static_cast<int>(std::floor(px));
        const int y0 = static_cast<int>(std::floor(py));
        const double fx = px - x0;
        const double fy = py - y0;
        const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
        const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
        const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
        for (int q = 0; q < 4; ++q)
            if (xs[q] >= 0 && xs[q] < size && ys[q] >= 0 && ys[q] < size)
                acc[static_cast<size_t>(ys[q]) * size + xs[q]] += w[q];
    }

    double sum = 0.0;
    for (double v : acc) sum += v;
    for (size_t i = 0; i < acc.size(); ++i) k.weights[i] = static_cast<float>(acc[i] / sum);
    return k;
}

Image convolve(const Image& img, const BlurKernel& kern) {
    if (kern.size >= img.height || kern.size >= img.width)
        throw FormatError("convolve: kernel must be smaller than the image");
    const int r = (kern.size - 1) / 2;
    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c) {
        for (int y = 0; y < img.height; ++y) {
            for (int x = 0; x < img.width; ++x) {
                double acc = 0.0;
                for (int ky = 0; ky < kern.size; ++ky) {
                    const int sy = std::clamp(y + ky - r, 0, img.height - 1);
                    for (int kx = 0; kx < kern.size; ++kx) {
                        const int sx = std::clamp(x + kx - r, 0, img.width - 1);
                        acc += static_cast<double>(kern.at(ky, kx)) * img.at(c, sy, sx);
                    }
                }
                out.at(c, y, x) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

namespace {

// Annex-K luminance quantization table, natural (row-major) order.
constexpr int kBaseLumaTable[64] = {
    16, 11, 10, 16, 24, 40, 51, 61,
    12, 12, 14, 19, 26, 58, 60, 55,
    14, 13, 16, 24, 40, 57, 69, 56,
    14, 17, 22, 29, 51, 87, 80, 62,
    18, 22, 37, 56, 68, 109, 103, 77,
    24, 35, 55, 64, 81, 104, 113, 92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103, 99};

struct Dct8 {
    double basis[8][8];  // basis[u][x] = c(u)/2 * cos((2x+1) u pi / 16)
    Dct8() {
        for (int u = 0; u < 8; ++u) {
            const double cu = (u == 0) ? 1.0 / std::sqrt(2.0) : 1.0;
            for (int x = 0; x < 8; ++x)
                basis[u][x] = 0.5 * cu * std::cos((2 * x + 1) * u * 3.14159265358979323846 / 16.0);
        }
    }
};

const Dct8& dct8() {
    static const Dct8 d;
    return d;
}

void fdct_block(const double in[64], double out[64]) {
    const auto& B = dct8().basis;
    double tmp[64];
    for (int u = 0; u < 8; ++u)  // rows
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int t = 0; t < 8; ++t) s += B[x][t] * in[u * 8 + t];
            tmp[u * 8 + x] = s;
        }
    for (int v = 0; v < 8; ++v)  // cols
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int t = 0; t < 8; ++t) s += B[v][t] * tmp[t * 8 + x];
            out[v * 8 + x] = s;
        }
}

void idct_block(const double in[64], double out[64]) {
    const auto& B = dct8().basis;
    double tmp[64];
    for (int u = 0; u < 8; ++u)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int t = 0; t < 8; ++t) s += B[t][x] * in[u * 8 + t];
            tmp[u * 8 + x] = s;
        }
    for (int v = 0; v < 8; ++v)
        for (int x = 0; x < 8; ++x) {
            double s = 0;
            for (int t = 0; t < 8; ++t) s += B[t][v] * tmp[t * 8 + x];
            out[v * 8 + x] = s;
        }
}

}  // namespace

std::array<int, 64> jpeg_quant_table(int quality) {
    if (quality < 1 || quality > 100)
        throw FormatError("jpeg quality factor must be in [1,100]");
    const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
    std::array<int, 64> t{};
    for (int i = 0; i < 64; ++i)
        t[i] = std::clamp((kBaseLumaTable[i] * scale + 50) / 100, 1, 255);
    return t;
}

Image jpeg_degrade(const Image& img, int quality) {
    const auto table = jpeg_quant_table(quality);
    const int ph = (img.height + 7) / 8 * 8;
    const int pw = (img.width + 7) / 8 * 8;

    Image out(img.channels, img.height, img.width);
    for (int c = 0; c < img.channels; ++c) {
        for (int by = 0; by < ph; by += 8) {
            for (int bx = 0; bx < pw; bx += 8) {
                double block[64], coeff[64], rec[64];
                for (int y = 0; y < 8; ++y)
                    for (int x = 0; x < 8; ++x) {
                        const int sy = std::min(by + y, img.height - 1);  // edge replication
                        const int sx = std::min(bx + x, img.width - 1);
                        block[y * 8 + x] = (static_cast<double>(img.at(c, sy, sx)) - 0.5) * 255.0;
                    }
                fdct_block(block, coeff);
                for (int i = 0; i < 64; ++i)
                    coeff[i] = std::round(coeff[i] / table[i]) * table[i];
                idct_block(coeff, rec);
                for (int y = 0; y < 8 && by + y < img.height; ++y)
                    for (int x = 0; x < 8 && bx + x < img.width; ++x) {
                        const double v = rec[y * 8 + x] / 255.0 + 0.5;
                        out.at(c, by + y, bx + x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
                    }
            }
        }
    }
    return out;
}

Image crop_to_multiple(const Image& img, int multiple) {
    const int h = img.height / multiple * multiple;
    const int w = img.width / multiple * multiple;
    if (h == img.height && w == img.width) return img;
    if (h < 1 || w < 1) throw FormatError("crop_to_multiple: image too small");
    Image out(img.channels, h, w);
    for (int c = 0; c < img.channels; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) out.at(c, y, x) = img.at(c, y, x);
    return out;
}

Image sr_degrade(const Image& img, int factor) {
    if (factor < 2) throw FormatError("sr_degrade: factor must be >= 2");
    if (img.height % factor != 0 || img.width % factor != 0)
        throw FormatError("sr_degrade: dims must be divisible by the factor (crop first)");
    const Image low = resize_bicubic(img, img.height / factor, img.width / factor, true);
    return resize_bicubic(low, img.height, img.width, false);
}

Image degrade_image(const Image& img, const DegradeSpec& spec, Rng& rng) {
    switch (spec.task) {
        case Task::motion_blur: {
            BlurKernel k = random_linear_kernel(rng, spec.max_len, spec.kernel_size,
                                                spec.orient_lo, spec.orient_hi);
            return convolve(img, k);
        }
        case Task::jpeg:
            return jpeg_degrade(img, spec.quality);
        case Task::super_resolution:
            return sr_degrade(img, spec.sr_factor);
        case Task::none:
            return img;
    }
    throw FormatError("degrade_image: bad task");
}

}  // namespace pff
