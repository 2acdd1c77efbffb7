#include <png.h>

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <vector>

#include "pff/errors.hpp"
#include "pff/image.hpp"

namespace pff {

namespace {

struct FileCloser {
    void operator()(FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
    // libpng longjmps by default; throw instead so RAII cleanup runs
    (void)png;
    throw FormatError(std::string("png: ") + msg);
}

void png_warn_fn(png_structp, png_const_charp) {}

Image load_png(FILE* f, const std::string& path) {
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    if (!png) throw IoError("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw IoError("png: out of memory");
    }
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_read_struct(p, i, nullptr); }
    } guard{&png, &info};

    png_init_io(png, f);
    png_read_info(png, info);

    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);

    if (depth == 16)
        throw FormatError(path + ": 16-bit PNG is not supported");
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);  // covers both native and tRNS-expanded alpha
    png_read_update_info(png, info);

    const int channels = png_get_channels(png, info);
    if (channels != 1 && channels != 3)
        throw FormatError(path + ": unsupported PNG channel layout");

    Image img(channels, static_cast<int>(h), static_cast<int>(w));
    std::vector<uint8_t> row(static_cast<size_t>(w) * channels);
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, static_cast<int>(y), static_cast<int>(x)) =
                    static_cast<float>(row[x * channels + c]) / 255.f;
    }
    png_read_end(png, nullptr);
    return img;
}

int ppm_next_token(FILE* f, char* buf, size_t cap, const std::string& path) {
    int c = std::fgetc(f);
    // skip whitespace and '#' comments
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#')
            while (c != EOF && c != '\n') c = std::fgetc(f);
        c = std::fgetc(f);
    }
    if (c == EOF) throw FormatError(path + ": truncated PPM header");
    size_t n = 0;
    while (c != EOF && !std::isspace(c)) {
        if (n + 1 < cap) buf[n++] = static_cast<char>(c);
        c = std::fgetc(f);
    }
    buf[n] = '\0';
    return c;
}

Image load_ppm(FILE* f, const std::string& path) {
    char tok[32];
    ppm_next_token(f, tok, sizeof tok, path);
    int channels;
    if (std::strcmp(tok, "P5") == 0)
        channels = 1;
    else if (std::strcmp(tok, "P6") == 0)
        channels = 3;
    else
        throw FormatError(path + ": unsupported PPM variant '" + tok + "'");

    ppm_next_token(f, tok, sizeof tok, path);
    const int w = std::atoi(tok);
    ppm_next_token(f, tok, sizeof tok, path);
    const int h = std::atoi(tok);
    ppm_next_token(f, tok, sizeof tok, path);
    const int maxval = std::atoi(tok);
    if (w <= 0 || h <= 0) throw FormatError(path + ": bad PPM dimensions");
    if (maxval != 255) throw FormatError(path + ": only maxval 255 PPM is supported");

    std::vector<uint8_t> raw(static_cast<size_t>(w) * h * channels);
    if (std::fread(raw.data(), 1, raw.size(), f) != raw.size())
        throw FormatError(path + ": truncated PPM payload");

    Image img(channels, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                img.at(c, y, x) =
                    static_cast<float>(raw[(static_cast<size_t>(y) * w + x) * channels + c]) / 255.f;
    return img;
}

}  // namespace

Image load_image(const std::string& path) {
    FilePtr f(std::fopen(path.c_str(), "rb"));
    if (!f) throw IoError("cannot open " + path);

    uint8_t sig[8];
    const size_t got = std::fread(sig, 1, sizeof sig, f.get());
    if (got < 2) throw FormatError(path + ": file too short");
    std::rewind(f.get());

    if (got >= 8 && png_sig_cmp(sig, 0, 8) == 0) return load_png(f.get(), path);
    if (sig[0] == 'P' && (sig[1] == '5' || sig[1] == '6')) return load_ppm(f.get(), path);
    throw FormatError(path + ": unsupported image format (PNG and binary PPM/PGM only)");
}

void save_image(const Image& img, const std::string& path) {
    if (img.channels != 1 && img.channels != 3)
        throw FormatError("save_image: expected 1 or 3 channels");
    FilePtr f(std::fopen(path.c_str(), "wb"));
    if (!f) throw IoError("cannot write " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warn_fn);
    if (!png) throw IoError("png: out of memory");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw IoError("png: out of memory");
    }
    struct Guard {
        png_structp* p;
        png_infop* i;
        ~Guard() { png_destroy_write_struct(p, i); }
    } guard{&png, &info};

    png_init_io(png, f.get());
    png_set_IHDR(png, info, img.width, img.height, 8,
                 img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<uint8_t> row(static_cast<size_t>(img.width) * img.channels);
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x)
            for (int c = 0; c < img.channels; ++c)
                row[static_cast<size_t>(x) * img.channels + c] = quantize_sample(img.at(c, y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, info);
}

}  // namespace pff
