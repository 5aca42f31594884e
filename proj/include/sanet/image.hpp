#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanet/rng.hpp"
#include "sanet/tensor.hpp"

// Images are float tensors of shape (1, 3, H, W) with values in [0, 1].
// On-disk format is binary PPM (P6, maxval 255) and nothing else.

namespace sanet {

inline std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(f),
                                      std::istreambuf_iterator<char>());
}

inline void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("failed writing " + path);
}

namespace detail {

// Reads the next whitespace-delimited token in a PPM header, skipping
// '#' comments through end of line.
inline std::string ppm_token(const std::vector<unsigned char>& b, size_t& pos) {
    while (pos < b.size()) {
        if (std::isspace(b[pos])) {
            ++pos;
        } else if (b[pos] == '#') {
            while (pos < b.size() && b[pos] != '\n') ++pos;
        } else {
            break;
        }
    }
    std::string tok;
    while (pos < b.size() && !std::isspace(b[pos]) && b[pos] != '#') tok.push_back(static_cast<char>(b[pos++]));
    return tok;
}

inline int ppm_int(const std::vector<unsigned char>& b, size_t& pos, const char* what) {
    const std::string tok = ppm_token(b, pos);
    if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw std::runtime_error(std::string("ppm: invalid ") + what);
    }
    long v = std::stol(tok);
    if (v <= 0 || v > 1 << 20) throw std::runtime_error(std::string("ppm: invalid ") + what);
    return static_cast<int>(v);
}

}  // namespace detail

inline Tensor decode_ppm(const std::vector<unsigned char>& bytes) {
    size_t pos = 0;
    if (detail::ppm_token(bytes, pos) != "P6") throw std::runtime_error("ppm: bad magic (expected P6)");
    const int w = detail::ppm_int(bytes, pos, "width");
    const int h = detail::ppm_int(bytes, pos, "height");
    const int maxval = detail::ppm_int(bytes, pos, "maxval");
    if (maxval != 255) throw std::runtime_error("ppm: unsupported maxval (expected 255)");
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
        throw std::runtime_error("ppm: missing pixel data");
    }
    ++pos;  // single whitespace byte after maxval
    const size_t need = static_cast<size_t>(w) * h * 3;
    if (bytes.size() - pos < need) throw std::runtime_error("ppm: truncated pixel data");
    Tensor img(Shape{1, 3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                img.data[img.index(0, c, y, x)] =
                    static_cast<float>(bytes[pos + (static_cast<size_t>(y) * w + x) * 3 + c]) / 255.0f;
            }
    return img;
}

inline std::vector<unsigned char> encode_ppm(const Tensor& img) {
    const Shape s = img.shape;
    if (s.n != 1 || s.c != 3) {
        throw std::invalid_argument("encode_ppm: expected shape (1,3,H,W), got " + s.str());
    }
    std::string header = "P6\n" + std::to_string(s.w) + " " + std::to_string(s.h) + "\n255\n";
    std::vector<unsigned char> bytes(header.begin(), header.end());
    bytes.reserve(bytes.size() + static_cast<size_t>(s.h) * s.w * 3);
    for (int y = 0; y < s.h; ++y)
        for (int x = 0; x < s.w; ++x)
            for (int c = 0; c < 3; ++c) {
                float v = img.data[img.index(0, c, y, x)];
                v = std::min(1.0f, std::max(0.0f, v));
                // Round half-up: 0.5 maps to 128.
                bytes.push_back(static_cast<unsigned char>(std::lround(v * 255.0f)));
            }
    return bytes;
}

inline Tensor read_ppm(const std::string& path) { return decode_ppm(read_file(path)); }

inline void write_ppm(const std::string& path, const Tensor& img) {
    write_file(path, encode_ppm(img));
}

// ---- synthetic images ----
//
// Three procedural families used for training and demos. All of them are
// built from integer arithmetic plus a final division, so a (kind, seed,
// size) triple produces the same bytes on every platform.

enum class SynthKind { Stripes, Blobs, Checker };

inline SynthKind parse_synth_kind(const std::string& name) {
    if (name == "stripes") return SynthKind::Stripes;
    if (name == "blobs") return SynthKind::Blobs;
    if (name == "checker") return SynthKind::Checker;
    throw std::invalid_argument("unknown synth kind '" + name + "' (stripes|blobs|checker)");
}

namespace detail {

inline Tensor synth_stripes(uint64_t seed, int w, int h) {
    Rng rng(derive_seed(seed, 1));
    Tensor img(Shape{1, 3, h, w});
    for (int c = 0; c < 3; ++c) {
        const int a = static_cast<int>(rng.uniform_int(1, 4));
        const int b = static_cast<int>(rng.uniform_int(1, 4));
        const int period = static_cast<int>(rng.uniform_int(12, 40));
        const int phase = static_cast<int>(rng.below(static_cast<uint64_t>(period)));
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const int t = (a * x + b * y + phase) % period;
                const int tri = t < period - t ? t : period - t;  // triangle wave
                img.data[img.index(0, c, y, x)] =
                    static_cast<float>(2.0 * tri / period);
            }
    }
    return img;
}

inline Tensor synth_blobs(uint64_t seed, int w, int h) {
    Rng rng(derive_seed(seed, 2));
    Tensor img(Shape{1, 3, h, w});
    const int k = 6;
    const int extent = w < h ? w : h;
    std::vector<int> cx(k), cy(k), r2(k);
    std::vector<double> amp(static_cast<size_t>(k) * 3);
    for (int i = 0; i < k; ++i) {
        cx[i] = static_cast<int>(rng.below(static_cast<uint64_t>(w)));
        cy[i] = static_cast<int>(rng.below(static_cast<uint64_t>(h)));
        const int r = static_cast<int>(rng.uniform_int(extent / 8 + 1, extent / 3 + 1));
        r2[i] = r * r;
        for (int c = 0; c < 3; ++c) amp[static_cast<size_t>(i) * 3 + c] = 0.2 + 0.8 * rng.uniform();
    }
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                double v = 0.0;
                for (int i = 0; i < k; ++i) {
                    const int dx = x - cx[i], dy = y - cy[i];
                    const int d2 = dx * dx + dy * dy;
                    v += amp[static_cast<size_t>(i) * 3 + c] * r2[i] / (r2[i] + d2);
                }
                img.data[img.index(0, c, y, x)] = static_cast<float>(v / (1.0 + v));
            }
    return img;
}

inline Tensor synth_checker(uint64_t seed, int w, int h) {
    const int cell = 4;
    Tensor img(Shape{1, 3, h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const uint64_t cs = derive_seed(derive_seed(derive_seed(seed, 3),
                                                        static_cast<uint64_t>(y / cell)),
                                            static_cast<uint64_t>(x / cell));
            for (int c = 0; c < 3; ++c) {
                const auto byte = static_cast<unsigned>((cs >> (8 * c)) & 0xff);
                img.data[img.index(0, c, y, x)] = static_cast<float>(byte) / 255.0f;
            }
        }
    return img;
}

}  // namespace detail

inline Tensor synth_image(uint64_t seed, int width, int height, SynthKind kind) {
    if (width < 8 || height < 8) {
        throw std::invalid_argument("synth_image: extents must be >= 8, got " +
                                    std::to_string(width) + "x" + std::to_string(height));
    }
    switch (kind) {
        case SynthKind::Stripes: return detail::synth_stripes(seed, width, height);
        case SynthKind::Blobs: return detail::synth_blobs(seed, width, height);
        case SynthKind::Checker: return detail::synth_checker(seed, width, height);
    }
    throw std::invalid_argument("synth_image: bad kind");
}

inline Tensor synth_image(SynthKind kind, uint64_t seed, int size) {
    return synth_image(seed, size, size, kind);
}

// Crops a (1, C, H, W) image to size x size at a rng-chosen top-left corner
// (row offset drawn first, then column).
inline Tensor random_crop(const Tensor& img, int size, Rng& rng) {
    const Shape s = img.shape;
    if (size < 1 || size > s.h || size > s.w) {
        throw std::invalid_argument("random_crop: size " + std::to_string(size) +
                                    " does not fit in " + s.str());
    }
    const int oy = static_cast<int>(rng.below(static_cast<uint64_t>(s.h - size + 1)));
    const int ox = static_cast<int>(rng.below(static_cast<uint64_t>(s.w - size + 1)));
    Tensor out(Shape{s.n, s.c, size, size});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int y = 0; y < size; ++y)
                for (int x = 0; x < size; ++x)
                    out.data[out.index(n, c, y, x)] = img.data[img.index(n, c, oy + y, ox + x)];
    return out;
}

inline Tensor random_crop(const Tensor& img, int size, uint64_t seed) {
    Rng rng(derive_seed(seed, 0xC409ULL));
    return random_crop(img, size, rng);
}

}  // namespace sanet
