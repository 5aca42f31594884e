#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanet/network.hpp"

// The three inference-time controls. All of them operate on F_csc^m feature
// maps (the Eq. 3 output) and only then decode; attention internals are never
// touched. Convex combinations accumulate in double before casting back, so
// the trivial cases (alpha at an endpoint, identical styles) are bit-exact.

namespace sanet {

// alpha * F_csc^m(I_c, I_s) + (1 - alpha) * F_ccc^m(I_c, I_c), pre-decode.
inline Tensor tradeoff_features(TransformNet& net, const Tensor& content, const Tensor& style,
                                double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw std::invalid_argument("tradeoff: alpha must be in [0, 1], got " +
                                    std::to_string(alpha));
    }
    const Tensor f_cs = stylize(net, content, style).features;
    const Tensor f_cc = stylize(net, content, content).features;
    Tensor out(f_cs.shape);
    for (int i = 0; i < out.numel(); ++i) {
        out.data[i] = static_cast<float>(alpha * static_cast<double>(f_cs.data[i]) +
                                         (1.0 - alpha) * static_cast<double>(f_cc.data[i]));
    }
    return out;
}

inline Tensor tradeoff(TransformNet& net, const Tensor& content, const Tensor& style,
                       double alpha) {
    return decode_features(net, tradeoff_features(net, content, style, alpha));
}

// Convex combination of per-style feature maps.
inline Tensor interpolate_features(TransformNet& net, const Tensor& content,
                                   const std::vector<Tensor>& styles,
                                   const std::vector<double>& weights) {
    if (styles.empty() || styles.size() != weights.size()) {
        throw std::invalid_argument("style_interpolate: need one weight per style");
    }
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("style_interpolate: weights must be >= 0");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) {
        throw std::invalid_argument("style_interpolate: weights must sum to 1, got " +
                                    std::to_string(sum));
    }
    std::vector<double> acc;
    Shape shape;
    for (size_t k = 0; k < styles.size(); ++k) {
        const Tensor f = stylize(net, content, styles[k]).features;
        if (k == 0) {
            shape = f.shape;
            acc.assign(static_cast<size_t>(f.numel()), 0.0);
        }
        for (int i = 0; i < f.numel(); ++i) acc[i] += weights[k] * static_cast<double>(f.data[i]);
    }
    Tensor out(shape);
    for (int i = 0; i < out.numel(); ++i) out.data[i] = static_cast<float>(acc[i]);
    return out;
}

inline Tensor style_interpolate(TransformNet& net, const Tensor& content,
                                const std::vector<Tensor>& styles,
                                const std::vector<double>& weights) {
    return decode_features(net, interpolate_features(net, content, styles, weights));
}

// Binary masks at level-A feature resolution that partition the plane.
struct MaskSet {
    std::vector<Tensor> masks;  // each (1, 1, h, w), values in {0, 1}
};

inline void check_partition(const MaskSet& ms) {
    if (ms.masks.empty()) throw std::invalid_argument("mask set is empty");
    const Shape s = ms.masks[0].shape;
    for (const Tensor& m : ms.masks) {
        if (!(m.shape == s)) throw std::invalid_argument("masks have mixed shapes");
        for (float v : m.data) {
            if (v != 0.0f && v != 1.0f) throw std::invalid_argument("masks must be 0/1 valued");
        }
    }
    for (int i = 0; i < s.numel(); ++i) {
        float total = 0.0f;
        for (const Tensor& m : ms.masks) total += m.data[i];
        if (total != 1.0f) {
            throw std::invalid_argument("masks do not form a partition (position " +
                                        std::to_string(i) + " covered " + std::to_string(total) +
                                        " times)");
        }
    }
}

// Builds a MaskSet from image-resolution masks (nonzero red channel -> 1) by
// strided point sampling down to level-A resolution.
inline MaskSet make_mask_set(const std::vector<Tensor>& mask_images, int feat_h, int feat_w,
                             int stride = kLevelAStride) {
    MaskSet ms;
    for (const Tensor& img : mask_images) {
        const Shape s = img.shape;
        if (s.h < feat_h * stride || s.w < feat_w * stride) {
            throw std::invalid_argument("mask image " + s.str() + " too small for " +
                                        std::to_string(feat_h) + "x" + std::to_string(feat_w) +
                                        " features at stride " + std::to_string(stride));
        }
        Tensor m(Shape{1, 1, feat_h, feat_w});
        for (int y = 0; y < feat_h; ++y)
            for (int x = 0; x < feat_w; ++x)
                m.data[m.index(0, 0, y, x)] =
                    img.data[img.index(0, 0, y * stride, x * stride)] > 0.0f ? 1.0f : 0.0f;
        ms.masks.push_back(std::move(m));
    }
    check_partition(ms);
    return ms;
}

// Sum_k M_k (*) F_csc^m(I_c, I_s_k); the partition makes each spatial
// position copy exactly one style's features.
inline Tensor spatial_features(TransformNet& net, const Tensor& content,
                               const std::vector<Tensor>& styles, const MaskSet& masks) {
    if (styles.size() != masks.masks.size()) {
        throw std::invalid_argument("spatial_control: need one style per mask");
    }
    check_partition(masks);
    Tensor out;
    bool first = true;
    for (size_t k = 0; k < styles.size(); ++k) {
        const Tensor f = stylize(net, content, styles[k]).features;
        const Tensor& m = masks.masks[k];
        if (m.shape.h != f.shape.h || m.shape.w != f.shape.w) {
            throw std::invalid_argument("spatial_control: mask " + m.shape.str() +
                                        " does not match features " + f.shape.str());
        }
        if (first) {
            out = Tensor(f.shape);
            first = false;
        }
        for (int n = 0; n < f.shape.n; ++n)
            for (int c = 0; c < f.shape.c; ++c)
                for (int y = 0; y < f.shape.h; ++y)
                    for (int x = 0; x < f.shape.w; ++x) {
                        if (m.data[m.index(0, 0, y, x)] != 0.0f) {
                            out.data[out.index(n, c, y, x)] = f.data[f.index(n, c, y, x)];
                        }
                    }
    }
    return out;
}

inline Tensor spatial_control(TransformNet& net, const Tensor& content,
                              const std::vector<Tensor>& styles, const MaskSet& masks) {
    return decode_features(net, spatial_features(net, content, styles, masks));
}

}  // namespace sanet
