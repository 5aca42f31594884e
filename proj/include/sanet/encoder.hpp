#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "sanet/init.hpp"
#include "sanet/ops.hpp"

// Fixed feature extractor: a 10-stage CNN whose weights are generated once
// from a seed and never trained. Stages are conv3x3 (reflect pad 1) + relu;
// stages 2, 4, 6 and 8 use stride 2. Width blocks run 16, 32, 32, C_feat,
// C_feat, and the first stage of each block is a tap (the Relu_N_1 analogs):
//
//   stage:  1    2    3    4    5    6    7    8    9    10
//   width:  16   32   32   32   32   C    C    C    C    C
//   stride: 1    2    1    2    1    2    1    2    1    1
//   tap:    T1   T2        T3        T4=A      T5=B
//
// Tap A sits at stride 8, tap B at stride 16; both carry C_feat channels.
// Stages 9-10 exist in the weight set but are past the last tap, so encode
// stops after stage 8.

namespace sanet {

inline constexpr int kEncoderStages = 10;
inline constexpr int kNumTaps = 5;
inline constexpr std::array<int, kNumTaps> kTapStages = {1, 2, 4, 6, 8};  // 1-based
inline constexpr int kLevelAStride = 8;
inline constexpr int kLevelBStride = 16;

struct EncoderStageSpec {
    int in_ch, out_ch, stride;
};

inline std::array<EncoderStageSpec, kEncoderStages> encoder_stage_specs(int c_feat) {
    const int c = c_feat;
    return {{{3, 16, 1},
             {16, 32, 2},
             {32, 32, 1},
             {32, 32, 2},
             {32, 32, 1},
             {32, c, 2},
             {c, c, 1},
             {c, c, 2},
             {c, c, 1},
             {c, c, 1}}};
}

template <typename T>
struct EncoderT {
    uint64_t seed = 0;
    int c_feat = 0;
    std::vector<BasicTensor<T>> w;  // per stage, (out, in, 3, 3)
    std::vector<BasicTensor<T>> b;  // per stage, (1, 1, 1, out), all zero
};

using Encoder = EncoderT<float>;

template <typename T>
EncoderT<T> make_encoder(uint64_t seed, int c_feat) {
    if (c_feat < 1) throw std::invalid_argument("make_encoder: c_feat must be >= 1");
    EncoderT<T> e;
    e.seed = seed;
    e.c_feat = c_feat;
    Rng rng(derive_seed(seed, 0xE5C0DEULL));
    const double gain = std::sqrt(2.0);  // relu-preserving
    for (const EncoderStageSpec& s : encoder_stage_specs(c_feat)) {
        e.w.push_back(orthogonal_conv<T>(Shape{s.out_ch, s.in_ch, 3, 3}, gain, rng));
        e.b.push_back(BasicTensor<T>(Shape{1, 1, 1, s.out_ch}));
    }
    return e;
}

template <typename T>
void check_encoder_input(const Shape& s) {
    if (s.c != 3) {
        throw std::invalid_argument("encode: expected 3-channel image, got " + s.str());
    }
    if (s.h < 32 || s.w < 32 || s.h % 16 != 0 || s.w % 16 != 0) {
        throw std::invalid_argument("encode: image extents must be >= 32 and divisible by 16, got " +
                                    std::to_string(s.h) + "x" + std::to_string(s.w));
    }
}

// Per-tap activations; taps[3] is level A (stride 8), taps[4] level B (stride 16).
template <typename T>
struct EncodeTapsT {
    std::array<ValueT<T>, kNumTaps> taps;
    ValueT<T> a() const { return taps[3]; }
    ValueT<T> b() const { return taps[4]; }
};

// Runs the encoder on the tape up to the last tap stage. The encoder leaves
// are non-trainable, so backward treats them as constants.
template <typename T>
EncodeTapsT<T> encode_graph(GraphT<T>& g, ValueT<T> image, const EncoderT<T>& enc) {
    check_encoder_input<T>(image.shape());
    const auto specs = encoder_stage_specs(enc.c_feat);
    EncodeTapsT<T> out;
    ValueT<T> x = image;
    int tap = 0;
    for (int s = 0; s < kEncoderStages && tap < kNumTaps; ++s) {
        ValueT<T> w = g.leaf(enc.w[s]);
        ValueT<T> b = g.leaf(enc.b[s]);
        x = relu(conv2d(x, w, b, specs[s].stride, 1, PadMode::Reflect));
        if (s + 1 == kTapStages[tap]) out.taps[tap++] = x;
    }
    return out;
}

// Convenience: encode a plain tensor on a scratch graph, returning the 5 taps.
template <typename T>
std::array<BasicTensor<T>, kNumTaps> encode(const EncoderT<T>& enc, const BasicTensor<T>& image) {
    GraphT<T> g;
    EncodeTapsT<T> taps = encode_graph(g, g.leaf(image), enc);
    std::array<BasicTensor<T>, kNumTaps> out;
    for (int i = 0; i < kNumTaps; ++i) out[i] = taps.taps[i].tensor();
    return out;
}

}  // namespace sanet
