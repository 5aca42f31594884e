#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sanet/attention.hpp"
#include "sanet/encoder.hpp"

// The full transform pipeline: frozen encoder, one SANet per tap level,
// multi-level fusion (Eq. 3) and a decoder mirroring the encoder from level A
// back to RGB. Checkpoints store the trainable tensors plus the encoder seed;
// the encoder itself is regenerated on load.

namespace sanet {

inline constexpr int kDecoderStages = 6;
inline constexpr uint32_t kCheckpointVersion = 1;

// Decoder mirror of encoder stages 6..1: upsample where the encoder strided.
struct DecoderStageSpec {
    int in_ch, out_ch;
    bool upsample_before;  // 2x nearest before the conv
    bool relu_after;
};

inline std::array<DecoderStageSpec, kDecoderStages> decoder_stage_specs(int c_feat) {
    return {{{c_feat, 32, true, true},
             {32, 32, false, true},
             {32, 32, true, true},
             {32, 32, false, true},
             {32, 16, true, true},
             {16, 3, false, false}}};
}

template <typename T>
struct TransformNetT {
    EncoderT<T> encoder;
    SanetParamsT<T> sanet_a, sanet_b;
    BasicTensor<T> fuse_w, fuse_b;           // 3x3 C_feat -> C_feat
    std::vector<BasicTensor<T>> dec_w, dec_b;
    int c_feat = 0, c_attn = 0;

    // Trainable tensors in fixed (checkpoint) order.
    std::vector<std::pair<std::string, BasicTensor<T>*>> params() {
        std::vector<std::pair<std::string, BasicTensor<T>*>> out;
        auto sanet = [&out](const char* prefix, SanetParamsT<T>& p) {
            const std::string s(prefix);
            out.emplace_back(s + ".f.w", &p.f_w);
            out.emplace_back(s + ".g.w", &p.g_w);
            out.emplace_back(s + ".h.w", &p.h_w);
            out.emplace_back(s + ".h.b", &p.h_b);
            out.emplace_back(s + ".cs.w", &p.cs_w);
            out.emplace_back(s + ".cs.b", &p.cs_b);
        };
        sanet("sanet_a", sanet_a);
        sanet("sanet_b", sanet_b);
        out.emplace_back("fuse.w", &fuse_w);
        out.emplace_back("fuse.b", &fuse_b);
        for (int i = 0; i < kDecoderStages; ++i) {
            out.emplace_back("dec" + std::to_string(i + 1) + ".w", &dec_w[i]);
            out.emplace_back("dec" + std::to_string(i + 1) + ".b", &dec_b[i]);
        }
        return out;
    }
};

using TransformNet = TransformNetT<float>;

template <typename T>
TransformNetT<T> make_network(uint64_t encoder_seed, uint64_t init_seed, int c_feat = 32,
                              int c_attn = 0) {
    if (c_attn == 0) c_attn = c_feat / 2;
    if (c_feat < 2 || c_attn < 1) {
        throw std::invalid_argument("make_network: bad widths c_feat=" + std::to_string(c_feat) +
                                    " c_attn=" + std::to_string(c_attn));
    }
    TransformNetT<T> net;
    net.c_feat = c_feat;
    net.c_attn = c_attn;
    net.encoder = make_encoder<T>(encoder_seed, c_feat);
    Rng rng(derive_seed(init_seed, 0x1217ULL));
    net.sanet_a = make_sanet_params<T>(c_feat, c_attn, rng);
    net.sanet_b = make_sanet_params<T>(c_feat, c_attn, rng);
    net.fuse_w = orthogonal_conv<T>(Shape{c_feat, c_feat, 3, 3}, 1.0, rng);
    net.fuse_b = BasicTensor<T>(Shape{1, 1, 1, c_feat});
    const double relu_gain = std::sqrt(2.0);
    for (const DecoderStageSpec& s : decoder_stage_specs(c_feat)) {
        net.dec_w.push_back(orthogonal_conv<T>(Shape{s.out_ch, s.in_ch, 3, 3},
                                               s.relu_after ? relu_gain : 1.0, rng));
        net.dec_b.push_back(BasicTensor<T>(Shape{1, 1, 1, s.out_ch}));
    }
    return net;
}

// Graph-side handles to all trainable parameters.
template <typename T>
struct NetValuesT {
    SanetValuesT<T> sanet_a, sanet_b;
    ValueT<T> fuse_w, fuse_b;
    std::vector<ValueT<T>> dec_w, dec_b;
};

template <typename T>
NetValuesT<T> net_leaves(GraphT<T>& g, TransformNetT<T>& net, bool trainable) {
    NetValuesT<T> v;
    v.sanet_a = sanet_leaves(g, net.sanet_a, trainable);
    v.sanet_b = sanet_leaves(g, net.sanet_b, trainable);
    v.fuse_w = g.leaf(net.fuse_w, trainable);
    v.fuse_b = g.leaf(net.fuse_b, trainable);
    for (int i = 0; i < kDecoderStages; ++i) {
        v.dec_w.push_back(g.leaf(net.dec_w[i], trainable));
        v.dec_b.push_back(g.leaf(net.dec_b[i], trainable));
    }
    return v;
}

// Leaf ids in the same order as TransformNetT::params(), for grad collection.
template <typename T>
std::vector<int> net_leaf_ids(const NetValuesT<T>& v) {
    std::vector<int> ids;
    for (const SanetValuesT<T>* s : {&v.sanet_a, &v.sanet_b}) {
        ids.push_back(s->f_w.id);
        ids.push_back(s->g_w.id);
        ids.push_back(s->h_w.id);
        ids.push_back(s->h_b.id);
        ids.push_back(s->cs_w.id);
        ids.push_back(s->cs_b.id);
    }
    ids.push_back(v.fuse_w.id);
    ids.push_back(v.fuse_b.id);
    for (int i = 0; i < kDecoderStages; ++i) {
        ids.push_back(v.dec_w[i].id);
        ids.push_back(v.dec_b[i].id);
    }
    return ids;
}

// Eq. 3: upsample level B 2x, add to level A, 3x3 reflect conv.
template <typename T>
ValueT<T> multi_level_combine_graph(ValueT<T> f_csc_a, ValueT<T> f_csc_b, ValueT<T> fuse_w,
                                    ValueT<T> fuse_b) {
    const Shape as = f_csc_a.shape(), bs = f_csc_b.shape();
    if (bs.h * 2 != as.h || bs.w * 2 != as.w || bs.c != as.c || bs.n != as.n) {
        throw std::invalid_argument("multi_level_combine: level B " + bs.str() +
                                    " is not half of level A " + as.str());
    }
    ValueT<T> sum = add(f_csc_a, upsample_nearest(f_csc_b, 2));
    return conv2d(sum, fuse_w, fuse_b, 1, 1, PadMode::Reflect);
}

template <typename T>
ValueT<T> decode_graph(ValueT<T> f, const NetValuesT<T>& v, int c_feat) {
    const Shape s = f.shape();
    if (s.c != c_feat) {
        throw std::invalid_argument("decode: expected " + std::to_string(c_feat) +
                                    " channels (level A), got " + s.str());
    }
    const auto specs = decoder_stage_specs(c_feat);
    ValueT<T> x = f;
    for (int i = 0; i < kDecoderStages; ++i) {
        if (specs[i].upsample_before) x = upsample_nearest(x, 2);
        x = conv2d(x, v.dec_w[i], v.dec_b[i], 1, 1, PadMode::Reflect);
        if (specs[i].relu_after) x = relu(x);
    }
    return x;
}

// Everything the losses need from one stylization pass.
template <typename T>
struct StylizeGraphT {
    EncodeTapsT<T> content_taps, style_taps;
    ValueT<T> f_csc_m;  // Eq. 3 output (decoder input)
    ValueT<T> image;    // unclamped decoder output
};

template <typename T>
StylizeGraphT<T> stylize_from_taps(GraphT<T>& g, const NetValuesT<T>& v,
                                   const EncodeTapsT<T>& ct, const EncodeTapsT<T>& st,
                                   int c_feat) {
    StylizeGraphT<T> out;
    out.content_taps = ct;
    out.style_taps = st;
    ValueT<T> csc_a = sanet_fuse_graph(g, v.sanet_a, ct.a(), sanet_attend_graph(g, v.sanet_a, ct.a(), st.a()));
    ValueT<T> csc_b = sanet_fuse_graph(g, v.sanet_b, ct.b(), sanet_attend_graph(g, v.sanet_b, ct.b(), st.b()));
    out.f_csc_m = multi_level_combine_graph(csc_a, csc_b, v.fuse_w, v.fuse_b);
    out.image = decode_graph(out.f_csc_m, v, c_feat);
    return out;
}

template <typename T>
StylizeGraphT<T> stylize_graph(GraphT<T>& g, TransformNetT<T>& net, const NetValuesT<T>& v,
                               ValueT<T> content, ValueT<T> style) {
    EncodeTapsT<T> ct = encode_graph(g, content, net.encoder);
    EncodeTapsT<T> st = encode_graph(g, style, net.encoder);
    return stylize_from_taps(g, v, ct, st, net.c_feat);
}

// Tensor-level stylization; returns the unclamped image and F_csc^m.
template <typename T>
struct StylizeResultT {
    BasicTensor<T> image;
    BasicTensor<T> features;
};

template <typename T>
StylizeResultT<T> stylize(TransformNetT<T>& net, const BasicTensor<T>& content,
                          const BasicTensor<T>& style) {
    GraphT<T> g;
    NetValuesT<T> v = net_leaves(g, net, false);
    StylizeGraphT<T> r = stylize_graph(g, net, v, g.leaf(content), g.leaf(style));
    return StylizeResultT<T>{r.image.tensor(), r.f_csc_m.tensor()};
}

// Decode a precomputed feature map (used by the runtime controls).
template <typename T>
BasicTensor<T> decode_features(TransformNetT<T>& net, const BasicTensor<T>& features) {
    GraphT<T> g;
    NetValuesT<T> v = net_leaves(g, net, false);
    return decode_graph(g.leaf(features), v, net.c_feat).tensor();
}

// ---- checkpoint serialization ----

namespace detail {

inline void put_u16(std::vector<unsigned char>& b, uint16_t v) {
    b.push_back(static_cast<unsigned char>(v & 0xff));
    b.push_back(static_cast<unsigned char>(v >> 8));
}

inline void put_u32(std::vector<unsigned char>& b, uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::vector<unsigned char>& b, uint64_t v) {
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
    const std::vector<unsigned char>& b;
    size_t pos = 0;

    void need(size_t n) const {
        if (b.size() - pos < n) throw std::runtime_error("checkpoint: truncated");
    }
    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(b[pos] | (b[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
};

}  // namespace detail

// Extra tensors (e.g. optimizer state) ride along under their own names;
// anything named "opt.*" is returned separately by load_checkpoint.
inline std::vector<unsigned char> save_checkpoint(
    TransformNet& net, const std::vector<std::pair<std::string, const Tensor*>>& extras = {}) {
    std::vector<unsigned char> b{'S', 'A', 'N', 'C'};
    detail::put_u32(b, kCheckpointVersion);
    detail::put_u64(b, net.encoder.seed);
    detail::put_u32(b, static_cast<uint32_t>(net.c_feat));
    detail::put_u32(b, static_cast<uint32_t>(net.c_attn));
    auto params = net.params();
    detail::put_u32(b, static_cast<uint32_t>(params.size() + extras.size()));
    auto put_tensor = [&b](const std::string& name, const Tensor& t) {
        detail::put_u16(b, static_cast<uint16_t>(name.size()));
        b.insert(b.end(), name.begin(), name.end());
        detail::put_u32(b, static_cast<uint32_t>(t.shape.n));
        detail::put_u32(b, static_cast<uint32_t>(t.shape.c));
        detail::put_u32(b, static_cast<uint32_t>(t.shape.h));
        detail::put_u32(b, static_cast<uint32_t>(t.shape.w));
        for (float f : t.data) detail::put_u32(b, std::bit_cast<uint32_t>(f));
    };
    for (const auto& [name, t] : params) put_tensor(name, *t);
    for (const auto& [name, t] : extras) put_tensor(name, *t);
    return b;
}

struct LoadedCheckpoint {
    TransformNet net;
    std::map<std::string, Tensor> extras;  // "opt.*" tensors
};

inline LoadedCheckpoint load_checkpoint(const std::vector<unsigned char>& bytes) {
    detail::ByteReader r{bytes};
    r.need(4);
    if (std::memcmp(bytes.data(), "SANC", 4) != 0) {
        throw std::runtime_error("checkpoint: bad magic");
    }
    r.pos = 4;
    const uint32_t version = r.u32();
    if (version != kCheckpointVersion) {
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
    }
    const uint64_t encoder_seed = r.u64();
    const int c_feat = static_cast<int>(r.u32());
    const int c_attn = static_cast<int>(r.u32());
    const uint32_t count = r.u32();

    LoadedCheckpoint out;
    out.net = make_network<float>(encoder_seed, 0, c_feat, c_attn);
    auto params = out.net.params();
    std::map<std::string, Tensor*> by_name;
    for (auto& [name, t] : params) by_name[name] = t;
    std::map<std::string, bool> seen;

    for (uint32_t i = 0; i < count; ++i) {
        const uint16_t len = r.u16();
        r.need(len);
        std::string name(bytes.begin() + static_cast<long>(r.pos),
                         bytes.begin() + static_cast<long>(r.pos + len));
        r.pos += len;
        Shape s{static_cast<int>(r.u32()), static_cast<int>(r.u32()), static_cast<int>(r.u32()),
                static_cast<int>(r.u32())};
        check_shape_valid(s);
        Tensor t(s);
        for (int j = 0; j < s.numel(); ++j) t.data[j] = std::bit_cast<float>(r.u32());
        auto it = by_name.find(name);
        if (it != by_name.end()) {
            if (!(it->second->shape == s)) {
                throw std::runtime_error("checkpoint: tensor " + name + " has shape " + s.str() +
                                         ", expected " + it->second->shape.str());
            }
            *it->second = std::move(t);
            seen[name] = true;
        } else if (name.rfind("opt.", 0) == 0) {
            out.extras[name] = std::move(t);
        } else {
            throw std::runtime_error("checkpoint: unexpected tensor " + name);
        }
    }
    if (r.pos != bytes.size()) {
        throw std::runtime_error("checkpoint: tensor-count mismatch (trailing data)");
    }
    for (const auto& [name, t] : params) {
        if (!seen.count(name)) throw std::runtime_error("checkpoint: missing tensor " + name);
    }
    return out;
}

}  // namespace sanet
