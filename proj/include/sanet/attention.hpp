#pragma once

#include <stdexcept>

#include "sanet/init.hpp"
#include "sanet/ops.hpp"

// The style-attentional module. Each content position attends over all style
// positions: scores come from 1x1 projections f, g of the mean-variance
// normalized maps, weights are a softmax over style positions, and values are
// h applied to the raw (un-normalized) style map. sanet_fuse adds the
// attended map back onto the content features through the 1x1 projection
// W_cs, which starts at zero so a fresh network passes content through.

namespace sanet {

template <typename T>
struct SanetParamsT {
    BasicTensor<T> f_w;   // (C_attn, C_feat, 1, 1), no bias
    BasicTensor<T> g_w;   // (C_attn, C_feat, 1, 1), no bias
    BasicTensor<T> h_w;   // (C_feat, C_feat, 1, 1)
    BasicTensor<T> h_b;   // (1, 1, 1, C_feat)
    BasicTensor<T> cs_w;  // (C_feat, C_feat, 1, 1), zero-init
    BasicTensor<T> cs_b;  // (1, 1, 1, C_feat), zero-init
};

using SanetParams = SanetParamsT<float>;

template <typename T>
SanetParamsT<T> make_sanet_params(int c_feat, int c_attn, Rng& rng) {
    if (c_feat < 1 || c_attn < 1 || c_attn > c_feat) {
        throw std::invalid_argument("make_sanet_params: need 1 <= c_attn <= c_feat");
    }
    SanetParamsT<T> p;
    p.f_w = orthogonal_conv<T>(Shape{c_attn, c_feat, 1, 1}, 1.0, rng);
    p.g_w = orthogonal_conv<T>(Shape{c_attn, c_feat, 1, 1}, 1.0, rng);
    p.h_w = orthogonal_conv<T>(Shape{c_feat, c_feat, 1, 1}, 1.0, rng);
    p.h_b = BasicTensor<T>(Shape{1, 1, 1, c_feat});
    p.cs_w = BasicTensor<T>(Shape{c_feat, c_feat, 1, 1});
    p.cs_b = BasicTensor<T>(Shape{1, 1, 1, c_feat});
    return p;
}

// Graph-side handles to one module's parameters.
template <typename T>
struct SanetValuesT {
    ValueT<T> f_w, g_w, h_w, h_b, cs_w, cs_b;
};

template <typename T>
SanetValuesT<T> sanet_leaves(GraphT<T>& g, const SanetParamsT<T>& p, bool trainable) {
    return SanetValuesT<T>{g.leaf(p.f_w, trainable),  g.leaf(p.g_w, trainable),
                           g.leaf(p.h_w, trainable),  g.leaf(p.h_b, trainable),
                           g.leaf(p.cs_w, trainable), g.leaf(p.cs_b, trainable)};
}

template <typename T>
void check_attend_shapes(const Shape& fc, const Shape& fs, int c_feat) {
    if (fc.c != fs.c) {
        throw std::invalid_argument("sanet_attend: channel mismatch " + fc.str() + " vs " + fs.str());
    }
    if (fc.c != c_feat) {
        throw std::invalid_argument("sanet_attend: expected " + std::to_string(c_feat) +
                                    " channels, got " + std::to_string(fc.c));
    }
    if (fc.n != fs.n) {
        throw std::invalid_argument("sanet_attend: batch mismatch " + fc.str() + " vs " + fs.str());
    }
}

// Row-stochastic attention matrix (N, 1, HW_c, HW_s).
template <typename T>
ValueT<T> attention_weights_graph(GraphT<T>& g, const SanetValuesT<T>& p, ValueT<T> f_c,
                                  ValueT<T> f_s) {
    const Shape cs = f_c.shape(), ss = f_s.shape();
    ValueT<T> q = conv2d_nobias(mean_var_normalize(f_c), p.f_w);
    ValueT<T> k = conv2d_nobias(mean_var_normalize(f_s), p.g_w);
    const int ca = q.shape().c;
    ValueT<T> qm = transpose_mat(reshape(q, Shape{cs.n, 1, ca, cs.h * cs.w}));
    ValueT<T> km = reshape(k, Shape{ss.n, 1, ca, ss.h * ss.w});
    return softmax_rows(matmul(qm, km));
}

// Eq. 5: attended style features with F_c's spatial layout.
template <typename T>
ValueT<T> sanet_attend_graph(GraphT<T>& g, const SanetValuesT<T>& p, ValueT<T> f_c,
                             ValueT<T> f_s) {
    const Shape cs = f_c.shape(), ss = f_s.shape();
    check_attend_shapes<T>(cs, ss, p.h_w.shape().n);
    ValueT<T> attn = attention_weights_graph(g, p, f_c, f_s);
    ValueT<T> v = conv2d(f_s, p.h_w, p.h_b);  // h on the raw style map
    ValueT<T> vm = transpose_mat(reshape(v, Shape{ss.n, 1, cs.c, ss.h * ss.w}));
    ValueT<T> o = matmul(attn, vm);  // (N, 1, HW_c, C)
    return reshape(transpose_mat(o), Shape{cs.n, cs.c, cs.h, cs.w});
}

// Eq. 2: F_csc = F_c + W_cs * F_cs.
template <typename T>
ValueT<T> sanet_fuse_graph(GraphT<T>& g, const SanetValuesT<T>& p, ValueT<T> f_c,
                           ValueT<T> f_cs) {
    detail::check_same_shape(f_c.tensor(), f_cs.tensor(), "sanet_fuse");
    return add(f_c, conv2d(f_cs, p.cs_w, p.cs_b));
}

// Tensor-level conveniences on a scratch graph.

template <typename T>
BasicTensor<T> sanet_attend(const SanetParamsT<T>& p, const BasicTensor<T>& f_c,
                            const BasicTensor<T>& f_s) {
    GraphT<T> g;
    SanetValuesT<T> pv = sanet_leaves(g, p, false);
    return sanet_attend_graph(g, pv, g.leaf(f_c), g.leaf(f_s)).tensor();
}

template <typename T>
BasicTensor<T> attention_weights(const SanetParamsT<T>& p, const BasicTensor<T>& f_c,
                                 const BasicTensor<T>& f_s) {
    GraphT<T> g;
    SanetValuesT<T> pv = sanet_leaves(g, p, false);
    check_attend_shapes<T>(f_c.shape, f_s.shape, p.h_w.shape.n);
    return attention_weights_graph(g, pv, g.leaf(f_c), g.leaf(f_s)).tensor();
}

template <typename T>
BasicTensor<T> sanet_fuse(const SanetParamsT<T>& p, const BasicTensor<T>& f_c,
                          const BasicTensor<T>& f_cs) {
    GraphT<T> g;
    SanetValuesT<T> pv = sanet_leaves(g, p, false);
    return sanet_fuse_graph(g, pv, g.leaf(f_c), g.leaf(f_cs)).tensor();
}

}  // namespace sanet
