#pragma once

#include <array>
#include <cstdio>
#include <string>

#include "sanet/network.hpp"

// Eq. 6-9 losses. Every Euclidean norm is reduced as the MEAN of squared
// elementwise differences, so magnitudes are size-independent and the paper's
// lambda weights stay meaningful at small resolutions.

namespace sanet {

struct LossWeights {
    double lambda_c = 1.0;
    double lambda_s = 3.0;
    double lambda_id1 = 1.0;
    double lambda_id2 = 50.0;
};

struct LossReport {
    double total = 0, content = 0, style = 0, identity1 = 0, identity2 = 0;
    std::array<double, kNumTaps> style_layers{};
};

inline std::string loss_csv_header() { return "step,total,content,style,identity1,identity2"; }

inline std::string loss_csv_row(int step, const LossReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g", step, r.total, r.content,
                  r.style, r.identity1, r.identity2);
    return buf;
}

// Eq. 7: distance between mean-variance normalized features at levels A and B.
template <typename T>
ValueT<T> content_loss_graph(const EncodeTapsT<T>& output, const EncodeTapsT<T>& content) {
    ValueT<T> la = mse(mean_var_normalize(output.a()), mean_var_normalize(content.a()));
    ValueT<T> lb = mse(mean_var_normalize(output.b()), mean_var_normalize(content.b()));
    return add(la, lb);
}

// Eq. 8: per-tap distance between channel means plus channel stds.
template <typename T>
struct StyleLossGraphT {
    ValueT<T> total;
    std::array<ValueT<T>, kNumTaps> layers;
};

template <typename T>
StyleLossGraphT<T> style_loss_graph(const EncodeTapsT<T>& output, const EncodeTapsT<T>& style) {
    StyleLossGraphT<T> out;
    for (int i = 0; i < kNumTaps; ++i) {
        ValueT<T> o = output.taps[i], s = style.taps[i];
        out.layers[i] = add(mse(channel_mean(o), channel_mean(s)),
                            mse(channel_std(o), channel_std(s)));
        out.total = i == 0 ? out.layers[i] : add(out.total, out.layers[i]);
    }
    return out;
}

// Eq. 9, pixel term: reconstruction error of the identity pairs.
template <typename T>
ValueT<T> identity1_loss_graph(ValueT<T> i_cc, ValueT<T> i_c, ValueT<T> i_ss, ValueT<T> i_s) {
    return add(mse(i_cc, i_c), mse(i_ss, i_s));
}

// Eq. 9, feature term: summed over all taps for both identity pairs.
template <typename T>
ValueT<T> identity2_loss_graph(const EncodeTapsT<T>& cc, const EncodeTapsT<T>& c,
                               const EncodeTapsT<T>& ss, const EncodeTapsT<T>& s) {
    ValueT<T> total;
    for (int i = 0; i < kNumTaps; ++i) {
        ValueT<T> term = add(mse(cc.taps[i], c.taps[i]), mse(ss.taps[i], s.taps[i]));
        total = i == 0 ? term : add(total, term);
    }
    return total;
}

template <typename T>
struct TotalLossGraphT {
    ValueT<T> total, content, style, identity1, identity2;
    std::array<ValueT<T>, kNumTaps> style_layers;

    LossReport report() const {
        LossReport r;
        r.total = static_cast<double>(total.tensor().item());
        r.content = static_cast<double>(content.tensor().item());
        r.style = static_cast<double>(style.tensor().item());
        r.identity1 = static_cast<double>(identity1.tensor().item());
        r.identity2 = static_cast<double>(identity2.tensor().item());
        for (int i = 0; i < kNumTaps; ++i)
            r.style_layers[i] = static_cast<double>(style_layers[i].tensor().item());
        return r;
    }
};

// Builds the full Eq. 6 loss for one batch on an existing graph. Runs the
// three forward passes (c,s), (c,c), (s,s) sharing the input encodings.
template <typename T>
TotalLossGraphT<T> total_loss_graph(GraphT<T>& g, TransformNetT<T>& net, const NetValuesT<T>& v,
                                    ValueT<T> content, ValueT<T> style, const LossWeights& w) {
    EncodeTapsT<T> ct = encode_graph(g, content, net.encoder);
    EncodeTapsT<T> st = encode_graph(g, style, net.encoder);
    StylizeGraphT<T> cs = stylize_from_taps(g, v, ct, st, net.c_feat);
    StylizeGraphT<T> cc = stylize_from_taps(g, v, ct, ct, net.c_feat);
    StylizeGraphT<T> ss = stylize_from_taps(g, v, st, st, net.c_feat);

    EncodeTapsT<T> cs_taps = encode_graph(g, cs.image, net.encoder);
    EncodeTapsT<T> cc_taps = encode_graph(g, cc.image, net.encoder);
    EncodeTapsT<T> ss_taps = encode_graph(g, ss.image, net.encoder);

    TotalLossGraphT<T> out;
    out.content = content_loss_graph(cs_taps, ct);
    StyleLossGraphT<T> sl = style_loss_graph(cs_taps, st);
    out.style = sl.total;
    out.style_layers = sl.layers;
    out.identity1 = identity1_loss_graph(cc.image, content, ss.image, style);
    out.identity2 = identity2_loss_graph(cc_taps, ct, ss_taps, st);
    out.total = add(add(scale(out.content, w.lambda_c), scale(out.style, w.lambda_s)),
                    add(scale(out.identity1, w.lambda_id1), scale(out.identity2, w.lambda_id2)));
    return out;
}

}  // namespace sanet
