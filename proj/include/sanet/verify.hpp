#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <functional>
#include <string>
#include <vector>

#include "sanet/controls.hpp"
#include "sanet/losses.hpp"
#include "sanet/training.hpp"

// Independent oracles and property checks. The brute-force attention oracle
// evaluates Eq. 5 literally (nested loops, scalar exponentials, no matrix
// reformulation, no softmax stabilization) and shares nothing with
// sanet_attend beyond the conv2d primitive for the f/g/h projections.

namespace sanet {

struct OracleReport {
    std::string name;
    double max_abs = 0.0;
    double max_rel = 0.0;
    double tol = 0.0;
    bool pass = false;
};

inline std::string oracle_csv(const std::vector<OracleReport>& reports) {
    std::string out = "name,max_abs,max_rel,tol,pass\n";
    char buf[256];
    for (const OracleReport& r : reports) {
        std::snprintf(buf, sizeof(buf), "%s,%.6g,%.6g,%.6g,%d\n", r.name.c_str(), r.max_abs,
                      r.max_rel, r.tol, r.pass ? 1 : 0);
        out += buf;
    }
    return out;
}

// Absolute-error report: pass iff max_abs <= tol.
inline OracleReport abs_report(std::string name, double max_abs, double tol) {
    return OracleReport{std::move(name), max_abs, max_abs, tol, max_abs <= tol};
}

// "Must change / must hold" report: shortfall 0 means the requirement held.
inline OracleReport requirement_report(std::string name, bool held) {
    return OracleReport{std::move(name), held ? 0.0 : 1.0, held ? 0.0 : 1.0, 0.0, held};
}

// ---- brute-force attention oracle ----

namespace detail {

// Scalar double-precision mean-variance normalization, independent of ops.hpp.
inline std::vector<double> normalize_channels_scalar(const Tensor& t) {
    const Shape s = t.shape;
    const int m = s.h * s.w;
    std::vector<double> out(static_cast<size_t>(t.numel()));
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const size_t base = static_cast<size_t>(t.index(n, c, 0, 0));
            double mu = 0.0;
            for (int i = 0; i < m; ++i) mu += t.data[base + i];
            mu /= m;
            double var = 0.0;
            for (int i = 0; i < m; ++i) {
                const double d = t.data[base + i] - mu;
                var += d * d;
            }
            var /= m;
            const double sigma = std::sqrt(var + kNormEps);
            for (int i = 0; i < m; ++i) out[base + i] = (t.data[base + i] - mu) / sigma;
        }
    return out;
}

inline Tensor conv1x1_project(const Tensor& x, const Tensor& w, const Tensor* b) {
    Graph g;
    ValueT<float> xv = g.leaf(x), wv = g.leaf(w);
    if (b) {
        ValueT<float> bv = g.leaf(*b);
        return conv2d(xv, wv, bv).tensor();
    }
    return conv2d_nobias(xv, wv).tensor();
}

}  // namespace detail

// Literal Eq. 5: for every content position i, scores against every style
// position j, normalized by C(F) = sum_j exp(score), applied to h(F_s).
inline Tensor attention_bruteforce(const SanetParams& p, const Tensor& f_c, const Tensor& f_s) {
    const Shape cs = f_c.shape, ss = f_s.shape;
    Tensor fc_norm(cs), fs_norm(ss);
    {
        const std::vector<double> cn = detail::normalize_channels_scalar(f_c);
        const std::vector<double> sn = detail::normalize_channels_scalar(f_s);
        for (int i = 0; i < f_c.numel(); ++i) fc_norm.data[i] = static_cast<float>(cn[i]);
        for (int i = 0; i < f_s.numel(); ++i) fs_norm.data[i] = static_cast<float>(sn[i]);
    }
    const Tensor q = detail::conv1x1_project(fc_norm, p.f_w, nullptr);
    const Tensor k = detail::conv1x1_project(fs_norm, p.g_w, nullptr);
    const Tensor v = detail::conv1x1_project(f_s, p.h_w, &p.h_b);  // raw style map

    const int ca = q.shape.c;
    const int hwc = cs.h * cs.w, hws = ss.h * ss.w;
    Tensor out(cs);
    for (int n = 0; n < cs.n; ++n)
        for (int i = 0; i < hwc; ++i) {
            std::vector<double> e(static_cast<size_t>(hws));
            double cf = 0.0;  // C(F)
            for (int j = 0; j < hws; ++j) {
                double score = 0.0;
                for (int d = 0; d < ca; ++d) {
                    score += static_cast<double>(q.data[(static_cast<size_t>(n) * ca + d) * hwc + i]) *
                             k.data[(static_cast<size_t>(n) * ca + d) * hws + j];
                }
                e[j] = std::exp(score);
                cf += e[j];
            }
            for (int c = 0; c < cs.c; ++c) {
                double acc = 0.0;
                for (int j = 0; j < hws; ++j) {
                    acc += e[j] * v.data[(static_cast<size_t>(n) * cs.c + c) * hws + j];
                }
                out.data[(static_cast<size_t>(n) * cs.c + c) * hwc + i] =
                    static_cast<float>(acc / cf);
            }
        }
    return out;
}

// ---- finite differences ----

// k of n indices, seeded, without replacement (partial Fisher-Yates).
inline std::vector<int> sample_indices(int n, int k, Rng& rng) {
    std::vector<int> idx(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    k = std::min(k, n);
    for (int i = 0; i < k; ++i) {
        const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
        std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
    }
    idx.resize(static_cast<size_t>(k));
    return idx;
}

// Central finite differences over sampled coordinates of one tensor. `eval`
// recomputes the loss from the (mutated) tensor.
template <typename T, typename Eval>
std::vector<std::pair<int, double>> finite_diff_grad(BasicTensor<T>& param, Eval&& eval,
                                                     int max_coords, Rng& rng, double h = 1e-3) {
    if (!(h > 0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
    std::vector<std::pair<int, double>> out;
    for (int i : sample_indices(param.numel(), max_coords, rng)) {
        const T saved = param.data[i];
        param.data[i] = static_cast<T>(saved + h);
        const double lp = eval();
        param.data[i] = static_cast<T>(saved - h);
        const double lm = eval();
        param.data[i] = saved;
        if (!std::isfinite(lp) || !std::isfinite(lm)) {
            throw std::runtime_error("finite_diff_grad: non-finite loss during probing");
        }
        out.emplace_back(i, (lp - lm) / (2.0 * h));
    }
    return out;
}

// rel error convention: |a - n| / max(1, |a|, |n|).
inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max(1.0, std::max(std::abs(analytic), std::abs(numeric)));
}

// One f32 gradient check: `make` builds a scalar loss from leaves of `inputs`.
template <typename MakeLoss>
OracleReport gradcheck_case(const std::string& name, const std::vector<Tensor>& inputs,
                            MakeLoss make, Rng& rng, double h = 1e-3, double tol = 1e-3,
                            int max_coords = 200) {
    Graph g;
    std::vector<Value> leaves;
    for (const Tensor& t : inputs) leaves.push_back(g.leaf(t, true));
    Value loss = make(g, leaves);
    g.backward(loss);

    std::vector<Tensor> work = inputs;
    const auto eval = [&]() {
        Graph gg;
        std::vector<Value> vs;
        for (const Tensor& t : work) vs.push_back(gg.leaf(t));
        return static_cast<double>(make(gg, vs).tensor().item());
    };

    int64_t total = 0;
    for (const Tensor& t : inputs) total += t.numel();
    double max_abs = 0.0, max_rel = 0.0;
    for (size_t ti = 0; ti < inputs.size(); ++ti) {
        const int budget =
            static_cast<int>(std::max<int64_t>(1, max_coords * inputs[ti].numel() / total));
        const BasicTensor<float>& grad = g.grad(leaves[ti].id);
        for (const auto& [coord, fd] : finite_diff_grad(work[ti], eval, budget, rng, h)) {
            const double a = grad.data[coord];
            max_abs = std::max(max_abs, std::abs(a - fd));
            max_rel = std::max(max_rel, relative_error(a, fd));
        }
    }
    OracleReport r{name, max_abs, max_rel, tol, max_rel <= tol};
    return r;
}

namespace detail {

inline Tensor rand_t(Shape s, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    return random_tensor<float>(s, rng, lo, hi);
}

// Uniform magnitude in [0.1, 1] with random sign; keeps relu/abs kinks away
// from finite-difference probes.
inline Tensor rand_away_from_zero(Shape s, Rng& rng) {
    Tensor t(s);
    for (auto& v : t.data) {
        const double m = 0.1 + 0.9 * rng.uniform();
        v = static_cast<float>(rng.below(2) ? m : -m);
    }
    return t;
}

}  // namespace detail

// f32 gradient checks for every differentiable primitive.
inline std::vector<OracleReport> gradcheck_primitives(uint64_t seed) {
    Rng rng(derive_seed(seed, 0xFD01ULL));
    std::vector<OracleReport> out;
    using V = std::vector<Value>;

    // Weighted-sum readout makes the loss sensitive to every output element.
    const auto readout = [](Graph& g, Value y, const Tensor& r) {
        return sum_all(mul(y, g.leaf(r)));
    };

    {
        const Tensor x = detail::rand_away_from_zero(Shape{1, 2, 3, 3}, rng);
        const Tensor r = detail::rand_t(Shape{1, 2, 3, 3}, rng);
        out.push_back(gradcheck_case("grad.relu", {x},
                                     [&](Graph& g, const V& in) { return readout(g, relu(in[0]), r); },
                                     rng));
    }
    {
        const Tensor a = detail::rand_t(Shape{1, 2, 2, 3}, rng);
        const Tensor b = detail::rand_t(Shape{1, 2, 2, 3}, rng);
        const Tensor r = detail::rand_t(Shape{1, 2, 2, 3}, rng);
        out.push_back(gradcheck_case(
            "grad.add", {a, b},
            [&](Graph& g, const V& in) { return readout(g, add(in[0], in[1]), r); }, rng));
        out.push_back(gradcheck_case(
            "grad.sub", {a, b},
            [&](Graph& g, const V& in) { return readout(g, sub(in[0], in[1]), r); }, rng));
        out.push_back(gradcheck_case(
            "grad.mul", {a, b},
            [&](Graph& g, const V& in) { return readout(g, mul(in[0], in[1]), r); }, rng));
        out.push_back(gradcheck_case(
            "grad.scale", {a},
            [&](Graph& g, const V& in) { return readout(g, scale(in[0], 1.7), r); }, rng));
        out.push_back(gradcheck_case(
            "grad.mse", {a, b}, [&](Graph& g, const V& in) { return mse(in[0], in[1]); }, rng));
    }
    {
        const Tensor x = detail::rand_t(Shape{1, 2, 3, 4}, rng);
        const Tensor rz = detail::rand_t(Shape{1, 2, 7, 8}, rng);
        out.push_back(gradcheck_case(
            "grad.pad_zero", {x},
            [&](Graph& g, const V& in) { return readout(g, pad2d(in[0], 2, PadMode::Zero), rz); },
            rng));
        out.push_back(gradcheck_case(
            "grad.pad_reflect", {x},
            [&](Graph& g, const V& in) { return readout(g, pad2d(in[0], 2, PadMode::Reflect), rz); },
            rng));
    }
    {
        const Tensor x = detail::rand_t(Shape{1, 3, 4, 4}, rng);
        const Tensor w = detail::rand_t(Shape{2, 3, 3, 3}, rng);
        const Tensor b = detail::rand_t(Shape{1, 1, 1, 2}, rng);
        const Tensor r1 = detail::rand_t(Shape{1, 2, 4, 4}, rng);
        const Tensor r2 = detail::rand_t(Shape{1, 2, 2, 2}, rng);
        out.push_back(gradcheck_case("grad.conv3x3_reflect", {x, w, b},
                                     [&](Graph& g, const V& in) {
                                         return readout(
                                             g, conv2d(in[0], in[1], in[2], 1, 1, PadMode::Reflect),
                                             r1);
                                     },
                                     rng));
        out.push_back(gradcheck_case("grad.conv3x3_stride2", {x, w, b},
                                     [&](Graph& g, const V& in) {
                                         return readout(
                                             g, conv2d(in[0], in[1], in[2], 2, 1, PadMode::Zero),
                                             r2);
                                     },
                                     rng));
    }
    {
        const Tensor x = detail::rand_t(Shape{1, 4, 3, 3}, rng);
        const Tensor w = detail::rand_t(Shape{3, 4, 1, 1}, rng);
        const Tensor r = detail::rand_t(Shape{1, 3, 3, 3}, rng);
        out.push_back(gradcheck_case(
            "grad.conv1x1_nobias", {x, w},
            [&](Graph& g, const V& in) { return readout(g, conv2d_nobias(in[0], in[1]), r); },
            rng));
    }
    {
        const Tensor x = detail::rand_t(Shape{1, 2, 2, 3}, rng);
        const Tensor r = detail::rand_t(Shape{1, 2, 4, 6}, rng);
        out.push_back(gradcheck_case(
            "grad.upsample", {x},
            [&](Graph& g, const V& in) { return readout(g, upsample_nearest(in[0], 2), r); }, rng));
    }
    {
        const Tensor x = detail::rand_t(Shape{1, 2, 3, 4}, rng);
        const Tensor r = detail::rand_t(Shape{1, 1, 8, 3}, rng);
        out.push_back(gradcheck_case("grad.transpose_reshape", {x},
                                     [&](Graph& g, const V& in) {
                                         Value t = transpose_mat(in[0]);  // (1,2,4,3)
                                         return readout(g, reshape(t, Shape{1, 1, 8, 3}), r);
                                     },
                                     rng));
    }
    {
        const Tensor a = detail::rand_t(Shape{2, 1, 3, 2}, rng);
        const Tensor b = detail::rand_t(Shape{2, 1, 2, 4}, rng);
        const Tensor r = detail::rand_t(Shape{2, 1, 3, 4}, rng);
        out.push_back(gradcheck_case(
            "grad.matmul", {a, b},
            [&](Graph& g, const V& in) { return readout(g, matmul(in[0], in[1]), r); }, rng));
    }
    {
        const Tensor x = detail::rand_t(Shape{1, 1, 4, 5}, rng);
        const Tensor r = detail::rand_t(Shape{1, 1, 4, 5}, rng);
        out.push_back(gradcheck_case(
            "grad.softmax_rows", {x},
            [&](Graph& g, const V& in) { return readout(g, softmax_rows(in[0]), r); }, rng));
    }
    {
        const Tensor x = detail::rand_t(Shape{1, 2, 4, 4}, rng);
        const Tensor r = detail::rand_t(Shape{1, 2, 4, 4}, rng);
        const Tensor rs = detail::rand_t(Shape{1, 2, 1, 1}, rng);
        out.push_back(gradcheck_case(
            "grad.mean_var_normalize", {x},
            [&](Graph& g, const V& in) { return readout(g, mean_var_normalize(in[0]), r); }, rng));
        out.push_back(gradcheck_case(
            "grad.channel_mean", {x},
            [&](Graph& g, const V& in) { return readout(g, channel_mean(in[0]), rs); }, rng));
        out.push_back(gradcheck_case(
            "grad.channel_std", {x},
            [&](Graph& g, const V& in) { return readout(g, channel_std(in[0]), rs); }, rng));
        out.push_back(gradcheck_case("grad.sum", {x},
                                     [&](Graph& g, const V& in) { return sum_all(in[0]); }, rng));
        out.push_back(gradcheck_case("grad.mean", {x},
                                     [&](Graph& g, const V& in) { return mean_all(in[0]); }, rng));
    }
    return out;
}

// End-to-end check of the Eq. 6 loss in the f64 pathway (C_feat=8, 32x32
// pair, paper loss weights), sampling coordinates across every trainable
// parameter.
inline OracleReport gradcheck_total_loss(uint64_t seed, int max_coords = 100, double h = 1e-6,
                                         double tol = 1e-3) {
    Rng rng(derive_seed(seed, 0xFD64ULL));
    TransformNetT<double> net =
        make_network<double>(derive_seed(seed, 21), derive_seed(seed, 22), 8, 4);
    // A zero W_cs hides the attention parameters from the loss; perturb all
    // trainables a little so every gradient path is exercised.
    for (auto& [name, t] : net.params()) {
        for (auto& v : t->data) v += 0.05 * rng.uniform(-1.0, 1.0);
    }
    const BasicTensor<double> content =
        synth_image(SynthKind::Blobs, derive_seed(seed, 23), 32).cast<double>();
    const BasicTensor<double> style =
        synth_image(SynthKind::Stripes, derive_seed(seed, 24), 32).cast<double>();
    const LossWeights weights;

    const auto eval = [&]() {
        GraphT<double> g;
        NetValuesT<double> v = net_leaves(g, net, false);
        return total_loss_graph(g, net, v, g.leaf(content), g.leaf(style), weights)
            .total.tensor()
            .item();
    };

    GraphT<double> g;
    NetValuesT<double> v = net_leaves(g, net, true);
    TotalLossGraphT<double> loss =
        total_loss_graph(g, net, v, g.leaf(content), g.leaf(style), weights);
    g.backward(loss.total);
    const std::vector<int> ids = net_leaf_ids(v);

    auto params = net.params();
    std::vector<std::pair<size_t, int>> coords;  // (param index, coordinate)
    for (size_t pi = 0; pi < params.size(); ++pi) {
        for (int i = 0; i < params[pi].second->numel(); ++i) coords.emplace_back(pi, i);
    }
    double max_abs = 0.0, max_rel = 0.0;
    for (int s : sample_indices(static_cast<int>(coords.size()), max_coords, rng)) {
        const auto [pi, i] = coords[static_cast<size_t>(s)];
        BasicTensor<double>& p = *params[pi].second;
        const double saved = p.data[i];
        p.data[i] = saved + h;
        const double lp = eval();
        p.data[i] = saved - h;
        const double lm = eval();
        p.data[i] = saved;
        if (!std::isfinite(lp) || !std::isfinite(lm)) {
            throw std::runtime_error("gradcheck_total_loss: non-finite loss");
        }
        const double fd = (lp - lm) / (2.0 * h);
        const double a = g.grad(ids[pi]).data[i];
        max_abs = std::max(max_abs, std::abs(a - fd));
        max_rel = std::max(max_rel, relative_error(a, fd));
    }
    OracleReport r{"grad.total_loss_f64", max_abs, max_rel, tol, max_rel <= tol};
    return r;
}

inline std::vector<OracleReport> run_gradcheck(uint64_t seed) {
    std::vector<OracleReport> out = gradcheck_primitives(seed);
    out.push_back(gradcheck_total_loss(seed));
    return out;
}

// ---- attention oracle sweep ----

inline SanetParams random_sanet_params(int c_feat, int c_attn, Rng& rng) {
    SanetParams p = make_sanet_params<float>(c_feat, c_attn, rng);
    p.h_b = random_tensor<float>(Shape{1, 1, 1, c_feat}, rng, -0.3f, 0.3f);
    return p;
}

inline std::vector<OracleReport> run_oracle_check(uint64_t seed, int instances = 100) {
    Rng rng(derive_seed(seed, 0x04ACULL));
    double max_abs = 0.0;
    for (int k = 0; k < instances; ++k) {
        const int c_feat = 2 + static_cast<int>(rng.below(15));      // 2..16
        const int c_attn = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(c_feat)));
        const int hc = 1 + static_cast<int>(rng.below(4));
        const int wc = 1 + static_cast<int>(rng.below(4));
        const int hs = 1 + static_cast<int>(rng.below(4));
        const int ws = 1 + static_cast<int>(rng.below(4));
        SanetParams p = random_sanet_params(c_feat, c_attn, rng);
        const Tensor fc = random_tensor<float>(Shape{1, c_feat, hc, wc}, rng, -1.0f, 1.0f);
        const Tensor fs = random_tensor<float>(Shape{1, c_feat, hs, ws}, rng, -1.0f, 1.0f);
        max_abs = std::max(max_abs,
                           static_cast<double>(max_abs_diff(sanet_attend(p, fc, fs),
                                                            attention_bruteforce(p, fc, fs))));
    }
    return {abs_report("oracle.attention_bruteforce", max_abs, 1e-5)};
}

// ---- property suite ----

inline OracleReport row_sum_report(std::string name, const Tensor& attn, double tol = 1e-5) {
    double max_abs = 0.0;
    const Shape s = attn.shape;
    for (int r = 0; r < s.n * s.c * s.h; ++r) {
        double sum = 0.0;
        for (int j = 0; j < s.w; ++j) sum += attn.data[static_cast<size_t>(r) * s.w + j];
        max_abs = std::max(max_abs, std::abs(sum - 1.0));
    }
    return abs_report(std::move(name), max_abs, tol);
}

inline std::vector<int> random_permutation(int n, Rng& rng) { return sample_indices(n, n, rng); }

// Permutes spatial positions of every (n, c) plane: out[pos] = in[perm[pos]].
inline Tensor permute_positions(const Tensor& t, const std::vector<int>& perm) {
    const Shape s = t.shape;
    const int m = s.h * s.w;
    if (static_cast<int>(perm.size()) != m) {
        throw std::invalid_argument("permute_positions: bad permutation size");
    }
    Tensor out(s);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const size_t base = static_cast<size_t>(t.index(n, c, 0, 0));
            for (int i = 0; i < m; ++i) out.data[base + i] = t.data[base + perm[i]];
        }
    return out;
}

namespace detail {

// Adds uniform noise to every trainable so controls/losses see a non-trivial
// network (a fresh net has W_cs = 0 and ignores the style entirely).
inline void perturb_net(TransformNet& net, Rng& rng, float amt = 0.05f) {
    for (auto& [name, t] : net.params()) {
        for (auto& v : t->data) v += static_cast<float>(rng.uniform(-amt, amt));
    }
}

}  // namespace detail

inline std::vector<OracleReport> run_property_suite(uint64_t seed) {
    Rng rng(derive_seed(seed, 0x507ULL));
    std::vector<OracleReport> out;

    // softmax rows sum to 1; shift invariance.
    {
        const Tensor x = random_tensor<float>(Shape{2, 1, 5, 7}, rng, -3.0f, 3.0f);
        Graph g;
        const Tensor sm = softmax_rows(g.leaf(x)).tensor();
        out.push_back(row_sum_report("prop.softmax_row_sums", sm));
        Tensor shifted = x;
        for (int r = 0; r < 2 * 5; ++r) {
            const float c = static_cast<float>(rng.uniform(-2.0, 2.0));
            for (int j = 0; j < 7; ++j) shifted.data[static_cast<size_t>(r) * 7 + j] += c;
        }
        Graph g2;
        const Tensor sm2 = softmax_rows(g2.leaf(shifted)).tensor();
        out.push_back(abs_report("prop.softmax_shift_invariance",
                                 static_cast<double>(max_abs_diff(sm, sm2)), 1e-5));
    }
    // mean_var_normalize then channel stats: mu ~ 0, sigma ~ 1.
    {
        const Tensor x = random_tensor<float>(Shape{2, 3, 6, 6}, rng, -2.0f, 2.0f);
        Graph g;
        Value y = mean_var_normalize(g.leaf(x));
        const Tensor mu = channel_mean(y).tensor();
        const Tensor sg = channel_std(y).tensor();
        double mu_err = 0.0, sg_err = 0.0;
        for (float v : mu.data) mu_err = std::max(mu_err, std::abs(static_cast<double>(v)));
        for (float v : sg.data) sg_err = std::max(sg_err, std::abs(static_cast<double>(v) - 1.0));
        out.push_back(abs_report("prop.normalize_zero_mean", mu_err, 1e-5));
        out.push_back(abs_report("prop.normalize_unit_std", sg_err, 1e-3));
    }
    // conv2d with an identity 1x1 kernel is the identity, bit-exact.
    {
        const int c = 3;
        const Tensor x = random_tensor<float>(Shape{1, c, 4, 5}, rng, -1.0f, 1.0f);
        Tensor w(Shape{c, c, 1, 1});
        for (int i = 0; i < c; ++i) w.data[w.index(i, i, 0, 0)] = 1.0f;
        Graph g;
        const Tensor y = conv2d_nobias(g.leaf(x), g.leaf(w)).tensor();
        out.push_back(requirement_report("prop.conv_identity_bitexact", exactly_equal(x, y)));
    }
    // upsample_nearest preserves the spatial mean exactly (dyadic values keep
    // every double-precision partial sum representable, so the order of
    // accumulation cannot matter).
    {
        Tensor x(Shape{1, 2, 8, 8});
        for (auto& v : x.data) v = static_cast<float>(rng.below(256)) / 256.0f;
        Graph g;
        Value xv = g.leaf(x);
        const float m1 = mean_all(xv).tensor().item();
        const float m2 = mean_all(upsample_nearest(xv, 2)).tensor().item();
        out.push_back(requirement_report("prop.upsample_preserves_mean", m1 == m2));
    }
    // attention: row sums, style permutation invariance, content equivariance.
    {
        const int c_feat = 8, c_attn = 4;
        SanetParams p = random_sanet_params(c_feat, c_attn, rng);
        const Tensor fc = random_tensor<float>(Shape{1, c_feat, 3, 4}, rng, -1.0f, 1.0f);
        const Tensor fs = random_tensor<float>(Shape{1, c_feat, 4, 3}, rng, -1.0f, 1.0f);
        out.push_back(row_sum_report("prop.attention_row_sums", attention_weights(p, fc, fs)));

        const Tensor base = sanet_attend(p, fc, fs);
        double perm_err = 0.0;
        for (int k = 0; k < 5; ++k) {
            const Tensor fs_p = permute_positions(fs, random_permutation(4 * 3, rng));
            perm_err = std::max(perm_err,
                                static_cast<double>(max_abs_diff(base, sanet_attend(p, fc, fs_p))));
        }
        out.push_back(abs_report("prop.style_permutation_invariance", perm_err, 1e-5));

        const std::vector<int> perm = random_permutation(3 * 4, rng);
        const Tensor fc_p = permute_positions(fc, perm);
        const Tensor permuted_out = permute_positions(base, perm);
        out.push_back(abs_report(
            "prop.content_permutation_equivariance",
            static_cast<double>(max_abs_diff(permuted_out, sanet_attend(p, fc_p, fs))), 1e-5));
    }
    // score path is invariant to per-channel positive affine changes of F_s
    // (the overline removes them); the h path is not.
    {
        const int c_feat = 8;
        SanetParams p = random_sanet_params(c_feat, 4, rng);
        const Tensor fc = random_tensor<float>(Shape{1, c_feat, 3, 3}, rng, -1.0f, 1.0f);
        const Tensor fs = random_tensor<float>(Shape{1, c_feat, 3, 3}, rng, -1.0f, 1.0f);
        Tensor fs_affine = fs;
        for (int c = 0; c < c_feat; ++c) {
            const float a = static_cast<float>(rng.uniform(0.5, 2.0));
            const float b = static_cast<float>(rng.uniform(-0.5, 0.5));
            for (int i = 0; i < 9; ++i) {
                float& v = fs_affine.data[fs_affine.index(0, c, i / 3, i % 3)];
                v = a * v + b;
            }
        }
        const double score_err = static_cast<double>(
            max_abs_diff(attention_weights(p, fc, fs), attention_weights(p, fc, fs_affine)));
        out.push_back(abs_report("prop.score_affine_invariance", score_err, 1e-4));
        const double out_change = static_cast<double>(
            max_abs_diff(sanet_attend(p, fc, fs), sanet_attend(p, fc, fs_affine)));
        out.push_back(requirement_report("prop.h_path_affine_sensitivity", out_change > 1e-4));
    }
    // zero-init W_cs: fused features equal F_c bit-exactly, and the whole
    // step-0 network is content passthrough at the feature level.
    {
        TransformNet net = make_network<float>(derive_seed(seed, 31), derive_seed(seed, 32), 16, 8);
        const Tensor ic = synth_image(SynthKind::Blobs, derive_seed(seed, 33), 64);
        const Tensor is = synth_image(SynthKind::Checker, derive_seed(seed, 34), 64);
        const auto ct = encode(net.encoder, ic);
        const auto st = encode(net.encoder, is);
        const Tensor fcs = sanet_attend(net.sanet_a, ct[3], st[3]);
        out.push_back(requirement_report("prop.wcs_zero_fuse_passthrough",
                                         exactly_equal(sanet_fuse(net.sanet_a, ct[3], fcs), ct[3])));
        Graph g;
        NetValuesT<float> v = net_leaves(g, net, false);
        const Tensor manual =
            multi_level_combine_graph(g.leaf(ct[3]), g.leaf(ct[4]), v.fuse_w, v.fuse_b).tensor();
        const Tensor full = stylize(net, ic, is).features;
        out.push_back(requirement_report("prop.wcs_zero_content_passthrough",
                                         exactly_equal(manual, full)));
    }
    // encoder: shapes, determinism, single-pixel sensitivity.
    {
        Encoder e1 = make_encoder<float>(derive_seed(seed, 41), 32);
        Encoder e2 = make_encoder<float>(derive_seed(seed, 41), 32);
        bool same = true;
        for (int s = 0; s < kEncoderStages; ++s) same = same && exactly_equal(e1.w[s], e2.w[s]);
        out.push_back(requirement_report("prop.encoder_seed_determinism", same));

        const Tensor img = synth_image(SynthKind::Stripes, derive_seed(seed, 42), 64);
        const auto taps = encode(e1, img);
        const bool shapes_ok = taps[3].shape == Shape{1, 32, 8, 8} &&
                               taps[4].shape == Shape{1, 32, 4, 4} &&
                               taps[0].shape == Shape{1, 16, 64, 64} &&
                               taps[1].shape == Shape{1, 32, 32, 32} &&
                               taps[2].shape == Shape{1, 32, 16, 16};
        out.push_back(requirement_report("prop.encoder_tap_shapes", shapes_ok));

        Tensor img2 = img;
        img2.data[img2.index(0, 1, 13, 17)] =
            img2.data[img2.index(0, 1, 13, 17)] > 0.5f ? 0.0f : 1.0f;
        const auto taps2 = encode(e1, img2);
        out.push_back(requirement_report("prop.encoder_pixel_sensitivity",
                                         max_abs_diff(taps[3], taps2[3]) > 0.0f));
    }
    // losses: zeros on identical inputs, content affine invariance, style
    // permutation invariance.
    {
        Encoder enc = make_encoder<float>(derive_seed(seed, 51), 16);
        const Tensor img = synth_image(SynthKind::Blobs, derive_seed(seed, 52), 32);
        Graph g;
        EncodeTapsT<float> t1 = encode_graph(g, g.leaf(img), enc);
        EncodeTapsT<float> t2 = encode_graph(g, g.leaf(img), enc);
        const float lc = content_loss_graph(t1, t2).tensor().item();
        const float ls = style_loss_graph(t1, t2).total.tensor().item();
        ValueT<float> imgv = g.leaf(img);
        const float li1 = identity1_loss_graph(imgv, imgv, imgv, imgv).tensor().item();
        const float li2 = identity2_loss_graph(t1, t2, t1, t2).tensor().item();
        out.push_back(requirement_report("prop.losses_zero_on_identical",
                                         lc == 0.0f && ls == 0.0f && li1 == 0.0f && li2 == 0.0f));

        // content loss ignores per-channel positive affine transforms. Holds
        // for well-spread channels; a near-constant channel sits at the
        // normalizer's eps floor, where scaling genuinely moves the output, so
        // the base features are drawn uniform (per-channel std ~0.58 >> eps).
        EncodeTapsT<float> tb, t3;
        Rng arng(derive_seed(seed, 53));
        for (int i = 0; i < kNumTaps; ++i) {
            Tensor a = random_tensor<float>(t1.taps[i].tensor().shape, arng, -1.0f, 1.0f);
            tb.taps[i] = g.leaf(a);
            const Shape s = a.shape;
            for (int c = 0; c < s.c; ++c) {
                const float sc = static_cast<float>(arng.uniform(0.5, 2.0));
                const float of = static_cast<float>(arng.uniform(-0.5, 0.5));
                for (int j = 0; j < s.h * s.w; ++j) {
                    float& v = a.data[static_cast<size_t>(a.index(0, c, 0, 0)) + j];
                    v = sc * v + of;
                }
            }
            t3.taps[i] = g.leaf(a);
        }
        const float lc_affine = content_loss_graph(tb, t3).tensor().item();
        out.push_back(abs_report("prop.content_loss_affine_invariance",
                                 static_cast<double>(lc_affine), 1e-4));

        // style loss only sees channel statistics; spatial order is irrelevant.
        EncodeTapsT<float> t4;
        for (int i = 0; i < kNumTaps; ++i) {
            const Tensor a = t1.taps[i].tensor();
            t4.taps[i] = g.leaf(
                permute_positions(a, random_permutation(a.shape.h * a.shape.w, arng)));
        }
        const float ls_perm = style_loss_graph(t1, t4).total.tensor().item();
        out.push_back(abs_report("prop.style_loss_permutation_invariance",
                                 static_cast<double>(ls_perm), 1e-6));
    }
    // PPM round-trips and synthetic-image contracts.
    {
        Tensor img(Shape{1, 3, 5, 7});
        Rng prng(derive_seed(seed, 61));
        for (auto& v : img.data) v = static_cast<float>(prng.below(256)) / 255.0f;
        const auto bytes = encode_ppm(img);
        out.push_back(requirement_report("prop.ppm_roundtrip_lossless",
                                         encode_ppm(decode_ppm(bytes)) == bytes));

        const Tensor s1 = synth_image(SynthKind::Checker, derive_seed(seed, 62), 32);
        const Tensor s2 = synth_image(SynthKind::Checker, derive_seed(seed, 62), 32);
        out.push_back(requirement_report("prop.synth_determinism", exactly_equal(s1, s2)));

        bool cells_ok = true;
        for (int c = 0; c < 3 && cells_ok; ++c)
            for (int y = 0; y < 32 && cells_ok; ++y)
                for (int x = 0; x < 32; ++x) {
                    if (s1.data[s1.index(0, c, y, x)] !=
                        s1.data[s1.index(0, c, (y / 4) * 4, (x / 4) * 4)]) {
                        cells_ok = false;
                        break;
                    }
                }
        out.push_back(requirement_report("prop.checker_cell_structure", cells_ok));

        int distinct_ok = 0;
        const int pairs = 10;
        for (int k = 0; k < pairs; ++k) {
            const Tensor a = synth_image(SynthKind::Blobs, derive_seed(seed, 63 + 2 * k), 32);
            const Tensor b = synth_image(SynthKind::Blobs, derive_seed(seed, 64 + 2 * k), 32);
            int differing = 0;
            for (int i = 0; i < a.numel(); ++i)
                if (a.data[i] != b.data[i]) ++differing;
            if (differing * 100 >= a.numel()) ++distinct_ok;  // >= 1% of values
        }
        out.push_back(requirement_report("prop.synth_seed_sensitivity", distinct_ok == pairs));
    }
    // random_crop offsets are uniform (chi-square, 8 bins, dof 7, p > 0.01).
    // Pixel values encode the column index so the offset can be recovered
    // from the crop itself.
    {
        Tensor img(Shape{1, 3, 23, 23});
        for (int y = 0; y < 23; ++y)
            for (int x = 0; x < 23; ++x) img.data[img.index(0, 0, y, x)] = static_cast<float>(x);
        std::array<int, 8> bins{};  // 23 - 16 + 1 = 8 column offsets
        for (int k = 0; k < 1000; ++k) {
            const Tensor crop = random_crop(img, 16, derive_seed(seed, 660 + k));
            bins[static_cast<size_t>(crop.data[crop.index(0, 0, 0, 0)])] += 1;
        }
        double chi2 = 0.0;
        for (int b : bins) {
            const double d = b - 125.0;
            chi2 += d * d / 125.0;
        }
        // 18.475 is the 0.99 quantile of chi-square with 7 dof.
        out.push_back(abs_report("prop.crop_offset_uniformity_chi2", chi2, 18.475));
    }
    // runtime controls on a perturbed net.
    {
        TransformNet net = make_network<float>(derive_seed(seed, 71), derive_seed(seed, 72), 16, 8);
        detail::perturb_net(net, rng);
        const Tensor ic = synth_image(SynthKind::Blobs, derive_seed(seed, 73), 64);
        const Tensor s1 = synth_image(SynthKind::Stripes, derive_seed(seed, 74), 64);
        const Tensor s2 = synth_image(SynthKind::Checker, derive_seed(seed, 75), 64);

        const Tensor f1 = stylize(net, ic, s1).features;
        const Tensor f0 = stylize(net, ic, ic).features;
        const Tensor half = tradeoff_features(net, ic, s1, 0.5);
        Tensor manual(f1.shape);
        for (int i = 0; i < manual.numel(); ++i) {
            manual.data[i] = static_cast<float>(0.5 * static_cast<double>(f1.data[i]) +
                                                0.5 * static_cast<double>(f0.data[i]));
        }
        out.push_back(requirement_report("prop.tradeoff_feature_linearity",
                                         exactly_equal(half, manual)));
        out.push_back(requirement_report(
            "prop.tradeoff_alpha1_is_stylize",
            exactly_equal(tradeoff_features(net, ic, s1, 1.0), f1)));
        out.push_back(requirement_report(
            "prop.interpolate_reduces_to_tradeoff",
            exactly_equal(interpolate_features(net, ic, {s1, ic}, {0.3, 1.0 - 0.3}),
                          tradeoff_features(net, ic, s1, 0.3))));

        const Shape fs = f1.shape;
        Tensor left(Shape{1, 1, fs.h, fs.w}), right(Shape{1, 1, fs.h, fs.w});
        for (int y = 0; y < fs.h; ++y)
            for (int x = 0; x < fs.w; ++x) {
                (x < fs.w / 2 ? left : right).data[static_cast<size_t>(y) * fs.w + x] = 1.0f;
            }
        const MaskSet ms{{left, right}};
        out.push_back(requirement_report(
            "prop.spatial_identical_styles_is_stylize",
            exactly_equal(spatial_features(net, ic, {s1, s1}, ms), f1)));

        // Two distinct styles: each half is a verbatim copy of that style's
        // full-frame features.
        const Tensor f2 = stylize(net, ic, s2).features;
        const Tensor mixed = spatial_features(net, ic, {s1, s2}, ms);
        bool block_ok = true;
        for (int c = 0; c < fs.c && block_ok; ++c)
            for (int y = 0; y < fs.h && block_ok; ++y)
                for (int x = 0; x < fs.w; ++x) {
                    const Tensor& want = x < fs.w / 2 ? f1 : f2;
                    if (mixed.data[mixed.index(0, c, y, x)] !=
                        want.data[want.index(0, c, y, x)]) {
                        block_ok = false;
                        break;
                    }
                }
        out.push_back(requirement_report("prop.spatial_blockwise_copy", block_ok));
    }
    // Adam basics.
    {
        Tensor p = Tensor::scalar(1.0f);
        AdamState st;
        std::map<std::string, Tensor> grads;
        grads["p"] = Tensor::scalar(0.0f);
        std::vector<std::pair<std::string, Tensor*>> params{{"p", &p}};
        adam_step(params, grads, st, 0.1);
        out.push_back(requirement_report("prop.adam_zero_grad_noop", p.item() == 1.0f));

        Tensor q = Tensor::scalar(1.0f);
        AdamState st2;
        grads["p"] = Tensor::scalar(1.0f);
        std::vector<std::pair<std::string, Tensor*>> params2{{"p", &q}};
        adam_step(params2, grads, st2, 0.1);
        out.push_back(
            abs_report("prop.adam_first_step_hand_value",
                       std::abs(static_cast<double>(q.item()) - 0.9), 1e-7));
    }
    // checkpoint round-trip and corruption handling.
    {
        TransformNet net = make_network<float>(derive_seed(seed, 81), derive_seed(seed, 82), 16, 8);
        detail::perturb_net(net, rng);
        const Tensor ic = synth_image(SynthKind::Blobs, derive_seed(seed, 83), 32);
        const Tensor is = synth_image(SynthKind::Stripes, derive_seed(seed, 84), 32);
        const auto bytes = save_checkpoint(net);
        LoadedCheckpoint lc = load_checkpoint(bytes);
        out.push_back(requirement_report(
            "prop.checkpoint_roundtrip_stylize",
            exactly_equal(stylize(net, ic, is).image, stylize(lc.net, ic, is).image)));

        auto corrupted = bytes;
        corrupted[0] = 'X';
        bool rejected = false;
        try {
            load_checkpoint(corrupted);
        } catch (const std::runtime_error&) {
            rejected = true;
        }
        out.push_back(requirement_report("prop.checkpoint_bad_magic_rejected", rejected));

        auto truncated = bytes;
        truncated.resize(truncated.size() / 2);
        rejected = false;
        try {
            load_checkpoint(truncated);
        } catch (const std::runtime_error&) {
            rejected = true;
        }
        out.push_back(requirement_report("prop.checkpoint_truncation_rejected", rejected));
    }
    // finiteness of a full forward/backward pass.
    {
        TransformNet net = make_network<float>(derive_seed(seed, 91), derive_seed(seed, 92), 8, 4);
        const Tensor ic = synth_image(SynthKind::Checker, derive_seed(seed, 93), 32);
        const Tensor is = synth_image(SynthKind::Blobs, derive_seed(seed, 94), 32);
        Graph g;
        NetValuesT<float> v = net_leaves(g, net, true);
        TotalLossGraphT<float> loss =
            total_loss_graph(g, net, v, g.leaf(ic), g.leaf(is), LossWeights{});
        g.backward(loss.total);
        bool finite = std::isfinite(loss.total.tensor().item());
        for (int id : net_leaf_ids(v)) finite = finite && g.grad(id).all_finite();
        out.push_back(requirement_report("prop.forward_backward_finite", finite));
    }
    return out;
}

// Number of reports run_property_suite emits (for the registration check).
inline int property_suite_size() { return 35; }

// ---- relative benchmark (single-level vs dual-level) ----

struct BenchResult {
    int size = 0;
    double attn_single_ms = 0;  // level-A attention kernel
    double attn_dual_ms = 0;    // level-A + level-B attention kernels
    double pipe_single_ms = 0;  // attention + decode, level A only
    double pipe_dual_ms = 0;    // attention + decode, both levels (Eq. 3 path)
};

// Times the attention kernels and the attention+decode pipelines from
// precomputed encoder taps. Minimum over `repeats` runs filters scheduler
// noise; only relative numbers are meaningful.
inline BenchResult run_bench(int size, int repeats = 5, uint64_t seed = 7) {
    if (repeats < 1) throw std::invalid_argument("bench: repeats must be >= 1");
    TransformNet net = make_network<float>(derive_seed(seed, 1), derive_seed(seed, 2), 32, 16);
    const Tensor ic = synth_image(SynthKind::Blobs, derive_seed(seed, 3), size);
    const Tensor is = synth_image(SynthKind::Stripes, derive_seed(seed, 4), size);
    const auto ct = encode(net.encoder, ic);
    const auto st = encode(net.encoder, is);

    const std::function<void()> work[4] = {
        [&] { (void)sanet_attend(net.sanet_a, ct[3], st[3]); },
        [&] {
            (void)sanet_attend(net.sanet_a, ct[3], st[3]);
            (void)sanet_attend(net.sanet_b, ct[4], st[4]);
        },
        [&] {
            Graph g;
            NetValuesT<float> v = net_leaves(g, net, false);
            Value a = g.leaf(ct[3]);
            Value csc_a =
                sanet_fuse_graph(g, v.sanet_a, a, sanet_attend_graph(g, v.sanet_a, a, g.leaf(st[3])));
            Value f = conv2d(csc_a, v.fuse_w, v.fuse_b, 1, 1, PadMode::Reflect);
            (void)decode_graph(f, v, net.c_feat).tensor();
        },
        [&] {
            Graph g;
            NetValuesT<float> v = net_leaves(g, net, false);
            Value a = g.leaf(ct[3]), b = g.leaf(ct[4]);
            Value csc_a =
                sanet_fuse_graph(g, v.sanet_a, a, sanet_attend_graph(g, v.sanet_a, a, g.leaf(st[3])));
            Value csc_b =
                sanet_fuse_graph(g, v.sanet_b, b, sanet_attend_graph(g, v.sanet_b, b, g.leaf(st[4])));
            Value f = multi_level_combine_graph(csc_a, csc_b, v.fuse_w, v.fuse_b);
            (void)decode_graph(f, v, net.c_feat).tensor();
        },
    };

    // Process-CPU clock so co-tenant wall-time slices do not count; warm each
    // workload once (page faults), then interleave timed rounds so slow drift
    // hits all four workloads evenly. Contamination (cache refills after
    // preemption) only adds time, so the min approaches the true cost.
    const auto cpu_ms = [] { return 1e3 * static_cast<double>(std::clock()) / CLOCKS_PER_SEC; };
    double best[4] = {1e300, 1e300, 1e300, 1e300};
    for (int w = 0; w < 4; ++w) work[w]();
    for (int r = 0; r < repeats; ++r) {
        for (int w = 0; w < 4; ++w) {
            const double t0 = cpu_ms();
            work[w]();
            best[w] = std::min(best[w], cpu_ms() - t0);
        }
    }
    BenchResult out;
    out.size = size;
    out.attn_single_ms = best[0];
    out.attn_dual_ms = best[1];
    out.pipe_single_ms = best[2];
    out.pipe_dual_ms = best[3];
    return out;
}

inline std::string bench_report(const BenchResult& b) {
    char buf[512];
    std::snprintf(buf, sizeof(buf),
                  "size=%d (process-cpu ms, min over repeats)\n"
                  "attention level-A only:        %10.3f ms\n"
                  "attention dual-level:          %10.3f ms\n"
                  "attention+decode single-level: %10.3f ms\n"
                  "attention+decode dual-level:   %10.3f ms\n",
                  b.size, b.attn_single_ms, b.attn_dual_ms, b.pipe_single_ms, b.pipe_dual_ms);
    return buf;
}

}  // namespace sanet
