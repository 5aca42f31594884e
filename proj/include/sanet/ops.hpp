#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sanet/graph.hpp"
#include "sanet/tensor.hpp"

// Differentiable primitives. Every op computes its output eagerly and records
// a backward rule on the tape. Reductions (sums, means, variances, matmul
// inner products) accumulate in double regardless of T so that results are
// reproducible and the float pipeline stays close to the double one.

namespace sanet {

inline constexpr double kNormEps = 1e-5;

enum class PadMode { Zero, Reflect };

namespace detail {

inline int reflect_index(int x, int n) {
    if (n == 1) return 0;
    while (x < 0 || x >= n) {
        if (x < 0) x = -x;
        if (x >= n) x = 2 * n - 2 - x;
    }
    return x;
}

template <typename T>
void check_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
    if (!(a.shape == b.shape)) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + a.shape.str() + " vs " +
                                    b.shape.str());
    }
}

}  // namespace detail

// ---- elementwise ----

template <typename T>
ValueT<T> relu(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    BasicTensor<T> out(in.shape);
    for (int i = 0; i < in.numel(); ++i) out.data[i] = in.data[i] > T(0) ? in.data[i] : T(0);
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        const BasicTensor<T>& in = g.tensor(xid);
        BasicTensor<T>& gin = g.grad(xid);
        // relu'(0) = 0: strict comparison.
        for (int i = 0; i < in.numel(); ++i)
            if (in.data[i] > T(0)) gin.data[i] += gout.data[i];
    });
}

template <typename T>
ValueT<T> add(ValueT<T> a, ValueT<T> b) {
    check_same_graph(a, b);
    detail::check_same_shape(a.tensor(), b.tensor(), "add");
    BasicTensor<T> out(a.tensor().shape);
    for (int i = 0; i < out.numel(); ++i) out.data[i] = a.tensor().data[i] + b.tensor().data[i];
    int aid = a.id, bid = b.id;
    return a.graph->record(std::move(out), {aid, bid}, [aid, bid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& ga = g.grad(aid);
        BasicTensor<T>& gb = g.grad(bid);
        for (int i = 0; i < gout.numel(); ++i) {
            ga.data[i] += gout.data[i];
            gb.data[i] += gout.data[i];
        }
    });
}

template <typename T>
ValueT<T> sub(ValueT<T> a, ValueT<T> b) {
    check_same_graph(a, b);
    detail::check_same_shape(a.tensor(), b.tensor(), "sub");
    BasicTensor<T> out(a.tensor().shape);
    for (int i = 0; i < out.numel(); ++i) out.data[i] = a.tensor().data[i] - b.tensor().data[i];
    int aid = a.id, bid = b.id;
    return a.graph->record(std::move(out), {aid, bid}, [aid, bid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& ga = g.grad(aid);
        BasicTensor<T>& gb = g.grad(bid);
        for (int i = 0; i < gout.numel(); ++i) {
            ga.data[i] += gout.data[i];
            gb.data[i] -= gout.data[i];
        }
    });
}

template <typename T>
ValueT<T> mul(ValueT<T> a, ValueT<T> b) {
    check_same_graph(a, b);
    detail::check_same_shape(a.tensor(), b.tensor(), "mul");
    BasicTensor<T> out(a.tensor().shape);
    for (int i = 0; i < out.numel(); ++i) out.data[i] = a.tensor().data[i] * b.tensor().data[i];
    int aid = a.id, bid = b.id;
    return a.graph->record(std::move(out), {aid, bid}, [aid, bid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        const BasicTensor<T>& ta = g.tensor(aid);
        const BasicTensor<T>& tb = g.tensor(bid);
        BasicTensor<T>& ga = g.grad(aid);
        BasicTensor<T>& gb = g.grad(bid);
        for (int i = 0; i < gout.numel(); ++i) {
            ga.data[i] += gout.data[i] * tb.data[i];
            gb.data[i] += gout.data[i] * ta.data[i];
        }
    });
}

template <typename T>
ValueT<T> scale(ValueT<T> x, double k) {
    BasicTensor<T> out(x.tensor().shape);
    for (int i = 0; i < out.numel(); ++i) out.data[i] = static_cast<T>(k) * x.tensor().data[i];
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid, k](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& gin = g.grad(xid);
        for (int i = 0; i < gout.numel(); ++i) gin.data[i] += static_cast<T>(k) * gout.data[i];
    });
}

// ---- padding ----

template <typename T>
ValueT<T> pad2d(ValueT<T> x, int pad, PadMode mode) {
    const BasicTensor<T>& in = x.tensor();
    const Shape s = in.shape;
    if (pad < 0) throw std::invalid_argument("pad2d: negative padding");
    if (mode == PadMode::Reflect && (pad >= s.h || pad >= s.w)) {
        throw std::invalid_argument("pad2d: reflect padding " + std::to_string(pad) +
                                    " too large for shape " + s.str());
    }
    if (pad == 0) return x;
    Shape os{s.n, s.c, s.h + 2 * pad, s.w + 2 * pad};
    BasicTensor<T> out(os);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int oh = 0; oh < os.h; ++oh) {
                int ih = oh - pad;
                if (mode == PadMode::Reflect) ih = detail::reflect_index(ih, s.h);
                for (int ow = 0; ow < os.w; ++ow) {
                    int iw = ow - pad;
                    if (mode == PadMode::Reflect) iw = detail::reflect_index(iw, s.w);
                    if (mode == PadMode::Zero && (ih < 0 || ih >= s.h || iw < 0 || iw >= s.w))
                        continue;
                    out.data[out.index(n, c, oh, ow)] = in.data[in.index(n, c, ih, iw)];
                }
            }
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid, pad, mode, s](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& gin = g.grad(xid);
        const Shape os = gout.shape;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c)
                for (int oh = 0; oh < os.h; ++oh) {
                    int ih = oh - pad;
                    if (mode == PadMode::Reflect) ih = detail::reflect_index(ih, s.h);
                    for (int ow = 0; ow < os.w; ++ow) {
                        int iw = ow - pad;
                        if (mode == PadMode::Reflect) iw = detail::reflect_index(iw, s.w);
                        if (mode == PadMode::Zero && (ih < 0 || ih >= s.h || iw < 0 || iw >= s.w))
                            continue;
                        gin.data[gin.index(n, c, ih, iw)] += gout.data[gout.index(n, c, oh, ow)];
                    }
                }
    });
}

// ---- convolution ----

namespace detail {

template <typename T>
ValueT<T> conv_valid(ValueT<T> x, ValueT<T> w, const ValueT<T>* bias, int stride) {
    check_same_graph(x, w);
    if (bias) check_same_graph(x, *bias);
    const BasicTensor<T>& in = x.tensor();
    const BasicTensor<T>& wt = w.tensor();
    const Shape is = in.shape;   // (N, Cin, H, W)
    const Shape ws = wt.shape;   // (Cout, Cin, KH, KW)
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be >= 1");
    if (ws.c != is.c) {
        throw std::invalid_argument("conv2d: weight expects " + std::to_string(ws.c) +
                                    " input channels, got " + std::to_string(is.c));
    }
    if (ws.h > is.h || ws.w > is.w) {
        throw std::invalid_argument("conv2d: kernel " + ws.str() + " larger than input " + is.str());
    }
    if (bias) {
        const Shape bs = bias->tensor().shape;
        if (bs.numel() != ws.n) {
            throw std::invalid_argument("conv2d: bias has " + std::to_string(bs.numel()) +
                                        " values, expected " + std::to_string(ws.n));
        }
    }
    const int ho = (is.h - ws.h) / stride + 1;
    const int wo = (is.w - ws.w) / stride + 1;
    Shape os{is.n, ws.n, ho, wo};
    BasicTensor<T> out(os);
    for (int n = 0; n < is.n; ++n)
        for (int co = 0; co < ws.n; ++co) {
            T* op = &out.data[out.index(n, co, 0, 0)];
            if (bias) {
                T b = bias->tensor().data[co];
                for (int i = 0; i < ho * wo; ++i) op[i] = b;
            }
            for (int ci = 0; ci < is.c; ++ci)
                for (int kh = 0; kh < ws.h; ++kh)
                    for (int kw = 0; kw < ws.w; ++kw) {
                        const T wv = wt.data[wt.index(co, ci, kh, kw)];
                        if (wv == T(0)) continue;
                        for (int oh = 0; oh < ho; ++oh) {
                            const T* ip = &in.data[in.index(n, ci, oh * stride + kh, kw)];
                            T* orow = op + oh * wo;
                            for (int ow = 0; ow < wo; ++ow) orow[ow] += wv * ip[ow * stride];
                        }
                    }
        }
    int xid = x.id, wid = w.id;
    int bid = bias ? bias->id : -1;
    std::vector<int> parents{xid, wid};
    if (bias) parents.push_back(bid);
    return x.graph->record(std::move(out), std::move(parents),
                           [xid, wid, bid, stride](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        const BasicTensor<T>& in = g.tensor(xid);
        const BasicTensor<T>& wt = g.tensor(wid);
        const Shape is = in.shape, ws = wt.shape, os = gout.shape;
        BasicTensor<T>& gin = g.grad(xid);
        BasicTensor<T>& gw = g.grad(wid);
        // d/dx: scatter each output grad through the kernel.
        for (int n = 0; n < is.n; ++n)
            for (int co = 0; co < ws.n; ++co) {
                const T* gp = &gout.data[gout.index(n, co, 0, 0)];
                for (int ci = 0; ci < is.c; ++ci)
                    for (int kh = 0; kh < ws.h; ++kh)
                        for (int kw = 0; kw < ws.w; ++kw) {
                            const T wv = wt.data[wt.index(co, ci, kh, kw)];
                            if (wv == T(0)) continue;
                            for (int oh = 0; oh < os.h; ++oh) {
                                T* grow = &gin.data[gin.index(n, ci, oh * stride + kh, kw)];
                                const T* gorow = gp + oh * os.w;
                                for (int ow = 0; ow < os.w; ++ow)
                                    grow[ow * stride] += wv * gorow[ow];
                            }
                        }
            }
        // d/dw: correlation of input with output grad, accumulated in double.
        for (int co = 0; co < ws.n; ++co)
            for (int ci = 0; ci < ws.c; ++ci)
                for (int kh = 0; kh < ws.h; ++kh)
                    for (int kw = 0; kw < ws.w; ++kw) {
                        double acc = 0.0;
                        for (int n = 0; n < is.n; ++n)
                            for (int oh = 0; oh < os.h; ++oh) {
                                const T* ip = &in.data[in.index(n, ci, oh * stride + kh, kw)];
                                const T* gp = &gout.data[gout.index(n, co, oh, 0)];
                                for (int ow = 0; ow < os.w; ++ow)
                                    acc += static_cast<double>(gp[ow]) * ip[ow * stride];
                            }
                        gw.data[gw.index(co, ci, kh, kw)] += static_cast<T>(acc);
                    }
        if (bid >= 0) {
            BasicTensor<T>& gb = g.grad(bid);
            for (int co = 0; co < ws.n; ++co) {
                double acc = 0.0;
                for (int n = 0; n < is.n; ++n) {
                    const T* gp = &gout.data[gout.index(n, co, 0, 0)];
                    for (int i = 0; i < os.h * os.w; ++i) acc += gp[i];
                }
                gb.data[co] += static_cast<T>(acc);
            }
        }
    });
}

}  // namespace detail

template <typename T>
ValueT<T> conv2d(ValueT<T> x, ValueT<T> w, ValueT<T> bias, int stride = 1, int pad = 0,
                 PadMode mode = PadMode::Zero) {
    ValueT<T> padded = pad2d(x, pad, mode);
    return detail::conv_valid(padded, w, &bias, stride);
}

template <typename T>
ValueT<T> conv2d_nobias(ValueT<T> x, ValueT<T> w, int stride = 1, int pad = 0,
                        PadMode mode = PadMode::Zero) {
    ValueT<T> padded = pad2d(x, pad, mode);
    return detail::conv_valid<T>(padded, w, nullptr, stride);
}

// ---- resampling ----

template <typename T>
ValueT<T> upsample_nearest(ValueT<T> x, int factor) {
    if (factor < 1) throw std::invalid_argument("upsample_nearest: factor must be >= 1");
    const BasicTensor<T>& in = x.tensor();
    const Shape s = in.shape;
    Shape os{s.n, s.c, s.h * factor, s.w * factor};
    BasicTensor<T> out(os);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int oh = 0; oh < os.h; ++oh) {
                const T* irow = &in.data[in.index(n, c, oh / factor, 0)];
                T* orow = &out.data[out.index(n, c, oh, 0)];
                for (int ow = 0; ow < os.w; ++ow) orow[ow] = irow[ow / factor];
            }
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid, factor](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& gin = g.grad(xid);
        const Shape os = gout.shape;
        for (int n = 0; n < os.n; ++n)
            for (int c = 0; c < os.c; ++c)
                for (int oh = 0; oh < os.h; ++oh) {
                    const T* gorow = &gout.data[gout.index(n, c, oh, 0)];
                    T* girow = &gin.data[gin.index(n, c, oh / factor, 0)];
                    for (int ow = 0; ow < os.w; ++ow) girow[ow / factor] += gorow[ow];
                }
    });
}

// ---- shape ----

template <typename T>
ValueT<T> reshape(ValueT<T> x, Shape s) {
    check_shape_valid(s);
    if (s.numel() != x.tensor().numel()) {
        throw std::invalid_argument("reshape: cannot view " + x.shape().str() + " as " + s.str());
    }
    BasicTensor<T> out(s, x.tensor().data);
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& gin = g.grad(xid);
        for (int i = 0; i < gout.numel(); ++i) gin.data[i] += gout.data[i];
    });
}

// Transposes the trailing two dims of every (n, c) slice.
template <typename T>
ValueT<T> transpose_mat(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    const Shape s = in.shape;
    Shape os{s.n, s.c, s.w, s.h};
    BasicTensor<T> out(os);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c)
            for (int i = 0; i < s.h; ++i)
                for (int j = 0; j < s.w; ++j)
                    out.data[out.index(n, c, j, i)] = in.data[in.index(n, c, i, j)];
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& gin = g.grad(xid);
        const Shape os = gout.shape;
        for (int n = 0; n < os.n; ++n)
            for (int c = 0; c < os.c; ++c)
                for (int i = 0; i < os.h; ++i)
                    for (int j = 0; j < os.w; ++j)
                        gin.data[gin.index(n, c, j, i)] += gout.data[gout.index(n, c, i, j)];
    });
}

// Batched matrix product: (N, C, H, K) x (N, C, K, W) -> (N, C, H, W).
template <typename T>
ValueT<T> matmul(ValueT<T> a, ValueT<T> b) {
    check_same_graph(a, b);
    const Shape as = a.shape(), bs = b.shape();
    if (as.n != bs.n || as.c != bs.c || as.w != bs.h) {
        throw std::invalid_argument("matmul: incompatible shapes " + as.str() + " and " + bs.str());
    }
    Shape os{as.n, as.c, as.h, bs.w};
    BasicTensor<T> out(os);
    const BasicTensor<T>& ta = a.tensor();
    const BasicTensor<T>& tb = b.tensor();
    std::vector<double> row(bs.w);
    for (int n = 0; n < as.n; ++n)
        for (int c = 0; c < as.c; ++c) {
            const T* ap = &ta.data[ta.index(n, c, 0, 0)];
            const T* bp = &tb.data[tb.index(n, c, 0, 0)];
            T* op = &out.data[out.index(n, c, 0, 0)];
            for (int i = 0; i < as.h; ++i) {
                std::fill(row.begin(), row.end(), 0.0);
                for (int k = 0; k < as.w; ++k) {
                    const double av = ap[i * as.w + k];
                    const T* brow = bp + k * bs.w;
                    for (int j = 0; j < bs.w; ++j) row[j] += av * brow[j];
                }
                for (int j = 0; j < bs.w; ++j) op[i * bs.w + j] = static_cast<T>(row[j]);
            }
        }
    int aid = a.id, bid = b.id;
    return a.graph->record(std::move(out), {aid, bid}, [aid, bid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        const BasicTensor<T>& ta = g.tensor(aid);
        const BasicTensor<T>& tb = g.tensor(bid);
        BasicTensor<T>& ga = g.grad(aid);
        BasicTensor<T>& gb = g.grad(bid);
        const Shape as = ta.shape, bs = tb.shape, os = gout.shape;
        std::vector<double> row;
        for (int n = 0; n < as.n; ++n)
            for (int c = 0; c < as.c; ++c) {
                const T* ap = &ta.data[ta.index(n, c, 0, 0)];
                const T* bp = &tb.data[tb.index(n, c, 0, 0)];
                const T* gp = &gout.data[gout.index(n, c, 0, 0)];
                T* gap = &ga.data[ga.index(n, c, 0, 0)];
                T* gbp = &gb.data[gb.index(n, c, 0, 0)];
                // dA = dC * B^T
                for (int i = 0; i < as.h; ++i)
                    for (int k = 0; k < as.w; ++k) {
                        double acc = 0.0;
                        const T* grow = gp + i * os.w;
                        const T* brow = bp + k * bs.w;
                        for (int j = 0; j < os.w; ++j)
                            acc += static_cast<double>(grow[j]) * brow[j];
                        gap[i * as.w + k] += static_cast<T>(acc);
                    }
                // dB = A^T * dC
                row.assign(bs.w, 0.0);
                for (int k = 0; k < bs.h; ++k) {
                    std::fill(row.begin(), row.end(), 0.0);
                    for (int i = 0; i < as.h; ++i) {
                        const double av = ap[i * as.w + k];
                        const T* grow = gp + i * os.w;
                        for (int j = 0; j < os.w; ++j) row[j] += av * grow[j];
                    }
                    for (int j = 0; j < os.w; ++j) gbp[k * bs.w + j] += static_cast<T>(row[j]);
                }
            }
    });
}

// ---- normalization and reductions ----

// Softmax along the last dim, independently for each (n, c, h) row.
template <typename T>
ValueT<T> softmax_rows(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    const Shape s = in.shape;
    BasicTensor<T> out(s);
    const int rows = s.n * s.c * s.h;
    for (int r = 0; r < rows; ++r) {
        const T* ip = &in.data[static_cast<size_t>(r) * s.w];
        T* op = &out.data[static_cast<size_t>(r) * s.w];
        T mx = ip[0];
        for (int j = 1; j < s.w; ++j) mx = std::max(mx, ip[j]);
        double denom = 0.0;
        for (int j = 0; j < s.w; ++j) {
            const double e = std::exp(static_cast<double>(ip[j] - mx));
            op[j] = static_cast<T>(e);
            denom += e;
        }
        for (int j = 0; j < s.w; ++j) op[j] = static_cast<T>(op[j] / denom);
    }
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        const BasicTensor<T>& sm = g.tensor(id);
        BasicTensor<T>& gin = g.grad(xid);
        const Shape s = sm.shape;
        const int rows = s.n * s.c * s.h;
        for (int r = 0; r < rows; ++r) {
            const T* sp = &sm.data[static_cast<size_t>(r) * s.w];
            const T* gp = &gout.data[static_cast<size_t>(r) * s.w];
            T* gip = &gin.data[static_cast<size_t>(r) * s.w];
            double dot = 0.0;
            for (int j = 0; j < s.w; ++j) dot += static_cast<double>(gp[j]) * sp[j];
            for (int j = 0; j < s.w; ++j)
                gip[j] += static_cast<T>(sp[j] * (static_cast<double>(gp[j]) - dot));
        }
    });
}

// Per-(n, c) mean/variance normalization over the spatial dims.
template <typename T>
ValueT<T> mean_var_normalize(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    const Shape s = in.shape;
    const int m = s.h * s.w;
    BasicTensor<T> out(s);
    std::vector<double> inv_sigma(static_cast<size_t>(s.n) * s.c);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const T* ip = &in.data[in.index(n, c, 0, 0)];
            T* op = &out.data[out.index(n, c, 0, 0)];
            double mu = 0.0;
            for (int i = 0; i < m; ++i) mu += ip[i];
            mu /= m;
            double var = 0.0;
            for (int i = 0; i < m; ++i) {
                const double d = ip[i] - mu;
                var += d * d;
            }
            var /= m;
            const double is = 1.0 / std::sqrt(var + kNormEps);
            inv_sigma[static_cast<size_t>(n) * s.c + c] = is;
            for (int i = 0; i < m; ++i) op[i] = static_cast<T>((ip[i] - mu) * is);
        }
    int xid = x.id;
    return x.graph->record(std::move(out), {xid},
                           [xid, inv_sigma = std::move(inv_sigma)](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        const BasicTensor<T>& y = g.tensor(id);
        BasicTensor<T>& gin = g.grad(xid);
        const Shape s = y.shape;
        const int m = s.h * s.w;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const T* yp = &y.data[y.index(n, c, 0, 0)];
                const T* gp = &gout.data[gout.index(n, c, 0, 0)];
                T* gip = &gin.data[gin.index(n, c, 0, 0)];
                double gmean = 0.0, gymean = 0.0;
                for (int i = 0; i < m; ++i) {
                    gmean += gp[i];
                    gymean += static_cast<double>(gp[i]) * yp[i];
                }
                gmean /= m;
                gymean /= m;
                const double is = inv_sigma[static_cast<size_t>(n) * s.c + c];
                for (int i = 0; i < m; ++i)
                    gip[i] += static_cast<T>((gp[i] - gmean - yp[i] * gymean) * is);
            }
    });
}

// Per-(n, c) spatial mean -> (N, C, 1, 1).
template <typename T>
ValueT<T> channel_mean(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    const Shape s = in.shape;
    const int m = s.h * s.w;
    BasicTensor<T> out(Shape{s.n, s.c, 1, 1});
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const T* ip = &in.data[in.index(n, c, 0, 0)];
            double mu = 0.0;
            for (int i = 0; i < m; ++i) mu += ip[i];
            out.data[out.index(n, c, 0, 0)] = static_cast<T>(mu / m);
        }
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid](GraphT<T>& g, int id) {
        const BasicTensor<T>& gout = g.grad(id);
        BasicTensor<T>& gin = g.grad(xid);
        const Shape s = gin.shape;
        const int m = s.h * s.w;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const T gv = static_cast<T>(gout.data[gout.index(n, c, 0, 0)] / static_cast<T>(m));
                T* gip = &gin.data[gin.index(n, c, 0, 0)];
                for (int i = 0; i < m; ++i) gip[i] += gv;
            }
    });
}

// Per-(n, c) spatial std (population variance + eps, then sqrt) -> (N, C, 1, 1).
template <typename T>
ValueT<T> channel_std(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    const Shape s = in.shape;
    const int m = s.h * s.w;
    BasicTensor<T> out(Shape{s.n, s.c, 1, 1});
    std::vector<double> mus(static_cast<size_t>(s.n) * s.c);
    std::vector<double> sigmas(static_cast<size_t>(s.n) * s.c);
    for (int n = 0; n < s.n; ++n)
        for (int c = 0; c < s.c; ++c) {
            const T* ip = &in.data[in.index(n, c, 0, 0)];
            double mu = 0.0;
            for (int i = 0; i < m; ++i) mu += ip[i];
            mu /= m;
            double var = 0.0;
            for (int i = 0; i < m; ++i) {
                const double d = ip[i] - mu;
                var += d * d;
            }
            var /= m;
            const double sigma = std::sqrt(var + kNormEps);
            mus[static_cast<size_t>(n) * s.c + c] = mu;
            sigmas[static_cast<size_t>(n) * s.c + c] = sigma;
            out.data[out.index(n, c, 0, 0)] = static_cast<T>(sigma);
        }
    int xid = x.id;
    return x.graph->record(std::move(out), {xid},
                           [xid, mus = std::move(mus), sigmas = std::move(sigmas)](GraphT<T>& g,
                                                                                   int id) {
        const BasicTensor<T>& gout = g.grad(id);
        const BasicTensor<T>& in = g.tensor(xid);
        BasicTensor<T>& gin = g.grad(xid);
        const Shape s = in.shape;
        const int m = s.h * s.w;
        for (int n = 0; n < s.n; ++n)
            for (int c = 0; c < s.c; ++c) {
                const double mu = mus[static_cast<size_t>(n) * s.c + c];
                const double sigma = sigmas[static_cast<size_t>(n) * s.c + c];
                const double gv = gout.data[gout.index(n, c, 0, 0)];
                const double k = gv / (m * sigma);
                const T* ip = &in.data[in.index(n, c, 0, 0)];
                T* gip = &gin.data[gin.index(n, c, 0, 0)];
                for (int i = 0; i < m; ++i) gip[i] += static_cast<T>(k * (ip[i] - mu));
            }
    });
}

// Per-channel (mu, sigma) pair, both (N, C, 1, 1).
template <typename T>
std::pair<ValueT<T>, ValueT<T>> channel_stats(ValueT<T> x) {
    return {channel_mean(x), channel_std(x)};
}

template <typename T>
ValueT<T> sum_all(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    double acc = 0.0;
    for (int i = 0; i < in.numel(); ++i) acc += in.data[i];
    BasicTensor<T> out = BasicTensor<T>::scalar(static_cast<T>(acc));
    int xid = x.id;
    return x.graph->record(std::move(out), {xid}, [xid](GraphT<T>& g, int id) {
        const T gv = g.grad(id).data[0];
        BasicTensor<T>& gin = g.grad(xid);
        for (int i = 0; i < gin.numel(); ++i) gin.data[i] += gv;
    });
}

template <typename T>
ValueT<T> mean_all(ValueT<T> x) {
    const BasicTensor<T>& in = x.tensor();
    double acc = 0.0;
    for (int i = 0; i < in.numel(); ++i) acc += in.data[i];
    BasicTensor<T> out = BasicTensor<T>::scalar(static_cast<T>(acc / in.numel()));
    int xid = x.id;
    const int m = in.numel();
    return x.graph->record(std::move(out), {xid}, [xid, m](GraphT<T>& g, int id) {
        const T gv = static_cast<T>(g.grad(id).data[0] / static_cast<T>(m));
        BasicTensor<T>& gin = g.grad(xid);
        for (int i = 0; i < gin.numel(); ++i) gin.data[i] += gv;
    });
}

// Mean squared error over all elements.
template <typename T>
ValueT<T> mse(ValueT<T> a, ValueT<T> b) {
    check_same_graph(a, b);
    detail::check_same_shape(a.tensor(), b.tensor(), "mse");
    const BasicTensor<T>& ta = a.tensor();
    const BasicTensor<T>& tb = b.tensor();
    double acc = 0.0;
    for (int i = 0; i < ta.numel(); ++i) {
        const double d = static_cast<double>(ta.data[i]) - tb.data[i];
        acc += d * d;
    }
    BasicTensor<T> out = BasicTensor<T>::scalar(static_cast<T>(acc / ta.numel()));
    int aid = a.id, bid = b.id;
    return a.graph->record(std::move(out), {aid, bid}, [aid, bid](GraphT<T>& g, int id) {
        const T gv = g.grad(id).data[0];
        const BasicTensor<T>& ta = g.tensor(aid);
        const BasicTensor<T>& tb = g.tensor(bid);
        BasicTensor<T>& ga = g.grad(aid);
        BasicTensor<T>& gb = g.grad(bid);
        const T k = static_cast<T>(2.0 / ta.numel()) * gv;
        for (int i = 0; i < ta.numel(); ++i) {
            const T d = ta.data[i] - tb.data[i];
            ga.data[i] += k * d;
            gb.data[i] -= k * d;
        }
    });
}

}  // namespace sanet
