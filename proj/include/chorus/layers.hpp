#pragma once

// Forward and analytic-backward kernels for the network. NCHW layout,
// plain loops arranged so the innermost dimension is contiguous.

#include <cmath>
#include <cstddef>
#include <vector>

#include "chorus/error.hpp"
#include "chorus/tensor.hpp"

namespace chorus {

namespace conv_detail {

// Range of output coordinates whose input coordinate o*stride + k - pad
// lands inside [0, limit).
inline void valid_out_range(std::size_t out_dim, std::size_t limit, int stride, int pad, int k,
                            std::size_t& lo, std::size_t& hi) {
    std::size_t o = 0;
    while (o < out_dim && static_cast<long>(o) * stride + k - pad < 0) ++o;
    lo = o;
    const long last_in = static_cast<long>(limit) - 1 - k + pad;
    if (last_in < 0) {
        hi = lo;
        return;
    }
    hi = std::min(out_dim, static_cast<std::size_t>(last_in / stride) + 1);
    if (hi < lo) hi = lo;
}

inline std::size_t conv_out_dim(std::size_t in, int k, int stride, int pad) {
    const long v = (static_cast<long>(in) + 2 * pad - k) / stride + 1;
    return v > 0 ? static_cast<std::size_t>(v) : 0;
}

} // namespace conv_detail

// Cross-correlation, weights O x I x K x K, optional bias O (empty = none).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, int stride,
                         int pad) {
    CHORUS_REQUIRE(x.shape.size() == 4 && w.shape.size() == 4, Err::ShapeMismatch,
                   "conv2d wants NCHW input and OIKK weights");
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t O = w.shape[0], KH = w.shape[2], KW = w.shape[3];
    CHORUS_REQUIRE(w.shape[1] == C, Err::ShapeMismatch, "conv2d channel mismatch");
    CHORUS_REQUIRE(b.empty() || (b.shape.size() == 1 && b.shape[0] == O), Err::ShapeMismatch,
                   "conv2d bias size mismatch");
    CHORUS_REQUIRE(stride >= 1 && pad >= 0, Err::ShapeMismatch, "bad stride/pad");

    const std::size_t OH = conv_detail::conv_out_dim(H, static_cast<int>(KH), stride, pad);
    const std::size_t OW = conv_detail::conv_out_dim(W, static_cast<int>(KW), stride, pad);
    CHORUS_REQUIRE(OH > 0 && OW > 0, Err::ShapeMismatch, "conv2d output collapses to zero");

    Tensor<T> y({N, O, OH, OW});
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t o = 0; o < O; ++o) {
            T* ybase = y.data.data() + ((n * O + o) * OH) * OW;
            const T bias = b.empty() ? T{0} : b.data[o];
            for (std::size_t i = 0; i < OH * OW; ++i) ybase[i] = bias;
            for (std::size_t c = 0; c < C; ++c) {
                const T* xbase = x.data.data() + ((n * C + c) * H) * W;
                for (std::size_t kh = 0; kh < KH; ++kh) {
                    std::size_t oh_lo, oh_hi;
                    conv_detail::valid_out_range(OH, H, stride, pad, static_cast<int>(kh), oh_lo,
                                                 oh_hi);
                    for (std::size_t kw = 0; kw < KW; ++kw) {
                        const T wv = w.data[((o * C + c) * KH + kh) * KW + kw];
                        if (wv == T{0}) continue;
                        std::size_t ow_lo, ow_hi;
                        conv_detail::valid_out_range(OW, W, stride, pad, static_cast<int>(kw),
                                                     ow_lo, ow_hi);
                        for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
                            const std::size_t ih =
                                static_cast<std::size_t>(static_cast<long>(oh) * stride + kh - pad);
                            const T* xrow = xbase + ih * W;
                            T* yrow = ybase + oh * OW;
                            if (stride == 1) {
                                const T* xp = xrow + ow_lo + kw - static_cast<std::size_t>(pad);
                                for (std::size_t ow = ow_lo; ow < ow_hi; ++ow)
                                    yrow[ow] += wv * xp[ow - ow_lo];
                            } else {
                                for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                                    const std::size_t iw = static_cast<std::size_t>(
                                        static_cast<long>(ow) * stride + kw - pad);
                                    yrow[ow] += wv * xrow[iw];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

// Accumulates dx/dw/db for conv2d. Pass empty tensors to skip a component.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy, int stride,
                     int pad, Tensor<T>* dx, Tensor<T>* dw, Tensor<T>* db) {
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t O = w.shape[0], KH = w.shape[2], KW = w.shape[3];
    const std::size_t OH = dy.shape[2], OW = dy.shape[3];

    if (db && !db->empty()) {
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t o = 0; o < O; ++o) {
                const T* dyrow = dy.data.data() + ((n * O + o) * OH) * OW;
                T acc{0};
                for (std::size_t i = 0; i < OH * OW; ++i) acc += dyrow[i];
                db->data[o] += acc;
            }
    }

    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t o = 0; o < O; ++o) {
            const T* dybase = dy.data.data() + ((n * O + o) * OH) * OW;
            for (std::size_t c = 0; c < C; ++c) {
                const T* xbase = x.data.data() + ((n * C + c) * H) * W;
                T* dxbase = dx ? dx->data.data() + ((n * C + c) * H) * W : nullptr;
                for (std::size_t kh = 0; kh < KH; ++kh) {
                    std::size_t oh_lo, oh_hi;
                    conv_detail::valid_out_range(OH, H, stride, pad, static_cast<int>(kh), oh_lo,
                                                 oh_hi);
                    for (std::size_t kw = 0; kw < KW; ++kw) {
                        std::size_t ow_lo, ow_hi;
                        conv_detail::valid_out_range(OW, W, stride, pad, static_cast<int>(kw),
                                                     ow_lo, ow_hi);
                        const std::size_t widx = ((o * C + c) * KH + kh) * KW + kw;
                        const T wv = w.data[widx];
                        T wacc{0};
                        for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
                            const std::size_t ih =
                                static_cast<std::size_t>(static_cast<long>(oh) * stride + kh - pad);
                            const T* dyrow = dybase + oh * OW;
                            const T* xrow = xbase + ih * W;
                            T* dxrow = dxbase ? dxbase + ih * W : nullptr;
                            if (stride == 1) {
                                const std::size_t off = kw - static_cast<std::size_t>(pad) + ow_lo;
                                const T* xp = xrow + off;
                                T* dxp = dxrow ? dxrow + off : nullptr;
                                for (std::size_t i = 0; i < ow_hi - ow_lo; ++i) {
                                    const T g = dyrow[ow_lo + i];
                                    wacc += g * xp[i];
                                    if (dxp) dxp[i] += wv * g;
                                }
                            } else {
                                for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                                    const std::size_t iw = static_cast<std::size_t>(
                                        static_cast<long>(ow) * stride + kw - pad);
                                    const T g = dyrow[ow];
                                    wacc += g * xrow[iw];
                                    if (dxrow) dxrow[iw] += wv * g;
                                }
                            }
                        }
                        if (dw) dw->data[widx] += wacc;
                    }
                }
            }
        }
    }
}

// Per-channel spatial convolution, weights C x 1 x K x K, no bias.
template <typename T>
Tensor<T> depthwise_conv2d_forward(const Tensor<T>& x, const Tensor<T>& w, int stride, int pad) {
    CHORUS_REQUIRE(x.shape.size() == 4 && w.shape.size() == 4, Err::ShapeMismatch,
                   "depthwise wants NCHW input and C1KK weights");
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t KH = w.shape[2], KW = w.shape[3];
    CHORUS_REQUIRE(w.shape[0] == C && w.shape[1] == 1, Err::ShapeMismatch,
                   "depthwise channel mismatch");

    const std::size_t OH = conv_detail::conv_out_dim(H, static_cast<int>(KH), stride, pad);
    const std::size_t OW = conv_detail::conv_out_dim(W, static_cast<int>(KW), stride, pad);
    CHORUS_REQUIRE(OH > 0 && OW > 0, Err::ShapeMismatch, "depthwise output collapses to zero");

    Tensor<T> y({N, C, OH, OW});
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            const T* xbase = x.data.data() + ((n * C + c) * H) * W;
            T* ybase = y.data.data() + ((n * C + c) * OH) * OW;
            for (std::size_t kh = 0; kh < KH; ++kh) {
                std::size_t oh_lo, oh_hi;
                conv_detail::valid_out_range(OH, H, stride, pad, static_cast<int>(kh), oh_lo, oh_hi);
                for (std::size_t kw = 0; kw < KW; ++kw) {
                    const T wv = w.data[(c * KH + kh) * KW + kw];
                    std::size_t ow_lo, ow_hi;
                    conv_detail::valid_out_range(OW, W, stride, pad, static_cast<int>(kw), ow_lo,
                                                 ow_hi);
                    for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
                        const std::size_t ih =
                            static_cast<std::size_t>(static_cast<long>(oh) * stride + kh - pad);
                        const T* xrow = xbase + ih * W;
                        T* yrow = ybase + oh * OW;
                        if (stride == 1) {
                            const T* xp = xrow + ow_lo + kw - static_cast<std::size_t>(pad);
                            for (std::size_t ow = ow_lo; ow < ow_hi; ++ow)
                                yrow[ow] += wv * xp[ow - ow_lo];
                        } else {
                            for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                                const std::size_t iw = static_cast<std::size_t>(
                                    static_cast<long>(ow) * stride + kw - pad);
                                yrow[ow] += wv * xrow[iw];
                            }
                        }
                    }
                }
            }
        }
    }
    return y;
}

template <typename T>
void depthwise_conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& dy,
                               int stride, int pad, Tensor<T>* dx, Tensor<T>* dw) {
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const std::size_t KH = w.shape[2], KW = w.shape[3];
    const std::size_t OH = dy.shape[2], OW = dy.shape[3];

    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t c = 0; c < C; ++c) {
            const T* xbase = x.data.data() + ((n * C + c) * H) * W;
            const T* dybase = dy.data.data() + ((n * C + c) * OH) * OW;
            T* dxbase = dx ? dx->data.data() + ((n * C + c) * H) * W : nullptr;
            for (std::size_t kh = 0; kh < KH; ++kh) {
                std::size_t oh_lo, oh_hi;
                conv_detail::valid_out_range(OH, H, stride, pad, static_cast<int>(kh), oh_lo, oh_hi);
                for (std::size_t kw = 0; kw < KW; ++kw) {
                    std::size_t ow_lo, ow_hi;
                    conv_detail::valid_out_range(OW, W, stride, pad, static_cast<int>(kw), ow_lo,
                                                 ow_hi);
                    const std::size_t widx = (c * KH + kh) * KW + kw;
                    const T wv = w.data[widx];
                    T wacc{0};
                    for (std::size_t oh = oh_lo; oh < oh_hi; ++oh) {
                        const std::size_t ih =
                            static_cast<std::size_t>(static_cast<long>(oh) * stride + kh - pad);
                        const T* dyrow = dybase + oh * OW;
                        const T* xrow = xbase + ih * W;
                        T* dxrow = dxbase ? dxbase + ih * W : nullptr;
                        for (std::size_t ow = ow_lo; ow < ow_hi; ++ow) {
                            const std::size_t iw = static_cast<std::size_t>(
                                static_cast<long>(ow) * stride + kw - pad);
                            const T g = dyrow[ow];
                            wacc += g * xrow[iw];
                            if (dxrow) dxrow[iw] += wv * g;
                        }
                    }
                    if (dw) dw->data[widx] += wacc;
                }
            }
        }
    }
}

enum class NormMode { Train, Infer, Frozen };

template <typename T>
struct BatchNormStats {
    Tensor<T> running_mean;
    Tensor<T> running_var;

    explicit BatchNormStats(std::size_t channels = 0)
        : running_mean({channels}), running_var({channels}) {
        running_var.fill(T{1});
    }
};

template <typename T>
struct BatchNormCache {
    Tensor<T> xhat;
    std::vector<double> inv_std;
    NormMode mode = NormMode::Train;
};

// Train mode normalizes with batch statistics (eps 1e-5) and updates the
// running stats with momentum 0.9. Infer/Frozen use the running stats;
// Frozen additionally leaves them untouched so the loss stays a fixed
// differentiable function during gradient checks.
template <typename T>
Tensor<T> batch_norm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                             BatchNormStats<T>& stats, NormMode mode,
                             BatchNormCache<T>* cache = nullptr, double momentum = 0.9,
                             double eps = 1e-5) {
    CHORUS_REQUIRE(x.shape.size() == 4, Err::ShapeMismatch, "batch_norm wants NCHW");
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    CHORUS_REQUIRE(gamma.numel() == C && beta.numel() == C, Err::ShapeMismatch,
                   "batch_norm affine size mismatch");
    CHORUS_REQUIRE(stats.running_mean.numel() == C && stats.running_var.numel() == C,
                   Err::ShapeMismatch, "batch_norm stats size mismatch");
    const std::size_t M = N * H * W;
    CHORUS_REQUIRE(mode != NormMode::Train || M >= 2, Err::ModeMisuse,
                   "train-mode batch norm needs more than one value per channel");

    Tensor<T> y({N, C, H, W});
    if (cache) {
        cache->xhat = Tensor<T>({N, C, H, W});
        cache->inv_std.assign(C, 0.0);
        cache->mode = mode;
    }

    for (std::size_t c = 0; c < C; ++c) {
        double mean, var;
        if (mode == NormMode::Train) {
            double acc = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                const T* xp = x.data.data() + ((n * C + c) * H) * W;
                for (std::size_t i = 0; i < H * W; ++i) acc += static_cast<double>(xp[i]);
            }
            mean = acc / static_cast<double>(M);
            double vacc = 0.0;
            for (std::size_t n = 0; n < N; ++n) {
                const T* xp = x.data.data() + ((n * C + c) * H) * W;
                for (std::size_t i = 0; i < H * W; ++i) {
                    const double d = static_cast<double>(xp[i]) - mean;
                    vacc += d * d;
                }
            }
            var = vacc / static_cast<double>(M);
            stats.running_mean.data[c] =
                static_cast<T>(momentum * static_cast<double>(stats.running_mean.data[c]) +
                               (1.0 - momentum) * mean);
            stats.running_var.data[c] =
                static_cast<T>(momentum * static_cast<double>(stats.running_var.data[c]) +
                               (1.0 - momentum) * var);
        } else {
            mean = static_cast<double>(stats.running_mean.data[c]);
            var = static_cast<double>(stats.running_var.data[c]);
        }
        CHORUS_REQUIRE(var >= 0.0, Err::ModeMisuse, "negative running variance");
        const double inv_std = 1.0 / std::sqrt(var + eps);
        const double g = static_cast<double>(gamma.data[c]);
        const double bta = static_cast<double>(beta.data[c]);
        if (cache) cache->inv_std[c] = inv_std;
        for (std::size_t n = 0; n < N; ++n) {
            const T* xp = x.data.data() + ((n * C + c) * H) * W;
            T* yp = y.data.data() + ((n * C + c) * H) * W;
            T* xh = cache ? cache->xhat.data.data() + ((n * C + c) * H) * W : nullptr;
            for (std::size_t i = 0; i < H * W; ++i) {
                const double xhat = (static_cast<double>(xp[i]) - mean) * inv_std;
                if (xh) xh[i] = static_cast<T>(xhat);
                yp[i] = static_cast<T>(g * xhat + bta);
            }
        }
    }
    return y;
}

template <typename T>
Tensor<T> batch_norm_backward(const Tensor<T>& dy, const BatchNormCache<T>& cache,
                              const Tensor<T>& gamma, Tensor<T>* dgamma, Tensor<T>* dbeta) {
    const std::size_t N = dy.shape[0], C = dy.shape[1], H = dy.shape[2], W = dy.shape[3];
    const std::size_t M = N * H * W;
    Tensor<T> dx({N, C, H, W});

    for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t n = 0; n < N; ++n) {
            const T* dyp = dy.data.data() + ((n * C + c) * H) * W;
            const T* xh = cache.xhat.data.data() + ((n * C + c) * H) * W;
            for (std::size_t i = 0; i < H * W; ++i) {
                sum_dy += static_cast<double>(dyp[i]);
                sum_dy_xhat += static_cast<double>(dyp[i]) * static_cast<double>(xh[i]);
            }
        }
        if (dgamma) dgamma->data[c] += static_cast<T>(sum_dy_xhat);
        if (dbeta) dbeta->data[c] += static_cast<T>(sum_dy);

        const double g = static_cast<double>(gamma.data[c]);
        const double inv_std = cache.inv_std[c];
        const double mean_dy = sum_dy / static_cast<double>(M);
        const double mean_dy_xhat = sum_dy_xhat / static_cast<double>(M);
        for (std::size_t n = 0; n < N; ++n) {
            const T* dyp = dy.data.data() + ((n * C + c) * H) * W;
            const T* xh = cache.xhat.data.data() + ((n * C + c) * H) * W;
            T* dxp = dx.data.data() + ((n * C + c) * H) * W;
            if (cache.mode == NormMode::Train) {
                for (std::size_t i = 0; i < H * W; ++i)
                    dxp[i] = static_cast<T>(
                        g * inv_std *
                        (static_cast<double>(dyp[i]) - mean_dy -
                         static_cast<double>(xh[i]) * mean_dy_xhat));
            } else {
                for (std::size_t i = 0; i < H * W; ++i)
                    dxp[i] = static_cast<T>(g * inv_std * static_cast<double>(dyp[i]));
            }
        }
    }
    return dx;
}

template <typename T>
T sigmoid(T x) {
    return static_cast<T>(1.0 / (1.0 + std::exp(-static_cast<double>(x))));
}

template <typename T>
Tensor<T> swish_forward(const Tensor<T>& x) {
    Tensor<T> y;
    y.shape = x.shape;
    y.data.resize(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) y.data[i] = x.data[i] * sigmoid(x.data[i]);
    return y;
}

template <typename T>
Tensor<T> swish_backward(const Tensor<T>& dy, const Tensor<T>& x) {
    CHORUS_REQUIRE(same_shape(dy, x), Err::ShapeMismatch, "swish backward shape mismatch");
    Tensor<T> dx;
    dx.shape = x.shape;
    dx.data.resize(x.data.size());
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        const T s = sigmoid(x.data[i]);
        dx.data[i] = dy.data[i] * (s + x.data[i] * s * (T{1} - s));
    }
    return dx;
}

template <typename T>
Tensor<T> global_average_pool_forward(const Tensor<T>& x) {
    CHORUS_REQUIRE(x.shape.size() == 4, Err::ShapeMismatch, "gap wants NCHW");
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    CHORUS_REQUIRE(H >= 1 && W >= 1, Err::ShapeMismatch, "gap needs spatial extent");
    Tensor<T> y({N, C});
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const T* xp = x.data.data() + ((n * C + c) * H) * W;
            double acc = 0.0;
            for (std::size_t i = 0; i < H * W; ++i) acc += static_cast<double>(xp[i]);
            y.data[n * C + c] = static_cast<T>(acc * inv);
        }
    return y;
}

template <typename T>
Tensor<T> global_average_pool_backward(const Tensor<T>& dy, const std::vector<std::size_t>& xshape) {
    const std::size_t N = xshape[0], C = xshape[1], H = xshape[2], W = xshape[3];
    Tensor<T> dx({N, C, H, W});
    const T inv = static_cast<T>(1.0 / static_cast<double>(H * W));
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const T g = dy.data[n * C + c] * inv;
            T* dxp = dx.data.data() + ((n * C + c) * H) * W;
            for (std::size_t i = 0; i < H * W; ++i) dxp[i] = g;
        }
    return dx;
}

// y = x W^T + b, x: N x C, W: K x C, b: K.
template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    CHORUS_REQUIRE(x.shape.size() == 2 && w.shape.size() == 2, Err::ShapeMismatch,
                   "dense wants 2-d input and weights");
    const std::size_t N = x.shape[0], C = x.shape[1], K = w.shape[0];
    CHORUS_REQUIRE(w.shape[1] == C, Err::ShapeMismatch, "dense feature mismatch");
    CHORUS_REQUIRE(b.empty() || b.numel() == K, Err::ShapeMismatch, "dense bias mismatch");
    Tensor<T> y({N, K});
    for (std::size_t n = 0; n < N; ++n) {
        const T* xp = x.data.data() + n * C;
        for (std::size_t k = 0; k < K; ++k) {
            const T* wp = w.data.data() + k * C;
            double acc = b.empty() ? 0.0 : static_cast<double>(b.data[k]);
            for (std::size_t c = 0; c < C; ++c) acc += static_cast<double>(xp[c]) * wp[c];
            y.data[n * K + k] = static_cast<T>(acc);
        }
    }
    return y;
}

template <typename T>
Tensor<T> dense_backward(const Tensor<T>& dy, const Tensor<T>& x, const Tensor<T>& w,
                         Tensor<T>* dw, Tensor<T>* db) {
    const std::size_t N = x.shape[0], C = x.shape[1], K = w.shape[0];
    Tensor<T> dx({N, C});
    for (std::size_t n = 0; n < N; ++n) {
        const T* dyp = dy.data.data() + n * K;
        const T* xp = x.data.data() + n * C;
        T* dxp = dx.data.data() + n * C;
        for (std::size_t k = 0; k < K; ++k) {
            const T g = dyp[k];
            const T* wp = w.data.data() + k * C;
            T* dwp = dw ? dw->data.data() + k * C : nullptr;
            for (std::size_t c = 0; c < C; ++c) {
                dxp[c] += g * wp[c];
                if (dwp) dwp[c] += g * xp[c];
            }
            if (db) db->data[k] += g;
        }
    }
    return dx;
}

template <typename T>
struct SqueezeExciteCache {
    Tensor<T> pooled; // N x C
    Tensor<T> a1;     // N x Cr (pre-activation)
    Tensor<T> hidden; // N x Cr (after swish)
    Tensor<T> gate;   // N x C (after sigmoid)
};

// s = sigmoid(W2 swish(W1 GAP(x) + b1) + b2); y = x scaled per channel by s.
template <typename T>
Tensor<T> squeeze_excite_forward(const Tensor<T>& x, const Tensor<T>& w1, const Tensor<T>& b1,
                                 const Tensor<T>& w2, const Tensor<T>& b2,
                                 SqueezeExciteCache<T>* cache = nullptr) {
    CHORUS_REQUIRE(x.shape.size() == 4, Err::ShapeMismatch, "squeeze_excite wants NCHW");
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    CHORUS_REQUIRE(w1.shape.size() == 2 && w1.shape[1] == C, Err::ShapeMismatch,
                   "squeeze_excite reduce weights mismatch");
    CHORUS_REQUIRE(w2.shape.size() == 2 && w2.shape[0] == C && w2.shape[1] == w1.shape[0],
                   Err::ShapeMismatch, "squeeze_excite expand weights mismatch");

    Tensor<T> pooled = global_average_pool_forward(x);
    Tensor<T> a1 = dense_forward(pooled, w1, b1);
    Tensor<T> hidden = swish_forward(a1);
    Tensor<T> a2 = dense_forward(hidden, w2, b2);
    Tensor<T> gate({N, C});
    for (std::size_t i = 0; i < gate.data.size(); ++i) gate.data[i] = sigmoid(a2.data[i]);

    Tensor<T> y({N, C, H, W});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const T s = gate.data[n * C + c];
            const T* xp = x.data.data() + ((n * C + c) * H) * W;
            T* yp = y.data.data() + ((n * C + c) * H) * W;
            for (std::size_t i = 0; i < H * W; ++i) yp[i] = xp[i] * s;
        }

    if (cache) {
        cache->pooled = std::move(pooled);
        cache->a1 = std::move(a1);
        cache->hidden = std::move(hidden);
        cache->gate = std::move(gate);
    }
    return y;
}

template <typename T>
Tensor<T> squeeze_excite_backward(const Tensor<T>& dy, const Tensor<T>& x,
                                  const SqueezeExciteCache<T>& cache, const Tensor<T>& w1,
                                  const Tensor<T>& w2, Tensor<T>* dw1, Tensor<T>* db1,
                                  Tensor<T>* dw2, Tensor<T>* db2) {
    const std::size_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];

    // direct path through the product, plus gate sensitivity
    Tensor<T> dx({N, C, H, W});
    Tensor<T> dgate({N, C});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const T s = cache.gate.data[n * C + c];
            const T* dyp = dy.data.data() + ((n * C + c) * H) * W;
            const T* xp = x.data.data() + ((n * C + c) * H) * W;
            T* dxp = dx.data.data() + ((n * C + c) * H) * W;
            double acc = 0.0;
            for (std::size_t i = 0; i < H * W; ++i) {
                dxp[i] = dyp[i] * s;
                acc += static_cast<double>(dyp[i]) * static_cast<double>(xp[i]);
            }
            dgate.data[n * C + c] = static_cast<T>(acc);
        }

    Tensor<T> da2({N, C});
    for (std::size_t i = 0; i < da2.data.size(); ++i) {
        const T s = cache.gate.data[i];
        da2.data[i] = dgate.data[i] * s * (T{1} - s);
    }
    Tensor<T> dhidden = dense_backward(da2, cache.hidden, w2, dw2, db2);
    Tensor<T> da1 = swish_backward(dhidden, cache.a1);
    Tensor<T> dpooled = dense_backward(da1, cache.pooled, w1, dw1, db1);

    const T inv = static_cast<T>(1.0 / static_cast<double>(H * W));
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t c = 0; c < C; ++c) {
            const T g = dpooled.data[n * C + c] * inv;
            T* dxp = dx.data.data() + ((n * C + c) * H) * W;
            for (std::size_t i = 0; i < H * W; ++i) dxp[i] += g;
        }
    return dx;
}

// Row-wise softmax with max-shift; rows sum to 1.
template <typename T>
Tensor<T> softmax(const Tensor<T>& logits) {
    CHORUS_REQUIRE(logits.shape.size() == 2, Err::ShapeMismatch, "softmax wants N x K");
    const std::size_t N = logits.shape[0], K = logits.shape[1];
    Tensor<T> p({N, K});
    for (std::size_t n = 0; n < N; ++n) {
        const T* lp = logits.data.data() + n * K;
        T* pp = p.data.data() + n * K;
        double mx = -1e300;
        for (std::size_t k = 0; k < K; ++k) mx = std::max(mx, static_cast<double>(lp[k]));
        double denom = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double e = std::exp(static_cast<double>(lp[k]) - mx);
            pp[k] = static_cast<T>(e);
            denom += e;
        }
        const double inv = 1.0 / denom;
        for (std::size_t k = 0; k < K; ++k) pp[k] = static_cast<T>(static_cast<double>(pp[k]) * inv);
    }
    return p;
}

// Mean over the batch of -ln p[label], probabilities clamped at 1e-12.
template <typename T>
double cross_entropy(const Tensor<T>& probs, const std::vector<std::size_t>& labels) {
    CHORUS_REQUIRE(probs.shape.size() == 2, Err::ShapeMismatch, "cross_entropy wants N x K");
    const std::size_t N = probs.shape[0], K = probs.shape[1];
    CHORUS_REQUIRE(labels.size() == N, Err::LengthMismatch, "labels/batch size mismatch");
    double loss = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
        CHORUS_REQUIRE(labels[n] < K, Err::LabelOutOfRange, "label outside class range");
        const double p = std::max(static_cast<double>(probs.data[n * K + labels[n]]), 1e-12);
        loss -= std::log(p);
    }
    return loss / static_cast<double>(N);
}

// Gradient of mean cross-entropy w.r.t. logits: (softmax - one_hot) / N.
template <typename T>
Tensor<T> softmax_cross_entropy_grad(const Tensor<T>& probs,
                                     const std::vector<std::size_t>& labels) {
    const std::size_t N = probs.shape[0], K = probs.shape[1];
    Tensor<T> dl({N, K});
    const T inv = static_cast<T>(1.0 / static_cast<double>(N));
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t k = 0; k < K; ++k)
            dl.data[n * K + k] = probs.data[n * K + k] * inv;
        dl.data[n * K + labels[n]] -= inv;
    }
    return dl;
}

} // namespace chorus
