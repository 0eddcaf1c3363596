#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "anrl/quant.hpp"
#include "anrl/tensor.hpp"

// Reference neural operators in the float domain. Dot products accumulate in
// double, index-ascending, so stepwise and full-sequence paths that touch the
// same operands produce bit-identical floats.

namespace anrl {

struct Conv2dSpec {
    int64_t in_channels = 0;
    int64_t out_channels = 0;
    int64_t kernel_h = 0;
    int64_t kernel_w = 0;
    int64_t stride = 1;
    int64_t padding = 0;
    int64_t groups = 1;

    void validate() const {
        if (in_channels <= 0 || out_channels <= 0 || kernel_h <= 0 || kernel_w <= 0 ||
            stride <= 0 || padding < 0 || groups <= 0)
            throw ShapeError("conv2d: non-positive spec field");
        if (in_channels % groups != 0 || out_channels % groups != 0)
            throw ShapeError("conv2d: channels not divisible by groups");
    }
    bool depthwise() const {
        return groups == in_channels && groups == out_channels;
    }
};

struct AttentionSpec {
    int64_t d_model = 0;
    int64_t n_heads = 0;
    int64_t n_kv_heads = 0;
    int64_t head_dim = 0;
    bool causal = false;

    void validate() const {
        if (d_model <= 0 || n_heads <= 0 || n_kv_heads <= 0 || head_dim <= 0)
            throw ShapeError("attention: non-positive spec field");
        if (n_heads % n_kv_heads != 0)
            throw ShapeError("attention: n_heads not divisible by n_kv_heads");
        if (n_heads * head_dim != d_model)
            throw ShapeError("attention: n_heads * head_dim != d_model");
    }
    bool multi_query() const { return n_kv_heads == 1; }
};

inline int64_t conv_out_size(int64_t in, int64_t kernel, int64_t stride, int64_t padding) {
    return (in + 2 * padding - kernel) / stride + 1;
}

// Direct six-loop convolution. Serves as the oracle every factorized form is
// tested against.
inline Tensor conv2d_direct(const Tensor& x, const Tensor& w, const Tensor& b,
                            const Conv2dSpec& spec) {
    spec.validate();
    if (x.rank() != 4) throw ShapeError("conv2d: input must be NCHW");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (C != spec.in_channels) throw ShapeError("conv2d: input channel mismatch");
    const int64_t cpg = spec.in_channels / spec.groups;
    const int64_t opg = spec.out_channels / spec.groups;
    if (w.shape != Shape{spec.out_channels, cpg, spec.kernel_h, spec.kernel_w})
        throw ShapeError("conv2d: weight shape mismatch, got " + shape_str(w.shape));
    if (b.numel() != 0 && b.shape != Shape{spec.out_channels})
        throw ShapeError("conv2d: bias shape mismatch");
    const int64_t OH = conv_out_size(H, spec.kernel_h, spec.stride, spec.padding);
    const int64_t OW = conv_out_size(W, spec.kernel_w, spec.stride, spec.padding);
    if (OH <= 0 || OW <= 0) throw ShapeError("conv2d: empty output");

    Tensor y({N, spec.out_channels, OH, OW});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < spec.out_channels; ++o) {
            const int64_t g = o / opg;
            const double bias = b.numel() ? b[o] : 0.0;
            for (int64_t oh = 0; oh < OH; ++oh)
                for (int64_t ow = 0; ow < OW; ++ow) {
                    double acc = 0.0;
                    for (int64_t ci = 0; ci < cpg; ++ci) {
                        const int64_t c = g * cpg + ci;
                        for (int64_t kh = 0; kh < spec.kernel_h; ++kh) {
                            const int64_t ih = oh * spec.stride + kh - spec.padding;
                            if (ih < 0 || ih >= H) continue;
                            for (int64_t kw = 0; kw < spec.kernel_w; ++kw) {
                                const int64_t iw = ow * spec.stride + kw - spec.padding;
                                if (iw < 0 || iw >= W) continue;
                                acc += static_cast<double>(x.at4(n, c, ih, iw)) *
                                       static_cast<double>(
                                           w[((o * cpg + ci) * spec.kernel_h + kh) * spec.kernel_w + kw]);
                            }
                        }
                    }
                    y.at4(n, o, oh, ow) = static_cast<float>(acc + bias);
                }
        }
    return y;
}

// Depthwise conv: w is [C, 1, k, k] (or [C, k, k]); one filter per channel.
inline Tensor depthwise_conv2d(const Tensor& x, const Tensor& w, const Tensor& b,
                               int64_t stride, int64_t padding) {
    if (x.rank() != 4) throw ShapeError("depthwise_conv2d: input must be NCHW");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    int64_t kh, kw;
    if (w.rank() == 4 && w.dim(0) == C && w.dim(1) == 1) {
        kh = w.dim(2), kw = w.dim(3);
    } else if (w.rank() == 3 && w.dim(0) == C) {
        kh = w.dim(1), kw = w.dim(2);
    } else {
        throw ShapeError("depthwise_conv2d: weight shape mismatch, got " + shape_str(w.shape));
    }
    if (b.numel() != 0 && b.shape != Shape{C})
        throw ShapeError("depthwise_conv2d: bias shape mismatch");
    const int64_t OH = conv_out_size(H, kh, stride, padding);
    const int64_t OW = conv_out_size(W, kw, stride, padding);
    if (OH <= 0 || OW <= 0) throw ShapeError("depthwise_conv2d: empty output");

    Tensor y({N, C, OH, OW});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const double bias = b.numel() ? b[c] : 0.0;
            for (int64_t oh = 0; oh < OH; ++oh)
                for (int64_t ow = 0; ow < OW; ++ow) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < kh; ++i) {
                        const int64_t ih = oh * stride + i - padding;
                        if (ih < 0 || ih >= H) continue;
                        for (int64_t j = 0; j < kw; ++j) {
                            const int64_t iw = ow * stride + j - padding;
                            if (iw < 0 || iw >= W) continue;
                            acc += static_cast<double>(x.at4(n, c, ih, iw)) *
                                   static_cast<double>(w[(c * kh + i) * kw + j]);
                        }
                    }
                    y.at4(n, c, oh, ow) = static_cast<float>(acc + bias);
                }
        }
    return y;
}

// Pointwise (1x1, stride 1, no pad) conv: a matmul over channels per pixel.
// w is [O, C].
inline Tensor pointwise_conv2d(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 4) throw ShapeError("pointwise_conv2d: input must be NCHW");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (w.rank() != 2 || w.dim(1) != C)
        throw ShapeError("pointwise_conv2d: weight shape mismatch, got " + shape_str(w.shape));
    const int64_t O = w.dim(0);
    if (b.numel() != 0 && b.shape != Shape{O})
        throw ShapeError("pointwise_conv2d: bias shape mismatch");
    Tensor y({N, O, H, W});
    const int64_t HW = H * W;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t o = 0; o < O; ++o) {
            const double bias = b.numel() ? b[o] : 0.0;
            for (int64_t p = 0; p < HW; ++p) {
                double acc = 0.0;
                for (int64_t c = 0; c < C; ++c)
                    acc += static_cast<double>(x.data[static_cast<size_t>((n * C + c) * HW + p)]) *
                           static_cast<double>(w[o * C + c]);
                y.data[static_cast<size_t>((n * O + o) * HW + p)] = static_cast<float>(acc + bias);
            }
        }
    return y;
}

// Average pooling without padding; geometry must divide exactly.
inline Tensor avg_pool2d(const Tensor& x, int64_t kernel, int64_t stride) {
    if (x.rank() != 4) throw ShapeError("avg_pool2d: input must be NCHW");
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (kernel <= 0 || stride <= 0 || H < kernel || W < kernel ||
        (H - kernel) % stride != 0 || (W - kernel) % stride != 0)
        throw ShapeError("avg_pool2d: geometry " + shape_str(x.shape) + " not divisible by kernel " +
                         std::to_string(kernel) + " stride " + std::to_string(stride));
    const int64_t OH = (H - kernel) / stride + 1;
    const int64_t OW = (W - kernel) / stride + 1;
    Tensor y({N, C, OH, OW});
    const double inv = 1.0 / static_cast<double>(kernel * kernel);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t oh = 0; oh < OH; ++oh)
                for (int64_t ow = 0; ow < OW; ++ow) {
                    double acc = 0.0;
                    for (int64_t i = 0; i < kernel; ++i)
                        for (int64_t j = 0; j < kernel; ++j)
                            acc += x.at4(n, c, oh * stride + i, ow * stride + j);
                    y.at4(n, c, oh, ow) = static_cast<float>(acc * inv);
                }
    return y;
}

inline Tensor upsample_nearest(const Tensor& x, int64_t factor) {
    if (x.rank() != 4) throw ShapeError("upsample_nearest: input must be NCHW");
    if (factor < 1) throw ShapeError("upsample_nearest: factor must be >= 1");
    if (factor == 1) return x;
    const int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor y({N, C, H * factor, W * factor});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t h = 0; h < H * factor; ++h)
                for (int64_t w = 0; w < W * factor; ++w)
                    y.at4(n, c, h, w) = x.at4(n, c, h / factor, w / factor);
    return y;
}

// ---------------------------------------------------------------------------
// Activations / normalization.
// ---------------------------------------------------------------------------
inline float gelu_tanh_scalar(float x) {
    const double k = 0.7978845608028654;  // sqrt(2/pi)
    double xd = x;
    double inner = k * (xd + 0.044715 * xd * xd * xd);
    return static_cast<float>(0.5 * xd * (1.0 + std::tanh(inner)));
}

inline Tensor gelu_tanh(const Tensor& x) {
    Tensor y(x.shape);
    for (int64_t i = 0; i < x.numel(); ++i) y[i] = gelu_tanh_scalar(x[i]);
    return y;
}

inline void gelu_tanh_inplace(Tensor& x) {
    for (auto& v : x.data) v = gelu_tanh_scalar(v);
}

inline float silu_scalar(float x) {
    double xd = x;
    return static_cast<float>(xd / (1.0 + std::exp(-xd)));
}

// RMSNorm over the innermost axis of a [rows, D] tensor.
inline Tensor rmsnorm(const Tensor& x, const Tensor& gain, double eps = 1e-6) {
    if (x.rank() != 2) throw ShapeError("rmsnorm: expected [rows, D]");
    const int64_t R = x.dim(0), D = x.dim(1);
    if (gain.shape != Shape{D}) throw ShapeError("rmsnorm: gain length != feature dim");
    Tensor y(x.shape);
    for (int64_t r = 0; r < R; ++r) {
        double ms = 0.0;
        for (int64_t d = 0; d < D; ++d) {
            double v = x.at2(r, d);
            ms += v * v;
        }
        ms = ms / static_cast<double>(D);
        const double inv = 1.0 / std::sqrt(ms + eps);
        for (int64_t d = 0; d < D; ++d)
            y.at2(r, d) = static_cast<float>(x.at2(r, d) * inv * gain[d]);
    }
    return y;
}

// RMSNorm across channels at every pixel of an NCHW map.
inline Tensor rmsnorm_channels_nchw(const Tensor& x, const Tensor& gain, double eps = 1e-6) {
    if (x.rank() != 4) throw ShapeError("rmsnorm_channels_nchw: input must be NCHW");
    const int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    if (gain.shape != Shape{C}) throw ShapeError("rmsnorm_channels_nchw: gain length != channels");
    Tensor y(x.shape);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t p = 0; p < HW; ++p) {
            double ms = 0.0;
            for (int64_t c = 0; c < C; ++c) {
                double v = x.data[static_cast<size_t>((n * C + c) * HW + p)];
                ms += v * v;
            }
            ms /= static_cast<double>(C);
            const double inv = 1.0 / std::sqrt(ms + eps);
            for (int64_t c = 0; c < C; ++c)
                y.data[static_cast<size_t>((n * C + c) * HW + p)] = static_cast<float>(
                    x.data[static_cast<size_t>((n * C + c) * HW + p)] * inv * gain[c]);
        }
    return y;
}

// Max-subtracted row softmax; rows sum to 1.
inline Tensor softmax_rows(const Tensor& x) {
    if (x.rank() != 2) throw ShapeError("softmax_rows: expected [rows, D]");
    const int64_t R = x.dim(0), D = x.dim(1);
    Tensor y(x.shape);
    for (int64_t r = 0; r < R; ++r) {
        double m = -std::numeric_limits<double>::infinity();
        for (int64_t d = 0; d < D; ++d) m = std::max(m, static_cast<double>(x.at2(r, d)));
        double sum = 0.0;
        for (int64_t d = 0; d < D; ++d) {
            double e = std::exp(static_cast<double>(x.at2(r, d)) - m);
            y.at2(r, d) = static_cast<float>(e);
            sum += e;
        }
        const double inv = 1.0 / sum;
        for (int64_t d = 0; d < D; ++d)
            y.at2(r, d) = static_cast<float>(y.at2(r, d) * inv);
    }
    return y;
}

// ---------------------------------------------------------------------------
// Matmul / linear helpers.
// ---------------------------------------------------------------------------
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw ShapeError("matmul: " + shape_str(a.shape) + " x " + shape_str(b.shape));
    const int64_t M = a.dim(0), K = a.dim(1), N = b.dim(1);
    Tensor c({M, N});
    for (int64_t m = 0; m < M; ++m)
        for (int64_t n = 0; n < N; ++n) {
            double acc = 0.0;
            for (int64_t k = 0; k < K; ++k)
                acc += static_cast<double>(a.at2(m, k)) * static_cast<double>(b.at2(k, n));
            c.at2(m, n) = static_cast<float>(acc);
        }
    return c;
}

// y = x * W + b with x [rows, in], W [in, out].
inline Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (x.rank() != 2 || w.rank() != 2 || x.dim(1) != w.dim(0))
        throw ShapeError("linear: " + shape_str(x.shape) + " x " + shape_str(w.shape));
    const int64_t R = x.dim(0), In = x.dim(1), Out = w.dim(1);
    if (b.numel() != 0 && b.shape != Shape{Out}) throw ShapeError("linear: bias shape mismatch");
    Tensor y({R, Out});
    for (int64_t r = 0; r < R; ++r)
        for (int64_t o = 0; o < Out; ++o) {
            double acc = b.numel() ? b[o] : 0.0;
            for (int64_t i = 0; i < In; ++i)
                acc += static_cast<double>(x.at2(r, i)) * static_cast<double>(w.at2(i, o));
            y.at2(r, o) = static_cast<float>(acc);
        }
    return y;
}

// Scaled dot-product attention with grouped KV sharing.
//   q: [Tq, n_heads*head_dim], k/v: [Tk, n_kv_heads*head_dim].
// With the causal flag, query i sits at absolute position Tk - Tq + i and may
// only attend to keys at positions <= its own.
inline Tensor attention(const Tensor& q, const Tensor& k, const Tensor& v,
                        const AttentionSpec& spec) {
    spec.validate();
    if (q.rank() != 2 || k.rank() != 2 || v.rank() != 2)
        throw ShapeError("attention: q/k/v must be rank 2");
    const int64_t Tq = q.dim(0), Tk = k.dim(0);
    const int64_t hd = spec.head_dim;
    if (q.dim(1) != spec.n_heads * hd) throw ShapeError("attention: q width mismatch");
    if (k.dim(1) != spec.n_kv_heads * hd || v.dim(1) != spec.n_kv_heads * hd)
        throw ShapeError("attention: k/v width mismatch");
    if (spec.causal && Tq > Tk) throw ShapeError("attention: causal queries exceed key count");

    const int64_t group = spec.n_heads / spec.n_kv_heads;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    Tensor out({Tq, spec.n_heads * hd});
    std::vector<double> scores(static_cast<size_t>(Tk));
    for (int64_t h = 0; h < spec.n_heads; ++h) {
        const int64_t kvh = h / group;
        for (int64_t i = 0; i < Tq; ++i) {
            const int64_t limit = spec.causal ? (Tk - Tq + i + 1) : Tk;
            double m = -std::numeric_limits<double>::infinity();
            for (int64_t j = 0; j < limit; ++j) {
                double s = 0.0;
                for (int64_t d = 0; d < hd; ++d)
                    s += static_cast<double>(q.at2(i, h * hd + d)) *
                         static_cast<double>(k.at2(j, kvh * hd + d));
                s *= inv_sqrt;
                scores[static_cast<size_t>(j)] = s;
                m = std::max(m, s);
            }
            double sum = 0.0;
            for (int64_t j = 0; j < limit; ++j) {
                scores[static_cast<size_t>(j)] = std::exp(scores[static_cast<size_t>(j)] - m);
                sum += scores[static_cast<size_t>(j)];
            }
            const double inv = 1.0 / sum;
            for (int64_t d = 0; d < hd; ++d) {
                double acc = 0.0;
                for (int64_t j = 0; j < limit; ++j)
                    acc += scores[static_cast<size_t>(j)] * inv *
                           static_cast<double>(v.at2(j, kvh * hd + d));
                out.at2(i, h * hd + d) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

// SwiGLU feed-forward: w_down( silu(x w_gate) * (x w_up) ).
inline Tensor swiglu_ffn(const Tensor& x, const Tensor& w_gate, const Tensor& w_up,
                         const Tensor& w_down) {
    Tensor g = linear(x, w_gate, Tensor{});
    Tensor u = linear(x, w_up, Tensor{});
    require_same_shape(g, u, "swiglu_ffn");
    if (w_down.rank() != 2 || w_down.dim(0) != g.dim(1))
        throw ShapeError("swiglu_ffn: w_down inner dim mismatch");
    Tensor h(g.shape);
    for (int64_t i = 0; i < g.numel(); ++i)
        h[i] = static_cast<float>(static_cast<double>(silu_scalar(g[i])) * static_cast<double>(u[i]));
    return linear(h, w_down, Tensor{});
}

// ---------------------------------------------------------------------------
// True-integer matmul path: int8 x int8 -> int32 accumulation.
// ---------------------------------------------------------------------------
struct IntMatmulResult {
    Shape shape;                  // [M, N]
    std::vector<int32_t> acc;     // raw 32-bit accumulators
    double out_scale = 1.0;       // scale_a * scale_b

    Tensor dequantized() const {
        Tensor t(shape);
        for (int64_t i = 0; i < static_cast<int64_t>(acc.size()); ++i)
            t[i] = static_cast<float>(acc[static_cast<size_t>(i)] * out_scale);
        return t;
    }
};

inline IntMatmulResult int_matmul_i32(const QTensor& a, const QTensor& b) {
    if (a.params.bits != 8 || b.params.bits != 8)
        throw RangeError("int_matmul_i32: operands must be 8-bit");
    if (!a.params.symmetric || !b.params.symmetric)
        throw RangeError("int_matmul_i32: operands must be symmetric");
    if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0])
        throw ShapeError("int_matmul_i32: " + shape_str(a.shape) + " x " + shape_str(b.shape));
    const int64_t M = a.shape[0], K = a.shape[1], N = b.shape[1];
    IntMatmulResult r;
    r.shape = {M, N};
    r.acc.resize(static_cast<size_t>(M * N));
    r.out_scale = a.params.scale * b.params.scale;
    constexpr int64_t kI32Max = std::numeric_limits<int32_t>::max();
    constexpr int64_t kI32Min = std::numeric_limits<int32_t>::min();
    for (int64_t m = 0; m < M; ++m)
        for (int64_t n = 0; n < N; ++n) {
            int64_t acc = 0;
            for (int64_t k = 0; k < K; ++k) {
                acc += static_cast<int64_t>(a.get(m * K + k)) * static_cast<int64_t>(b.get(k * N + n));
                if (acc > kI32Max || acc < kI32Min)
                    throw OverflowError("int_matmul_i32: 32-bit accumulator overflow at [" +
                                        std::to_string(m) + "," + std::to_string(n) + "]");
            }
            r.acc[static_cast<size_t>(m * N + n)] = static_cast<int32_t>(acc);
        }
    return r;
}

}  // namespace anrl
