#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "mmsense/tensor.hpp"

namespace mmsense {

/// Geometry of a 1-D convolution. The output length follows
/// out_T = floor((in_T + 2*padding - kernel) / stride) + 1.
struct ConvSpec {
    int in_channels = 1;
    int out_channels = 1;
    int kernel = 1;
    int stride = 1;
    int padding = 0;

    void validate() const {
        if (in_channels < 1 || out_channels < 1 || kernel < 1 || stride < 1 || padding < 0) {
            throw ConfigError("conv spec: channels/kernel/stride must be positive, padding non-negative");
        }
    }
};

inline std::size_t conv_out_len(std::size_t in_len, int kernel, int stride, int padding) {
    const long long num =
        static_cast<long long>(in_len) + 2LL * padding - static_cast<long long>(kernel);
    if (num < 0) throw ShapeError("conv: degenerate output length");
    return static_cast<std::size_t>(num / stride) + 1;
}

namespace detail {

// Valid output range [t_lo, t_hi] for kernel tap k so that the input index
// t*stride + k - padding stays inside [0, in_len). Zero padding contributes
// nothing, so taps outside the range are simply skipped.
struct TapRange {
    std::size_t lo = 0;
    std::size_t hi = 0;  // inclusive
    bool empty = true;
};

inline TapRange tap_range(std::size_t in_len, std::size_t out_len, int k, int stride, int padding) {
    TapRange r;
    const long long a = static_cast<long long>(padding) - k;
    long long lo = (a > 0) ? (a + stride - 1) / stride : 0;
    const long long b = static_cast<long long>(in_len) - 1 + padding - k;
    if (b < 0) return r;
    long long hi = b / stride;
    if (hi >= static_cast<long long>(out_len)) hi = static_cast<long long>(out_len) - 1;
    if (lo > hi) return r;
    r.lo = static_cast<std::size_t>(lo);
    r.hi = static_cast<std::size_t>(hi);
    r.empty = false;
    return r;
}

}  // namespace detail

/// Sliding dot product over zero-padded input. input is C_in x T, weights
/// C_out x C_in x K, bias has C_out entries.
template <typename S>
TensorT<S> conv1d_forward(const TensorT<S>& input, const TensorT<S>& weights,
                          const TensorT<S>& bias, const ConvSpec& spec) {
    spec.validate();
    if (input.rank() != 2) throw ShapeError("conv1d: input must be channels x time");
    if (weights.rank() != 3 || weights.dim(0) != static_cast<std::size_t>(spec.out_channels) ||
        weights.dim(1) != static_cast<std::size_t>(spec.in_channels) ||
        weights.dim(2) != static_cast<std::size_t>(spec.kernel)) {
        throw ShapeError("conv1d: weight shape does not match spec");
    }
    if (bias.rank() != 1 || bias.dim(0) != static_cast<std::size_t>(spec.out_channels)) {
        throw ShapeError("conv1d: bias length does not match out_channels");
    }
    if (input.dim(0) != static_cast<std::size_t>(spec.in_channels)) {
        throw ShapeError("conv1d: input has " + std::to_string(input.dim(0)) +
                         " channels, spec expects " + std::to_string(spec.in_channels));
    }

    const std::size_t in_len = input.dim(1);
    const std::size_t out_len = conv_out_len(in_len, spec.kernel, spec.stride, spec.padding);
    TensorT<S> out({static_cast<std::size_t>(spec.out_channels), out_len});

    const std::size_t ci_n = input.dim(0);
    const int stride = spec.stride;
    for (std::size_t co = 0; co < out.dim(0); ++co) {
        S* orow = out.data() + co * out_len;
        std::fill(orow, orow + out_len, bias.at(co));
        for (std::size_t ci = 0; ci < ci_n; ++ci) {
            const S* xrow = input.data() + ci * in_len;
            const S* wrow = weights.data() + (co * ci_n + ci) * spec.kernel;
            for (int k = 0; k < spec.kernel; ++k) {
                const auto r = detail::tap_range(in_len, out_len, k, stride, spec.padding);
                if (r.empty) continue;
                const S w = wrow[k];
                const long long off = static_cast<long long>(k) - spec.padding;
                const S* xp = xrow + (static_cast<long long>(r.lo) * stride + off);
                if (stride == 1) {
                    for (std::size_t t = r.lo; t <= r.hi; ++t) orow[t] += w * xp[t - r.lo];
                } else {
                    for (std::size_t t = r.lo; t <= r.hi; ++t) {
                        orow[t] += w * xp[(t - r.lo) * static_cast<std::size_t>(stride)];
                    }
                }
            }
        }
    }
    return out;
}

template <typename S>
struct Conv1dGrads {
    TensorT<S> input;
    TensorT<S> weights;
    TensorT<S> bias;
};

/// Exact analytic gradients of conv1d_forward with respect to input,
/// weights and bias.
template <typename S>
Conv1dGrads<S> conv1d_backward(const TensorT<S>& input, const TensorT<S>& weights,
                               const ConvSpec& spec, const TensorT<S>& upstream) {
    spec.validate();
    const std::size_t in_len = input.dim(1);
    const std::size_t out_len = conv_out_len(in_len, spec.kernel, spec.stride, spec.padding);
    if (upstream.rank() != 2 || upstream.dim(0) != static_cast<std::size_t>(spec.out_channels) ||
        upstream.dim(1) != out_len) {
        throw ShapeError("conv1d backward: upstream shape does not match forward output");
    }
    Conv1dGrads<S> g;
    g.input = TensorT<S>::zeros(input.shape);
    g.weights = TensorT<S>::zeros(weights.shape);
    g.bias = TensorT<S>::zeros({static_cast<std::size_t>(spec.out_channels)});

    const std::size_t ci_n = input.dim(0);
    const int stride = spec.stride;
    for (std::size_t co = 0; co < upstream.dim(0); ++co) {
        const S* urow = upstream.data() + co * out_len;
        S bsum = S(0);
        for (std::size_t t = 0; t < out_len; ++t) bsum += urow[t];
        g.bias.at(co) = bsum;

        for (std::size_t ci = 0; ci < ci_n; ++ci) {
            const S* xrow = input.data() + ci * in_len;
            S* gxrow = g.input.data() + ci * in_len;
            const S* wrow = weights.data() + (co * ci_n + ci) * spec.kernel;
            S* gwrow = g.weights.data() + (co * ci_n + ci) * spec.kernel;
            for (int k = 0; k < spec.kernel; ++k) {
                const auto r = detail::tap_range(in_len, out_len, k, stride, spec.padding);
                if (r.empty) continue;
                const long long off = static_cast<long long>(k) - spec.padding;
                const std::size_t base = static_cast<std::size_t>(
                    static_cast<long long>(r.lo) * stride + off);
                const S w = wrow[k];
                S wacc = S(0);
                for (std::size_t t = r.lo; t <= r.hi; ++t) {
                    const std::size_t j = base + (t - r.lo) * static_cast<std::size_t>(stride);
                    wacc += urow[t] * xrow[j];
                    gxrow[j] += w * urow[t];
                }
                gwrow[k] += wacc;
            }
        }
    }
    return g;
}

template <typename S>
TensorT<S> relu(const TensorT<S>& x) {
    TensorT<S> out = x;
    for (auto& v : out.values) v = v > S(0) ? v : S(0);
    return out;
}

// Subgradient at 0 is 0.
template <typename S>
TensorT<S> relu_backward(const TensorT<S>& x, const TensorT<S>& upstream) {
    if (!x.same_shape(upstream)) throw ShapeError("relu backward: shape mismatch");
    TensorT<S> out = upstream;
    for (std::size_t i = 0; i < out.numel(); ++i) {
        if (!(x.at(i) > S(0))) out.at(i) = S(0);
    }
    return out;
}

template <typename S>
struct MaxPoolResult {
    TensorT<S> output;
    std::vector<std::int64_t> argmax;  // flat input index per output cell
};

/// Windowed max per channel. Padding cells behave like -inf; ties are
/// broken by the lowest input index.
template <typename S>
MaxPoolResult<S> maxpool1d(const TensorT<S>& x, int kernel, int stride, int padding) {
    if (x.rank() != 2) throw ShapeError("maxpool1d: input must be channels x time");
    if (kernel < 1 || stride < 1 || padding < 0) {
        throw ConfigError("maxpool1d: bad kernel/stride/padding");
    }
    const std::size_t in_len = x.dim(1);
    const std::size_t out_len = conv_out_len(in_len, kernel, stride, padding);
    MaxPoolResult<S> res;
    res.output = TensorT<S>({x.dim(0), out_len});
    res.argmax.assign(x.dim(0) * out_len, -1);

    for (std::size_t c = 0; c < x.dim(0); ++c) {
        const S* xrow = x.data() + c * in_len;
        for (std::size_t t = 0; t < out_len; ++t) {
            const long long start = static_cast<long long>(t) * stride - padding;
            S best = -std::numeric_limits<S>::infinity();
            std::int64_t best_j = -1;
            for (int k = 0; k < kernel; ++k) {
                const long long j = start + k;
                if (j < 0 || j >= static_cast<long long>(in_len)) continue;
                const S v = xrow[j];
                if (v > best) {
                    best = v;
                    best_j = static_cast<std::int64_t>(c * in_len + j);
                }
            }
            if (best_j < 0) throw ShapeError("maxpool1d: window contains no input cells");
            res.output.at(c, t) = best;
            res.argmax[c * out_len + t] = best_j;
        }
    }
    return res;
}

/// Routes each upstream value to the position that produced the max.
template <typename S>
TensorT<S> maxpool1d_backward(const std::vector<std::int64_t>& argmax,
                              const std::vector<std::size_t>& input_shape,
                              const TensorT<S>& upstream) {
    if (argmax.size() != upstream.numel()) {
        throw ShapeError("maxpool1d backward: argmax/upstream size mismatch");
    }
    TensorT<S> g = TensorT<S>::zeros(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        g.at(static_cast<std::size_t>(argmax[i])) += upstream.at(i);
    }
    return g;
}

/// Windowed mean per channel. The divisor counts only in-bounds cells, so
/// constant inputs stay constant under any window geometry.
template <typename S>
TensorT<S> avgpool1d(const TensorT<S>& x, int kernel, int stride, int padding) {
    if (x.rank() != 2) throw ShapeError("avgpool1d: input must be channels x time");
    if (kernel < 1 || stride < 1 || padding < 0) {
        throw ConfigError("avgpool1d: bad kernel/stride/padding");
    }
    const std::size_t in_len = x.dim(1);
    const std::size_t out_len = conv_out_len(in_len, kernel, stride, padding);
    TensorT<S> out({x.dim(0), out_len});
    for (std::size_t c = 0; c < x.dim(0); ++c) {
        const S* xrow = x.data() + c * in_len;
        for (std::size_t t = 0; t < out_len; ++t) {
            const long long start = static_cast<long long>(t) * stride - padding;
            S acc = S(0);
            int count = 0;
            for (int k = 0; k < kernel; ++k) {
                const long long j = start + k;
                if (j < 0 || j >= static_cast<long long>(in_len)) continue;
                acc += xrow[j];
                ++count;
            }
            if (count == 0) throw ShapeError("avgpool1d: window contains no input cells");
            out.at(c, t) = acc / static_cast<S>(count);
        }
    }
    return out;
}

template <typename S>
TensorT<S> avgpool1d_backward(const std::vector<std::size_t>& input_shape, int kernel, int stride,
                              int padding, const TensorT<S>& upstream) {
    const std::size_t in_len = input_shape[1];
    const std::size_t out_len = conv_out_len(in_len, kernel, stride, padding);
    if (upstream.rank() != 2 || upstream.dim(0) != input_shape[0] || upstream.dim(1) != out_len) {
        throw ShapeError("avgpool1d backward: upstream shape mismatch");
    }
    TensorT<S> g = TensorT<S>::zeros(input_shape);
    for (std::size_t c = 0; c < input_shape[0]; ++c) {
        S* grow = g.data() + c * in_len;
        for (std::size_t t = 0; t < out_len; ++t) {
            const long long start = static_cast<long long>(t) * stride - padding;
            int count = 0;
            for (int k = 0; k < kernel; ++k) {
                const long long j = start + k;
                if (j >= 0 && j < static_cast<long long>(in_len)) ++count;
            }
            const S share = upstream.at(c, t) / static_cast<S>(count);
            for (int k = 0; k < kernel; ++k) {
                const long long j = start + k;
                if (j >= 0 && j < static_cast<long long>(in_len)) grow[j] += share;
            }
        }
    }
    return g;
}

/// Ordered concatenation along the channel dimension; every input must share
/// the same temporal length.
template <typename S>
TensorT<S> concat_channels(const std::vector<const TensorT<S>*>& inputs) {
    if (inputs.empty()) throw ShapeError("concat_channels: no inputs");
    const std::size_t len = inputs[0]->dim(1);
    std::size_t channels = 0;
    for (const auto* in : inputs) {
        if (in->rank() != 2) throw ShapeError("concat_channels: inputs must be channels x time");
        if (in->dim(1) != len) throw ShapeError("concat_channels: temporal lengths differ");
        channels += in->dim(0);
    }
    TensorT<S> out({channels, len});
    S* dst = out.data();
    for (const auto* in : inputs) {
        std::copy(in->values.begin(), in->values.end(), dst);
        dst += in->numel();
    }
    return out;
}

template <typename S>
TensorT<S> concat_channels(const std::vector<TensorT<S>>& inputs) {
    std::vector<const TensorT<S>*> ptrs;
    ptrs.reserve(inputs.size());
    for (const auto& in : inputs) ptrs.push_back(&in);
    return concat_channels(ptrs);
}

/// Splits the upstream gradient back into per-input slices.
template <typename S>
std::vector<TensorT<S>> concat_channels_backward(const TensorT<S>& upstream,
                                                 const std::vector<std::size_t>& channel_counts) {
    std::size_t total = 0;
    for (std::size_t c : channel_counts) total += c;
    if (upstream.rank() != 2 || upstream.dim(0) != total) {
        throw ShapeError("concat backward: channel counts do not sum to upstream channels");
    }
    const std::size_t len = upstream.dim(1);
    std::vector<TensorT<S>> parts;
    parts.reserve(channel_counts.size());
    const S* src = upstream.data();
    for (std::size_t c : channel_counts) {
        TensorT<S> part({c, len});
        std::copy(src, src + c * len, part.data());
        src += c * len;
        parts.push_back(std::move(part));
    }
    return parts;
}

/// Affine map W*x + b. x has D entries, W is C x D, b has C entries.
template <typename S>
TensorT<S> linear(const TensorT<S>& x, const TensorT<S>& w, const TensorT<S>& b) {
    if (x.rank() != 1 || w.rank() != 2 || b.rank() != 1) {
        throw ShapeError("linear: expects vector input, matrix weights, vector bias");
    }
    if (w.dim(1) != x.dim(0) || w.dim(0) != b.dim(0)) {
        throw ShapeError("linear: dimension mismatch");
    }
    TensorT<S> out({w.dim(0)});
    for (std::size_t c = 0; c < w.dim(0); ++c) {
        const S* wrow = w.data() + c * w.dim(1);
        S acc = b.at(c);
        for (std::size_t d = 0; d < x.dim(0); ++d) acc += wrow[d] * x.at(d);
        out.at(c) = acc;
    }
    return out;
}

template <typename S>
struct LinearGrads {
    TensorT<S> input;
    TensorT<S> weights;
    TensorT<S> bias;
};

template <typename S>
LinearGrads<S> linear_backward(const TensorT<S>& x, const TensorT<S>& w,
                               const TensorT<S>& upstream) {
    if (upstream.rank() != 1 || upstream.dim(0) != w.dim(0)) {
        throw ShapeError("linear backward: upstream length mismatch");
    }
    LinearGrads<S> g;
    g.input = TensorT<S>::zeros(x.shape);
    g.weights = TensorT<S>::zeros(w.shape);
    g.bias = upstream;
    for (std::size_t c = 0; c < w.dim(0); ++c) {
        const S u = upstream.at(c);
        const S* wrow = w.data() + c * w.dim(1);
        S* gwrow = g.weights.data() + c * w.dim(1);
        for (std::size_t d = 0; d < x.dim(0); ++d) {
            g.input.at(d) += u * wrow[d];
            gwrow[d] = u * x.at(d);
        }
    }
    return g;
}

/// Numerically stabilized softmax (max subtraction).
template <typename S>
TensorT<S> softmax(const TensorT<S>& logits) {
    if (logits.rank() != 1) throw ShapeError("softmax: expects a vector");
    TensorT<S> out({logits.dim(0)});
    S m = logits.at(0);
    for (S v : logits.values) m = std::max(m, v);
    S denom = S(0);
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        out.at(i) = std::exp(logits.at(i) - m);
        denom += out.at(i);
    }
    for (auto& v : out.values) v /= denom;
    return out;
}

template <typename S>
struct SoftmaxCrossEntropy {
    S loss;
    TensorT<S> grad_logits;
};

/// loss = -log softmax(logits)[label]; grad = softmax(logits) - one_hot.
template <typename S>
SoftmaxCrossEntropy<S> softmax_cross_entropy(const TensorT<S>& logits, int label) {
    if (logits.rank() != 1) throw ShapeError("softmax_cross_entropy: expects a vector");
    if (label < 0 || static_cast<std::size_t>(label) >= logits.dim(0)) {
        throw DataError("softmax_cross_entropy: label out of range");
    }
    S m = logits.at(0);
    for (S v : logits.values) m = std::max(m, v);
    S denom = S(0);
    for (S v : logits.values) denom += std::exp(v - m);
    const S log_denom = std::log(denom);

    SoftmaxCrossEntropy<S> res;
    res.loss = log_denom - (logits.at(static_cast<std::size_t>(label)) - m);
    res.grad_logits = TensorT<S>({logits.dim(0)});
    for (std::size_t i = 0; i < logits.numel(); ++i) {
        res.grad_logits.at(i) = std::exp(logits.at(i) - m) / denom;
    }
    res.grad_logits.at(static_cast<std::size_t>(label)) -= S(1);
    return res;
}

}  // namespace mmsense
