#pragma once

#include <utility>
#include <vector>

#include "mmsense/ops.hpp"
#include "mmsense/rng.hpp"

namespace mmsense {

// Central finite-difference gradient checking. Everything here runs in
// double-width arithmetic; the production ops are instantiated at double
// through the same templates.

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-2});
    return std::abs(analytic - numeric) / scale;
}

/// Perturbs selected entries of `t` with +/- eps, re-evaluates the scalar
/// objective, and compares the central difference against `analytic`.
/// Returns the worst-case relative error over the probed entries.
template <typename Obj>
double max_rel_error_fd(Obj&& objective, TensorD& t, const TensorD& analytic, double eps,
                        const std::vector<std::size_t>* subset = nullptr) {
    double worst = 0.0;
    const std::size_t n = subset ? subset->size() : t.numel();
    for (std::size_t idx = 0; idx < n; ++idx) {
        const std::size_t i = subset ? (*subset)[idx] : idx;
        const double saved = t.at(i);
        t.at(i) = saved + eps;
        const double up = objective();
        t.at(i) = saved - eps;
        const double down = objective();
        t.at(i) = saved;
        const double fd = (up - down) / (2.0 * eps);
        worst = std::max(worst, relative_error(analytic.at(i), fd));
    }
    return worst;
}

namespace detail {

inline TensorD random_upstream(const std::vector<std::size_t>& shape, std::uint64_t seed) {
    Rng rng(seed, "upstream");
    TensorD u(shape);
    for (auto& v : u.values) v = rng.uniform(-1.0, 1.0);
    return u;
}

inline double weighted_sum(const TensorD& out, const TensorD& u) {
    double acc = 0.0;
    for (std::size_t i = 0; i < out.numel(); ++i) acc += out.at(i) * u.at(i);
    return acc;
}

}  // namespace detail

/// grad_check for conv1d: probes every input, weight and bias entry.
inline double grad_check_conv1d(const TensorD& input, const TensorD& weights, const TensorD& bias,
                                const ConvSpec& spec, double eps, std::uint64_t seed = 7) {
    TensorD x = input, w = weights, b = bias;
    const TensorD probe = conv1d_forward(x, w, b, spec);
    const TensorD u = detail::random_upstream(probe.shape, seed);
    const auto grads = conv1d_backward(x, w, spec, u);

    auto objective = [&]() { return detail::weighted_sum(conv1d_forward(x, w, b, spec), u); };
    double worst = max_rel_error_fd(objective, x, grads.input, eps);
    worst = std::max(worst, max_rel_error_fd(objective, w, grads.weights, eps));
    worst = std::max(worst, max_rel_error_fd(objective, b, grads.bias, eps));
    return worst;
}

inline double grad_check_linear(const TensorD& input, const TensorD& weights, const TensorD& bias,
                                double eps, std::uint64_t seed = 7) {
    TensorD x = input, w = weights, b = bias;
    const TensorD probe = linear(x, w, b);
    const TensorD u = detail::random_upstream(probe.shape, seed);
    const auto grads = linear_backward(x, w, u);

    auto objective = [&]() { return detail::weighted_sum(linear(x, w, b), u); };
    double worst = max_rel_error_fd(objective, x, grads.input, eps);
    worst = std::max(worst, max_rel_error_fd(objective, w, grads.weights, eps));
    worst = std::max(worst, max_rel_error_fd(objective, b, grads.bias, eps));
    return worst;
}

inline double grad_check_relu(const TensorD& input, double eps, std::uint64_t seed = 7) {
    TensorD x = input;
    const TensorD u = detail::random_upstream(x.shape, seed);
    const TensorD analytic = relu_backward(x, u);
    auto objective = [&]() { return detail::weighted_sum(relu(x), u); };
    return max_rel_error_fd(objective, x, analytic, eps);
}

inline double grad_check_maxpool1d(const TensorD& input, int kernel, int stride, int padding,
                                   double eps, std::uint64_t seed = 7) {
    TensorD x = input;
    const auto probe = maxpool1d(x, kernel, stride, padding);
    const TensorD u = detail::random_upstream(probe.output.shape, seed);
    const TensorD analytic = maxpool1d_backward(probe.argmax, x.shape, u);
    auto objective = [&]() {
        return detail::weighted_sum(maxpool1d(x, kernel, stride, padding).output, u);
    };
    return max_rel_error_fd(objective, x, analytic, eps);
}

inline double grad_check_avgpool1d(const TensorD& input, int kernel, int stride, int padding,
                                   double eps, std::uint64_t seed = 7) {
    TensorD x = input;
    const TensorD probe = avgpool1d(x, kernel, stride, padding);
    const TensorD u = detail::random_upstream(probe.shape, seed);
    const TensorD analytic = avgpool1d_backward(x.shape, kernel, stride, padding, u);
    auto objective = [&]() { return detail::weighted_sum(avgpool1d(x, kernel, stride, padding), u); };
    return max_rel_error_fd(objective, x, analytic, eps);
}

inline double grad_check_concat(const std::vector<TensorD>& inputs, double eps,
                                std::uint64_t seed = 7) {
    std::vector<TensorD> xs = inputs;
    std::vector<std::size_t> counts;
    for (const auto& t : xs) counts.push_back(t.dim(0));
    const TensorD probe = concat_channels(xs);
    const TensorD u = detail::random_upstream(probe.shape, seed);
    const auto analytic = concat_channels_backward(u, counts);

    auto objective = [&]() { return detail::weighted_sum(concat_channels(xs), u); };
    double worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        worst = std::max(worst, max_rel_error_fd(objective, xs[i], analytic[i], eps));
    }
    return worst;
}

/// The objective here is the loss itself, so no upstream weighting is needed.
inline double grad_check_softmax_ce(const TensorD& logits, int label, double eps) {
    TensorD z = logits;
    const TensorD analytic = softmax_cross_entropy(z, label).grad_logits;
    auto objective = [&]() { return softmax_cross_entropy(z, label).loss; };
    return max_rel_error_fd(objective, z, analytic, eps);
}

}  // namespace mmsense
