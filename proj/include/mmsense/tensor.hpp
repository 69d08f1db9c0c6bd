#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include "mmsense/errors.hpp"

namespace mmsense {

/// Dense rank-1..3 tensor with an optional same-shape gradient slot.
/// Layout is row-major: feature maps are channels x time, batches are
/// batch x channels x time, conv weights are out x in x kernel.
template <typename S>
struct TensorT {
    std::vector<std::size_t> shape;
    std::vector<S> values;
    std::vector<S> grad;  // empty unless allocated; always values.size() when present

    TensorT() = default;

    explicit TensorT(std::vector<std::size_t> shp)
        : shape(std::move(shp)), values(checked_numel(shape), S(0)) {}

    TensorT(std::vector<std::size_t> shp, std::vector<S> vals)
        : shape(std::move(shp)), values(std::move(vals)) {
        if (checked_numel(shape) != values.size()) {
            throw ShapeError("tensor: value count does not match shape product");
        }
    }

    static TensorT zeros(std::vector<std::size_t> shp) { return TensorT(std::move(shp)); }

    static TensorT full(std::vector<std::size_t> shp, S v) {
        TensorT t(std::move(shp));
        for (auto& x : t.values) x = v;
        return t;
    }

    std::size_t numel() const { return values.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t dim(std::size_t i) const { return shape[i]; }

    S& at(std::size_t i) { return values[i]; }
    S at(std::size_t i) const { return values[i]; }
    S& at(std::size_t c, std::size_t t) { return values[c * shape[1] + t]; }
    S at(std::size_t c, std::size_t t) const { return values[c * shape[1] + t]; }
    S& at(std::size_t a, std::size_t b, std::size_t c) {
        return values[(a * shape[1] + b) * shape[2] + c];
    }
    S at(std::size_t a, std::size_t b, std::size_t c) const {
        return values[(a * shape[1] + b) * shape[2] + c];
    }

    S* data() { return values.data(); }
    const S* data() const { return values.data(); }

    void ensure_grad() {
        if (grad.size() != values.size()) grad.assign(values.size(), S(0));
    }

    void zero_grad() {
        if (grad.empty()) {
            grad.assign(values.size(), S(0));
        } else {
            std::fill(grad.begin(), grad.end(), S(0));
        }
    }

    bool all_finite() const {
        for (S v : values) {
            if (!std::isfinite(static_cast<double>(v))) return false;
        }
        return true;
    }

    bool same_shape(const TensorT& o) const { return shape == o.shape; }

    template <typename U>
    TensorT<U> cast() const {
        TensorT<U> out;
        out.shape = shape;
        out.values.resize(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) out.values[i] = static_cast<U>(values[i]);
        return out;
    }

    static std::size_t checked_numel(const std::vector<std::size_t>& shp) {
        if (shp.empty() || shp.size() > 3) {
            throw ShapeError("tensor: rank must be 1, 2 or 3");
        }
        std::size_t n = 1;
        for (std::size_t d : shp) {
            if (d == 0) throw ShapeError("tensor: zero-sized dimension");
            n *= d;
        }
        return n;
    }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename S>
std::string shape_string(const TensorT<S>& t) {
    std::string s = "[";
    for (std::size_t i = 0; i < t.shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(t.shape[i]);
    }
    return s + "]";
}

}  // namespace mmsense
