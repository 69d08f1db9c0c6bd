#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "mmsense/tensor.hpp"

namespace mmsense {

struct AdamConfig {
    double lr = 3e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// Bias-corrected Adam. Moment estimates are lazily shaped to the parameter
/// list on the first step and must match it afterwards.
template <typename S>
class AdamOptimizer {
public:
    explicit AdamOptimizer(AdamConfig config = {}) : config_(config) {
        if (config_.lr <= 0.0) throw ConfigError("adam: learning rate must be positive");
    }

    double lr() const { return config_.lr; }
    void set_lr(double lr) { config_.lr = lr; }
    long step_count() const { return step_count_; }
    const std::vector<TensorT<S>>& first_moments() const { return m_; }
    const std::vector<TensorT<S>>& second_moments() const { return v_; }

    /// One update over `params`, reading each tensor's grad slot. The step
    /// is atomic: gradients are validated before anything mutates, and a
    /// non-finite gradient rejects the whole step.
    void step(const std::vector<TensorT<S>*>& params) {
        if (m_.empty()) {
            for (const auto* p : params) {
                m_.push_back(TensorT<S>::zeros(p->shape));
                v_.push_back(TensorT<S>::zeros(p->shape));
            }
        }
        if (params.size() != m_.size()) throw ShapeError("adam: parameter list changed size");
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto* p = params[i];
            if (p->grad.size() != p->values.size()) {
                throw ShapeError("adam: parameter is missing its gradient");
            }
            if (!m_[i].same_shape(*p)) throw ShapeError("adam: moment/parameter shape mismatch");
            for (const S g : p->grad) {
                if (!std::isfinite(static_cast<double>(g))) {
                    throw NumericError("adam: non-finite gradient, step rejected");
                }
            }
        }

        ++step_count_;
        const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_count_));
        const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_count_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            auto& p = *params[i];
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t j = 0; j < p.numel(); ++j) {
                const double g = static_cast<double>(p.grad[j]);
                const double mj = config_.beta1 * static_cast<double>(m.at(j)) +
                                  (1.0 - config_.beta1) * g;
                const double vj = config_.beta2 * static_cast<double>(v.at(j)) +
                                  (1.0 - config_.beta2) * g * g;
                m.at(j) = static_cast<S>(mj);
                v.at(j) = static_cast<S>(vj);
                const double mhat = mj / bc1;
                const double vhat = vj / bc2;
                p.at(j) = static_cast<S>(static_cast<double>(p.at(j)) -
                                         config_.lr * mhat / (std::sqrt(vhat) + config_.eps));
            }
        }
    }

private:
    AdamConfig config_;
    std::vector<TensorT<S>> m_;
    std::vector<TensorT<S>> v_;
    long step_count_ = 0;
};

/// ReduceLROnPlateau in minimize mode: when the monitored metric has not
/// improved for more than `patience` epochs, the learning rate is multiplied
/// by `factor`. The produced lr sequence never increases.
class PlateauScheduler {
public:
    PlateauScheduler(int patience = 25, double factor = 0.1, double min_delta = 0.0)
        : patience_(patience), factor_(factor), min_delta_(min_delta) {
        if (patience_ < 0 || factor_ <= 0.0 || factor_ > 1.0) {
            throw ConfigError("scheduler: patience must be >= 0 and factor in (0, 1]");
        }
    }

    double best_metric() const { return best_; }
    int epochs_since_improvement() const { return bad_epochs_; }

    /// Feeds one epoch's metric; returns the (possibly reduced) lr.
    double update(double metric, double lr) {
        if (!std::isfinite(metric)) throw NumericError("scheduler: non-finite metric");
        if (metric < best_ - min_delta_) {
            best_ = metric;
            bad_epochs_ = 0;
            return lr;
        }
        ++bad_epochs_;
        if (bad_epochs_ > patience_) {
            bad_epochs_ = 0;
            return lr * factor_;
        }
        return lr;
    }

private:
    int patience_;
    double factor_;
    double min_delta_;
    double best_ = std::numeric_limits<double>::infinity();
    int bad_epochs_ = 0;
};

}  // namespace mmsense
