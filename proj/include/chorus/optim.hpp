#pragma once

#include <cmath>
#include <map>
#include <string>

#include "chorus/error.hpp"
#include "chorus/tensor.hpp"

namespace chorus {

template <typename T>
struct AdamState {
    Tensor<T> m, v;
};

// Bias-corrected Adam update; t is the 1-based step count including this one.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, AdamState<T>& state, long t, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    CHORUS_REQUIRE(same_shape(param, grad), Err::ShapeMismatch, "adam param/grad mismatch");
    if (state.m.shape != param.shape) {
        state.m = Tensor<T>(param.shape);
        state.v = Tensor<T>(param.shape);
    }
    CHORUS_REQUIRE(t >= 1, Err::InvalidParams, "adam step count must be >= 1");
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < param.data.size(); ++i) {
        const double g = static_cast<double>(grad.data[i]);
        const double m = beta1 * static_cast<double>(state.m.data[i]) + (1.0 - beta1) * g;
        const double v = beta2 * static_cast<double>(state.v.data[i]) + (1.0 - beta2) * g * g;
        state.m.data[i] = static_cast<T>(m);
        state.v.data[i] = static_cast<T>(v);
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        param.data[i] = static_cast<T>(static_cast<double>(param.data[i]) -
                                       lr * m_hat / (std::sqrt(v_hat) + eps));
    }
}

template <typename T>
struct RmsPropState {
    Tensor<T> v;
};

template <typename T>
void rmsprop_step(Tensor<T>& param, const Tensor<T>& grad, RmsPropState<T>& state, double lr,
                  double rho = 0.9, double eps = 1e-8) {
    CHORUS_REQUIRE(same_shape(param, grad), Err::ShapeMismatch, "rmsprop param/grad mismatch");
    if (state.v.shape != param.shape) state.v = Tensor<T>(param.shape);
    for (std::size_t i = 0; i < param.data.size(); ++i) {
        const double g = static_cast<double>(grad.data[i]);
        const double v = rho * static_cast<double>(state.v.data[i]) + (1.0 - rho) * g * g;
        state.v.data[i] = static_cast<T>(v);
        param.data[i] =
            static_cast<T>(static_cast<double>(param.data[i]) - lr * g / (std::sqrt(v) + eps));
    }
}

enum class OptimizerKind { Adam, RmsProp };

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "adam") return OptimizerKind::Adam;
    if (s == "rmsprop") return OptimizerKind::RmsProp;
    throw Error(Err::InvalidParams, "unknown optimizer: " + s);
}

inline const char* optimizer_kind_name(OptimizerKind k) {
    return k == OptimizerKind::Adam ? "adam" : "rmsprop";
}

// Per-name state holder driving whole-network updates.
template <typename T>
class Optimizer {
public:
    Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {}

    void begin_step() { ++t_; }

    void update(const std::string& name, Tensor<T>& param, const Tensor<T>& grad) {
        if (kind_ == OptimizerKind::Adam) {
            adam_step(param, grad, adam_[name], t_, lr_);
        } else {
            rmsprop_step(param, grad, rms_[name], lr_);
        }
    }

    long step_count() const { return t_; }
    double learning_rate() const { return lr_; }
    OptimizerKind kind() const { return kind_; }

private:
    OptimizerKind kind_;
    double lr_;
    long t_ = 0;
    std::map<std::string, AdamState<T>> adam_;
    std::map<std::string, RmsPropState<T>> rms_;
};

} // namespace chorus
