#pragma once

// Finite-difference audits of the analytic gradients, always in 64-bit
// with normalization statistics frozen. Central differences, eps 1e-4.

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "chorus/layers.hpp"
#include "chorus/network.hpp"
#include "chorus/rng.hpp"
#include "chorus/tensor.hpp"

namespace chorus {

struct GradAuditResult {
    std::string what;
    double max_rel_err = 0.0;
    std::size_t n_checked = 0;
};

namespace gradcheck_detail {

inline double rel_err(double analytic, double fd) {
    const double denom = std::max({std::fabs(analytic), std::fabs(fd), 1e-6});
    return std::fabs(analytic - fd) / denom;
}

// Central difference of `loss` w.r.t. every element of `t`, compared against
// the matching entries of `analytic`.
inline void audit_tensor(const std::function<double()>& loss, Tensor<double>& t,
                         const Tensor<double>& analytic, double eps, GradAuditResult& result) {
    for (std::size_t i = 0; i < t.data.size(); ++i) {
        const double keep = t.data[i];
        t.data[i] = keep + eps;
        const double up = loss();
        t.data[i] = keep - eps;
        const double down = loss();
        t.data[i] = keep;
        const double fd = (up - down) / (2.0 * eps);
        result.max_rel_err = std::max(result.max_rel_err, rel_err(analytic.data[i], fd));
        ++result.n_checked;
    }
}

inline Tensor<double> random_tensor(const std::vector<std::size_t>& shape, Rng& rng,
                                    double scale = 1.0) {
    Tensor<double> t(shape);
    for (auto& v : t.data) v = rng.uniform(-scale, scale);
    return t;
}

// Loss functional sum(R . y) so dL/dy = R.
inline double weighted_sum(const Tensor<double>& y, const Tensor<double>& r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) acc += y.data[i] * r.data[i];
    return acc;
}

} // namespace gradcheck_detail

inline GradAuditResult gradcheck_conv2d(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto x = random_tensor({2, 3, 5, 6}, rng);
    auto w = random_tensor({4, 3, 3, 3}, rng);
    auto b = random_tensor({4}, rng);
    const int stride = 2, pad = 1;
    auto y0 = conv2d_forward(x, w, b, stride, pad);
    auto r = random_tensor(y0.shape, rng);

    Tensor<double> dx(x.shape), dw(w.shape), db(b.shape);
    conv2d_backward(x, w, r, stride, pad, &dx, &dw, &db);

    GradAuditResult res{"conv2d", 0.0, 0};
    auto loss = [&] { return weighted_sum(conv2d_forward(x, w, b, stride, pad), r); };
    audit_tensor(loss, x, dx, eps, res);
    audit_tensor(loss, w, dw, eps, res);
    audit_tensor(loss, b, db, eps, res);
    return res;
}

inline GradAuditResult gradcheck_depthwise(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto x = random_tensor({2, 3, 5, 6}, rng);
    auto w = random_tensor({3, 1, 3, 3}, rng);
    const int stride = 1, pad = 1;
    auto y0 = depthwise_conv2d_forward(x, w, stride, pad);
    auto r = random_tensor(y0.shape, rng);

    Tensor<double> dx(x.shape), dw(w.shape);
    depthwise_conv2d_backward(x, w, r, stride, pad, &dx, &dw);

    GradAuditResult res{"depthwise_conv2d", 0.0, 0};
    auto loss = [&] { return weighted_sum(depthwise_conv2d_forward(x, w, stride, pad), r); };
    audit_tensor(loss, x, dx, eps, res);
    audit_tensor(loss, w, dw, eps, res);
    return res;
}

inline GradAuditResult gradcheck_batch_norm(std::uint64_t seed, bool frozen, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto x = random_tensor({3, 4, 2, 5}, rng);
    auto gamma = random_tensor({4}, rng);
    auto beta = random_tensor({4}, rng);
    BatchNormStats<double> stats(4);
    for (auto& v : stats.running_mean.data) v = rng.uniform(-0.5, 0.5);
    for (auto& v : stats.running_var.data) v = rng.uniform(0.5, 2.0);
    const NormMode mode = frozen ? NormMode::Frozen : NormMode::Train;

    BatchNormCache<double> cache;
    auto y0 = batch_norm_forward(x, gamma, beta, stats, mode, &cache);
    auto r = random_tensor(y0.shape, rng);

    Tensor<double> dgamma(gamma.shape), dbeta(beta.shape);
    auto dx = batch_norm_backward(r, cache, gamma, &dgamma, &dbeta);

    GradAuditResult res{frozen ? "batch_norm(frozen)" : "batch_norm(train)", 0.0, 0};
    auto loss = [&] {
        return weighted_sum(batch_norm_forward(x, gamma, beta, stats, mode, static_cast<BatchNormCache<double>*>(nullptr)), r);
    };
    audit_tensor(loss, x, dx, eps, res);
    audit_tensor(loss, gamma, dgamma, eps, res);
    audit_tensor(loss, beta, dbeta, eps, res);
    return res;
}

inline GradAuditResult gradcheck_swish(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto x = random_tensor({40}, rng, 3.0);
    auto r = random_tensor(x.shape, rng);
    auto dx = swish_backward(r, x);

    GradAuditResult res{"swish", 0.0, 0};
    auto loss = [&] { return weighted_sum(swish_forward(x), r); };
    audit_tensor(loss, x, dx, eps, res);
    return res;
}

inline GradAuditResult gradcheck_squeeze_excite(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto x = random_tensor({2, 4, 3, 4}, rng);
    auto w1 = random_tensor({2, 4}, rng);
    auto b1 = random_tensor({2}, rng);
    auto w2 = random_tensor({4, 2}, rng);
    auto b2 = random_tensor({4}, rng);

    SqueezeExciteCache<double> cache;
    auto y0 = squeeze_excite_forward(x, w1, b1, w2, b2, &cache);
    auto r = random_tensor(y0.shape, rng);

    Tensor<double> dw1(w1.shape), db1(b1.shape), dw2(w2.shape), db2(b2.shape);
    auto dx = squeeze_excite_backward(r, x, cache, w1, w2, &dw1, &db1, &dw2, &db2);

    GradAuditResult res{"squeeze_excite", 0.0, 0};
    auto loss = [&] {
        return weighted_sum(squeeze_excite_forward(x, w1, b1, w2, b2, static_cast<SqueezeExciteCache<double>*>(nullptr)), r);
    };
    audit_tensor(loss, x, dx, eps, res);
    audit_tensor(loss, w1, dw1, eps, res);
    audit_tensor(loss, b1, db1, eps, res);
    audit_tensor(loss, w2, dw2, eps, res);
    audit_tensor(loss, b2, db2, eps, res);
    return res;
}

inline GradAuditResult gradcheck_gap(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto x = random_tensor({2, 3, 4, 5}, rng);
    auto y0 = global_average_pool_forward(x);
    auto r = random_tensor(y0.shape, rng);
    auto dx = global_average_pool_backward(r, x.shape);

    GradAuditResult res{"global_average_pool", 0.0, 0};
    auto loss = [&] { return weighted_sum(global_average_pool_forward(x), r); };
    audit_tensor(loss, x, dx, eps, res);
    return res;
}

inline GradAuditResult gradcheck_dense(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto x = random_tensor({3, 5}, rng);
    auto w = random_tensor({4, 5}, rng);
    auto b = random_tensor({4}, rng);
    auto y0 = dense_forward(x, w, b);
    auto r = random_tensor(y0.shape, rng);

    Tensor<double> dw(w.shape), db(b.shape);
    auto dx = dense_backward(r, x, w, &dw, &db);

    GradAuditResult res{"dense", 0.0, 0};
    auto loss = [&] { return weighted_sum(dense_forward(x, w, b), r); };
    audit_tensor(loss, x, dx, eps, res);
    audit_tensor(loss, w, dw, eps, res);
    audit_tensor(loss, b, db, eps, res);
    return res;
}

inline GradAuditResult gradcheck_softmax_ce(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Rng rng(seed);
    auto logits = random_tensor({4, 6}, rng, 2.0);
    std::vector<std::size_t> labels;
    for (std::size_t n = 0; n < 4; ++n) labels.push_back(rng.uniform_index(6));

    auto probs = softmax(logits);
    auto dlogits = softmax_cross_entropy_grad(probs, labels);

    GradAuditResult res{"softmax_cross_entropy", 0.0, 0};
    auto loss = [&] { return cross_entropy(softmax(logits), labels); };
    audit_tensor(loss, logits, dlogits, eps, res);
    return res;
}

inline std::vector<GradAuditResult> gradcheck_layers(std::uint64_t seed, double eps = 1e-4) {
    return {gradcheck_conv2d(seed, eps),
            gradcheck_depthwise(seed + 1, eps),
            gradcheck_batch_norm(seed + 2, false, eps),
            gradcheck_batch_norm(seed + 3, true, eps),
            gradcheck_swish(seed + 4, eps),
            gradcheck_squeeze_excite(seed + 5, eps),
            gradcheck_gap(seed + 6, eps),
            gradcheck_dense(seed + 7, eps),
            gradcheck_softmax_ce(seed + 8, eps)};
}

// Sweeps every parameter of the micro-width network against central
// differences of the cross-entropy loss, stats frozen.
inline GradAuditResult gradcheck_full_network(std::uint64_t seed, double eps = 1e-4) {
    using namespace gradcheck_detail;
    Network<double> net(microcheck_config());
    net.init_params(seed);
    net.set_mode(NetMode::Train);
    net.freeze_norm_stats(true);

    Rng rng(seed + 99);
    // plausible running stats so the frozen transform is non-trivial
    for (auto& [name, t] : net.norm_stats()) {
        if (name.ends_with(".mean"))
            for (auto& v : t->data) v = rng.uniform(-0.3, 0.3);
        else
            for (auto& v : t->data) v = rng.uniform(0.5, 1.5);
    }

    const std::size_t batch = 2, mels = 8, frames = 12;
    Tensor<double> x({batch, 1, mels, frames});
    for (auto& v : x.data) v = rng.uniform(-1.5, 1.5);
    std::vector<std::size_t> labels;
    for (std::size_t n = 0; n < batch; ++n)
        labels.push_back(rng.uniform_index(static_cast<std::uint64_t>(net.config().n_classes)));

    net.zero_grads();
    net.backward(x, labels);

    GradAuditResult res{"full_network(micro)", 0.0, 0};
    auto loss = [&] {
        const auto logits = net.forward(x, false);
        return cross_entropy(softmax(logits), labels);
    };
    for (Param<double>* p : net.params()) {
        audit_tensor(loss, p->value, p->grad, eps, res);
    }
    return res;
}

} // namespace chorus
