#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "chorus/error.hpp"
#include "chorus/layers.hpp"
#include "chorus/tensor.hpp"

namespace chorus {

struct BlockSpec {
    int expand_ratio = 4;
    int out_channels = 16;
    int stride = 1;
    int repeats = 1;
    double se_ratio = 0.25;
};

struct NetworkConfig {
    int n_classes = 182;
    int stem_channels = 16;
    std::vector<BlockSpec> blocks = {{1, 16, 1, 1, 0.25},
                                     {4, 24, 2, 2, 0.25},
                                     {4, 40, 2, 2, 0.25},
                                     {4, 80, 2, 2, 0.25}};
    int head_channels = 128;
    int input_mels = 64;

    void validate() const {
        CHORUS_REQUIRE(n_classes >= 2, Err::InvalidParams, "need at least two classes");
        CHORUS_REQUIRE(stem_channels >= 1 && head_channels >= 1, Err::InvalidParams,
                       "bad channel counts");
        CHORUS_REQUIRE(input_mels >= 1, Err::InvalidParams, "bad input mel count");
        CHORUS_REQUIRE(!blocks.empty(), Err::InvalidParams, "need at least one block");
        for (const auto& b : blocks) {
            CHORUS_REQUIRE(b.stride == 1 || b.stride == 2, Err::InvalidParams,
                           "block stride must be 1 or 2");
            CHORUS_REQUIRE(b.se_ratio > 0.0 && b.se_ratio <= 1.0, Err::InvalidParams,
                           "se_ratio outside (0, 1]");
            CHORUS_REQUIRE(b.expand_ratio >= 1 && b.out_channels >= 1 && b.repeats >= 1,
                           Err::InvalidParams, "bad block spec");
        }
    }
};

inline void to_json(nlohmann::json& j, const BlockSpec& b) {
    j = {{"expand_ratio", b.expand_ratio},
         {"out_channels", b.out_channels},
         {"stride", b.stride},
         {"repeats", b.repeats},
         {"se_ratio", b.se_ratio}};
}

inline void from_json(const nlohmann::json& j, BlockSpec& b) {
    j.at("expand_ratio").get_to(b.expand_ratio);
    j.at("out_channels").get_to(b.out_channels);
    j.at("stride").get_to(b.stride);
    j.at("repeats").get_to(b.repeats);
    j.at("se_ratio").get_to(b.se_ratio);
}

inline void to_json(nlohmann::json& j, const NetworkConfig& c) {
    j = {{"n_classes", c.n_classes},
         {"stem_channels", c.stem_channels},
         {"blocks", c.blocks},
         {"head_channels", c.head_channels},
         {"input_mels", c.input_mels}};
}

inline void from_json(const nlohmann::json& j, NetworkConfig& c) {
    j.at("n_classes").get_to(c.n_classes);
    j.at("stem_channels").get_to(c.stem_channels);
    c.blocks = j.at("blocks").get<std::vector<BlockSpec>>();
    j.at("head_channels").get_to(c.head_channels);
    j.at("input_mels").get_to(c.input_mels);
}

template <typename T>
struct Param {
    std::string name;
    Tensor<T> value;
    Tensor<T> grad;

    void init_shape(std::vector<std::size_t> shape) {
        value = Tensor<T>(shape);
        grad = Tensor<T>(std::move(shape));
    }
};

enum class NetMode { Train, Infer };

namespace net_detail {

// conv (or depthwise) without bias, batch norm, optional swish
template <typename T>
struct ConvBn {
    Param<T> w;
    Param<T> gamma, beta;
    BatchNormStats<T> stats;
    int stride = 1, pad = 1;
    bool depthwise = false;
    bool act = true;

    // caches valid after forward(..., cache=true)
    Tensor<T> x_in;
    BatchNormCache<T> bn_cache;
    Tensor<T> bn_out;

    void setup(const std::string& prefix, std::size_t in_ch, std::size_t out_ch, std::size_t k,
               int stride_, int pad_, bool depthwise_, bool act_) {
        stride = stride_;
        pad = pad_;
        depthwise = depthwise_;
        act = act_;
        w.name = prefix + (depthwise ? ".w" : ".conv.w");
        if (depthwise) {
            w.init_shape({out_ch, 1, k, k});
        } else {
            w.init_shape({out_ch, in_ch, k, k});
        }
        gamma.name = prefix + ".bn.gamma";
        gamma.init_shape({out_ch});
        gamma.value.fill(T{1});
        beta.name = prefix + ".bn.beta";
        beta.init_shape({out_ch});
        stats = BatchNormStats<T>(out_ch);
    }

    Tensor<T> forward(const Tensor<T>& x, NormMode norm_mode, bool cache) {
        if (cache) x_in = x;
        Tensor<T> t = depthwise ? depthwise_conv2d_forward(x, w.value, stride, pad)
                                : conv2d_forward(x, w.value, Tensor<T>{}, stride, pad);
        t = batch_norm_forward(t, gamma.value, beta.value, stats, norm_mode,
                               cache ? &bn_cache : nullptr);
        if (!act) return t;
        if (cache) bn_out = t;
        return swish_forward(t);
    }

    Tensor<T> backward(const Tensor<T>& dy_in) {
        Tensor<T> dy = act ? swish_backward(dy_in, bn_out) : dy_in;
        dy = batch_norm_backward(dy, bn_cache, gamma.value, &gamma.grad, &beta.grad);
        Tensor<T> dx(x_in.shape);
        if (depthwise) {
            depthwise_conv2d_backward(x_in, w.value, dy, stride, pad, &dx, &w.grad);
        } else {
            conv2d_backward(x_in, w.value, dy, stride, pad, &dx, &w.grad, static_cast<Tensor<T>*>(nullptr));
        }
        return dx;
    }

    void collect(std::vector<Param<T>*>& out) {
        out.push_back(&w);
        out.push_back(&gamma);
        out.push_back(&beta);
    }
};

template <typename T>
struct MBConv {
    bool has_expand = false;
    ConvBn<T> expand;
    ConvBn<T> dw;
    Param<T> se_w1, se_b1, se_w2, se_b2;
    ConvBn<T> project;
    bool residual = false;

    Tensor<T> se_in;
    SqueezeExciteCache<T> se_cache;

    void setup(const std::string& prefix, std::size_t in_ch, const BlockSpec& spec, int stride) {
        const std::size_t expanded =
            in_ch * static_cast<std::size_t>(std::max(spec.expand_ratio, 1));
        has_expand = spec.expand_ratio > 1;
        if (has_expand)
            expand.setup(prefix + ".expand", in_ch, expanded, 1, 1, 0, false, true);
        dw.setup(prefix + ".dw", expanded, expanded, 3, stride, 1, true, true);

        const std::size_t reduced = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(static_cast<double>(expanded) * spec.se_ratio)));
        se_w1.name = prefix + ".se.w1";
        se_w1.init_shape({reduced, expanded});
        se_b1.name = prefix + ".se.b1";
        se_b1.init_shape({reduced});
        se_w2.name = prefix + ".se.w2";
        se_w2.init_shape({expanded, reduced});
        se_b2.name = prefix + ".se.b2";
        se_b2.init_shape({expanded});

        project.setup(prefix + ".project", expanded,
                      static_cast<std::size_t>(spec.out_channels), 1, 1, 0, false, false);
        residual = stride == 1 && in_ch == static_cast<std::size_t>(spec.out_channels);
    }

    Tensor<T> forward(const Tensor<T>& x, NormMode norm_mode, bool cache) {
        Tensor<T> t = has_expand ? expand.forward(x, norm_mode, cache) : x;
        t = dw.forward(t, norm_mode, cache);
        if (cache) se_in = t;
        t = squeeze_excite_forward(t, se_w1.value, se_b1.value, se_w2.value, se_b2.value,
                                   cache ? &se_cache : nullptr);
        t = project.forward(t, norm_mode, cache);
        if (residual) {
            CHORUS_REQUIRE(same_shape(t, x), Err::ShapeMismatch, "residual shape mismatch");
            for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] += x.data[i];
        }
        return t;
    }

    Tensor<T> backward(const Tensor<T>& dy) {
        Tensor<T> d = project.backward(dy);
        d = squeeze_excite_backward(d, se_in, se_cache, se_w1.value, se_w2.value, &se_w1.grad,
                                    &se_b1.grad, &se_w2.grad, &se_b2.grad);
        d = dw.backward(d);
        if (has_expand) d = expand.backward(d);
        if (residual)
            for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += dy.data[i];
        return d;
    }

    void collect(std::vector<Param<T>*>& out) {
        if (has_expand) expand.collect(out);
        dw.collect(out);
        out.push_back(&se_w1);
        out.push_back(&se_b1);
        out.push_back(&se_w2);
        out.push_back(&se_b2);
        project.collect(out);
    }
};

} // namespace net_detail

// Compact EfficientNet-motif classifier: stem conv, MBConv stack, 1x1 head,
// global average pooling, dense classifier. Variable-length inputs are
// handled by the pooling stage.
template <typename T>
class Network {
public:
    explicit Network(NetworkConfig config) : config_(std::move(config)) {
        config_.validate();
        stem_.setup("stem", 1, static_cast<std::size_t>(config_.stem_channels), 3, 2, 1, false,
                    true);
        std::size_t ch = static_cast<std::size_t>(config_.stem_channels);
        std::size_t idx = 0;
        for (const auto& spec : config_.blocks) {
            for (int r = 0; r < spec.repeats; ++r) {
                blocks_.emplace_back();
                blocks_.back().setup("block" + std::to_string(idx), ch, spec,
                                     r == 0 ? spec.stride : 1);
                ch = static_cast<std::size_t>(spec.out_channels);
                ++idx;
            }
        }
        head_conv_.setup("head", ch, static_cast<std::size_t>(config_.head_channels), 1, 1, 0,
                         false, true);
        fc_w_.name = "head.fc.w";
        fc_w_.init_shape({static_cast<std::size_t>(config_.n_classes),
                          static_cast<std::size_t>(config_.head_channels)});
        fc_b_.name = "head.fc.b";
        fc_b_.init_shape({static_cast<std::size_t>(config_.n_classes)});
        build_registry();
    }

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;
    Network(Network&&) = delete;

    const NetworkConfig& config() const { return config_; }

    void init_params(std::uint64_t seed) {
        std::uint64_t idx = 0;
        for (Param<T>* p : params_) {
            ++idx;
            std::uint64_t s = seed + 0x9e3779b97f4a7c15ULL * idx;
            const std::uint64_t param_seed = detail::splitmix64(s);
            if (p->name.ends_with(".w") || p->name.ends_with(".w1") || p->name.ends_with(".w2")) {
                p->value = he_init<T>(p->value.shape, param_seed);
            } else if (p->name.ends_with(".bn.gamma")) {
                p->value.fill(T{1});
            } else {
                p->value.fill(T{0});
            }
        }
        for (auto& [name, t] : stats_) {
            if (name.ends_with(".mean")) t->fill(T{0});
            if (name.ends_with(".var")) t->fill(T{1});
        }
    }

    void set_mode(NetMode m) { mode_ = m; }
    NetMode mode() const { return mode_; }

    // Freezes normalization statistics so the loss is a deterministic
    // differentiable function of the parameters (gradient-check mode).
    void freeze_norm_stats(bool on) { freeze_stats_ = on; }

    std::vector<Param<T>*>& params() { return params_; }
    const std::vector<Param<T>*>& params() const { return params_; }

    std::vector<std::pair<std::string, Tensor<T>*>>& norm_stats() { return stats_; }

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const Param<T>* p : params_) n += p->value.numel();
        return n;
    }

    void zero_grads() {
        for (Param<T>* p : params_) p->grad.fill(T{0});
    }

    Tensor<T> forward(const Tensor<T>& batch, bool cache_for_backward = false) {
        CHORUS_REQUIRE(batch.shape.size() == 4, Err::ShapeMismatch,
                       "batch must be N x 1 x mels x frames");
        CHORUS_REQUIRE(batch.shape[1] == 1, Err::ShapeMismatch, "batch must be single-channel");
        CHORUS_REQUIRE(batch.shape[2] == static_cast<std::size_t>(config_.input_mels),
                       Err::ShapeMismatch, "mel-bin count differs from the network config");
        CHORUS_REQUIRE(batch.shape[3] >= 1, Err::TooFewFrames, "need at least one frame");

        const NormMode norm = mode_ == NetMode::Infer
                                  ? NormMode::Infer
                                  : (freeze_stats_ ? NormMode::Frozen : NormMode::Train);
        Tensor<T> t = stem_.forward(batch, norm, cache_for_backward);
        for (auto& b : blocks_) t = b.forward(t, norm, cache_for_backward);
        t = head_conv_.forward(t, norm, cache_for_backward);
        if (cache_for_backward) {
            head_out_shape_ = t.shape;
            pooled_ = global_average_pool_forward(t);
            return dense_forward(pooled_, fc_w_.value, fc_b_.value);
        }
        const Tensor<T> pooled = global_average_pool_forward(t);
        return dense_forward(pooled, fc_w_.value, fc_b_.value);
    }

    // Mean cross-entropy loss and its exact gradients for every parameter.
    double backward(const Tensor<T>& batch, const std::vector<std::size_t>& labels,
                    Tensor<T>* probs_out = nullptr) {
        const Tensor<T> logits = forward(batch, /*cache=*/true);
        const Tensor<T> probs = softmax(logits);
        const double loss = cross_entropy(probs, labels);
        if (probs_out) *probs_out = probs;

        Tensor<T> dlogits = softmax_cross_entropy_grad(probs, labels);
        Tensor<T> dpooled = dense_backward(dlogits, pooled_, fc_w_.value, &fc_w_.grad, &fc_b_.grad);
        Tensor<T> d = global_average_pool_backward(dpooled, head_out_shape_);
        d = head_conv_.backward(d);
        for (std::size_t i = blocks_.size(); i-- > 0;) d = blocks_[i].backward(d);
        stem_.backward(d);
        return loss;
    }

private:
    void build_registry() {
        params_.clear();
        stem_.collect(params_);
        for (auto& b : blocks_) b.collect(params_);
        head_conv_.collect(params_);
        params_.push_back(&fc_w_);
        params_.push_back(&fc_b_);

        stats_.clear();
        auto add_stats = [&](net_detail::ConvBn<T>& l, const std::string& prefix) {
            stats_.emplace_back(prefix + ".bn.running.mean", &l.stats.running_mean);
            stats_.emplace_back(prefix + ".bn.running.var", &l.stats.running_var);
        };
        add_stats(stem_, "stem");
        std::size_t idx = 0;
        for (auto& b : blocks_) {
            const std::string p = "block" + std::to_string(idx++);
            if (b.has_expand) add_stats(b.expand, p + ".expand");
            add_stats(b.dw, p + ".dw");
            add_stats(b.project, p + ".project");
        }
        add_stats(head_conv_, "head");
    }

    NetworkConfig config_;
    net_detail::ConvBn<T> stem_;
    std::vector<net_detail::MBConv<T>> blocks_;
    net_detail::ConvBn<T> head_conv_;
    Param<T> fc_w_, fc_b_;

    NetMode mode_ = NetMode::Train;
    bool freeze_stats_ = false;

    Tensor<T> pooled_;
    std::vector<std::size_t> head_out_shape_;

    std::vector<Param<T>*> params_;
    std::vector<std::pair<std::string, Tensor<T>*>> stats_;
};

// Micro-width config for finite-difference audits; small enough that a
// full parameter sweep stays fast in 64-bit.
inline NetworkConfig microcheck_config() {
    NetworkConfig cfg;
    cfg.n_classes = 3;
    cfg.stem_channels = 4;
    cfg.blocks = {{1, 4, 1, 1, 0.5}, {2, 6, 2, 1, 0.5}};
    cfg.head_channels = 8;
    cfg.input_mels = 8;
    return cfg;
}

} // namespace chorus
