#pragma once
// Rating predictors and fusion: second-order Factorization Machine heads
// (zero-diagonal pairwise term computed through the factorization identity),
// the linear-regression ablation head, and static/dynamic score fusion with
// user/item biases.

#include <optional>

#include "carl/tensor.hpp"

namespace carl {

struct FmHeadArrays {
    ad::Array global_bias;  // {1}
    ad::Array coeffs;       // {d}
    ad::Array factors;      // {d, v}
};

/// y = m0 + m.z + sum_{j<k} (v_j.v_k) z_j z_k, with the pairwise sum computed
/// as 0.5 * sum_a [ (sum_j V_ja z_j)^2 - sum_j V_ja^2 z_j^2 ].
inline ad::Array fm_score(ad::Tape& t, const ad::Array& z, const FmHeadArrays& head) {
    long d = z.size();
    if (head.coeffs.size() != d || head.factors.rows() != d)
        throw ShapeError("fm_score: input " + ad::shape_str(z.shape()) + " does not match head coefficients " +
                         ad::shape_str(head.coeffs.shape()) + " / factors " + ad::shape_str(head.factors.shape()));
    auto z_row = t.reshape(z, {1, d});
    auto linear = t.reshape(t.matmul(z_row, t.reshape(head.coeffs, {d, 1})), {1});
    auto zv = t.matmul(z_row, head.factors);  // [1 x v]
    auto square_of_sum = t.sum(t.elementwise_mul(zv, zv));
    auto z_sq = t.reshape(t.elementwise_mul(z, z), {1, d});
    auto v_sq = t.elementwise_mul(head.factors, head.factors);
    auto sum_of_squares = t.sum(t.matmul(z_sq, v_sq));
    auto pairwise = t.scale(t.sub(square_of_sum, sum_of_squares), 0.5);
    return t.add(t.add(head.global_bias, linear), pairwise);
}

struct LinearHeadArrays {
    ad::Array weights;  // {d}
    ad::Array bias;     // {1}
};

inline ad::Array lr_score(ad::Tape& t, const ad::Array& z, const LinearHeadArrays& head) {
    long d = z.size();
    if (head.weights.size() != d)
        throw ShapeError("lr_score: input " + ad::shape_str(z.shape()) + " does not match weights " +
                         ad::shape_str(head.weights.shape()));
    auto lin = t.reshape(t.matmul(t.reshape(z, {1, d}), t.reshape(head.weights, {d, 1})), {1});
    return t.add(lin, head.bias);
}

enum class FusionMode { dynamic_weight, static_weight, review_only, interaction_only };

struct FusionConfig {
    FusionMode mode = FusionMode::dynamic_weight;
    double static_alpha = 0.5;  // must be in [0,1]
    double eps = 1e-8;          // dynamic-denominator guard
};

struct FusedScore {
    ad::Array yhat;
    double alpha = 1.0;
    bool alpha_clamped = false;
};

/// Combine the two bias-free component scores and add the user/item biases.
/// Dynamic mode computes alpha = y_rev / (y_rev + y_int); the denominator is
/// guarded at +-eps and the result clamped to [0,1] with a zero-gradient
/// boundary. Single-component modes reduce to y + b_u + b_i.
inline FusedScore fuse(ad::Tape& t, std::optional<ad::Array> y_review, std::optional<ad::Array> y_interaction,
                       const ad::Array& user_bias, const ad::Array& item_bias, const FusionConfig& cfg) {
    FusedScore out;
    auto with_biases = [&](const ad::Array& core) { return t.add(t.add(core, user_bias), item_bias); };
    switch (cfg.mode) {
        case FusionMode::review_only:
            if (!y_review) throw ConfigError("fuse: review-only mode without a review score");
            out.alpha = 1.0;
            out.yhat = with_biases(*y_review);
            return out;
        case FusionMode::interaction_only:
            if (!y_interaction) throw ConfigError("fuse: interaction-only mode without an interaction score");
            out.alpha = 0.0;
            out.yhat = with_biases(*y_interaction);
            return out;
        default:
            break;
    }
    if (!y_review || !y_interaction) throw ConfigError("fuse: fused mode needs both component scores");
    ad::Array alpha;
    if (cfg.mode == FusionMode::static_weight) {
        if (cfg.static_alpha < 0.0 || cfg.static_alpha > 1.0)
            throw ConfigError("static alpha must be in [0,1], got " + std::to_string(cfg.static_alpha));
        alpha = ad::Array::scalar(cfg.static_alpha);
    } else {
        double denom = y_review->scalar_value() + y_interaction->scalar_value();
        ad::Array raw;
        if (std::fabs(denom) >= cfg.eps) {
            raw = t.div(*y_review, t.add(*y_review, *y_interaction));
        } else {
            // denominator too close to zero: hold it at +-eps as a constant
            raw = t.scale(*y_review, 1.0 / (denom >= 0.0 ? cfg.eps : -cfg.eps));
        }
        double a = raw.scalar_value();
        if (a > 1.0) {
            alpha = ad::Array::scalar(1.0);
            out.alpha_clamped = true;
        } else if (a < 0.0) {
            alpha = ad::Array::scalar(0.0);
            out.alpha_clamped = true;
        } else {
            alpha = raw;
        }
    }
    out.alpha = alpha.scalar_value();
    auto one_minus = t.sub(ad::Array::scalar(1.0), alpha);
    auto core = t.add(t.elementwise_mul(alpha, *y_review), t.elementwise_mul(one_minus, *y_interaction));
    out.yhat = with_biases(core);
    return out;
}

/// Sum of squared errors over a batch of scalar predictions.
inline ad::Array squared_error_sum(ad::Tape& t, const std::vector<ad::Array>& preds,
                                   const std::vector<double>& targets) {
    if (preds.size() != targets.size())
        throw ShapeError("squared_error_sum: " + std::to_string(preds.size()) + " predictions vs " +
                         std::to_string(targets.size()) + " targets");
    ad::Array total = ad::Array::scalar(0.0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        auto d = t.sub(preds[i], ad::Array::scalar(targets[i]));
        total = t.add(total, t.elementwise_mul(d, d));
    }
    return total;
}

}  // namespace carl
