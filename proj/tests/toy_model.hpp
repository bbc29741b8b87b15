#pragma once
// Small-model fixtures for gradient checks and component tests.

#include <vector>

#include "carl/model.hpp"
#include "carl/rng.hpp"

namespace ts {

inline carl::ModelConfig toy_config(long doc_len = 8, long embed_dim = 6, long filters = 4, long window = 3,
                                    long latent = 3, long fm_factors = 2, long users = 4, long items = 3,
                                    long vocab = 12) {
    carl::ModelConfig cfg;
    cfg.vocab_size = vocab;
    cfg.doc_len = doc_len;
    cfg.embed_dim = embed_dim;
    cfg.filters = filters;
    cfg.window = window;
    cfg.latent = latent;
    cfg.fm_factors = fm_factors;
    cfg.users = users;
    cfg.items = items;
    cfg.dropout = 0.0;
    return cfg;
}

/// Random document of `len` real tokens followed by pad, total doc_len.
inline std::vector<int32_t> toy_doc(const carl::ModelConfig& cfg, carl::Rng& rng, long real_tokens = -1) {
    if (real_tokens < 0) real_tokens = cfg.doc_len;
    std::vector<int32_t> d;
    for (long i = 0; i < real_tokens; ++i) d.push_back(static_cast<int32_t>(rng.index(cfg.vocab_size)));
    d.resize(static_cast<std::size_t>(cfg.doc_len), static_cast<int32_t>(cfg.vocab_size));
    return d;
}

/// Full fused loss (squared error + lambda * ||theta||^2) for one pair,
/// forward only. Used as the finite-difference oracle's target function.
inline double pair_loss_value(const carl::CarlModel& m, const carl::PairExample& ex, double lambda) {
    carl::ForwardCtx ctx;
    auto pred = m.forward(ctx, ex, /*training=*/false);
    double d = pred.yhat.scalar_value() - ex.rating;
    return d * d + lambda * m.l2_penalty();
}

/// Same loss with a backward pass; gradients land in Param::grad.
inline double pair_loss_backward(carl::CarlModel& m, const carl::PairExample& ex, double lambda) {
    m.zero_grads();
    carl::ForwardCtx ctx;
    auto pred = m.forward(ctx, ex, /*training=*/false);
    auto diff = ctx.tape.sub(pred.yhat, carl::ad::Array::scalar(ex.rating));
    auto loss = ctx.tape.elementwise_mul(diff, diff);
    ctx.tape.backward(loss);
    ctx.reduce_into(m.parameters());
    m.add_l2_gradients(lambda);
    return loss.scalar_value() + lambda * m.l2_penalty();
}

}  // namespace ts
