#pragma once
// Review-based feature learning: per-tower convolutions over embedded review
// documents, a co-attentive layer scoring pair-wise relatedness, attention
// weighting, an abstracting convolution with mean (or max) pooling, a shared
// MLP, and the final pair feature vector.

#include <vector>

#include "carl/rng.hpp"
#include "carl/tensor.hpp"

namespace carl {

enum class Pooling { mean, max };

/// Attention weights retained from one forward pass (explain path).
struct AttentionTrace {
    std::vector<double> a_user;       // length n, sums to 1
    std::vector<double> a_item;       // length m, sums to 1
    std::vector<double> relatedness;  // optional n*m row-major R
    long n = 0, m = 0;
};

/// Convolution layer: ReLU over the sliding-window affine map. Row h holds
/// the contextual feature vector of word h. `active_rows` marks the prefix of
/// doc rows that can be nonzero (the pad tail embeds to exact zeros).
inline ad::Array contextual_features(ad::Tape& t, const ad::Array& doc_matrix, const ad::Array& bank,
                                     long window, long active_rows = -1) {
    return t.relu(t.slide_window_affine(doc_matrix, bank, window, active_rows));
}

struct CoAttention {
    ad::Array a_user;  // [n]
    ad::Array a_item;  // [m]
    ad::Array relatedness;  // [n x m], defined only when retain_relatedness
};

/// Attentive layer: R = tanh(U T V^T) via two matrix products, row/column
/// mean pooling, then softmax on each side. `active_user`/`active_item` mark
/// the nonzero row prefixes of the two feature matrices.
inline CoAttention coattend(ad::Tape& t, const ad::Array& user_feats, const ad::Array& item_feats,
                            const ad::Array& attentive, bool retain_relatedness = false,
                            long active_user = -1, long active_item = -1) {
    auto projected = t.matmul(user_feats, attentive, active_user);
    auto rel = t.tanh(t.matmul_nt(projected, item_feats, active_user, active_item), active_user);
    CoAttention out;
    out.a_user = t.softmax(t.mean_rows(rel));
    out.a_item = t.softmax(t.mean_cols(rel));
    if (retain_relatedness) out.relatedness = rel;
    return out;
}

/// diag(weights) * feats.
inline ad::Array weight_features(ad::Tape& t, const ad::Array& feats, const ad::Array& weights) {
    return t.scale_rows(feats, weights);
}

/// Abstracting layer: second sliding-window convolution over the weighted
/// features, then a per-filter mean (or max) over all positions.
inline ad::Array abstract_features(ad::Tape& t, const ad::Array& weighted, const ad::Array& bank,
                                   long window, Pooling pool = Pooling::mean, long active_rows = -1) {
    auto conv = t.relu(t.slide_window_affine(weighted, bank, window, active_rows));
    return pool == Pooling::mean ? t.mean_cols(conv) : t.max_cols(conv);
}

/// Shared MLP layer with inverted dropout on its output in training mode.
inline ad::Array project(ad::Tape& t, const ad::Array& features, const ad::Array& weights,
                         const ad::Array& bias, double dropout_rate, bool training, Rng& rng) {
    auto lin = t.reshape(t.matmul(weights, t.reshape(features, {features.size(), 1})), {weights.rows()});
    auto activated = t.relu(t.add(lin, bias));
    return t.dropout(activated, dropout_rate, training, rng);
}

/// z_review = [t_u (*) t_i, t_u, t_i]; the element-wise product slice is
/// dropped in the no-interaction ablation.
inline ad::Array review_pair_vector(ad::Tape& t, const ad::Array& user_vec, const ad::Array& item_vec,
                                    bool with_product = true) {
    if (user_vec.size() != item_vec.size())
        throw ShapeError("review pair vector: " + ad::shape_str(user_vec.shape()) + " vs " +
                         ad::shape_str(item_vec.shape()));
    if (!with_product) return t.concat({user_vec, item_vec});
    return t.concat({t.elementwise_mul(user_vec, item_vec), user_vec, item_vec});
}

}  // namespace carl
