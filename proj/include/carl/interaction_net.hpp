#pragma once
// Interaction-based feature learning: identity-indexed latent vectors and
// their element-wise interaction. The one-hot projections reduce to row
// lookups into the latent matrices.

#include "carl/tensor.hpp"

namespace carl {

/// z_interaction = [p_u (*) q_i, p_u, q_i]; the product slice is dropped in
/// the no-interaction ablation.
inline ad::Array interaction_pair_vector(ad::Tape& t, const ad::Array& user_latent,
                                         const ad::Array& item_latent, bool with_product = true) {
    if (user_latent.size() != item_latent.size())
        throw ShapeError("interaction pair vector: " + ad::shape_str(user_latent.shape()) + " vs " +
                         ad::shape_str(item_latent.shape()));
    if (!with_product) return t.concat({user_latent, item_latent});
    return t.concat({t.elementwise_mul(user_latent, item_latent), user_latent, item_latent});
}

}  // namespace carl
