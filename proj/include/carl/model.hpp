#pragma once
// The assembled rating model: parameter registry, per-worker forward context
// (leaf views + gradient sinks), the fused forward pass over a user-item
// pair, L2 helpers, and checkpoint conversion.

#include <deque>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "carl/checkpoint.hpp"
#include "carl/errors.hpp"
#include "carl/interaction_net.hpp"
#include "carl/predictor.hpp"
#include "carl/review_net.hpp"
#include "carl/rng.hpp"
#include "carl/tensor.hpp"

namespace carl {

struct Param {
    std::string name;
    ad::Shape shape;
    std::shared_ptr<std::vector<double>> value;
    std::vector<double> grad;
    bool regularized = true;
    bool sparse_grad = false;  // gradients collected per touched row
    long frozen_row = -1;      // row excluded from gradients/updates
    double init_bound = 0.0;   // uniform +-bound; 0 means zeros

    long size() const { return static_cast<long>(value->size()); }
    long rows() const { return shape[0]; }
    long cols() const { return shape.size() > 1 ? shape[1] : 1; }
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

/// One worker's forward/backward state: a tape, cached leaf views whose grad
/// buffers accumulate across the worker's pairs, and sparse row sinks for
/// lookup tables. Reduction into the shared Param::grad happens afterwards in
/// registry order, so a fixed worker count gives a fixed summation order.
class ForwardCtx {
public:
    ad::Tape tape;

    ad::Array leaf(Param& p) {
        auto it = leaves_.find(&p);
        if (it == leaves_.end()) it = leaves_.emplace(&p, ad::Array::view(p.shape, p.value)).first;
        return it->second;
    }

    ad::Array gather(Param& p, std::vector<int32_t> ids) {
        if (p.sparse_grad)
            return tape.gather_rows_sparse(p.value->data(), p.rows(), p.cols(), std::move(ids), &sparse_[&p],
                                           p.frozen_row, p.name);
        return tape.gather_rows(leaf(p), std::move(ids), p.frozen_row);
    }

    /// Drop the recorded steps but keep accumulated leaf/sparse gradients.
    void end_pair() { tape.clear(); }

    /// Add this worker's accumulated gradients into the shared buffers.
    /// Must be called for workers in order to keep reductions deterministic.
    void reduce_into(const std::vector<Param*>& registry) {
        for (Param* p : registry) {
            auto it = leaves_.find(p);
            if (it != leaves_.end()) {
                const auto& g = it->second.node()->grad;
                for (std::size_t i = 0; i < g.size(); ++i) p->grad[i] += g[i];
            }
            auto st = sparse_.find(p);
            if (st != sparse_.end()) {
                long cols = p->cols();
                for (long row : st->second.sorted_rows()) {
                    const auto& g = st->second.rows.at(row);
                    double* dst = p->grad.data() + row * cols;
                    for (long i = 0; i < cols; ++i) dst[i] += g[static_cast<std::size_t>(i)];
                }
            }
        }
    }

    std::unordered_map<Param*, ad::SparseRowGrad>& sparse_sinks() { return sparse_; }

private:
    std::unordered_map<Param*, ad::Array> leaves_;
    std::unordered_map<Param*, ad::SparseRowGrad> sparse_;
};

struct ModelConfig {
    long vocab_size = 0;  // distinct words; the pad row is added on top
    long doc_len = 300;
    long embed_dim = 300;   // t
    long filters = 50;      // f
    long window = 3;        // s
    long latent = 15;       // l
    long fm_factors = 50;   // v
    long users = 0;
    long items = 0;
    bool use_review = true;
    bool use_interaction = true;
    bool review_product = true;       // keep the element-wise slice in z_review
    bool interaction_product = true;  // keep it in z_interaction
    bool attention = true;            // false: attentive weights fixed at 1
    Pooling pooling = Pooling::mean;
    enum class Head { fm, linear } head = Head::fm;
    FusionMode fusion = FusionMode::dynamic_weight;
    double static_alpha = 0.5;
    double fusion_eps = 1e-8;
    double dropout = 0.2;
    bool regularize_embeddings = false;
    bool clamp_predictions = false;  // clamp to [1,5] at evaluation time
    // Skip matrix-product work on the all-pad document tail (embeds to exact
    // zeros, so results are bit-identical). Off switch exists for the
    // equivalence test.
    bool exploit_pad_tails = true;

    long review_width() const { return (review_product ? 3 : 2) * latent; }
    long interaction_width() const { return (interaction_product ? 3 : 2) * latent; }

    void validate() const {
        std::vector<std::string> bad;
        auto positive = [&](long v, const char* name) {
            if (v < 1) bad.push_back(std::string(name) + " must be >= 1, got " + std::to_string(v));
        };
        positive(users, "users");
        positive(items, "items");
        positive(latent, "latent");
        positive(window, "window");
        if (use_review) {
            positive(vocab_size, "vocab-size");
            positive(doc_len, "doc-len");
            positive(embed_dim, "embed-dim");
            positive(filters, "filters");
        }
        if (head == Head::fm) positive(fm_factors, "fm-factors");
        if (!use_review && !use_interaction) bad.push_back("at least one component must be enabled");
        if (dropout < 0.0 || dropout >= 1.0) bad.push_back("dropout must be in [0,1), got " + std::to_string(dropout));
        if (static_alpha < 0.0 || static_alpha > 1.0)
            bad.push_back("static-alpha must be in [0,1], got " + std::to_string(static_alpha));
        if (fusion_eps <= 0.0) bad.push_back("fusion-eps must be > 0");
        if (!use_interaction && fusion != FusionMode::review_only)
            bad.push_back("without the interaction component the fusion mode must be review-only");
        if (!use_review && fusion != FusionMode::interaction_only)
            bad.push_back("without the review component the fusion mode must be interaction-only");
        if (use_review && use_interaction &&
            (fusion == FusionMode::review_only || fusion == FusionMode::interaction_only))
            bad.push_back("single-component fusion modes require disabling the other component");
        if (!bad.empty()) {
            std::string msg = "invalid model configuration:";
            for (const auto& b : bad) msg += "\n  - " + b;
            throw ConfigError(msg);
        }
    }
};

struct PairExample {
    int32_t user = -1;
    int32_t item = -1;
    const std::vector<int32_t>* user_doc = nullptr;
    const std::vector<int32_t>* item_doc = nullptr;
    double rating = 0.0;
};

struct Prediction {
    ad::Array yhat;
    double alpha = 1.0;
    bool alpha_clamped = false;
    ad::Array y_review;       // undefined when the component is off
    ad::Array y_interaction;  // undefined when the component is off
};

class CarlModel {
public:
    explicit CarlModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        build();
    }

    const ModelConfig& config() const { return cfg_; }

    /// Uniform(+-bound) weights, zero biases; the pad embedding row is zeroed
    /// and stays frozen afterwards.
    void init(uint64_t seed) {
        Rng rng(mix_seed(seed, 0xca51));
        for (Param* p : registry_) {
            auto& v = *p->value;
            if (p->init_bound > 0.0)
                for (auto& x : v) x = rng.uniform(-p->init_bound, p->init_bound);
            else
                std::fill(v.begin(), v.end(), 0.0);
            if (p->frozen_row >= 0) {
                long c = p->cols();
                std::fill(v.begin() + p->frozen_row * c, v.begin() + (p->frozen_row + 1) * c, 0.0);
            }
            p->zero_grad();
        }
    }

    Prediction forward(ForwardCtx& ctx, const PairExample& ex, bool training, uint64_t dropout_seed = 0,
                       AttentionTrace* trace = nullptr) const {
        if (ex.user < 0 || ex.user >= cfg_.users)
            throw ColdStartError("user index " + std::to_string(ex.user) + " not in training range [0," +
                                 std::to_string(cfg_.users) + ")");
        if (ex.item < 0 || ex.item >= cfg_.items)
            throw ColdStartError("item index " + std::to_string(ex.item) + " not in training range [0," +
                                 std::to_string(cfg_.items) + ")");
        ad::Tape& t = ctx.tape;
        Prediction out;
        std::optional<ad::Array> y_rev, y_int;
        Rng drop_rng(mix_seed(dropout_seed, 0xd209));

        if (cfg_.use_review) {
            if (!ex.user_doc || !ex.item_doc) throw ConfigError("review component needs both documents");
            long live_u = -1, live_i = -1;
            if (cfg_.exploit_pad_tails) {
                live_u = live_prefix(*ex.user_doc);
                live_i = live_prefix(*ex.item_doc);
            }
            auto du = ctx.gather(*emb_, *ex.user_doc);
            auto dv = ctx.gather(*emb_, *ex.item_doc);
            auto feats_u = contextual_features(t, du, ctx.leaf(*conv_u_), cfg_.window, live_u);
            auto feats_i = contextual_features(t, dv, ctx.leaf(*conv_i_), cfg_.window, live_i);
            ad::Array a_u, a_i;
            if (cfg_.attention) {
                auto co = coattend(t, feats_u, feats_i, ctx.leaf(*att_), trace != nullptr, live_u, live_i);
                a_u = co.a_user;
                a_i = co.a_item;
                if (trace) {
                    trace->n = a_u.size();
                    trace->m = a_i.size();
                    trace->a_user.assign(a_u.data(), a_u.data() + a_u.size());
                    trace->a_item.assign(a_i.data(), a_i.data() + a_i.size());
                    trace->relatedness.assign(co.relatedness.data(), co.relatedness.data() + co.relatedness.size());
                }
            } else {
                a_u = ad::Array::full({feats_u.rows()}, 1.0);
                a_i = ad::Array::full({feats_i.rows()}, 1.0);
                if (trace) {
                    trace->n = a_u.size();
                    trace->m = a_i.size();
                    trace->a_user.assign(a_u.data(), a_u.data() + a_u.size());
                    trace->a_item.assign(a_i.data(), a_i.data() + a_i.size());
                    trace->relatedness.clear();
                }
            }
            auto wu = weight_features(t, feats_u, a_u);
            auto wi = weight_features(t, feats_i, a_i);
            auto hu = abstract_features(t, wu, ctx.leaf(*abs_u_), cfg_.window, cfg_.pooling, live_u);
            auto hi = abstract_features(t, wi, ctx.leaf(*abs_i_), cfg_.window, cfg_.pooling, live_i);
            auto tu = project(t, hu, ctx.leaf(*mlp_w_), ctx.leaf(*mlp_b_), cfg_.dropout, training, drop_rng);
            auto ti = project(t, hi, ctx.leaf(*mlp_w_), ctx.leaf(*mlp_b_), cfg_.dropout, training, drop_rng);
            auto z = review_pair_vector(t, tu, ti, cfg_.review_product);
            y_rev = score(ctx, z, rev_head_);
        }
        if (cfg_.use_interaction) {
            auto pu = t.reshape(ctx.gather(*lat_u_, {ex.user}), {cfg_.latent});
            auto qi = t.reshape(ctx.gather(*lat_i_, {ex.item}), {cfg_.latent});
            auto z = interaction_pair_vector(t, pu, qi, cfg_.interaction_product);
            y_int = score(ctx, z, int_head_);
        }
        auto bu = t.pick(ctx.leaf(*bias_u_), ex.user);
        auto bi = t.pick(ctx.leaf(*bias_i_), ex.item);
        FusionConfig fc{cfg_.fusion, cfg_.static_alpha, cfg_.fusion_eps};
        auto fused = fuse(t, y_rev, y_int, bu, bi, fc);
        out.yhat = fused.yhat;
        out.alpha = fused.alpha;
        out.alpha_clamped = fused.alpha_clamped;
        if (y_rev) out.y_review = *y_rev;
        if (y_int) out.y_interaction = *y_int;
        return out;
    }

    /// Inference-only prediction value (applies the optional [1,5] clamp).
    double predict(const PairExample& ex, AttentionTrace* trace = nullptr) const {
        ForwardCtx ctx;
        auto p = forward(ctx, ex, /*training=*/false, 0, trace);
        double y = p.yhat.scalar_value();
        if (cfg_.clamp_predictions) y = std::min(5.0, std::max(1.0, y));
        return y;
    }

    const std::vector<Param*>& parameters() const { return registry_; }

    Param* find_param(const std::string& name) const {
        for (Param* p : registry_)
            if (p->name == name) return p;
        return nullptr;
    }

    void zero_grads() {
        for (Param* p : registry_) p->zero_grad();
    }

    double l2_penalty() const {
        double s = 0.0;
        for (Param* p : registry_) {
            if (!p->regularized) continue;
            for (double v : *p->value) s += v * v;
        }
        return s;
    }

    void add_l2_gradients(double lambda) {
        if (lambda == 0.0) return;
        for (Param* p : registry_) {
            if (!p->regularized) continue;
            const auto& v = *p->value;
            for (std::size_t i = 0; i < v.size(); ++i) p->grad[i] += 2.0 * lambda * v[i];
        }
    }

    std::vector<std::vector<double>> snapshot() const {
        std::vector<std::vector<double>> s;
        s.reserve(registry_.size());
        for (Param* p : registry_) s.push_back(*p->value);
        return s;
    }

    void restore(const std::vector<std::vector<double>>& s) {
        if (s.size() != registry_.size()) throw ShapeError("snapshot size mismatch");
        for (std::size_t i = 0; i < s.size(); ++i) *registry_[i]->value = s[i];
    }

    Checkpoint to_checkpoint(uint64_t seed, uint64_t step) const {
        Checkpoint ck;
        ck.rng_seed = seed;
        ck.step = step;
        for (Param* p : registry_) ck.tensors.push_back({p->name, p->shape, *p->value});
        return ck;
    }

    void load(const Checkpoint& ck) {
        if (ck.tensors.size() != registry_.size())
            throw DataError("checkpoint holds " + std::to_string(ck.tensors.size()) + " tensors but the model has " +
                            std::to_string(registry_.size()));
        for (Param* p : registry_) {
            const TensorRecord* t = ck.find(p->name);
            if (!t) throw DataError("checkpoint is missing tensor '" + p->name + "'");
            if (t->shape != p->shape)
                throw DataError("checkpoint tensor '" + p->name + "' has shape " + ad::shape_str(t->shape) +
                                ", model expects " + ad::shape_str(p->shape));
            *p->value = t->data;
            if (p->frozen_row >= 0) {
                long c = p->cols();
                for (long i = 0; i < c; ++i)
                    if ((*p->value)[static_cast<std::size_t>(p->frozen_row * c + i)] != 0.0)
                        throw DataError("checkpoint tensor '" + p->name + "' violates the frozen pad-row invariant");
            }
        }
    }

private:
    struct HeadParams {
        Param* m0 = nullptr;
        Param* m = nullptr;
        Param* v = nullptr;
        Param* w = nullptr;
        Param* b = nullptr;
    };

    /// Row count up to and including the last non-pad token; interior pads
    /// (zero rows) stay inside the prefix and are handled by the math.
    long live_prefix(const std::vector<int32_t>& doc) const {
        int32_t pad = static_cast<int32_t>(cfg_.vocab_size);
        long n = static_cast<long>(doc.size());
        while (n > 0 && doc[static_cast<std::size_t>(n - 1)] == pad) --n;
        return n;
    }

    ad::Array score(ForwardCtx& ctx, const ad::Array& z, const HeadParams& h) const {
        if (cfg_.head == ModelConfig::Head::fm) {
            FmHeadArrays arr{ctx.leaf(*h.m0), ctx.leaf(*h.m), ctx.leaf(*h.v)};
            return fm_score(ctx.tape, z, arr);
        }
        LinearHeadArrays arr{ctx.leaf(*h.w), ctx.leaf(*h.b)};
        return lr_score(ctx.tape, z, arr);
    }

    Param* add(std::string name, ad::Shape shape, double bound, bool regularized, bool sparse = false,
               long frozen_row = -1) {
        params_.emplace_back();
        Param& p = params_.back();
        p.name = std::move(name);
        p.shape = std::move(shape);
        p.value = std::make_shared<std::vector<double>>(static_cast<std::size_t>(ad::shape_size(p.shape)), 0.0);
        p.grad.assign(p.value->size(), 0.0);
        p.regularized = regularized;
        p.sparse_grad = sparse;
        p.frozen_row = frozen_row;
        p.init_bound = bound;
        registry_.push_back(&p);
        return &p;
    }

    HeadParams add_head(const std::string& prefix, long d) {
        HeadParams h;
        if (cfg_.head == ModelConfig::Head::fm) {
            h.m0 = add(prefix + ".global_bias", {1}, 0.0, /*regularized=*/false);
            h.m = add(prefix + ".coeffs", {d}, glorot(d, 1), true);
            h.v = add(prefix + ".factors", {d, cfg_.fm_factors}, glorot(d, cfg_.fm_factors), true);
        } else {
            h.w = add(prefix + ".weights", {d}, glorot(d, 1), true);
            h.b = add(prefix + ".bias", {1}, 0.0, false);
        }
        return h;
    }

    static double glorot(long fan_in, long fan_out) {
        return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    }

    void build() {
        long t = cfg_.embed_dim, f = cfg_.filters, s = cfg_.window, l = cfg_.latent;
        if (cfg_.use_review) {
            emb_ = add("review.embeddings", {cfg_.vocab_size + 1, t}, glorot(cfg_.vocab_size + 1, t),
                       cfg_.regularize_embeddings, /*sparse=*/true, /*frozen_row=*/cfg_.vocab_size);
            conv_u_ = add("review.conv_user", {f, s * t}, glorot(s * t, f), true);
            conv_i_ = add("review.conv_item", {f, s * t}, glorot(s * t, f), true);
            att_ = add("review.attention", {f, f}, glorot(f, f), true);
            abs_u_ = add("review.abstract_user", {f, s * f}, glorot(s * f, f), true);
            abs_i_ = add("review.abstract_item", {f, s * f}, glorot(s * f, f), true);
            mlp_w_ = add("review.mlp_weights", {l, f}, glorot(f, l), true);
            mlp_b_ = add("review.mlp_bias", {l}, 0.0, false);
            rev_head_ = add_head("head_review", cfg_.review_width());
        }
        if (cfg_.use_interaction) {
            lat_u_ = add("interaction.user_factors", {cfg_.users, l}, 0.05, true);
            lat_i_ = add("interaction.item_factors", {cfg_.items, l}, 0.05, true);
            int_head_ = add_head("head_interaction", cfg_.interaction_width());
        }
        bias_u_ = add("bias.user", {cfg_.users}, 0.0, false);
        bias_i_ = add("bias.item", {cfg_.items}, 0.0, false);
    }

    ModelConfig cfg_;
    std::deque<Param> params_;
    std::vector<Param*> registry_;
    Param* emb_ = nullptr;
    Param* conv_u_ = nullptr;
    Param* conv_i_ = nullptr;
    Param* att_ = nullptr;
    Param* abs_u_ = nullptr;
    Param* abs_i_ = nullptr;
    Param* mlp_w_ = nullptr;
    Param* mlp_b_ = nullptr;
    Param* lat_u_ = nullptr;
    Param* lat_i_ = nullptr;
    Param* bias_u_ = nullptr;
    Param* bias_i_ = nullptr;
    HeadParams rev_head_, int_head_;
};

}  // namespace carl
