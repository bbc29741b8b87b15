#pragma once
// Evaluation and the ablation grid: test-set MSE, the named model variants
// (component/attention/pooling/head/fusion ablations), multi-seed runs with
// min/median/mean aggregation, and paired t-tests against a reference.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "carl/stats.hpp"
#include "carl/trainer.hpp"

namespace carl {

/// Mean squared error of the model over one split (dropout off).
inline double mse(const CarlModel& model, const Corpus& corpus, Split split, int workers = 0) {
    auto idxs = corpus.split_indices(split);
    if (idxs.empty()) throw DataError(std::string("cannot evaluate MSE: split '") + split_name(split) + "' is empty");
    return evaluate_mse(model, corpus, idxs, workers);
}

/// Hyper-parameters shared by all variants of one experiment.
struct BaseDims {
    long latent = 15;
    long filters = 50;
    long window = 3;
    long embed_dim = 300;
    long fm_factors = 50;
    double dropout = 0.2;
    bool regularize_embeddings = false;
    bool clamp_predictions = false;
};

inline const std::vector<std::string>& variant_names() {
    static const std::vector<std::string> kNames = {
        "CARL", "CARL+LR", "Review", "Review-avg", "Review-max", "Review-att", "Review-int",
        "Rating", "Rating-int", "static-<alpha>",
    };
    return kNames;
}

/// Model configuration for a named variant. Single-component variants double
/// the latent dimension so the feature width entering the predictor matches
/// the fused model's.
inline ModelConfig variant_config(const std::string& variant, const Corpus& corpus, const BaseDims& dims) {
    ModelConfig cfg;
    cfg.vocab_size = static_cast<long>(corpus.vocab.size());
    cfg.doc_len = corpus.doc_len;
    cfg.embed_dim = dims.embed_dim;
    cfg.filters = dims.filters;
    cfg.window = dims.window;
    cfg.latent = dims.latent;
    cfg.fm_factors = dims.fm_factors;
    cfg.users = corpus.users();
    cfg.items = corpus.items();
    cfg.dropout = dims.dropout;
    cfg.regularize_embeddings = dims.regularize_embeddings;
    cfg.clamp_predictions = dims.clamp_predictions;

    auto review_only = [&] {
        cfg.use_interaction = false;
        cfg.fusion = FusionMode::review_only;
        cfg.latent = 2 * dims.latent;
    };
    auto interaction_only = [&] {
        cfg.use_review = false;
        cfg.fusion = FusionMode::interaction_only;
        cfg.latent = 2 * dims.latent;
    };

    if (variant == "CARL") {
        // defaults
    } else if (variant == "CARL+LR") {
        cfg.head = ModelConfig::Head::linear;
    } else if (variant == "Review" || variant == "Review-avg") {
        review_only();
    } else if (variant == "Review-max") {
        review_only();
        cfg.pooling = Pooling::max;
    } else if (variant == "Review-att") {
        review_only();
        cfg.attention = false;
    } else if (variant == "Review-int") {
        review_only();
        cfg.review_product = false;
    } else if (variant == "Rating") {
        interaction_only();
    } else if (variant == "Rating-int") {
        interaction_only();
        cfg.interaction_product = false;
    } else if (variant.rfind("static-", 0) == 0) {
        cfg.fusion = FusionMode::static_weight;
        try {
            cfg.static_alpha = std::stod(variant.substr(7));
        } catch (...) {
            throw ConfigError("cannot parse alpha from variant '" + variant + "' (expected e.g. static-0.5)");
        }
    } else {
        std::ostringstream os;
        os << "unknown variant '" << variant << "'; valid variants:";
        for (const auto& v : variant_names()) os << ' ' << v;
        throw ConfigError(os.str());
    }
    cfg.validate();
    return cfg;
}

struct EvalResult {
    std::string dataset;
    std::string variant;
    std::vector<uint64_t> seeds;
    std::vector<double> mse_per_seed;
    double mse_min = std::numeric_limits<double>::quiet_NaN();
    double mse_median = std::numeric_limits<double>::quiet_NaN();
    double mse_mean = std::numeric_limits<double>::quiet_NaN();
    std::string reference;  // variant the t-test compares against, if any
    double t_stat = std::numeric_limits<double>::quiet_NaN();
    double p_value = std::numeric_limits<double>::quiet_NaN();

    void finalize() {
        if (mse_per_seed.empty()) return;
        auto sorted = mse_per_seed;
        std::sort(sorted.begin(), sorted.end());
        mse_min = sorted.front();
        std::size_t n = sorted.size();
        mse_median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        double s = 0;
        for (double v : sorted) s += v;
        mse_mean = s / static_cast<double>(n);
    }
};

/// Train the named variant once per seed and aggregate test MSE. When a
/// reference per-seed list is supplied, attaches a paired two-sided t-test.
inline EvalResult run_variant(const std::string& variant, const Corpus& corpus, const BaseDims& dims,
                              const TrainConfig& base_cfg, const std::vector<uint64_t>& seeds,
                              const std::string& dataset_name = "",
                              const std::vector<double>* reference_mses = nullptr,
                              const std::string& reference_name = "") {
    if (seeds.empty()) throw ConfigError("run_variant needs at least one seed");
    EvalResult res;
    res.dataset = dataset_name;
    res.variant = variant;
    res.seeds = seeds;
    for (uint64_t seed : seeds) {
        auto cfg = variant_config(variant, corpus, dims);
        CarlModel model(cfg);
        TrainConfig tc = base_cfg;
        tc.seed = seed;
        auto report = train(model, corpus, tc);
        res.mse_per_seed.push_back(report.test_mse);
    }
    res.finalize();
    if (reference_mses && reference_mses->size() == res.mse_per_seed.size()) {
        auto tt = paired_t_test(res.mse_per_seed, *reference_mses);
        res.t_stat = tt.t;
        res.p_value = tt.p;
        res.reference = reference_name;
    }
    return res;
}

inline std::string eval_table_csv(const std::vector<EvalResult>& rows) {
    std::ostringstream os;
    os << "dataset,variant,seeds,mse_min,mse_median,mse_mean,per_seed,reference,t_stat,p_value\n";
    os.precision(12);
    for (const auto& r : rows) {
        os << r.dataset << ',' << r.variant << ',' << r.seeds.size() << ',' << r.mse_min << ',' << r.mse_median
           << ',' << r.mse_mean << ',';
        for (std::size_t i = 0; i < r.mse_per_seed.size(); ++i) os << (i ? ";" : "") << r.mse_per_seed[i];
        os << ',' << r.reference << ',' << r.t_stat << ',' << r.p_value << '\n';
    }
    return os.str();
}

inline std::string eval_table_markdown(const std::vector<EvalResult>& rows) {
    std::ostringstream os;
    os << "| dataset | variant | seeds | MSE min | MSE median | MSE mean | p vs ref |\n";
    os << "|---|---|---|---|---|---|---|\n";
    os.precision(6);
    for (const auto& r : rows) {
        os << "| " << r.dataset << " | " << r.variant << " | " << r.seeds.size() << " | " << r.mse_min << " | "
           << r.mse_median << " | " << r.mse_mean << " | ";
        if (std::isfinite(r.p_value))
            os << r.p_value << " (" << r.reference << ")";
        else
            os << "-";
        os << " |\n";
    }
    return os.str();
}

}  // namespace carl
