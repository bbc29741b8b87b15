#pragma once
// Mini-batch trainer: seeded epoch shuffles, parallel per-pair
// forward/backward with ordered gradient reduction, RMSprop updates,
// L2 regularization, validation-based model selection, and early stopping.

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "carl/corpus.hpp"
#include "carl/model.hpp"
#include "carl/optim.hpp"
#include "carl/threading.hpp"

namespace carl {

struct TrainConfig {
    long batch_size = 100;
    double lr = 0.001;
    double lambda = 0.01;  // grid: 0.05 / 0.01 / 0.005 / 0.001
    long epochs = 60;
    uint64_t seed = 1;
    long eval_every = 1;  // epochs between validation passes
    long patience = 10;   // validation passes without improvement before stopping
    int workers = 0;      // 0: CARL_WORKERS env or hardware
    enum class Select { best_val, final_epoch } select = Select::best_val;
    bool audit_gradients = false;  // per-epoch gradient-touch accounting
    double rmsprop_rho = 0.9;
    double rmsprop_eps = 1e-8;
    double divergence_factor = 10.0;
    long divergence_epochs = 3;
    bool verbose = false;
    // runs right after parameter initialization (e.g. to overwrite embedding
    // rows with externally trained vectors)
    std::function<void(CarlModel&)> post_init;

    void validate() const {
        std::vector<std::string> bad;
        if (batch_size < 1) bad.push_back("batch-size must be >= 1");
        if (lr <= 0.0) bad.push_back("lr must be > 0");
        if (lambda < 0.0) bad.push_back("lambda must be >= 0");
        if (epochs < 1) bad.push_back("epochs must be >= 1");
        if (eval_every < 1) bad.push_back("eval-every must be >= 1");
        if (patience < 1) bad.push_back("patience must be >= 1");
        if (!bad.empty()) {
            std::string msg = "invalid training configuration:";
            for (const auto& b : bad) msg += "\n  - " + b;
            throw ConfigError(msg);
        }
    }
};

struct EpochStats {
    double train_loss = 0.0;  // summed objective over the epoch's batches
    double val_mse = std::numeric_limits<double>::quiet_NaN();
    double seconds = 0.0;
};

struct TrainReport {
    std::vector<EpochStats> epochs;
    long best_epoch = -1;
    double best_val_mse = std::numeric_limits<double>::quiet_NaN();
    double test_mse = std::numeric_limits<double>::quiet_NaN();
    uint64_t steps = 0;
    bool early_stopped = false;
    std::vector<std::string> untouched_params;  // audit: tensors with no nonzero grad in the last epoch
};

/// Seeded permutation of [0,n) chunked into batches; the last partial batch
/// is kept.
inline std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, long batch_size, uint64_t epoch_seed) {
    if (batch_size < 1) throw ConfigError("batch-size must be >= 1, got " + std::to_string(batch_size));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(mix_seed(epoch_seed, 0xba7c4));
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t at = 0; at < n; at += static_cast<std::size_t>(batch_size)) {
        std::size_t end = std::min(n, at + static_cast<std::size_t>(batch_size));
        batches.emplace_back(order.begin() + static_cast<long>(at), order.begin() + static_cast<long>(end));
    }
    return batches;
}

inline PairExample example_at(const Corpus& c, std::size_t idx) {
    const auto& x = c.interactions[idx];
    PairExample ex;
    ex.user = x.user;
    ex.item = x.item;
    ex.user_doc = &c.user_docs[static_cast<std::size_t>(x.user)];
    ex.item_doc = &c.item_docs[static_cast<std::size_t>(x.item)];
    ex.rating = x.rating;
    return ex;
}

/// Parallel MSE over the given interaction indices (dropout off, ordered
/// reduction, parameters untouched).
inline double evaluate_mse(const CarlModel& model, const Corpus& corpus,
                           const std::vector<std::size_t>& idxs, int workers = 0) {
    if (idxs.empty()) return std::numeric_limits<double>::quiet_NaN();
    int w = resolve_workers(workers);
    auto ranges = chunk_ranges(idxs.size(), w);
    std::vector<double> partial(ranges.size(), 0.0);
    parallel_chunks(idxs.size(), w, [&](std::size_t wk, std::size_t begin, std::size_t end) {
        double acc = 0.0;
        ForwardCtx ctx;
        for (std::size_t i = begin; i < end; ++i) {
            auto ex = example_at(corpus, idxs[i]);
            auto pred = model.forward(ctx, ex, /*training=*/false);
            double y = pred.yhat.scalar_value();
            if (model.config().clamp_predictions) y = std::min(5.0, std::max(1.0, y));
            double d = y - ex.rating;
            acc += d * d;
            ctx.end_pair();
        }
        partial[wk] = acc;
    });
    double total = 0.0;
    for (double p : partial) total += p;  // worker order: deterministic for a fixed count
    return total / static_cast<double>(idxs.size());
}

namespace train_detail {

/// Forward+backward over one batch with per-worker gradient sinks reduced in
/// worker order. Returns the summed squared error. Gradients are accumulated
/// into Param::grad (caller zeroes them).
inline double run_batch(CarlModel& model, const Corpus& corpus, const std::vector<std::size_t>& batch,
                        uint64_t run_seed, uint64_t step, int workers) {
    int w = resolve_workers(workers);
    auto ranges = chunk_ranges(batch.size(), w);
    std::vector<ForwardCtx> ctxs(ranges.size());
    std::vector<double> partial(ranges.size(), 0.0);
    parallel_chunks(batch.size(), w, [&](std::size_t wk, std::size_t begin, std::size_t end) {
        ForwardCtx& ctx = ctxs[wk];
        double acc = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
            auto ex = example_at(corpus, batch[i]);
            try {
                auto pred = model.forward(ctx, ex, /*training=*/true, mix_seed(run_seed, step, i));
                auto diff = ctx.tape.sub(pred.yhat, ad::Array::scalar(ex.rating));
                auto loss = ctx.tape.elementwise_mul(diff, diff);
                double lv = loss.scalar_value();
                if (!std::isfinite(lv)) throw NumericFault("loss", "pair loss is not finite");
                ctx.tape.backward(loss);
                acc += lv;
            } catch (const NumericFault& e) {
                auto producer = ctx.tape.first_nonfinite();
                throw NumericFault(producer.value_or(e.op_name),
                                   "non-finite value at training step " + std::to_string(step) + ", pair (" +
                                       std::to_string(ex.user) + "," + std::to_string(ex.item) + ")");
            }
            ctx.end_pair();
        }
        partial[wk] = acc;
    });
    double sq = 0.0;
    for (double p : partial) sq += p;
    for (auto& ctx : ctxs) ctx.reduce_into(model.parameters());
    return sq;
}

}  // namespace train_detail

/// Train the model on the corpus's train split. The model is initialized from
/// cfg.seed, updated in place, and left at the selected parameters (best
/// validation MSE by default). Deterministic for a fixed (seed, worker count).
inline TrainReport train(CarlModel& model, const Corpus& corpus, const TrainConfig& cfg) {
    cfg.validate();
    model.init(cfg.seed);
    if (cfg.post_init) cfg.post_init(model);

    auto train_idx = corpus.split_indices(Split::train);
    auto val_idx = corpus.split_indices(Split::val);
    auto test_idx = corpus.split_indices(Split::test);
    if (train_idx.empty()) throw DataError("training split is empty");

    RmspropConfig opt{cfg.lr, cfg.rmsprop_rho, cfg.rmsprop_eps};
    auto params = model.parameters();
    std::vector<RmspropState> states(params.size());

    TrainReport report;
    std::vector<std::vector<double>> best_params;
    double initial_loss = -1.0;
    long diverged_streak = 0;
    long stale_evals = 0;
    uint64_t step = 0;
    std::vector<uint8_t> touched(params.size(), 0);

    for (long epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        std::fill(touched.begin(), touched.end(), 0);
        auto batches = batch_iter(train_idx.size(), cfg.batch_size, mix_seed(cfg.seed, static_cast<uint64_t>(epoch)));
        double epoch_loss = 0.0;
        for (const auto& local : batches) {
            std::vector<std::size_t> batch;
            batch.reserve(local.size());
            for (auto pos : local) batch.push_back(train_idx[pos]);
            model.zero_grads();
            double sq = train_detail::run_batch(model, corpus, batch, cfg.seed, step, cfg.workers);
            if (cfg.audit_gradients) {
                for (std::size_t pi = 0; pi < params.size(); ++pi) {
                    if (touched[pi]) continue;
                    for (double g : params[pi]->grad)
                        if (g != 0.0) {
                            touched[pi] = 1;
                            break;
                        }
                }
            }
            double reg = 0.0;
            if (cfg.lambda > 0.0) {
                reg = cfg.lambda * model.l2_penalty();
                model.add_l2_gradients(cfg.lambda);
            }
            double loss = sq + reg;
            if (!std::isfinite(loss)) throw NumericFault("loss", "batch objective is not finite at step " + std::to_string(step));
            epoch_loss += loss;
            for (std::size_t pi = 0; pi < params.size(); ++pi)
                rmsprop_step(params[pi]->value->data(), params[pi]->grad.data(),
                             static_cast<std::size_t>(params[pi]->size()), states[pi], opt);
            ++step;
        }

        EpochStats es;
        es.train_loss = epoch_loss;
        bool evaluated = ((epoch + 1) % cfg.eval_every == 0) || epoch + 1 == cfg.epochs;
        if (evaluated && !val_idx.empty()) {
            es.val_mse = evaluate_mse(model, corpus, val_idx, cfg.workers);
            if (report.best_epoch < 0 || es.val_mse < report.best_val_mse) {
                report.best_val_mse = es.val_mse;
                report.best_epoch = epoch;
                if (cfg.select == TrainConfig::Select::best_val) best_params = model.snapshot();
                stale_evals = 0;
            } else {
                ++stale_evals;
            }
        }
        es.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        report.epochs.push_back(es);
        if (cfg.verbose)
            std::fprintf(stderr, "epoch %ld loss %.4f val %.4f (%.1fs)\n", epoch, es.train_loss, es.val_mse,
                         es.seconds);

        if (initial_loss < 0.0) initial_loss = epoch_loss;
        if (epoch_loss > cfg.divergence_factor * initial_loss)
            ++diverged_streak;
        else
            diverged_streak = 0;
        if (diverged_streak >= cfg.divergence_epochs)
            throw TrainingDiverged("epoch loss " + std::to_string(epoch_loss) + " exceeded " +
                                   std::to_string(cfg.divergence_factor) + "x the initial loss for " +
                                   std::to_string(diverged_streak) + " consecutive epochs");
        if (!val_idx.empty() && stale_evals >= cfg.patience) {
            report.early_stopped = true;
            break;
        }
    }

    if (cfg.audit_gradients) {
        for (std::size_t pi = 0; pi < params.size(); ++pi)
            if (!touched[pi]) report.untouched_params.push_back(params[pi]->name);
    }
    if (cfg.select == TrainConfig::Select::best_val && !best_params.empty()) model.restore(best_params);
    report.steps = step;
    if (!test_idx.empty()) report.test_mse = evaluate_mse(model, corpus, test_idx, cfg.workers);
    return report;
}

}  // namespace carl
