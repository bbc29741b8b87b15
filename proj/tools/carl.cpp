// carl command-line tool: preprocess / train / eval / grid / explain.
//
// Exit codes: 0 ok, 1 usage or configuration, 2 data error, 3 numeric fault.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

#include "carl/artifacts.hpp"
#include "carl/checkpoint.hpp"
#include "carl/corpus.hpp"
#include "carl/embeddings.hpp"
#include "carl/eval.hpp"
#include "carl/explain.hpp"
#include "carl/model.hpp"
#include "carl/trainer.hpp"

namespace fs = std::filesystem;

namespace {

struct HyperOpts {
    std::string variant = "CARL";
    long latent = 15;
    long filters = 50;
    long window = 3;
    long embed_dim = 300;
    long fm_factors = 50;
    double dropout = 0.2;
    double lr = 0.001;
    double lambda = 0.01;
    long batch_size = 100;
    long epochs = 60;
    long patience = 10;
    long eval_every = 1;
    uint64_t seed = 1;
    int workers = 0;
    std::string select = "best-val";
    bool reg_embeddings = false;
    bool clamp = false;
    bool verbose = false;
    std::string embeddings;  // optional word2vec-style text file
};

void add_hyper_flags(CLI::App* cmd, HyperOpts& h, bool with_variant = true) {
    if (with_variant)
        cmd->add_option("--variant", h.variant, "model variant (CARL, CARL+LR, Review, Rating, Review-int, "
                                                "Rating-int, Review-att, Review-max, Review-avg, static-<alpha>)");
    cmd->add_option("--latent", h.latent, "latent dimension l (single-component variants use 2l)");
    cmd->add_option("--filters", h.filters, "convolution filter count");
    cmd->add_option("--window", h.window, "convolution window size");
    cmd->add_option("--embed-dim", h.embed_dim, "word embedding dimension");
    cmd->add_option("--fm-factors", h.fm_factors, "FM pairwise factor dimension");
    cmd->add_option("--dropout", h.dropout, "dropout rate on the MLP output");
    cmd->add_option("--lr", h.lr, "RMSprop learning rate");
    cmd->add_option("--lambda", h.lambda, "L2 regularization weight");
    cmd->add_option("--batch-size", h.batch_size, "mini-batch size");
    cmd->add_option("--epochs", h.epochs, "maximum training epochs");
    cmd->add_option("--patience", h.patience, "validation passes without improvement before stopping");
    cmd->add_option("--eval-every", h.eval_every, "epochs between validation passes");
    cmd->add_option("--seed", h.seed, "RNG seed");
    cmd->add_option("--workers", h.workers, "worker threads (0 = $CARL_WORKERS or hardware)");
    cmd->add_option("--select", h.select, "checkpoint selection: best-val or final")
        ->check(CLI::IsMember({"best-val", "final"}));
    cmd->add_flag("--reg-embeddings", h.reg_embeddings, "include word embeddings in the L2 term");
    cmd->add_option("--embeddings", h.embeddings, "word2vec-style text file of pretrained word vectors");
    cmd->add_flag("--clamp", h.clamp, "clamp predictions into [1,5] at evaluation");
    cmd->add_flag("--verbose", h.verbose, "per-epoch progress on stderr");
}

nlohmann::json hyper_json(const HyperOpts& h, const std::string& corpus_dir) {
    nlohmann::json j;
    j["variant"] = h.variant;
    j["corpus"] = corpus_dir;
    j["latent"] = h.latent;
    j["filters"] = h.filters;
    j["window"] = h.window;
    j["embed_dim"] = h.embed_dim;
    j["fm_factors"] = h.fm_factors;
    j["dropout"] = h.dropout;
    j["lr"] = h.lr;
    j["lambda"] = h.lambda;
    j["batch_size"] = h.batch_size;
    j["epochs"] = h.epochs;
    j["patience"] = h.patience;
    j["eval_every"] = h.eval_every;
    j["seed"] = h.seed;
    j["workers"] = h.workers;
    j["select"] = h.select;
    j["reg_embeddings"] = h.reg_embeddings;
    j["clamp"] = h.clamp;
    j["embeddings"] = h.embeddings;
    return j;
}

HyperOpts hyper_from_json(const nlohmann::json& j) {
    HyperOpts h;
    auto get = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
    };
    get("variant", h.variant);
    get("latent", h.latent);
    get("filters", h.filters);
    get("window", h.window);
    get("embed_dim", h.embed_dim);
    get("fm_factors", h.fm_factors);
    get("dropout", h.dropout);
    get("lr", h.lr);
    get("lambda", h.lambda);
    get("batch_size", h.batch_size);
    get("epochs", h.epochs);
    get("patience", h.patience);
    get("eval_every", h.eval_every);
    get("seed", h.seed);
    get("workers", h.workers);
    get("select", h.select);
    get("reg_embeddings", h.reg_embeddings);
    get("clamp", h.clamp);
    get("embeddings", h.embeddings);
    return h;
}

carl::BaseDims dims_of(const HyperOpts& h) {
    carl::BaseDims d;
    d.latent = h.latent;
    d.filters = h.filters;
    d.window = h.window;
    d.embed_dim = h.embed_dim;
    d.fm_factors = h.fm_factors;
    d.dropout = h.dropout;
    d.regularize_embeddings = h.reg_embeddings;
    d.clamp_predictions = h.clamp;
    return d;
}

carl::TrainConfig train_config_of(const HyperOpts& h) {
    carl::TrainConfig tc;
    tc.batch_size = h.batch_size;
    tc.lr = h.lr;
    tc.lambda = h.lambda;
    tc.epochs = h.epochs;
    tc.seed = h.seed;
    tc.eval_every = h.eval_every;
    tc.patience = h.patience;
    tc.workers = h.workers;
    tc.select = h.select == "final" ? carl::TrainConfig::Select::final_epoch : carl::TrainConfig::Select::best_val;
    tc.verbose = h.verbose;
    return tc;
}

std::vector<std::pair<std::string, std::string>> corpus_input_files(const std::string& dir) {
    std::vector<std::pair<std::string, std::string>> files;
    for (const char* name : {"vocab.txt", "user_docs.bin", "item_docs.bin", "splits.csv"})
        files.emplace_back(name, (fs::path(dir) / name).string());
    return files;
}

// ---------------------------------------------------------------- preprocess

struct PreprocessOpts {
    std::string input, out;
    uint64_t seed = 0;
    long vocab_size = 20000;
    long doc_len = 300;
    double df_max = 0.5;
    double train_frac = 0.8;
    double val_frac = 0.1;
};

int cmd_preprocess(const PreprocessOpts& o) {
    if (o.df_max <= 0.0 || o.df_max > 1.0) throw carl::ConfigError("--df-max must be in (0,1]");
    if (o.vocab_size < 1) throw carl::ConfigError("--vocab-size must be >= 1");
    auto t0 = std::chrono::steady_clock::now();
    auto ing = carl::ingest(o.input);
    if (ing.records.empty())
        std::fprintf(stderr, "warning: %s contains no usable records\n", o.input.c_str());
    carl::PreprocessOptions po;
    po.vocab.max_size = static_cast<std::size_t>(o.vocab_size);
    po.vocab.df_max = o.df_max;
    po.doc_len = o.doc_len;
    po.seed = o.seed;
    po.split.train_frac = o.train_frac;
    po.split.val_frac_of_train = o.val_frac;
    auto corpus = carl::preprocess(ing.records, po);
    auto stats = carl::corpus_stats(corpus, &ing.stats);
    stats["seed"] = o.seed;
    carl::save_corpus(corpus, o.out, stats);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    nlohmann::json cfg;
    cfg["input"] = o.input;
    cfg["out"] = o.out;
    cfg["seed"] = o.seed;
    cfg["vocab_size"] = o.vocab_size;
    cfg["doc_len"] = o.doc_len;
    cfg["df_max"] = o.df_max;
    cfg["train_frac"] = o.train_frac;
    cfg["val_frac"] = o.val_frac;
    nlohmann::json timings;
    timings["total_seconds"] = secs;
    carl::write_manifest(o.out, carl::make_manifest("preprocess", cfg, {{"input", o.input}}, timings));

    std::cout << stats.dump(2) << std::endl;
    return 0;
}

// --------------------------------------------------------------------- train

struct TrainOpts {
    std::string corpus, out, replay;
    HyperOpts hyper;
};

int cmd_train(TrainOpts o, const CLI::App* cmd) {
    if (!o.replay.empty()) {
        auto manifest = carl::load_manifest(fs::path(o.replay).has_filename() && fs::is_regular_file(o.replay)
                                                ? fs::path(o.replay).parent_path().string()
                                                : o.replay);
        o.hyper = hyper_from_json(manifest["config"]);
        if (o.corpus.empty() && manifest["config"].contains("corpus"))
            o.corpus = manifest["config"]["corpus"].get<std::string>();
    }
    (void)cmd;
    if (o.corpus.empty()) throw carl::ConfigError("--corpus is required (or must appear in the replayed manifest)");
    if (o.out.empty()) throw carl::ConfigError("--out is required");

    auto corpus = carl::load_corpus(o.corpus);
    auto mcfg = carl::variant_config(o.hyper.variant, corpus, dims_of(o.hyper));
    carl::CarlModel model(mcfg);
    auto tc = train_config_of(o.hyper);
    if (!o.hyper.embeddings.empty()) {
        tc.post_init = [&](carl::CarlModel& m) {
            auto n = carl::load_word_embeddings(m, corpus.vocab, o.hyper.embeddings);
            std::fprintf(stderr, "loaded %zu pretrained word vectors\n", n);
        };
    }
    auto report = carl::train(model, corpus, tc);

    fs::create_directories(o.out);
    carl::save_checkpoint((fs::path(o.out) / "checkpoint.bin").string(), model.to_checkpoint(tc.seed, report.steps));
    carl::write_text_file((fs::path(o.out) / "report.json").string(), carl::report_json(report).dump(2) + "\n");
    carl::write_text_file((fs::path(o.out) / "curve.csv").string(), carl::curve_csv(report));
    carl::write_manifest(o.out, carl::make_manifest("train", hyper_json(o.hyper, o.corpus),
                                                    corpus_input_files(o.corpus), carl::timings_json(report)));

    std::cout << "variant " << o.hyper.variant << "  epochs " << report.epochs.size() << "  best-val "
              << carl::format_double(report.best_val_mse) << " (epoch " << report.best_epoch << ")  test-mse "
              << carl::format_double(report.test_mse) << std::endl;
    return 0;
}

// ---------------------------------------------------------------------- eval

struct EvalOpts {
    std::string run, corpus, split = "test", out;
    int workers = 0;
};

carl::CarlModel model_from_run(const std::string& run_dir, const carl::Corpus& corpus, HyperOpts& hyper_out) {
    auto ckpt_path = (fs::path(run_dir) / "checkpoint.bin").string();
    if (!fs::exists(ckpt_path)) throw carl::DataError("checkpoint not found: " + ckpt_path);
    auto manifest = carl::load_manifest(run_dir);
    hyper_out = hyper_from_json(manifest["config"]);
    auto mcfg = carl::variant_config(hyper_out.variant, corpus, dims_of(hyper_out));
    carl::CarlModel model(mcfg);
    model.load(carl::load_checkpoint(ckpt_path));
    return model;
}

int cmd_eval(const EvalOpts& o) {
    auto split = carl::split_from_name(o.split);
    if (!split) throw carl::ConfigError("--split must be train, val or test; got '" + o.split + "'");
    auto corpus = carl::load_corpus(o.corpus);
    HyperOpts hyper;
    auto model = model_from_run(o.run, corpus, hyper);
    auto t0 = std::chrono::steady_clock::now();
    double value = carl::mse(model, corpus, *split, o.workers);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    carl::EvalResult row;
    row.dataset = o.corpus;
    row.variant = hyper.variant;
    row.seeds = {hyper.seed};
    row.mse_per_seed = {value};
    row.finalize();

    std::string out_dir = o.out.empty() ? o.run : o.out;
    fs::create_directories(out_dir);
    nlohmann::json j;
    j["split"] = o.split;
    j["mse"] = value;
    j["variant"] = hyper.variant;
    j["seed"] = hyper.seed;
    j["pairs"] = corpus.split_indices(*split).size();
    j["clamped"] = hyper.clamp;
    carl::write_text_file((fs::path(out_dir) / ("eval_" + o.split + ".json")).string(), j.dump(2) + "\n");
    carl::write_text_file((fs::path(out_dir) / ("eval_" + o.split + ".csv")).string(), carl::eval_table_csv({row}));
    nlohmann::json timings;
    timings["total_seconds"] = secs;
    nlohmann::json cfg = hyper_json(hyper, o.corpus);
    cfg["split"] = o.split;
    cfg["run"] = o.run;
    carl::write_manifest(out_dir, carl::make_manifest("eval", cfg, corpus_input_files(o.corpus), timings));

    std::cout << o.split << " mse " << carl::format_double(value) << std::endl;
    return 0;
}

// ---------------------------------------------------------------------- grid

struct GridOpts {
    std::string corpus, out;
    std::vector<std::string> variants;
    std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
    std::string reference = "CARL";
    HyperOpts hyper;
};

int cmd_grid(const GridOpts& o) {
    if (o.variants.empty()) throw carl::ConfigError("--variants must name at least one variant");
    auto corpus = carl::load_corpus(o.corpus);
    auto dims = dims_of(o.hyper);
    auto tc = train_config_of(o.hyper);
    auto t0 = std::chrono::steady_clock::now();

    std::vector<std::string> order = o.variants;
    // run the reference first so other rows can attach t-tests
    std::optional<carl::EvalResult> reference;
    auto ref_it = std::find(order.begin(), order.end(), o.reference);
    if (ref_it != order.end()) std::rotate(order.begin(), ref_it, ref_it + 1);

    std::vector<carl::EvalResult> rows;
    for (const auto& variant : order) {
        if (reference && variant != o.reference) {
            rows.push_back(carl::run_variant(variant, corpus, dims, tc, o.seeds, o.corpus,
                                             &reference->mse_per_seed, o.reference));
        } else {
            rows.push_back(carl::run_variant(variant, corpus, dims, tc, o.seeds, o.corpus));
            if (variant == o.reference) reference = rows.back();
        }
        std::fprintf(stderr, "done %-12s median mse %.4f\n", rows.back().variant.c_str(), rows.back().mse_median);
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(o.out);
    carl::write_text_file((fs::path(o.out) / "table.csv").string(), carl::eval_table_csv(rows));
    carl::write_text_file((fs::path(o.out) / "table.md").string(), carl::eval_table_markdown(rows));
    nlohmann::json all = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json j;
        j["variant"] = r.variant;
        j["mse_per_seed"] = r.mse_per_seed;
        j["mse_min"] = r.mse_min;
        j["mse_median"] = r.mse_median;
        j["mse_mean"] = r.mse_mean;
        if (std::isfinite(r.p_value)) {
            j["p_value"] = r.p_value;
            j["t_stat"] = r.t_stat;
            j["reference"] = r.reference;
        }
        all.push_back(j);
    }
    carl::write_text_file((fs::path(o.out) / "grid.json").string(), all.dump(2) + "\n");
    nlohmann::json cfg = hyper_json(o.hyper, o.corpus);
    cfg["variants"] = o.variants;
    cfg["seeds"] = o.seeds;
    cfg["reference"] = o.reference;
    nlohmann::json timings;
    timings["total_seconds"] = secs;
    carl::write_manifest(o.out, carl::make_manifest("grid", cfg, corpus_input_files(o.corpus), timings));

    std::cout << carl::eval_table_markdown(rows);
    return 0;
}

// ------------------------------------------------------------------- explain

struct ExplainOpts {
    std::string run, corpus, user, item, out;
};

int cmd_explain(const ExplainOpts& o) {
    auto corpus = carl::load_corpus(o.corpus);
    HyperOpts hyper;
    auto model = model_from_run(o.run, corpus, hyper);
    auto rep = carl::explain_pair(model, corpus, o.user, o.item);

    std::string out_dir = o.out.empty() ? o.run : o.out;
    fs::create_directories(out_dir);
    auto stem = "heatmap_" + o.user + "_" + o.item;
    carl::write_text_file((fs::path(out_dir) / (stem + ".json")).string(), carl::heatmap_json(rep).dump(2) + "\n");
    carl::write_text_file((fs::path(out_dir) / (stem + ".html")).string(), carl::render_html(rep));
    auto ansi = carl::render_ansi(rep);
    carl::write_text_file((fs::path(out_dir) / (stem + ".txt")).string(), ansi);
    std::cout << ansi;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carl: context-aware review+interaction rating prediction"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read options from a TOML config file");
    app.allow_config_extras(CLI::config_extras_mode::error);

    PreprocessOpts pre;
    auto* cp = app.add_subcommand("preprocess", "build a corpus directory from an Amazon 5-core JSON-lines file");
    cp->add_option("--input", pre.input, "JSON-lines review file")->required();
    cp->add_option("--out", pre.out, "output corpus directory")->required();
    cp->add_option("--seed", pre.seed, "split RNG seed");
    cp->add_option("--vocab-size", pre.vocab_size, "vocabulary cap");
    cp->add_option("--doc-len", pre.doc_len, "document length in tokens");
    cp->add_option("--df-max", pre.df_max, "drop words with document frequency above this");
    cp->add_option("--train-frac", pre.train_frac, "train(+val) share of interactions");
    cp->add_option("--val-frac", pre.val_frac, "validation share carved out of train");

    TrainOpts tr;
    auto* ct = app.add_subcommand("train", "train a variant on a corpus directory");
    ct->add_option("--corpus", tr.corpus, "corpus directory from `carl preprocess`");
    ct->add_option("--out", tr.out, "run directory for checkpoint/report/manifest");
    ct->add_option("--replay", tr.replay, "manifest.json (or its run directory) to reproduce");
    add_hyper_flags(ct, tr.hyper);

    EvalOpts ev;
    auto* ce = app.add_subcommand("eval", "evaluate a trained run on one split");
    ce->add_option("--run", ev.run, "run directory holding checkpoint.bin + manifest.json")->required();
    ce->add_option("--corpus", ev.corpus, "corpus directory")->required();
    ce->add_option("--split", ev.split, "train, val or test");
    ce->add_option("--out", ev.out, "output directory (default: the run directory)");
    ce->add_option("--workers", ev.workers, "worker threads");

    GridOpts gr;
    auto* cg = app.add_subcommand("grid", "train and evaluate a variant sweep across seeds");
    cg->add_option("--corpus", gr.corpus, "corpus directory")->required();
    cg->add_option("--out", gr.out, "output directory for tables")->required();
    cg->add_option("--variants", gr.variants, "comma-separated variant names")->required()->delimiter(',');
    cg->add_option("--seeds", gr.seeds, "comma-separated seeds")->delimiter(',');
    cg->add_option("--reference", gr.reference, "variant used as the t-test reference");
    add_hyper_flags(cg, gr.hyper, /*with_variant=*/false);

    ExplainOpts ex;
    auto* cx = app.add_subcommand("explain", "render attention heat maps for one user-item pair");
    cx->add_option("--run", ex.run, "run directory holding checkpoint.bin + manifest.json")->required();
    cx->add_option("--corpus", ex.corpus, "corpus directory")->required();
    cx->add_option("--user", ex.user, "user id")->required();
    cx->add_option("--item", ex.item, "item id")->required();
    cx->add_option("--out", ex.out, "output directory (default: the run directory)");

    try {
        app.parse(argc, argv);
        if (cp->parsed()) return cmd_preprocess(pre);
        if (ct->parsed()) return cmd_train(tr, ct);
        if (ce->parsed()) return cmd_eval(ev);
        if (cg->parsed()) return cmd_grid(gr);
        if (cx->parsed()) return cmd_explain(ex);
        return 1;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const carl::ConfigError& e) {
        std::cerr << "carl: " << e.what() << std::endl;
        return 1;
    } catch (const carl::NumericFault& e) {
        std::cerr << "carl: " << e.what() << std::endl;
        return 3;
    } catch (const carl::TrainingDiverged& e) {
        std::cerr << "carl: " << e.what() << std::endl;
        return 3;
    } catch (const carl::Error& e) {
        // DataError, ColdStartError, ShapeError on bad inputs
        std::cerr << "carl: " << e.what() << std::endl;
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "carl: unexpected error: " << e.what() << std::endl;
        return 1;
    }
}
