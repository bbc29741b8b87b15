#pragma once
// Shared test helpers: finite-difference gradient oracle, synthetic Amazon
// style corpora, and scratch directories.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "carl/corpus.hpp"
#include "carl/rng.hpp"

namespace ts {

/// Central finite difference of `loss` w.r.t. the value behind `elem`.
inline double finite_diff(const std::function<double()>& loss, double* elem, double eps = 1e-5) {
    double orig = *elem;
    *elem = orig + eps;
    double up = loss();
    *elem = orig - eps;
    double down = loss();
    *elem = orig;
    return (up - down) / (2.0 * eps);
}

/// Relative error with an absolute floor so near-zero pairs compare sanely.
inline double rel_err(double a, double b) {
    double denom = std::max({std::fabs(a), std::fabs(b), 1e-8});
    return std::fabs(a - b) / denom;
}

struct GradCheck {
    double max_rel = 0.0;
    long checked = 0;
    long worst_index = -1;
    double worst_analytic = 0.0, worst_numeric = 0.0;
};

/// Compare analytic gradients (already computed into `grad`) against central
/// finite differences over `values`. `loss` must recompute the full loss from
/// current parameter values. Entries where both sides are < 1e-7 in magnitude
/// are counted but cannot dominate max_rel.
inline GradCheck check_gradients(const std::function<double()>& loss, double* values, const double* grad,
                                 long n, double eps = 1e-5) {
    GradCheck r;
    for (long i = 0; i < n; ++i) {
        double fd = finite_diff(loss, values + i, eps);
        double an = grad[i];
        if (std::fabs(fd) < 1e-7 && std::fabs(an) < 1e-7) {
            ++r.checked;
            continue;
        }
        double e = rel_err(an, fd);
        if (e > r.max_rel) {
            r.max_rel = e;
            r.worst_index = i;
            r.worst_analytic = an;
            r.worst_numeric = fd;
        }
        ++r.checked;
    }
    return r;
}

class TmpDir {
public:
    explicit TmpDir(const std::string& tag = "carl") {
        auto base = std::filesystem::temp_directory_path();
        static std::atomic<unsigned> counter{0};
        path_ = base / (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TmpDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    std::filesystem::path path_;
};

struct SyntheticOptions {
    int users = 8;
    int items = 6;
    int interactions = 40;
    uint64_t seed = 7;
    int words_per_review = 12;
    // When true, item k's reviews draw from an item-specific word pool with no
    // overlap across items (useful for attention pair-dependence probes).
    bool disjoint_item_vocab = false;
    double rating_noise = 0.3;
};

/// Write a synthetic Amazon-style 5-core-ish JSON-lines file. Ratings follow
/// a user-bias + item-bias model so they are learnable; every user and item
/// gets at least one interaction.
inline std::vector<std::string> synthetic_jsonl(const std::string& path, const SyntheticOptions& opt) {
    carl::Rng rng(opt.seed);
    std::vector<std::string> lines;
    std::vector<double> ubias(opt.users), ibias(opt.items);
    for (auto& b : ubias) b = rng.uniform(-1.0, 1.0);
    for (auto& b : ibias) b = rng.uniform(-1.0, 1.0);

    static const char* kShared[] = {"guitar", "cable", "sound", "pedal", "great", "cheap", "solid",
                                    "broken", "battery", "amp", "string", "quality", "love", "noise",
                                    "price", "works", "tuner", "strap", "mic", "stand"};
    const int shared_n = static_cast<int>(sizeof(kShared) / sizeof(kShared[0]));

    // one review per user-item pair, like the 5-core data
    std::set<std::pair<int, int>> used;
    std::vector<std::pair<int, int>> pairs;
    auto add = [&](int u, int i) {
        if (used.emplace(u, i).second) pairs.emplace_back(u, i);
    };
    for (int u = 0; u < opt.users; ++u) add(u, u % opt.items);
    for (int i = 0; i < opt.items; ++i) add(i % opt.users, i);
    long attempts = 0;
    while (static_cast<int>(pairs.size()) < opt.interactions && attempts++ < 100000)
        add(static_cast<int>(rng.index(opt.users)), static_cast<int>(rng.index(opt.items)));
    if (static_cast<int>(pairs.size()) > opt.interactions) pairs.resize(opt.interactions);

    long ts = 1300000000;
    for (auto [u, i] : pairs) {
        double r = 3.0 + ubias[u] + ibias[i] + rng.uniform(-opt.rating_noise, opt.rating_noise);
        r = std::min(5.0, std::max(1.0, std::round(r)));
        std::ostringstream review;
        for (int w = 0; w < opt.words_per_review; ++w) {
            if (w) review << ' ';
            if (opt.disjoint_item_vocab)
                review << "item" << i << "word" << rng.index(8);
            else
                review << kShared[rng.index(shared_n)];
        }
        std::ostringstream line;
        line << "{\"reviewerID\": \"u" << u << "\", \"asin\": \"i" << i << "\", \"overall\": " << r
             << ", \"reviewText\": \"" << review.str() << "\", \"unixReviewTime\": " << ts << "}";
        lines.push_back(line.str());
        ts += 86400;
    }
    if (!path.empty()) {
        std::ofstream out(path);
        for (const auto& l : lines) out << l << '\n';
    }
    return lines;
}

/// Synthetic corpus end to end: jsonl -> ingest -> preprocess.
inline carl::Corpus make_corpus(const SyntheticOptions& opt, carl::PreprocessOptions pre = {}) {
    TmpDir tmp("corpusgen");
    auto path = tmp.file("data.json");
    synthetic_jsonl(path, opt);
    auto ing = carl::ingest(path);
    return carl::preprocess(ing.records, pre);
}

}  // namespace ts
