#pragma once
// Review-corpus pipeline: JSON-lines ingestion, tf-idf vocabulary,
// leakage-safe train/val/test splitting, and fixed-length per-user and
// per-item review documents, plus the on-disk corpus directory format.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "carl/errors.hpp"
#include "carl/rng.hpp"
#include "carl/stopwords.hpp"

namespace carl {

struct RawInteraction {
    std::string user;
    std::string item;
    double rating = 0.0;
    std::string review;
    int64_t timestamp = 0;
};

struct IngestStats {
    std::size_t lines = 0;
    std::size_t parsed = 0;
    std::size_t malformed = 0;
    std::size_t blank = 0;
    std::vector<std::string> malformed_samples;
};

struct IngestResult {
    std::vector<RawInteraction> records;
    IngestStats stats;
};

/// Lowercase and split on non-alphanumerics (ASCII).
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

/// Parse an Amazon-style 5-core JSON-lines file. Records must carry reviewer,
/// item, rating in [1,5], review text, and a timestamp; anything else counts
/// as malformed. More than 1% malformed lines is a hard failure.
inline IngestResult ingest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open input file: " + path);
    IngestResult res;
    std::string line;
    auto note_malformed = [&](const std::string& l) {
        ++res.stats.malformed;
        if (res.stats.malformed_samples.size() < 5)
            res.stats.malformed_samples.push_back(l.size() > 160 ? l.substr(0, 160) + "..." : l);
    };
    while (std::getline(in, line)) {
        ++res.stats.lines;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            ++res.stats.blank;
            continue;
        }
        nlohmann::json j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
        if (j.is_discarded() || !j.is_object()) {
            note_malformed(line);
            continue;
        }
        RawInteraction r;
        if (!j.contains("reviewerID") || !j["reviewerID"].is_string() || !j.contains("asin") ||
            !j["asin"].is_string() || !j.contains("overall") || !j["overall"].is_number() ||
            !j.contains("reviewText") || !j["reviewText"].is_string() || !j.contains("unixReviewTime") ||
            !j["unixReviewTime"].is_number_integer()) {
            note_malformed(line);
            continue;
        }
        r.user = j["reviewerID"].get<std::string>();
        r.item = j["asin"].get<std::string>();
        r.rating = j["overall"].get<double>();
        r.review = j["reviewText"].get<std::string>();
        r.timestamp = j["unixReviewTime"].get<int64_t>();
        if (r.user.empty() || r.item.empty() || r.rating < 1.0 || r.rating > 5.0) {
            note_malformed(line);
            continue;
        }
        ++res.stats.parsed;
        res.records.push_back(std::move(r));
    }
    std::size_t considered = res.stats.parsed + res.stats.malformed;
    if (considered > 0 && res.stats.malformed * 100 > considered) {
        std::ostringstream os;
        os << path << ": " << res.stats.malformed << " of " << considered
           << " lines are malformed (>1%); samples:";
        for (const auto& s : res.stats.malformed_samples) os << "\n  " << s;
        throw DataError(os.str());
    }
    return res;
}

struct VocabularyOptions {
    std::size_t max_size = 20000;
    double df_max = 0.5;
};

struct Vocabulary {
    std::vector<std::string> words;  // rank order
    std::unordered_map<std::string, int32_t> index;
    std::vector<long> df;
    std::vector<double> tfidf;

    int32_t pad_id() const { return static_cast<int32_t>(words.size()); }
    std::size_t size() const { return words.size(); }

    std::optional<int32_t> lookup(const std::string& w) const {
        auto it = index.find(w);
        if (it == index.end()) return std::nullopt;
        return it->second;
    }
};

/// Build the vocabulary: drop stopwords and words with document frequency
/// above df_max (over raw reviews), rank the rest by tf-idf with
/// tf = corpus-wide count and idf = ln(N/df), keep the top max_size words.
/// Ties break lexicographically.
inline Vocabulary build_vocabulary(const std::vector<RawInteraction>& records,
                                   const VocabularyOptions& opt = {}) {
    if (records.empty()) throw DataError("cannot build a vocabulary from an empty corpus");
    struct Counts {
        long tf = 0;
        long df = 0;
    };
    std::unordered_map<std::string, Counts> counts;
    std::unordered_set<std::string> seen;
    for (const auto& r : records) {
        seen.clear();
        for (auto& w : tokenize(r.review)) {
            auto& c = counts[w];
            ++c.tf;
            if (seen.insert(w).second) ++c.df;
        }
    }
    double n_reviews = static_cast<double>(records.size());
    struct Scored {
        const std::string* word;
        double score;
        long df;
    };
    std::vector<Scored> scored;
    scored.reserve(counts.size());
    for (const auto& [w, c] : counts) {
        if (is_stopword(w)) continue;
        // document frequency carries no signal in a single-review corpus
        if (records.size() > 1 && static_cast<double>(c.df) / n_reviews > opt.df_max) continue;
        double idf = std::log(n_reviews / static_cast<double>(c.df));
        scored.push_back({&w, static_cast<double>(c.tf) * idf, c.df});
    }
    if (scored.empty()) throw DataError("vocabulary is empty after stopword/df filtering");
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return *a.word < *b.word;
    });
    if (scored.size() > opt.max_size) scored.resize(opt.max_size);

    Vocabulary v;
    v.words.reserve(scored.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        v.words.push_back(*scored[i].word);
        v.index.emplace(v.words.back(), static_cast<int32_t>(i));
        v.df.push_back(scored[i].df);
        v.tfidf.push_back(scored[i].score);
    }
    return v;
}

enum class Split : uint8_t { train = 0, val = 1, test = 2 };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        default: return "test";
    }
}

inline std::optional<Split> split_from_name(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    return std::nullopt;
}

/// One rating record after filtering and entity indexing.
struct Interaction {
    int32_t user = -1;
    int32_t item = -1;
    double rating = 0.0;
    int64_t timestamp = 0;
    long file_order = 0;
    std::vector<int32_t> tokens;  // in-vocabulary ids; empty once loaded from disk
};

struct SplitOptions {
    double train_frac = 0.8;         // train+val share
    double val_frac_of_train = 0.1;  // validation share carved out of that
};

/// Seeded split with the coverage constraint: every user and item keeps at
/// least one training interaction; validation is carved from train under the
/// same constraint.
inline std::vector<Split> split_interactions(const std::vector<Interaction>& inter, long n_users,
                                             long n_items, uint64_t seed, const SplitOptions& opt = {}) {
    std::size_t n = inter.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(mix_seed(seed, 0x5117));
    rng.shuffle(order);

    std::vector<Split> label(n, Split::test);
    std::vector<uint8_t> cov_u(static_cast<std::size_t>(n_users), 0), cov_i(static_cast<std::size_t>(n_items), 0);
    std::size_t train_target = static_cast<std::size_t>(std::lround(opt.train_frac * static_cast<double>(n)));
    std::size_t train_count = 0;

    for (std::size_t idx : order) {
        const auto& x = inter[idx];
        if (!cov_u[static_cast<std::size_t>(x.user)] || !cov_i[static_cast<std::size_t>(x.item)]) {
            label[idx] = Split::train;
            cov_u[static_cast<std::size_t>(x.user)] = 1;
            cov_i[static_cast<std::size_t>(x.item)] = 1;
            ++train_count;
        }
    }
    for (long u = 0; u < n_users; ++u)
        if (!cov_u[static_cast<std::size_t>(u)])
            throw DataError("split coverage unsatisfiable: user index " + std::to_string(u) + " has no interactions");
    for (long i = 0; i < n_items; ++i)
        if (!cov_i[static_cast<std::size_t>(i)])
            throw DataError("split coverage unsatisfiable: item index " + std::to_string(i) + " has no interactions");

    for (std::size_t idx : order) {
        if (train_count >= train_target) break;
        if (label[idx] != Split::train) {
            label[idx] = Split::train;
            ++train_count;
        }
    }

    // carve validation out of train, keeping >=1 train interaction per entity
    std::vector<long> cnt_u(static_cast<std::size_t>(n_users), 0), cnt_i(static_cast<std::size_t>(n_items), 0);
    for (std::size_t i = 0; i < n; ++i)
        if (label[i] == Split::train) {
            ++cnt_u[static_cast<std::size_t>(inter[i].user)];
            ++cnt_i[static_cast<std::size_t>(inter[i].item)];
        }
    std::size_t val_target = static_cast<std::size_t>(std::lround(opt.val_frac_of_train * static_cast<double>(train_count)));
    std::size_t val_count = 0;
    for (std::size_t idx : order) {
        if (val_count >= val_target) break;
        if (label[idx] != Split::train) continue;
        auto& cu = cnt_u[static_cast<std::size_t>(inter[idx].user)];
        auto& ci = cnt_i[static_cast<std::size_t>(inter[idx].item)];
        if (cu > 1 && ci > 1) {
            label[idx] = Split::val;
            --cu;
            --ci;
            ++val_count;
        }
    }
    return label;
}

struct PreprocessOptions {
    VocabularyOptions vocab;
    long doc_len = 300;
    SplitOptions split;
    uint64_t seed = 0;
};

/// Vocabulary + indexed interactions + split labels + fixed-length documents.
struct Corpus {
    Vocabulary vocab;
    std::vector<std::string> user_ids, item_ids;
    std::unordered_map<std::string, int32_t> user_index, item_index;
    std::vector<Interaction> interactions;
    std::vector<Split> split;
    std::vector<std::vector<int32_t>> user_docs, item_docs;
    std::vector<uint8_t> user_doc_allpad, item_doc_allpad;
    std::vector<long> user_doc_fulllen, item_doc_fulllen;  // pre-truncation token counts
    long doc_len = 300;
    std::size_t empty_reviews_removed = 0;

    long users() const { return static_cast<long>(user_ids.size()); }
    long items() const { return static_cast<long>(item_ids.size()); }

    std::vector<std::size_t> split_indices(Split s) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < interactions.size(); ++i)
            if (split[i] == s) out.push_back(i);
        return out;
    }
};

/// Concatenate each owner's training reviews (ascending timestamp, ties by
/// file order), then truncate/pad to doc_len. Owners whose training text is
/// empty get an all-pad document and are flagged.
inline void build_documents(Corpus& c) {
    int32_t pad = c.vocab.pad_id();
    auto build_side = [&](bool user_side) {
        long count = user_side ? c.users() : c.items();
        auto& docs = user_side ? c.user_docs : c.item_docs;
        auto& flags = user_side ? c.user_doc_allpad : c.item_doc_allpad;
        auto& fulllen = user_side ? c.user_doc_fulllen : c.item_doc_fulllen;
        docs.assign(static_cast<std::size_t>(count), {});
        flags.assign(static_cast<std::size_t>(count), 0);
        fulllen.assign(static_cast<std::size_t>(count), 0);
        std::vector<std::vector<std::size_t>> owned(static_cast<std::size_t>(count));
        for (std::size_t i = 0; i < c.interactions.size(); ++i) {
            if (c.split[i] != Split::train) continue;
            long owner = user_side ? c.interactions[i].user : c.interactions[i].item;
            owned[static_cast<std::size_t>(owner)].push_back(i);
        }
        for (long o = 0; o < count; ++o) {
            auto& idxs = owned[static_cast<std::size_t>(o)];
            std::sort(idxs.begin(), idxs.end(), [&](std::size_t a, std::size_t b) {
                const auto& x = c.interactions[a];
                const auto& y = c.interactions[b];
                if (x.timestamp != y.timestamp) return x.timestamp < y.timestamp;
                return x.file_order < y.file_order;
            });
            auto& doc = docs[static_cast<std::size_t>(o)];
            doc.reserve(static_cast<std::size_t>(c.doc_len));
            long total = 0;
            for (std::size_t i : idxs) {
                total += static_cast<long>(c.interactions[i].tokens.size());
                for (int32_t tok : c.interactions[i].tokens) {
                    if (static_cast<long>(doc.size()) < c.doc_len) doc.push_back(tok);
                }
            }
            fulllen[static_cast<std::size_t>(o)] = total;
            if (doc.empty()) flags[static_cast<std::size_t>(o)] = 1;
            doc.resize(static_cast<std::size_t>(c.doc_len), pad);
        }
    };
    build_side(true);
    build_side(false);
}

/// Full preprocessing pipeline over ingested records: vocabulary, empty-review
/// filtering, entity indexing, seeded coverage split, document construction.
inline Corpus preprocess(const std::vector<RawInteraction>& records, const PreprocessOptions& opt = {}) {
    Corpus c;
    c.doc_len = opt.doc_len;
    if (opt.doc_len < 1) throw ConfigError("doc-len must be >= 1, got " + std::to_string(opt.doc_len));
    c.vocab = build_vocabulary(records, opt.vocab);

    long order = 0;
    for (const auto& r : records) {
        Interaction x;
        for (auto& w : tokenize(r.review)) {
            if (auto id = c.vocab.lookup(w)) x.tokens.push_back(*id);
        }
        ++order;
        if (x.tokens.empty()) {
            ++c.empty_reviews_removed;
            continue;
        }
        auto [uit, unew] = c.user_index.emplace(r.user, static_cast<int32_t>(c.user_ids.size()));
        if (unew) c.user_ids.push_back(r.user);
        auto [iit, inew] = c.item_index.emplace(r.item, static_cast<int32_t>(c.item_ids.size()));
        if (inew) c.item_ids.push_back(r.item);
        x.user = uit->second;
        x.item = iit->second;
        x.rating = r.rating;
        x.timestamp = r.timestamp;
        x.file_order = order - 1;
        c.interactions.push_back(std::move(x));
    }
    if (c.interactions.empty()) throw DataError("no interactions left after empty-review filtering");
    c.split = split_interactions(c.interactions, c.users(), c.items(), opt.seed, opt.split);
    build_documents(c);
    return c;
}

inline nlohmann::json corpus_stats(const Corpus& c, const IngestStats* ingest = nullptr) {
    nlohmann::json j;
    j["users"] = c.users();
    j["items"] = c.items();
    j["ratings"] = c.interactions.size();
    double denom = static_cast<double>(c.users()) * static_cast<double>(c.items());
    j["density"] = denom > 0 ? static_cast<double>(c.interactions.size()) / denom : 0.0;
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    double tokens_total = 0;
    for (std::size_t i = 0; i < c.interactions.size(); ++i) {
        tokens_total += static_cast<double>(c.interactions[i].tokens.size());
        switch (c.split[i]) {
            case Split::train: ++n_train; break;
            case Split::val: ++n_val; break;
            case Split::test: ++n_test; break;
        }
    }
    j["ratings_train"] = n_train;
    j["ratings_val"] = n_val;
    j["ratings_test"] = n_test;
    j["words_per_review"] = c.interactions.empty() ? 0.0 : tokens_total / static_cast<double>(c.interactions.size());
    auto mean_of = [](const std::vector<long>& v) {
        if (v.empty()) return 0.0;
        double s = 0;
        for (long x : v) s += static_cast<double>(x);
        return s / static_cast<double>(v.size());
    };
    j["words_per_user"] = mean_of(c.user_doc_fulllen);
    j["words_per_item"] = mean_of(c.item_doc_fulllen);
    j["vocab_size"] = c.vocab.size();
    j["doc_len"] = c.doc_len;
    j["empty_reviews_removed"] = c.empty_reviews_removed;
    j["all_pad_user_docs"] = std::count(c.user_doc_allpad.begin(), c.user_doc_allpad.end(), uint8_t{1});
    j["all_pad_item_docs"] = std::count(c.item_doc_allpad.begin(), c.item_doc_allpad.end(), uint8_t{1});
    if (ingest) {
        j["input_lines"] = ingest->lines;
        j["malformed_lines"] = ingest->malformed;
        j["blank_lines"] = ingest->blank;
    }
    return j;
}

namespace detail {

inline void put_u32(std::ostream& os, uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    os.write(b, 4);
}

inline uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    if (!is) throw DataError("truncated binary file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

constexpr char kDocMagic[8] = {'C', 'A', 'R', 'L', 'D', 'O', 'C', '1'};

inline void save_docs(const std::string& path, const std::vector<std::string>& ids,
                      const std::vector<std::vector<int32_t>>& docs, long doc_len) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os.write(kDocMagic, 8);
    put_u32(os, static_cast<uint32_t>(ids.size()));
    put_u32(os, static_cast<uint32_t>(doc_len));
    for (const auto& id : ids) {
        put_u32(os, static_cast<uint32_t>(id.size()));
        os.write(id.data(), static_cast<std::streamsize>(id.size()));
    }
    for (const auto& d : docs)
        for (int32_t tok : d) put_u32(os, static_cast<uint32_t>(tok));
    if (!os) throw DataError("short write to " + path);
}

inline void load_docs(const std::string& path, std::vector<std::string>& ids,
                      std::vector<std::vector<int32_t>>& docs, long& doc_len, int32_t pad_id) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    char magic[8];
    is.read(magic, 8);
    if (!is || !std::equal(magic, magic + 8, kDocMagic)) throw DataError(path + ": bad document file magic");
    uint32_t count = get_u32(is);
    doc_len = static_cast<long>(get_u32(is));
    ids.resize(count);
    for (auto& id : ids) {
        uint32_t len = get_u32(is);
        id.resize(len);
        is.read(id.data(), len);
        if (!is) throw DataError(path + ": truncated id table");
    }
    docs.assign(count, {});
    for (auto& d : docs) {
        d.resize(static_cast<std::size_t>(doc_len));
        for (auto& tok : d) {
            tok = static_cast<int32_t>(get_u32(is));
            if (tok < 0 || tok > pad_id)
                throw DataError(path + ": token id " + std::to_string(tok) + " exceeds vocabulary+pad bound " +
                                std::to_string(pad_id));
        }
    }
}

inline std::string format_rating(double r) {
    std::ostringstream os;
    os << r;
    return os.str();
}

}  // namespace detail

/// Write the preprocessed-corpus directory: vocab.txt (rank order), binary
/// user/item documents, splits.csv, stats.json.
inline void save_corpus(const Corpus& c, const std::string& dir, const nlohmann::json& stats) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream os(fs::path(dir) / "vocab.txt");
        if (!os) throw DataError("cannot write vocab.txt under " + dir);
        for (const auto& w : c.vocab.words) os << w << '\n';
    }
    detail::save_docs((fs::path(dir) / "user_docs.bin").string(), c.user_ids, c.user_docs, c.doc_len);
    detail::save_docs((fs::path(dir) / "item_docs.bin").string(), c.item_ids, c.item_docs, c.doc_len);
    {
        std::ofstream os(fs::path(dir) / "splits.csv");
        if (!os) throw DataError("cannot write splits.csv under " + dir);
        os << "user_id,item_id,rating,split\n";
        for (std::size_t i = 0; i < c.interactions.size(); ++i) {
            const auto& x = c.interactions[i];
            const auto& uid = c.user_ids[static_cast<std::size_t>(x.user)];
            const auto& iid = c.item_ids[static_cast<std::size_t>(x.item)];
            if (uid.find(',') != std::string::npos || iid.find(',') != std::string::npos)
                throw DataError("entity id contains a comma, cannot write CSV: " + uid + "/" + iid);
            os << uid << ',' << iid << ',' << detail::format_rating(x.rating) << ','
               << split_name(c.split[i]) << '\n';
        }
    }
    {
        std::ofstream os(fs::path(dir) / "stats.json");
        os << stats.dump(2) << '\n';
    }
}

/// Load a corpus directory back. Interaction token lists are not stored on
/// disk (documents already encode all training text), so they come back empty.
inline Corpus load_corpus(const std::string& dir) {
    namespace fs = std::filesystem;
    Corpus c;
    {
        std::ifstream is(fs::path(dir) / "vocab.txt");
        if (!is) throw DataError("cannot open vocab.txt under " + dir);
        std::string w;
        while (std::getline(is, w)) {
            if (w.empty()) continue;
            c.vocab.index.emplace(w, static_cast<int32_t>(c.vocab.words.size()));
            c.vocab.words.push_back(w);
        }
    }
    long dl_user = 0, dl_item = 0;
    detail::load_docs((fs::path(dir) / "user_docs.bin").string(), c.user_ids, c.user_docs, dl_user, c.vocab.pad_id());
    detail::load_docs((fs::path(dir) / "item_docs.bin").string(), c.item_ids, c.item_docs, dl_item, c.vocab.pad_id());
    if (dl_user != dl_item) throw DataError(dir + ": user/item document lengths disagree");
    c.doc_len = dl_user;
    for (std::size_t i = 0; i < c.user_ids.size(); ++i) c.user_index.emplace(c.user_ids[i], static_cast<int32_t>(i));
    for (std::size_t i = 0; i < c.item_ids.size(); ++i) c.item_index.emplace(c.item_ids[i], static_cast<int32_t>(i));
    int32_t pad = c.vocab.pad_id();
    auto flag_allpad = [&](const std::vector<std::vector<int32_t>>& docs, std::vector<uint8_t>& flags) {
        flags.assign(docs.size(), 0);
        for (std::size_t i = 0; i < docs.size(); ++i)
            flags[i] = std::all_of(docs[i].begin(), docs[i].end(), [&](int32_t t) { return t == pad; }) ? 1 : 0;
    };
    flag_allpad(c.user_docs, c.user_doc_allpad);
    flag_allpad(c.item_docs, c.item_doc_allpad);

    std::ifstream is(fs::path(dir) / "splits.csv");
    if (!is) throw DataError("cannot open splits.csv under " + dir);
    std::string line;
    std::getline(is, line);  // header
    long order = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string uid, iid, rating, split;
        if (!std::getline(ss, uid, ',') || !std::getline(ss, iid, ',') || !std::getline(ss, rating, ',') ||
            !std::getline(ss, split))
            throw DataError(dir + "/splits.csv: bad row: " + line);
        Interaction x;
        auto uit = c.user_index.find(uid);
        auto iit = c.item_index.find(iid);
        if (uit == c.user_index.end() || iit == c.item_index.end())
            throw DataError(dir + "/splits.csv: unknown entity in row: " + line);
        x.user = uit->second;
        x.item = iit->second;
        x.rating = std::stod(rating);
        x.file_order = order++;
        auto s = split_from_name(split);
        if (!s) throw DataError(dir + "/splits.csv: unknown split label: " + split);
        c.interactions.push_back(std::move(x));
        c.split.push_back(*s);
    }
    if (c.interactions.empty()) throw DataError(dir + "/splits.csv holds no interactions");
    return c;
}

}  // namespace carl
