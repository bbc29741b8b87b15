#pragma once
// Attention-based explanation: map the co-attention weights of one user-item
// pair back onto document tokens and render heat maps as JSON, ANSI text and
// a self-contained HTML page. Raw weights are kept bit-for-bit; the non-pad
// renormalization is separate and flagged.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carl/corpus.hpp"
#include "carl/model.hpp"

namespace carl {

struct TokenWeight {
    std::string token;
    double weight = 0.0;         // raw attention weight for this position
    double weight_renorm = 0.0;  // renormalized over non-pad tokens
    int band = 0;                // 0..4 percentile intensity bucket
    bool pad = false;
};

struct HeatmapReport {
    std::string user_id, item_id;
    bool has_true_rating = false;
    double true_rating = std::numeric_limits<double>::quiet_NaN();
    double predicted = 0.0;
    double alpha = 1.0;
    std::vector<TokenWeight> user_tokens, item_tokens;
    bool renormalized = true;  // weight_renorm sums to 1 over non-pad tokens
    std::string warning;
};

namespace explain_detail {

/// Percentile bands over the non-pad renormalized weights: 5 buckets at the
/// 20/40/60/80th percentiles; a flat distribution collapses to band 0.
inline void assign_bands(std::vector<TokenWeight>& tokens) {
    std::vector<double> w;
    for (const auto& t : tokens)
        if (!t.pad) w.push_back(t.weight_renorm);
    if (w.empty()) return;
    auto [mn, mx] = std::minmax_element(w.begin(), w.end());
    if (*mx - *mn < 1e-12) return;  // uniform: single intensity
    std::sort(w.begin(), w.end());
    auto pct = [&](double q) { return w[static_cast<std::size_t>(q * (w.size() - 1))]; };
    double q20 = pct(0.2), q40 = pct(0.4), q60 = pct(0.6), q80 = pct(0.8);
    for (auto& t : tokens) {
        if (t.pad) continue;
        double v = t.weight_renorm;
        t.band = v <= q20 ? 0 : v <= q40 ? 1 : v <= q60 ? 2 : v <= q80 ? 3 : 4;
    }
}

inline std::vector<TokenWeight> annotate(const std::vector<int32_t>& doc, const std::vector<double>& weights,
                                         const Vocabulary& vocab) {
    std::vector<TokenWeight> out(doc.size());
    double live = 0.0;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        out[i].weight = i < weights.size() ? weights[i] : 0.0;
        out[i].pad = doc[i] == vocab.pad_id();
        out[i].token = out[i].pad ? "<pad>" : vocab.words[static_cast<std::size_t>(doc[i])];
        if (!out[i].pad) live += out[i].weight;
    }
    if (live > 0.0)
        for (auto& t : out)
            if (!t.pad) t.weight_renorm = t.weight / live;
    assign_bands(out);
    return out;
}

inline std::string escape_html(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace explain_detail

/// Run the review tower with trace retention for one known pair and build the
/// heat-map report. Unknown ids raise ColdStartError.
inline HeatmapReport explain_pair(const CarlModel& model, const Corpus& corpus, const std::string& user_id,
                                  const std::string& item_id) {
    if (!model.config().use_review)
        throw ConfigError("explain requires a model with the review component");
    auto uit = corpus.user_index.find(user_id);
    if (uit == corpus.user_index.end()) throw ColdStartError("unknown user id '" + user_id + "'");
    auto iit = corpus.item_index.find(item_id);
    if (iit == corpus.item_index.end()) throw ColdStartError("unknown item id '" + item_id + "'");

    PairExample ex;
    ex.user = uit->second;
    ex.item = iit->second;
    ex.user_doc = &corpus.user_docs[static_cast<std::size_t>(ex.user)];
    ex.item_doc = &corpus.item_docs[static_cast<std::size_t>(ex.item)];

    HeatmapReport rep;
    rep.user_id = user_id;
    rep.item_id = item_id;
    for (std::size_t i = 0; i < corpus.interactions.size(); ++i) {
        const auto& x = corpus.interactions[i];
        if (x.user == ex.user && x.item == ex.item) {
            rep.has_true_rating = true;
            rep.true_rating = x.rating;
            break;
        }
    }

    AttentionTrace trace;
    ForwardCtx ctx;
    auto pred = model.forward(ctx, ex, /*training=*/false, 0, &trace);
    rep.predicted = pred.yhat.scalar_value();
    if (model.config().clamp_predictions) rep.predicted = std::min(5.0, std::max(1.0, rep.predicted));
    rep.alpha = pred.alpha;
    rep.user_tokens = explain_detail::annotate(*ex.user_doc, trace.a_user, corpus.vocab);
    rep.item_tokens = explain_detail::annotate(*ex.item_doc, trace.a_item, corpus.vocab);
    if (corpus.user_doc_allpad[static_cast<std::size_t>(ex.user)])
        rep.warning = "user document is all padding (no training text)";
    else if (corpus.item_doc_allpad[static_cast<std::size_t>(ex.item)])
        rep.warning = "item document is all padding (no training text)";
    return rep;
}

inline nlohmann::json heatmap_json(const HeatmapReport& r) {
    nlohmann::json j;
    j["user_id"] = r.user_id;
    j["item_id"] = r.item_id;
    j["predicted"] = r.predicted;
    j["alpha"] = r.alpha;
    if (r.has_true_rating) j["true_rating"] = r.true_rating;
    j["renormalized_over_non_pad"] = r.renormalized;
    if (!r.warning.empty()) j["warning"] = r.warning;
    auto dump = [](const std::vector<TokenWeight>& ts) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& t : ts)
            arr.push_back({{"token", t.token},
                           {"weight", t.weight},
                           {"weight_renorm", t.weight_renorm},
                           {"band", t.band},
                           {"pad", t.pad}});
        return arr;
    };
    j["user_tokens"] = dump(r.user_tokens);
    j["item_tokens"] = dump(r.item_tokens);
    return j;
}

inline std::string render_ansi(const HeatmapReport& r) {
    // background ramp, light to strong (256-color)
    static const int kColors[5] = {0, 224, 217, 210, 196};
    std::ostringstream os;
    os << "pair (" << r.user_id << ", " << r.item_id << ")  predicted " << r.predicted;
    if (r.has_true_rating) os << "  true " << r.true_rating;
    os << "  alpha " << r.alpha << '\n';
    if (!r.warning.empty()) os << "warning: " << r.warning << '\n';
    os << "(weights renormalized over non-pad tokens)\n";
    auto emit = [&](const char* title, const std::vector<TokenWeight>& ts) {
        os << title << ":\n  ";
        bool any = false;
        for (const auto& t : ts) {
            if (t.pad) continue;
            any = true;
            if (t.band > 0)
                os << "\x1b[48;5;" << kColors[t.band] << "m" << (t.band >= 3 ? "\x1b[30m" : "") << t.token
                   << "\x1b[0m ";
            else
                os << t.token << ' ';
        }
        if (!any) os << "(empty document)";
        os << '\n';
    };
    emit("user document", r.user_tokens);
    emit("item document", r.item_tokens);
    return os.str();
}

inline std::string render_html(const HeatmapReport& r) {
    using explain_detail::escape_html;
    std::ostringstream os;
    os << "<!doctype html><html><head><meta charset=\"utf-8\"><title>attention heat map</title></head>\n";
    os << "<body style=\"font-family:sans-serif;max-width:60em;margin:2em auto\">\n";
    os << "<h2>pair (" << escape_html(r.user_id) << ", " << escape_html(r.item_id) << ")</h2>\n";
    os << "<p>predicted rating: <b>" << r.predicted << "</b>";
    if (r.has_true_rating) os << " &middot; true rating: <b>" << r.true_rating << "</b>";
    os << " &middot; alpha: " << r.alpha << "</p>\n";
    if (!r.warning.empty()) os << "<p style=\"color:#b00\">warning: " << escape_html(r.warning) << "</p>\n";
    os << "<p style=\"color:#666\">weights renormalized over non-pad tokens; background depth marks the "
          "percentile band</p>\n";
    static const char* kBg[5] = {"transparent", "rgba(255,80,80,0.15)", "rgba(255,80,80,0.35)",
                                 "rgba(255,80,80,0.55)", "rgba(255,80,80,0.8)"};
    auto emit = [&](const char* title, const std::vector<TokenWeight>& ts) {
        os << "<h3>" << title << "</h3><p style=\"line-height:1.8\">";
        bool any = false;
        for (const auto& t : ts) {
            if (t.pad) continue;
            any = true;
            os << "<span style=\"background:" << kBg[t.band] << ";padding:1px 2px\" title=\"" << t.weight_renorm
               << "\">" << escape_html(t.token) << "</span> ";
        }
        if (!any) os << "<i>(empty document)</i>";
        os << "</p>\n";
    };
    emit("user document", r.user_tokens);
    emit("item document", r.item_tokens);
    os << "</body></html>\n";
    return os.str();
}

}  // namespace carl
