#pragma once
// Run artifacts: report.json / curve.csv (deterministic fields only) and
// manifest.json (config snapshot, git-style input hashes, wall-clock timings
// -- the one artifact allowed to differ between identical runs).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "carl/errors.hpp"
#include "carl/sha1.hpp"
#include "carl/trainer.hpp"

namespace carl {

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot write " + path);
    os << content;
    if (!os) throw DataError("short write to " + path);
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline nlohmann::json report_json(const TrainReport& r) {
    nlohmann::json j;
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : r.epochs) {
        nlohmann::json row;
        row["train_loss"] = e.train_loss;
        if (std::isfinite(e.val_mse))
            row["val_mse"] = e.val_mse;
        else
            row["val_mse"] = nullptr;
        epochs.push_back(row);
    }
    j["epochs"] = epochs;
    j["best_epoch"] = r.best_epoch;
    if (std::isfinite(r.best_val_mse)) j["best_val_mse"] = r.best_val_mse;
    if (std::isfinite(r.test_mse)) j["test_mse"] = r.test_mse;
    j["steps"] = r.steps;
    j["early_stopped"] = r.early_stopped;
    if (!r.untouched_params.empty()) j["untouched_params"] = r.untouched_params;
    return j;
}

inline std::string curve_csv(const TrainReport& r) {
    std::ostringstream os;
    os << "epoch,train_loss,val_mse\n";
    for (std::size_t e = 0; e < r.epochs.size(); ++e)
        os << e << ',' << format_double(r.epochs[e].train_loss) << ',' << format_double(r.epochs[e].val_mse) << '\n';
    return os.str();
}

inline nlohmann::json timings_json(const TrainReport& r) {
    nlohmann::json j;
    double total = 0.0;
    nlohmann::json per = nlohmann::json::array();
    for (const auto& e : r.epochs) {
        per.push_back(e.seconds);
        total += e.seconds;
    }
    j["per_epoch_seconds"] = per;
    j["total_seconds"] = total;
    return j;
}

/// Manifest: config snapshot + content hashes of every input file + timings.
inline nlohmann::json make_manifest(const std::string& command, const nlohmann::json& config,
                                    const std::vector<std::pair<std::string, std::string>>& inputs,
                                    const nlohmann::json& timings) {
    nlohmann::json j;
    j["tool"] = "carl";
    j["command"] = command;
    j["config"] = config;
    nlohmann::json hashes;
    for (const auto& [label, path] : inputs) hashes[label] = git_blob_sha1_file(path);
    j["inputs"] = hashes;
    j["timings"] = timings;
    return j;
}

inline void write_manifest(const std::string& dir, const nlohmann::json& manifest) {
    write_text_file((std::filesystem::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

inline nlohmann::json load_manifest(const std::string& dir) {
    auto path = (std::filesystem::path(dir) / "manifest.json").string();
    auto text = read_text_file(path);
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("config"))
        throw DataError(path + ": not a valid run manifest");
    return j;
}

}  // namespace carl
