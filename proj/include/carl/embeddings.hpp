#pragma once
// Optional loader for externally trained word vectors (word2vec-style text:
// one "word v1 v2 ... vt" line per word). Vocabulary words found in the file
// overwrite their embedding rows; everything else keeps its random init.

#include <fstream>
#include <sstream>
#include <string>

#include "carl/corpus.hpp"
#include "carl/model.hpp"

namespace carl {

/// Returns the number of vocabulary rows overwritten.
inline std::size_t load_word_embeddings(CarlModel& model, const Vocabulary& vocab, const std::string& path) {
    Param* emb = model.find_param("review.embeddings");
    if (!emb) throw ConfigError("model has no embedding table (review component disabled)");
    long dim = emb->cols();
    std::ifstream is(path);
    if (!is) throw DataError("cannot open embedding file: " + path);
    std::string line;
    std::size_t loaded = 0, lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        auto id = vocab.lookup(word);
        if (!id) {
            // still validate the row width so dimension mismatches surface early
            double v;
            long count = 0;
            while (ss >> v) ++count;
            if (count != dim)
                throw DataError(path + ":" + std::to_string(lineno) + ": vector has " + std::to_string(count) +
                                " dimensions, embeddings expect " + std::to_string(dim));
            continue;
        }
        std::vector<double> vec;
        vec.reserve(static_cast<std::size_t>(dim));
        double v;
        while (ss >> v) vec.push_back(v);
        if (static_cast<long>(vec.size()) != dim)
            throw DataError(path + ":" + std::to_string(lineno) + ": vector has " + std::to_string(vec.size()) +
                            " dimensions, embeddings expect " + std::to_string(dim));
        std::copy(vec.begin(), vec.end(), emb->value->data() + static_cast<long>(*id) * dim);
        ++loaded;
    }
    return loaded;
}

}  // namespace carl
