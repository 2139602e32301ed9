#pragma once

// Generators shared by the unit and acceptance suites.

#include "lingemb/corpus.hpp"

#include <algorithm>
#include <random>
#include <string>
#include <vector>

namespace lingemb::testing {

// Random dependency tree over n tokens: a random root, then every other
// token attaches to a uniformly chosen token already in the tree.
inline AnnotatedSentence random_sentence(std::size_t n, std::mt19937_64& rng) {
    static const char* const kDeprels[] = {"nsubj", "obj", "amod", "det", "advmod", "obl", "case"};
    static const char* const kUpos[] = {"NOUN", "VERB", "ADJ", "DET", "ADV", "PRON", "ADP"};
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    AnnotatedSentence s;
    s.tokens.resize(n);
    std::uniform_int_distribution<int> word(0, 9);
    for (std::size_t i = 0; i < n; ++i) {
        auto& t = s.tokens[i];
        const int w = word(rng);
        t.form = "w" + std::to_string(w) + (i % 2 ? "s" : "");
        t.lemma = "w" + std::to_string(w);
        t.upos = kUpos[w % 7];
        t.deprel = kDeprels[(w + i) % 7];
    }
    s.tokens[order[0]].head = 0;
    s.tokens[order[0]].deprel = "root";
    for (std::size_t k = 1; k < n; ++k) {
        std::uniform_int_distribution<std::size_t> pick(0, k - 1);
        s.tokens[order[k]].head = order[pick(rng)] + 1;
    }
    return s;
}

// "I like dogs": heads (2,0,2), deprels (nsubj,root,obj).
inline AnnotatedSentence i_like_dogs() {
    AnnotatedSentence s;
    s.tokens = {
        {"i", "i", "PRON", 2, "nsubj"},
        {"like", "like", "VERB", 0, "root"},
        {"dogs", "dog", "NOUN", 2, "obj"},
    };
    return s;
}

}  // namespace lingemb::testing
