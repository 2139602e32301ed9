#pragma once

// Seeded synthetic corpora with a known answer: harmful documents draw
// their content words from a small "toxic" vocabulary, clean documents from
// a disjoint one. Sentences carry lemmas, UPOS tags and dependency trees so
// every scheme can be exercised.

#include "lingemb/corpus.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lingemb {

struct SyntheticOptions {
    std::size_t documents = 200;
    double harmful_fraction = 0.1;
    std::size_t toxic_words = 20;
    std::size_t clean_words = 60;
    std::size_t pretraining_sentences = 3000;
    std::uint64_t seed = 1;
};

struct SyntheticCorpus {
    LabeledCorpus corpus;
    // Unlabeled annotated sentences mixing both vocabularies, for pretraining.
    std::vector<AnnotatedSentence> pretraining;
    std::vector<std::string> toxic_lemmas;
    std::vector<std::string> clean_lemmas;
};

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options = {});

// Same corpus with labels permuted by a seeded shuffle.
LabeledCorpus shuffle_labels(const LabeledCorpus& corpus, std::uint64_t seed);

// Writes dataset.csv, dataset.conllu and pretrain.conllu into `dir`.
void write_synthetic_corpus(const SyntheticCorpus& synthetic, const std::string& dir);

}  // namespace lingemb
