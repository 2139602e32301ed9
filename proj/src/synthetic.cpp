#include "lingemb/synthetic.hpp"
#include "lingemb/error.hpp"
#include "lingemb/seed.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

namespace lingemb {

namespace {

struct Lexemes {
    std::vector<std::string> nouns, verbs, adjs;

    std::vector<std::string> all() const {
        std::vector<std::string> out = nouns;
        out.insert(out.end(), verbs.begin(), verbs.end());
        out.insert(out.end(), adjs.begin(), adjs.end());
        return out;
    }
};

Lexemes make_lexemes(const std::string& prefix, std::size_t words) {
    if (words < 3) fail(ErrorKind::Parameter, "synthetic vocabularies need at least 3 words");
    const std::size_t nouns = std::max<std::size_t>(1, words * 2 / 5);
    const std::size_t verbs = std::max<std::size_t>(1, words * 3 / 10);
    const std::size_t adjs = words - nouns - verbs;
    Lexemes l;
    for (std::size_t i = 0; i < nouns; ++i) l.nouns.push_back(prefix + "n" + std::to_string(i));
    for (std::size_t i = 0; i < verbs; ++i) l.verbs.push_back(prefix + "v" + std::to_string(i));
    for (std::size_t i = 0; i < adjs; ++i) l.adjs.push_back(prefix + "a" + std::to_string(i));
    return l;
}

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

Token noun(const std::string& lemma, std::size_t head, const char* rel, std::mt19937_64& rng) {
    const bool plural = std::bernoulli_distribution(0.5)(rng);
    return {plural ? lemma + "s" : lemma, lemma, "NOUN", head, rel};
}

// "the N V a [ADJ] N", with the verb as root.
AnnotatedSentence make_sentence(const Lexemes& lex, std::mt19937_64& rng) {
    const bool with_adj = !lex.adjs.empty() && std::bernoulli_distribution(0.6)(rng);
    const std::size_t obj = with_adj ? 6 : 5;
    AnnotatedSentence s;
    s.tokens.push_back({"the", "the", "DET", 2, "det"});
    s.tokens.push_back(noun(pick(lex.nouns, rng), 3, "nsubj", rng));
    const std::string& verb = pick(lex.verbs, rng);
    s.tokens.push_back({verb + (std::bernoulli_distribution(0.5)(rng) ? "s" : "ed"), verb, "VERB", 0, "root"});
    s.tokens.push_back({"a", "a", "DET", obj, "det"});
    if (with_adj) {
        const std::string& adj = pick(lex.adjs, rng);
        s.tokens.push_back({adj, adj, "ADJ", obj, "amod"});
    }
    s.tokens.push_back(noun(pick(lex.nouns, rng), 3, "obj", rng));
    return s;
}

std::string doc_text(const std::vector<AnnotatedSentence>& sentences) {
    std::string text;
    for (const auto& s : sentences) {
        for (const auto& t : s.tokens) {
            if (!text.empty()) text += ' ';
            text += t.form;
        }
    }
    return text;
}

}  // namespace

SyntheticCorpus make_synthetic_corpus(const SyntheticOptions& options) {
    if (options.documents < 2) fail(ErrorKind::Parameter, "synthetic corpus needs at least 2 documents");
    if (!(options.harmful_fraction > 0.0 && options.harmful_fraction < 1.0)) {
        fail(ErrorKind::Parameter, "harmful_fraction must lie in (0, 1)");
    }
    const Lexemes toxic = make_lexemes("tox", options.toxic_words);
    const Lexemes clean = make_lexemes("cln", options.clean_words);
    std::mt19937_64 rng(mix_seed(options.seed, 0));

    const auto n = options.documents;
    const auto harmful = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(options.harmful_fraction * static_cast<double>(n))), 1, n - 1);
    std::vector<Label> labels(n, Label::Clean);
    std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(harmful), Label::Harmful);
    std::shuffle(labels.begin(), labels.end(), rng);

    SyntheticCorpus out;
    std::uniform_int_distribution<int> sentence_count(1, 3);
    for (std::size_t i = 0; i < n; ++i) {
        LabeledDocument doc;
        char id[32];
        std::snprintf(id, sizeof id, "d%04zu", i + 1);
        doc.id = id;
        doc.label = labels[i];
        const Lexemes& lex = labels[i] == Label::Harmful ? toxic : clean;
        const int k = sentence_count(rng);
        for (int s = 0; s < k; ++s) {
            doc.sentences.push_back(make_sentence(lex, rng));
            doc.sentences.back().doc_id = doc.id;
        }
        doc.text = doc_text(doc.sentences);
        (doc.label == Label::Harmful ? out.corpus.harmful : out.corpus.clean) += 1;
        out.corpus.documents.push_back(std::move(doc));
    }
    for (std::size_t i = 0; i < options.pretraining_sentences; ++i) {
        out.pretraining.push_back(make_sentence(i % 2 ? toxic : clean, rng));
    }
    out.toxic_lemmas = toxic.all();
    out.clean_lemmas = clean.all();
    return out;
}

LabeledCorpus shuffle_labels(const LabeledCorpus& corpus, std::uint64_t seed) {
    LabeledCorpus out = corpus;
    auto labels = corpus.labels();
    std::mt19937_64 rng(mix_seed(seed, 77));
    std::shuffle(labels.begin(), labels.end(), rng);
    for (std::size_t i = 0; i < labels.size(); ++i) out.documents[i].label = labels[i];
    return out;
}

void write_synthetic_corpus(const SyntheticCorpus& synthetic, const std::string& dir) {
    std::filesystem::create_directories(dir);
    const std::filesystem::path base(dir);
    std::ofstream csv(base / "dataset.csv");
    std::ofstream conllu(base / "dataset.conllu");
    std::ofstream pre(base / "pretrain.conllu");
    if (!csv || !conllu || !pre) fail(ErrorKind::Io, "cannot write synthetic corpus into '" + dir + "'");
    csv << "id,text,label\n";
    std::vector<AnnotatedSentence> annotated;
    for (const auto& d : synthetic.corpus.documents) {
        csv << d.id << ',' << d.text << ',' << (d.label == Label::Harmful ? 1 : 0) << '\n';
        annotated.insert(annotated.end(), d.sentences.begin(), d.sentences.end());
    }
    write_conllu(conllu, annotated);
    write_conllu(pre, synthetic.pretraining);
    if (!csv || !conllu || !pre) fail(ErrorKind::Io, "failed writing synthetic corpus into '" + dir + "'");
}

}  // namespace lingemb
