#include "lingemb/classifiers.hpp"
#include "lingemb/error.hpp"
#include "lingemb/seed.hpp"
#include "lingemb/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace lingemb {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Dense SVM input from a frozen table: mean or flattened padded rows.
std::vector<double> dense_input(const NetworkModel& model, std::span<const std::string> units) {
    const Tensor& table = *model.frozen_embedding;
    const std::size_t d = table.cols;
    if (model.features == FeatureKind::MeanEmbedding) {
        std::vector<double> mean(d, 0.0);
        std::size_t found = 0;
        for (const auto& u : units) {
            if (auto r = model.lexicon->row(u)) {
                simd::axpy(1.0, table.row(*r), mean);
                ++found;
            }
        }
        if (found > 0) simd::scale(1.0 / static_cast<double>(found), mean);
        return mean;
    }
    const auto seq = doc_index_sequence(units, *model.lexicon, model.config.maxlen);
    std::vector<double> flat(model.config.maxlen * d, 0.0);
    for (std::size_t t = 0; t < seq.size(); ++t) {
        const auto row = table.row(seq[t]);
        std::copy(row.begin(), row.end(), flat.begin() + static_cast<std::ptrdiff_t>(t * d));
    }
    return flat;
}

}  // namespace

std::string_view to_string(Architecture arch) {
    switch (arch) {
        case Architecture::Svm: return "SVM";
        case Architecture::Mlp: return "MLP";
        case Architecture::Cnn: return "CNN";
        case Architecture::Lstm: return "LSTM";
    }
    return "?";
}

Architecture parse_architecture(std::string_view name) {
    const std::string n = to_lower(name);
    if (n == "svm") return Architecture::Svm;
    if (n == "mlp") return Architecture::Mlp;
    if (n == "cnn") return Architecture::Cnn;
    if (n == "lstm") return Architecture::Lstm;
    fail(ErrorKind::Parameter, "unknown model '" + std::string(name) + "' (expected SVM, MLP, CNN or LSTM)");
}

std::string_view to_string(Condition condition) {
    return condition == Condition::Pretrained ? "pretrained" : "adhoc";
}

Condition parse_condition(std::string_view name) {
    const std::string n = to_lower(name);
    if (n == "pretrained") return Condition::Pretrained;
    if (n == "adhoc" || n == "ad-hoc") return Condition::Adhoc;
    fail(ErrorKind::Parameter, "unknown condition '" + std::string(name) + "' (expected pretrained or adhoc)");
}

void ClassifierConfig::validate() const {
    auto need = [](bool ok, const char* what) {
        if (!ok) fail(ErrorKind::Parameter, what);
    };
    need(maxlen >= 1, "maxlen must be at least 1");
    need(mlp_hidden >= 1, "mlp_hidden must be at least 1");
    need(cnn_filters >= 1, "cnn_filters must be at least 1");
    need(lstm_hidden >= 1, "lstm_hidden must be at least 1");
    need(dropout >= 0.0 && dropout < 1.0, "dropout must lie in [0, 1)");
    need(batch_size >= 1, "batch_size must be at least 1");
    need(adam.alpha > 0.0, "adam alpha must be positive");
    need(adam.beta1 >= 0.0 && adam.beta1 < 1.0, "adam beta1 must lie in [0, 1)");
    need(adam.beta2 >= 0.0 && adam.beta2 < 1.0, "adam beta2 must lie in [0, 1)");
    need(adam.epsilon > 0.0, "adam epsilon must be positive");
    need(svm_lambda >= 0.0, "svm_lambda must be non-negative");
    need(svm_lr > 0.0, "svm_lr must be positive");
    need(svm_lr * svm_lambda < 1.0, "svm_lr * svm_lambda must be below 1");
    need(adhoc_dim >= 1, "adhoc_dim must be at least 1");
}

std::shared_ptr<const Tensor> frozen_table(const EmbeddingModel& embeddings) {
    auto table = std::make_shared<Tensor>("frozen_embedding", embeddings.target_vocab.size() + 1, embeddings.dim);
    std::copy(embeddings.target.begin(), embeddings.target.end(),
              table->data.begin() + static_cast<std::ptrdiff_t>(embeddings.dim));
    return table;
}

std::shared_ptr<const Lexicon> lexicon_of(const EmbeddingModel& embeddings) {
    return std::make_shared<Lexicon>(embeddings.target_vocab.units());
}

DocRepresentation represent(const NetworkModel& model, std::span<const std::string> units) {
    switch (model.features) {
        case FeatureKind::Sequence:
            if (!model.lexicon) fail(ErrorKind::Shape, "model has no lexicon");
            return doc_index_sequence(units, *model.lexicon, model.config.maxlen);
        case FeatureKind::MeanEmbedding:
        case FeatureKind::FlatEmbedding:
            if (!model.lexicon || !model.frozen_embedding) fail(ErrorKind::Shape, "model has no embedding table");
            return dense_input(model, units);
        case FeatureKind::Tfidf:
            if (!model.tfidf) fail(ErrorKind::Shape, "model has no tf-idf vocabulary");
            return model.tfidf->transform(units);
    }
    fail(ErrorKind::Shape, "unknown feature kind");
}

Prediction predict(const NetworkModel& model, const DocRepresentation& x) {
    Prediction p;
    if (model.arch == Architecture::Svm) {
        const auto w = model.param("w").row(0);
        double margin = model.param("b").data[0];
        if (const auto* dense = std::get_if<std::vector<double>>(&x)) {
            if (dense->size() != w.size()) {
                fail(ErrorKind::Shape, "SVM expects " + std::to_string(w.size()) + " features, got " +
                                           std::to_string(dense->size()));
            }
            margin += simd::dot(w, *dense);
        } else if (const auto* sparse = std::get_if<SparseVector>(&x)) {
            for (std::size_t k = 0; k < sparse->nnz(); ++k) {
                if (sparse->index[k] >= w.size()) fail(ErrorKind::Shape, "sparse feature beyond SVM dimension");
                margin += w[sparse->index[k]] * sparse->value[k];
            }
        } else {
            fail(ErrorKind::Shape, "SVM expects a feature vector, got an index sequence");
        }
        p.score = sigmoid(margin);
        p.label = margin >= 0.0 ? Label::Harmful : Label::Clean;
        return p;
    }
    const auto* seq = std::get_if<IndexSequence>(&x);
    if (seq == nullptr) fail(ErrorKind::Shape, std::string(to_string(model.arch)) + " expects an index sequence");
    p.score = sigmoid(network_logit(model, *seq));
    p.label = p.score >= 0.5 ? Label::Harmful : Label::Clean;
    return p;
}

Prediction predict(const NetworkModel& model, std::span<const std::string> units) {
    return predict(model, represent(model, units));
}

NetworkModel train_classifier(Architecture arch, Condition condition, const std::vector<std::vector<std::string>>& docs,
                              std::span<const Label> labels, const ClassWeights& weights,
                              const EmbeddingModel* embeddings, const ClassifierConfig& config, TrainingLog* log) {
    config.validate();
    if (docs.size() != labels.size()) fail(ErrorKind::Shape, "documents and labels differ in count");
    if (docs.empty()) fail(ErrorKind::EmptyStream, "no training documents");

    std::shared_ptr<const Lexicon> lexicon;
    std::shared_ptr<const Tensor> table;
    if (condition == Condition::Pretrained) {
        if (embeddings == nullptr) fail(ErrorKind::Configuration, "pretrained condition needs embeddings");
        embeddings->validate();
        lexicon = lexicon_of(*embeddings);
        table = frozen_table(*embeddings);
        const bool any_known = std::any_of(docs.begin(), docs.end(), [&](const auto& doc) {
            return std::any_of(doc.begin(), doc.end(), [&](const auto& u) { return lexicon->row(u).has_value(); });
        });
        if (!any_known) {
            fail(ErrorKind::Configuration,
                 "no document unit occurs in the embedding vocabulary; the embeddings do not match the scheme");
        }
    } else {
        // Ad-hoc vocabulary: every unit seen in training, sorted.
        std::set<std::string> seen;
        for (const auto& doc : docs) seen.insert(doc.begin(), doc.end());
        if (arch != Architecture::Svm) {
            if (seen.empty()) fail(ErrorKind::EmptyVocab, "training documents contain no units");
            lexicon = std::make_shared<Lexicon>(std::vector<std::string>(seen.begin(), seen.end()));
        }
    }

    if (arch == Architecture::Svm) {
        NetworkModel model;
        if (condition == Condition::Adhoc) {
            auto bow = tfidf_bow(docs);
            if (bow.model.dimension() == 0) fail(ErrorKind::EmptyVocab, "training documents contain no units");
            model = train_svm(bow.rows, bow.model.dimension(), labels, weights, config);
            model.features = FeatureKind::Tfidf;
            model.tfidf = std::make_shared<const TfidfModel>(std::move(bow.model));
            return model;
        }
        NetworkModel shell;
        shell.config = config;
        shell.features = config.svm_input == PoolingInput::Mean ? FeatureKind::MeanEmbedding : FeatureKind::FlatEmbedding;
        shell.lexicon = lexicon;
        shell.frozen_embedding = table;
        std::vector<SparseVector> rows;
        rows.reserve(docs.size());
        for (const auto& doc : docs) rows.push_back(to_sparse(dense_input(shell, doc)));
        const std::size_t dim = shell.features == FeatureKind::MeanEmbedding ? table->cols : config.maxlen * table->cols;
        model = train_svm(rows, dim, labels, weights, config);
        model.features = shell.features;
        model.lexicon = lexicon;
        model.frozen_embedding = table;
        return model;
    }

    std::mt19937_64 rng(mix_seed(config.seed, 303));
    NetworkModel model = init_network(arch, lexicon, table, config, rng);
    std::vector<IndexSequence> seqs;
    seqs.reserve(docs.size());
    for (const auto& doc : docs) seqs.push_back(doc_index_sequence(doc, *lexicon, config.maxlen));
    train_network(model, seqs, labels, weights, log);
    return model;
}

}  // namespace lingemb
