#pragma once

// Document representations and the four class-weighted classifiers.
//
// Networks read documents as index sequences into an embedding table whose
// row 0 is a fixed zero padding row. In the pretrained condition the table
// is a frozen copy of trained word vectors shared between models; in the
// ad-hoc condition it is a trainable parameter initialized uniformly in
// [-0.05, 0.05]. All networks end in one sigmoid unit trained with
// class-weighted binary cross-entropy and Adam.

#include "lingemb/corpus.hpp"
#include "lingemb/embedding.hpp"

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

namespace lingemb {

// w_label = N / (2 * N_label)
struct ClassWeights {
    double clean = 1.0;
    double harmful = 1.0;

    double of(Label label) const { return label == Label::Harmful ? harmful : clean; }
};

// ---------------------------------------------------------------------------
// Representations

struct SparseVector {
    std::vector<std::uint32_t> index;  // strictly increasing
    std::vector<double> value;

    std::size_t nnz() const { return index.size(); }
};

// Mean of the in-vocabulary unit vectors; zero vector when none is known.
std::vector<double> doc_mean_vector(std::span<const std::string> units, const EmbeddingModel& embeddings);

struct PaddedMatrix {
    std::size_t rows = 0;  // maxlen
    std::size_t cols = 0;  // embedding dimension
    std::vector<double> values;         // rows x cols, row-major
    std::vector<unsigned char> mask;    // 1 for real units, 0 for padding
};

// The first `maxlen` in-vocabulary units in order, zero rows after them.
PaddedMatrix doc_padded_matrix(std::span<const std::string> units, const EmbeddingModel& embeddings,
                               std::size_t maxlen);

// Unit -> embedding-table row, rows starting at 1 (0 is padding).
class Lexicon {
public:
    Lexicon() = default;
    explicit Lexicon(std::vector<std::string> units);

    std::optional<std::uint32_t> row(std::string_view unit) const;
    const std::vector<std::string>& units() const { return units_; }
    std::size_t size() const { return units_.size(); }
    // Rows in a table indexed by this lexicon, padding included.
    std::size_t rows() const { return units_.size() + 1; }

private:
    std::vector<std::string> units_;
    std::unordered_map<std::string, std::uint32_t> rows_;
};

// Drops unknown units, then truncates to maxlen.
std::vector<std::uint32_t> doc_index_sequence(std::span<const std::string> units, const Lexicon& lexicon,
                                              std::size_t maxlen);

// Bag-of-words with entry = count * idf, idf = ln((1 + N) / (1 + df)) + 1,
// each document L2-normalized. Unseen terms are dropped at transform time.
class TfidfModel {
public:
    // Throws Error(EmptyStream) for an empty corpus.
    static TfidfModel fit(const std::vector<std::vector<std::string>>& documents);
    static TfidfModel from_parts(std::vector<std::string> terms, std::vector<double> idf);

    SparseVector transform(std::span<const std::string> units) const;

    const std::vector<std::string>& terms() const { return terms_; }
    const std::vector<double>& idf() const { return idf_; }
    std::size_t dimension() const { return terms_.size(); }

private:
    std::vector<std::string> terms_;  // sorted
    std::vector<double> idf_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

struct TfidfResult {
    TfidfModel model;
    std::vector<SparseVector> rows;
};
TfidfResult tfidf_bow(const std::vector<std::vector<std::string>>& documents);

// ---------------------------------------------------------------------------
// Optimizer

struct AdamConfig {
    double alpha = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::vector<double> m;
    std::vector<double> v;
    std::uint64_t t = 0;

    AdamState() = default;
    AdamState(std::size_t size, AdamConfig cfg) : config(cfg), m(size, 0.0), v(size, 0.0) {}
};

// One bias-corrected Adam step. Throws Error(Shape) on size mismatch and
// Error(Numeric) on a non-finite gradient (parameters are left untouched).
void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads);

// ---------------------------------------------------------------------------
// Models

enum class Architecture { Svm, Mlp, Cnn, Lstm };
enum class Condition { Pretrained, Adhoc };
enum class PoolingInput { Mean, Flatten };

std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);
std::string_view to_string(Condition condition);
Condition parse_condition(std::string_view name);

struct ClassifierConfig {
    std::size_t maxlen = 64;
    std::size_t mlp_hidden = 128;
    std::size_t cnn_filters = 32;
    std::size_t lstm_hidden = 64;
    double dropout = 0.5;
    std::size_t batch_size = 32;
    std::size_t epochs = 10;
    AdamConfig adam;
    double svm_lambda = 1e-4;
    std::size_t svm_epochs = 20;
    double svm_lr = 0.01;
    std::size_t adhoc_dim = 50;          // trainable embedding width
    PoolingInput mlp_input = PoolingInput::Flatten;
    PoolingInput svm_input = PoolingInput::Mean;
    std::uint64_t seed = 1;

    void validate() const;
};

struct Tensor {
    std::string name;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(std::string n, std::size_t r, std::size_t c) : name(std::move(n)), rows(r), cols(c), data(r * c, 0.0) {}

    std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }
};

// Per-tensor gradients, parallel to NetworkModel::params.
using Gradients = std::vector<std::vector<double>>;

// How a model turns units into its input.
enum class FeatureKind {
    Sequence,  // index sequence into an embedding table (networks)
    MeanEmbedding,
    FlatEmbedding,
    Tfidf,
};

struct NetworkModel {
    Architecture arch = Architecture::Svm;
    ClassifierConfig config;
    FeatureKind features = FeatureKind::Sequence;
    std::shared_ptr<const Lexicon> lexicon;
    // Frozen pretrained table (lexicon.rows() x dim), shared between models.
    std::shared_ptr<const Tensor> frozen_embedding;
    std::shared_ptr<const TfidfModel> tfidf;
    // Trainable tensors; "embedding" is among them in the ad-hoc condition.
    std::vector<Tensor> params;

    Tensor& param(std::string_view name);
    const Tensor& param(std::string_view name) const;
    bool has_param(std::string_view name) const;
    const Tensor& embedding_table() const;
    std::size_t input_dim() const;
};

using IndexSequence = std::vector<std::uint32_t>;
using DocRepresentation = std::variant<std::vector<double>, SparseVector, IndexSequence>;

struct Prediction {
    Label label = Label::Clean;
    double score = 0.0;
};

// Builds the representation the model consumes.
DocRepresentation represent(const NetworkModel& model, std::span<const std::string> units);

// Throws Error(Shape) when the representation does not fit the model.
Prediction predict(const NetworkModel& model, const DocRepresentation& x);
Prediction predict(const NetworkModel& model, std::span<const std::string> units);

// --- SVM -------------------------------------------------------------------

// Minimizes (lambda/2)|w|^2 + (1/N) sum c_i max(0, 1 - y_i (w.x_i + b)) by
// seeded, epoch-shuffled subgradient descent with rate lr / (1 + t/N).
// Throws Error(DegenerateData) when only one class is present.
NetworkModel train_svm(const std::vector<SparseVector>& rows, std::size_t dimension, std::span<const Label> labels,
                       const ClassWeights& weights, const ClassifierConfig& config);

double svm_objective(const NetworkModel& model, const std::vector<SparseVector>& rows, std::span<const Label> labels,
                     const ClassWeights& weights, double lambda);
// Gradient of svm_objective wherever no example sits exactly on the hinge.
Gradients svm_gradient(const NetworkModel& model, const std::vector<SparseVector>& rows,
                       std::span<const Label> labels, const ClassWeights& weights, double lambda);

SparseVector to_sparse(std::span<const double> dense);

// --- Networks --------------------------------------------------------------

// Fresh parameters for `arch`. `table` is the frozen pretrained table; when
// null, a trainable table of lexicon.rows() x config.adhoc_dim is created.
NetworkModel init_network(Architecture arch, std::shared_ptr<const Lexicon> lexicon,
                          std::shared_ptr<const Tensor> table, const ClassifierConfig& config,
                          std::mt19937_64& rng);

struct TrainingLog {
    std::vector<double> epoch_loss;  // mean weighted loss per epoch
};

// Mini-batch Adam on class-weighted cross-entropy. Throws Error(Numeric)
// naming the epoch and batch if the loss becomes non-finite.
void train_network(NetworkModel& model, const std::vector<IndexSequence>& docs, std::span<const Label> labels,
                   const ClassWeights& weights, TrainingLog* log = nullptr);

// Mean weighted loss with dropout disabled; `grads` (optional) receives the
// matching gradient for every tensor in model.params.
double network_loss(const NetworkModel& model, const std::vector<IndexSequence>& docs,
                    std::span<const Label> labels, const ClassWeights& weights, Gradients* grads = nullptr);

// Raw output before the sigmoid.
double network_logit(const NetworkModel& model, const IndexSequence& doc);

// --- High level ------------------------------------------------------------

// Trains the given architecture on unit lists. Pretrained condition needs
// `embeddings`; ad-hoc builds its own vocabulary (SVM: tf-idf) from `docs`.
NetworkModel train_classifier(Architecture arch, Condition condition, const std::vector<std::vector<std::string>>& docs,
                              std::span<const Label> labels, const ClassWeights& weights,
                              const EmbeddingModel* embeddings, const ClassifierConfig& config,
                              TrainingLog* log = nullptr);

// Frozen table built from embedding target vectors, padding row first.
std::shared_ptr<const Tensor> frozen_table(const EmbeddingModel& embeddings);
std::shared_ptr<const Lexicon> lexicon_of(const EmbeddingModel& embeddings);

// --- Checkpoints -----------------------------------------------------------

void save_checkpoint(const NetworkModel& model, std::ostream& out);
void save_checkpoint(const NetworkModel& model, const std::string& path);
NetworkModel load_checkpoint(std::istream& in);
NetworkModel load_checkpoint(const std::string& path);

}  // namespace lingemb
