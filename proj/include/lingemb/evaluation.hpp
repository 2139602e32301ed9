#pragma once

// Stratified k-fold cross-validation and the scheme x model experiment grid.

#include "lingemb/classifiers.hpp"
#include "lingemb/corpus.hpp"
#include "lingemb/embedding.hpp"
#include "lingemb/encoding.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lingemb {

struct FoldAssignment {
    std::size_t k = 0;
    std::vector<std::size_t> fold;      // document position -> fold in [0, k)
    std::vector<std::string> warnings;  // labels with fewer than k documents

    std::vector<std::size_t> test_indices(std::size_t f) const;
    std::vector<std::size_t> train_indices(std::size_t f) const;
};

// Shuffles each label's documents with the seed, then deals them round-robin,
// continuing the deal from label to label. Throws Error(Parameter) when k < 2
// or k exceeds the number of documents.
FoldAssignment stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed);

// w_label = N / (2 * N_label). Throws Error(DegenerateData) unless both labels occur.
ClassWeights derive_class_weights(std::span<const Label> labels);

struct MetricsReport {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;  // positive = harmful
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;        // on the harmful class
    double f1_clean = 0.0;
    double f1_macro = 0.0;
};

// Throws Error(Shape) on a length mismatch.
MetricsReport f_score(std::span<const Label> predictions, std::span<const Label> golds);

struct EvalConfig {
    std::size_t k = 10;
    std::uint64_t seed = 1;
    ClassifierConfig classifier;
    EncodingOptions encoding;
    std::size_t workers = 1;  // parallel cells in run_matrix
};

// One (column, model, condition) cell. `column` labels the report column;
// it defaults to the scheme name and differs for externally loaded vectors.
struct CellSpec {
    FeatureScheme scheme = FeatureScheme::Tok;
    Architecture arch = Architecture::Svm;
    Condition condition = Condition::Pretrained;
    std::string column;
    const EmbeddingModel* embeddings = nullptr;

    std::string name() const;
};

struct CellResult {
    FeatureScheme scheme = FeatureScheme::Tok;
    Architecture arch = Architecture::Svm;
    Condition condition = Condition::Pretrained;
    std::string column;
    bool ok = false;
    std::string error;
    std::vector<double> fold_f1;
    std::vector<double> fold_f1_macro;
    std::vector<std::uint64_t> fold_seeds;
    double mean_f1 = 0.0;
    double std_f1 = 0.0;  // sample standard deviation over folds
    double mean_f1_macro = 0.0;
};

// Units of every document under the scheme a classifier reads for it.
std::vector<std::vector<std::string>> encode_corpus(const LabeledCorpus& corpus, FeatureScheme scheme,
                                                    const EncodingOptions& options = {});

// Fold f training split; representation transforms are fit on exactly these.
struct FoldSplit {
    std::vector<std::vector<std::string>> train_docs, test_docs;
    std::vector<Label> train_labels, test_labels;
};
FoldSplit split_fold(const std::vector<std::vector<std::string>>& docs, std::span<const Label> labels,
                     const FoldAssignment& folds, std::size_t f);

// Seed of fold f within a cell.
std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold);

// Cross-validates one cell. Throws Error(Configuration) for a scheme the
// embeddings were not trained on; training errors are rethrown with the cell
// name prepended.
CellResult run_cell(const LabeledCorpus& corpus, const CellSpec& cell, const EvalConfig& config);

struct MatrixColumn {
    std::string label;
    FeatureScheme scheme = FeatureScheme::Tok;
    const EmbeddingModel* embeddings = nullptr;  // pretrained cells only
};

struct ExperimentReport {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<Condition> conditions;
    std::vector<Architecture> models;
    std::vector<std::string> columns;
    std::vector<CellResult> cells;  // conditions x models x columns, in that order

    std::size_t failed() const;
    const CellResult* find(Condition condition, Architecture arch, const std::string& column) const;
};

// Runs every cell, in parallel when config.workers > 1. Failed cells are
// recorded, not thrown. Throws Error(Parameter) for an empty column, model
// or condition list.
ExperimentReport run_matrix(const LabeledCorpus& corpus, const std::vector<MatrixColumn>& columns,
                            const std::vector<Architecture>& models, const std::vector<Condition>& conditions,
                            const EvalConfig& config);

// One section per condition. Its header row holds the condition name and
// the labels of the columns it has cells for; then one row per model with
// means to 3 decimals, "failed" for failed cells.
std::string render_tsv(const ExperimentReport& report);
// Includes per-fold scores, macro-F1 and seeds.
std::string render_json(const ExperimentReport& report);
// Inverse of render_json. Throws Error(Format).
ExperimentReport parse_report_json(const std::string& text);

}  // namespace lingemb
