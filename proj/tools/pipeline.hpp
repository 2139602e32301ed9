#pragma once

// Configuration and subcommand bodies behind the lingemb command line.

#include "lingemb/classifiers.hpp"
#include "lingemb/embedding.hpp"
#include "lingemb/encoding.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace lingemb::cli {

enum class Command { IngestCheck, Encode, TrainEmbeddings, TrainClassifier, Experiment, Report };

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kValidationError = 1;
inline constexpr int kRuntimeError = 2;
inline constexpr int kPartialFailure = 3;

struct EmbeddingSource {
    std::string label;  // report column; a scheme name or a free label
    FeatureScheme scheme = FeatureScheme::Tok;
    std::string path;
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    std::size_t workers = 1;
    bool deterministic = false;
    std::string out = "out";

    std::optional<std::string> dataset;      // id,text,label CSV
    std::optional<std::string> annotations;  // CoNLL-U with "# doc_id" comments
    std::optional<std::string> corpus;       // pretraining CoNLL-U
    std::optional<std::string> corpus_text;  // pretraining raw text, one sentence per line
    std::optional<std::string> encoded;      // directory written by `encode`
    std::optional<std::string> report;       // report JSON read by `report`
    std::vector<EmbeddingSource> embeddings;

    std::vector<FeatureScheme> schemes;
    EncodingOptions encoding;
    TrainConfig train;
    ClassifierConfig classifier;
    std::vector<Architecture> models{Architecture::Svm, Architecture::Mlp, Architecture::Cnn, Architecture::Lstm};
    std::vector<Condition> conditions{Condition::Pretrained, Condition::Adhoc};
    std::size_t k = 10;
};

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    bool deterministic = false;
    std::vector<std::string> schemes;
    std::vector<std::string> models;
    std::optional<std::string> condition;
    std::optional<std::string> out;
};

// TrainConfig as a JSON object with exactly its field names; unknown keys
// throw Error(Configuration).
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {});
nlohmann::json to_json(const TrainConfig& config);
ClassifierConfig classifier_config_from_json(const nlohmann::json& j, ClassifierConfig base = {});

// Relative paths resolve against `base_dir`.
PipelineConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
PipelineConfig load_config(const std::string& path);
void apply_overrides(PipelineConfig& config, const Overrides& overrides);

// Everything a command needs, checked before any output is touched.
// Throws Error on the first problem.
void validate(Command command, const PipelineConfig& config);

int cmd_ingest_check(const PipelineConfig& config, std::ostream& out, std::ostream& log);
int cmd_encode(const PipelineConfig& config, std::ostream& out, std::ostream& log);
int cmd_train_embeddings(const PipelineConfig& config, std::ostream& out, std::ostream& log);
int cmd_train_classifier(const PipelineConfig& config, std::ostream& out, std::ostream& log);
int cmd_experiment(const PipelineConfig& config, std::ostream& out, std::ostream& log);
int cmd_report(const PipelineConfig& config, std::ostream& out, std::ostream& log);

// Validates, then runs; maps errors to exit codes and prints them to `log`.
int run_command(Command command, const PipelineConfig& config, std::ostream& out, std::ostream& log);

}  // namespace lingemb::cli
