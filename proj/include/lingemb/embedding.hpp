#pragma once

// Skip-gram with negative sampling over arbitrary (target, context) streams.
//
// Window schemes share one vocabulary between targets and contexts; DEPC
// and explicit pair files keep the two apart because contexts carry the
// relation suffix.

#include "lingemb/corpus.hpp"
#include "lingemb/encoding.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lingemb {

using UnitCounts = std::unordered_map<std::string, std::uint64_t>;

class Vocabulary {
public:
    Vocabulary() = default;

    // Keeps units with count >= min_count, indexed by descending count with
    // lexicographic tie-break. Throws Error(EmptyVocab) if nothing survives
    // and Error(Parameter) when min_count is 0.
    static Vocabulary from_counts(const UnitCounts& counts, std::uint64_t min_count);

    // Units in the given order, all counts zero. Used for externally
    // produced vectors. Throws Error(Format) on a repeated unit.
    static Vocabulary from_units(std::vector<std::string> units);

    std::size_t size() const { return units_.size(); }
    bool empty() const { return units_.empty(); }

    std::optional<std::size_t> find(std::string_view unit) const;
    // Throws Error(Lookup) for unknown units.
    std::size_t index(std::string_view unit) const;

    const std::string& unit(std::size_t index) const { return units_.at(index); }
    std::uint64_t count(std::size_t index) const { return counts_.at(index); }
    const std::vector<std::string>& units() const { return units_; }
    const std::vector<std::uint64_t>& counts() const { return counts_; }
    // Sum of the retained counts.
    std::uint64_t total() const { return total_; }

private:
    std::vector<std::string> units_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t total_ = 0;
};

Vocabulary build_vocab(std::span<const std::string> units, std::uint64_t min_count);

// Draws index i with probability count(i)^power / sum_j count(j)^power.
class NegativeSampler {
public:
    NegativeSampler(const Vocabulary& vocab, double power = 0.75);

    double probability(std::size_t index) const { return probabilities_.at(index); }
    std::size_t sample(std::mt19937_64& rng) const { return dist_(rng); }
    std::size_t size() const { return probabilities_.size(); }

private:
    std::vector<double> probabilities_;
    mutable std::discrete_distribution<std::size_t> dist_;
};

// min(1, sqrt(t/f) + t/f) with f = count/total; 1 when t == 0.
double subsample_keep_probability(std::string_view unit, const Vocabulary& vocab, double t);
double subsample_keep_probability(std::size_t index, const Vocabulary& vocab, double t);

struct EmbeddingModel {
    Vocabulary target_vocab;
    Vocabulary context_vocab;
    std::size_t dim = 0;
    std::vector<double> target;   // |V_t| x dim, row-major
    std::vector<double> context;  // |V_c| x dim, row-major
    // Scheme the vectors were trained on; unknown for loaded files.
    std::optional<FeatureScheme> scheme;

    std::span<double> target_row(std::size_t i) { return {target.data() + i * dim, dim}; }
    std::span<const double> target_row(std::size_t i) const { return {target.data() + i * dim, dim}; }
    std::span<double> context_row(std::size_t i) { return {context.data() + i * dim, dim}; }
    std::span<const double> context_row(std::size_t i) const { return {context.data() + i * dim, dim}; }

    std::optional<std::span<const double>> vector(std::string_view unit) const;
    double cosine(std::string_view a, std::string_view b) const;

    // Throws Error(Numeric) on non-finite entries and Error(Shape) when row
    // counts disagree with the vocabularies.
    void validate() const;
};

struct TrainConfig {
    std::size_t d = 50;
    std::size_t window = 5;
    std::size_t negatives = 5;
    double initial_lr = 0.025;
    double final_lr = 1e-4;
    std::size_t epochs = 5;
    std::uint64_t min_count = 5;
    double subsample_t = 1e-3;
    std::uint64_t seed = 1;
    std::size_t worker_count = 1;

    // Throws Error(Parameter) on the first violated invariant.
    void validate() const;
};

// One SGNS update for the loss
//   -log s(u.v_c) - sum_i log s(-u.v_{n_i})
// using pre-update values throughout. Returns the pre-update loss. Throws
// Error(Numeric) if the loss or the target update is not finite.
double sgns_step(EmbeddingModel& model, std::size_t target, std::size_t context,
                 std::span<const std::size_t> negatives, double lr);
double sgns_step(EmbeddingModel& model, const TrainingPair& pair, std::span<const std::size_t> negatives,
                 double lr);

struct IndexPair {
    std::uint32_t target;
    std::uint32_t context;
};

// A re-playable stream of training pairs, split into independent chunks
// (sentences) that workers can process in any order.
class PairSource {
public:
    virtual ~PairSource() = default;

    virtual bool shared_vocabulary() const = 0;
    // Raw occurrence counts. For shared vocabularies only `targets` is filled.
    virtual void count_units(UnitCounts& targets, UnitCounts& contexts) const = 0;
    // Resolves units to indices; out-of-vocabulary units are dropped.
    virtual void bind(const Vocabulary& targets, const Vocabulary& contexts) = 0;

    virtual std::size_t chunk_count() const = 0;
    // Target positions in a chunk before subsampling; drives lr decay.
    virtual std::size_t positions(std::size_t chunk) const = 0;
    // Appends the pairs of one chunk. `keep` holds per-target-index keep
    // probabilities; empty disables subsampling.
    virtual void pairs(std::size_t chunk, std::mt19937_64& rng, std::span<const double> keep,
                       std::vector<IndexPair>& out) const = 0;
};

// Linear-window contexts over unit streams.
class WindowPairSource final : public PairSource {
public:
    WindowPairSource(std::vector<std::vector<std::string>> sentences, std::size_t window, bool shrink = true);

    bool shared_vocabulary() const override { return true; }
    void count_units(UnitCounts& targets, UnitCounts& contexts) const override;
    void bind(const Vocabulary& targets, const Vocabulary& contexts) override;
    std::size_t chunk_count() const override { return sentences_.size(); }
    std::size_t positions(std::size_t chunk) const override { return sentences_[chunk].size(); }
    void pairs(std::size_t chunk, std::mt19937_64& rng, std::span<const double> keep,
               std::vector<IndexPair>& out) const override;

private:
    std::vector<std::vector<std::string>> sentences_;
    std::vector<std::vector<std::uint32_t>> indexed_;
    std::size_t window_;
    bool shrink_;
};

// Dependency-arc contexts (DEPC).
class DependencyPairSource final : public PairSource {
public:
    DependencyPairSource(const std::vector<AnnotatedSentence>& sentences, UnitSource units = UnitSource::Form);

    bool shared_vocabulary() const override { return false; }
    void count_units(UnitCounts& targets, UnitCounts& contexts) const override;
    void bind(const Vocabulary& targets, const Vocabulary& contexts) override;
    std::size_t chunk_count() const override { return sentences_.size(); }
    std::size_t positions(std::size_t chunk) const override { return token_counts_[chunk]; }
    void pairs(std::size_t chunk, std::mt19937_64& rng, std::span<const double> keep,
               std::vector<IndexPair>& out) const override;

private:
    struct Arc {
        std::uint32_t token;  // position of the target token in its sentence
        std::uint32_t target;
        std::uint32_t context;
    };
    struct NamedArc {
        std::uint32_t token;
        TrainingPair pair;
    };
    std::vector<std::vector<NamedArc>> sentences_;
    std::vector<std::size_t> token_counts_;
    std::vector<std::vector<Arc>> indexed_;
};

// A fixed list of pairs (e.g. read from a pair TSV), chunked for sharding.
class ExplicitPairSource final : public PairSource {
public:
    explicit ExplicitPairSource(std::vector<TrainingPair> pairs, std::size_t chunk_size = 1024);

    bool shared_vocabulary() const override { return false; }
    void count_units(UnitCounts& targets, UnitCounts& contexts) const override;
    void bind(const Vocabulary& targets, const Vocabulary& contexts) override;
    std::size_t chunk_count() const override;
    std::size_t positions(std::size_t chunk) const override;
    void pairs(std::size_t chunk, std::mt19937_64& rng, std::span<const double> keep,
               std::vector<IndexPair>& out) const override;

private:
    std::vector<TrainingPair> pairs_;
    std::vector<IndexPair> indexed_;
    std::vector<std::size_t> bounds_;  // chunk boundaries into indexed_
    std::size_t chunk_size_;
};

struct EpochStats {
    std::size_t epoch = 0;  // 1-based
    double mean_loss = 0.0;
    double lr = 0.0;        // learning rate at the end of the epoch
    std::uint64_t pairs = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

// Trains SGNS vectors. With worker_count == 1 the result is a pure function
// of (source, config). With more workers, chunks are split across threads
// that update the shared matrices without locking.
EmbeddingModel train_embeddings(PairSource& source, const TrainConfig& config,
                                const EpochCallback& on_epoch = {});

// word2vec text format: "|V| d" header, then "unit v1 ... vd" per line,
// 9 significant digits. Only target vectors are written.
void save_embeddings(const EmbeddingModel& model, std::ostream& out);
void save_embeddings(const EmbeddingModel& model, const std::string& path);
EmbeddingModel load_embeddings(std::istream& in);
EmbeddingModel load_embeddings(const std::string& path);

}  // namespace lingemb
