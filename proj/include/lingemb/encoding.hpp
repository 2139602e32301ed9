#pragma once

// Feature encoding: unit streams under the five unit schemes and the
// (target, context) pairs consumed by skip-gram training.
//
// Surface formats:
//   TOKPOS / LEMPOS   form_UPOS / lemma_UPOS
//   DEP               head|deprel|dependent   (one unit per non-root token)
//   DEPC contexts     unit/deprel for the dependent seen from its head,
//                     unit/deprel-1 for the head seen from its dependent
// '|' and '/' are reserved and are stripped from forms and lemmas.

#include "lingemb/corpus.hpp"

#include <algorithm>
#include <compare>
#include <cstddef>
#include <iosfwd>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lingemb {

enum class FeatureScheme { Tok, Lem, TokPos, LemPos, Dep, Depc };

inline constexpr FeatureScheme kAllSchemes[] = {FeatureScheme::Tok,    FeatureScheme::Lem, FeatureScheme::TokPos,
                                                FeatureScheme::LemPos, FeatureScheme::Dep, FeatureScheme::Depc};

std::string_view to_string(FeatureScheme scheme);
// Accepts the canonical names TOK, LEM, TOKPOS, LEMPOS, DEP, DEPC in any case.
// Throws Error(InvalidScheme) otherwise.
FeatureScheme parse_scheme(std::string_view name);

// DEPC defines contexts, not a unit stream.
constexpr bool is_unit_scheme(FeatureScheme s) { return s != FeatureScheme::Depc; }

enum class UnitSource { Form, Lemma };

struct EncodingOptions {
    UnitSource dep_units = UnitSource::Form;       // words inside DEP triples
    UnitSource depc_targets = UnitSource::Form;    // DEPC targets and contexts
};

struct TrainingPair {
    std::string target;
    std::string context;

    auto operator<=>(const TrainingPair&) const = default;
};

// Removes reserved separators and whitespace; never returns an empty unit.
std::string sanitize_unit(std::string_view text);

std::vector<std::string> encode_units(const AnnotatedSentence& sentence, FeatureScheme scheme,
                                      const EncodingOptions& options = {});

// The unit scheme a document is encoded under when it feeds a classifier.
// DEPC maps to the unit stream of its targets (TOK by default).
FeatureScheme document_unit_scheme(FeatureScheme scheme, const EncodingOptions& options = {});

// Concatenated units of all sentences. Raw-text documents are tokenized and
// admitted only under TOK; any other scheme throws Error(AnnotationRequired).
std::vector<std::string> encode_document(const LabeledDocument& document, FeatureScheme scheme,
                                         const EncodingOptions& options = {});

// Visits every (target position, context position) pair of a fixed window.
// With `shrink` non-null each target draws its own window uniformly from
// [1, window]; otherwise the full window is used.
template <class Emit>
void for_each_window_pair(std::size_t n, std::size_t window, std::mt19937_64* shrink, Emit&& emit) {
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t span = window;
        if (shrink != nullptr) span = std::uniform_int_distribution<std::size_t>(1, window)(*shrink);
        const std::size_t lo = i >= span ? i - span : 0;
        const std::size_t hi = std::min(n - 1, i + span);
        for (std::size_t j = lo; j <= hi; ++j) {
            if (j != i) emit(i, j);
        }
    }
}

// Throws Error(Parameter) when window is 0.
std::vector<TrainingPair> window_pairs(std::span<const std::string> units, std::size_t window,
                                       std::mt19937_64* shrink = nullptr);

std::vector<TrainingPair> dependency_pairs(const AnnotatedSentence& sentence,
                                           UnitSource units = UnitSource::Form);

// One sentence per line, units separated by single spaces.
void write_unit_stream(std::ostream& out, const std::vector<std::vector<std::string>>& sentences);
std::vector<std::vector<std::string>> read_unit_stream(std::istream& in);

// target<TAB>context per line.
void write_pairs_tsv(std::ostream& out, std::span<const TrainingPair> pairs);
std::vector<TrainingPair> read_pairs_tsv(std::istream& in);

}  // namespace lingemb
