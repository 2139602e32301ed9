#include "lingemb/encoding.hpp"

#include "lingemb/error.hpp"

#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

namespace lingemb {

namespace {

constexpr std::string_view kEmptyUnit = "<sep>";

bool missing(const std::string& field) { return field.empty() || field == "_"; }

[[noreturn]] void annotation_required(FeatureScheme scheme, std::size_t token, const char* what) {
    fail(ErrorKind::AnnotationRequired, std::string(to_string(scheme)) + " needs a " + what + " for token " +
                                            std::to_string(token + 1));
}

std::string unit_of(const Token& t, UnitSource source, FeatureScheme scheme, std::size_t index) {
    if (source == UnitSource::Lemma) {
        if (missing(t.lemma) && t.form != "_") annotation_required(scheme, index, "lemma");
        return sanitize_unit(t.lemma);
    }
    return sanitize_unit(t.form);
}

const std::string& upos_of(const Token& t, FeatureScheme scheme, std::size_t index) {
    if (missing(t.upos)) annotation_required(scheme, index, "UPOS tag");
    return t.upos;
}

const std::string& deprel_of(const Token& t, FeatureScheme scheme, std::size_t index) {
    if (missing(t.deprel)) annotation_required(scheme, index, "dependency relation");
    return t.deprel;
}

}  // namespace

std::string_view to_string(FeatureScheme scheme) {
    switch (scheme) {
        case FeatureScheme::Tok: return "TOK";
        case FeatureScheme::Lem: return "LEM";
        case FeatureScheme::TokPos: return "TOKPOS";
        case FeatureScheme::LemPos: return "LEMPOS";
        case FeatureScheme::Dep: return "DEP";
        case FeatureScheme::Depc: return "DEPC";
    }
    return "?";
}

FeatureScheme parse_scheme(std::string_view name) {
    std::string upper(name);
    for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    for (FeatureScheme s : kAllSchemes) {
        if (to_string(s) == upper) return s;
    }
    fail(ErrorKind::InvalidScheme, "unknown feature scheme '" + std::string(name) + "'");
}

std::string sanitize_unit(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        if (c == '|' || c == '/' || std::isspace(static_cast<unsigned char>(c))) continue;
        out += c;
    }
    if (out.empty()) out = kEmptyUnit;
    return out;
}

std::vector<std::string> encode_units(const AnnotatedSentence& sentence, FeatureScheme scheme,
                                      const EncodingOptions& options) {
    const auto& tokens = sentence.tokens;
    std::vector<std::string> units;
    units.reserve(tokens.size());
    switch (scheme) {
        case FeatureScheme::Tok:
            for (const Token& t : tokens) units.push_back(sanitize_unit(t.form));
            break;
        case FeatureScheme::Lem:
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                units.push_back(unit_of(tokens[i], UnitSource::Lemma, scheme, i));
            }
            break;
        case FeatureScheme::TokPos:
        case FeatureScheme::LemPos: {
            const UnitSource source = scheme == FeatureScheme::TokPos ? UnitSource::Form : UnitSource::Lemma;
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                units.push_back(unit_of(tokens[i], source, scheme, i) + "_" + upos_of(tokens[i], scheme, i));
            }
            break;
        }
        case FeatureScheme::Dep:
            for (std::size_t i = 0; i < tokens.size(); ++i) {
                const Token& dependent = tokens[i];
                if (dependent.head == 0) continue;
                const Token& head = tokens.at(dependent.head - 1);
                units.push_back(unit_of(head, options.dep_units, scheme, dependent.head - 1) + "|" +
                                deprel_of(dependent, scheme, i) + "|" +
                                unit_of(dependent, options.dep_units, scheme, i));
            }
            break;
        case FeatureScheme::Depc:
            fail(ErrorKind::InvalidScheme, "DEPC defines dependency contexts and has no unit stream");
    }
    return units;
}

FeatureScheme document_unit_scheme(FeatureScheme scheme, const EncodingOptions& options) {
    if (scheme != FeatureScheme::Depc) return scheme;
    return options.depc_targets == UnitSource::Lemma ? FeatureScheme::Lem : FeatureScheme::Tok;
}

std::vector<std::string> encode_document(const LabeledDocument& document, FeatureScheme scheme,
                                         const EncodingOptions& options) {
    const FeatureScheme unit_scheme = document_unit_scheme(scheme, options);
    if (!document.annotated()) {
        if (unit_scheme != FeatureScheme::Tok) {
            fail(ErrorKind::AnnotationRequired, "document '" + document.id + "' has no dependency annotation; " +
                                                    std::string(to_string(scheme)) + " is unavailable for it");
        }
        auto units = tokenize_raw(document.text);
        for (auto& u : units) u = sanitize_unit(u);
        return units;
    }
    std::vector<std::string> units;
    for (const auto& sentence : document.sentences) {
        try {
            auto part = encode_units(sentence, unit_scheme, options);
            units.insert(units.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
        } catch (const Error& e) {
            throw Error(e.kind(), "document '" + document.id + "': " + e.what());
        }
    }
    return units;
}

std::vector<TrainingPair> window_pairs(std::span<const std::string> units, std::size_t window,
                                       std::mt19937_64* shrink) {
    if (window == 0) fail(ErrorKind::Parameter, "window size must be at least 1");
    std::vector<TrainingPair> pairs;
    for_each_window_pair(units.size(), window, shrink,
                         [&](std::size_t i, std::size_t j) { pairs.push_back({units[i], units[j]}); });
    return pairs;
}

std::vector<TrainingPair> dependency_pairs(const AnnotatedSentence& sentence, UnitSource units) {
    const FeatureScheme scheme = FeatureScheme::Depc;
    std::vector<TrainingPair> pairs;
    pairs.reserve(2 * sentence.tokens.size());
    for (std::size_t m = 0; m < sentence.tokens.size(); ++m) {
        const Token& dependent = sentence.tokens[m];
        if (dependent.head == 0) continue;
        const std::size_t h = dependent.head - 1;
        const std::string head_unit = unit_of(sentence.tokens.at(h), units, scheme, h);
        const std::string dep_unit = unit_of(dependent, units, scheme, m);
        const std::string& rel = deprel_of(dependent, scheme, m);
        pairs.push_back({head_unit, dep_unit + "/" + rel});
        pairs.push_back({dep_unit, head_unit + "/" + rel + "-1"});
    }
    return pairs;
}

void write_unit_stream(std::ostream& out, const std::vector<std::vector<std::string>>& sentences) {
    for (const auto& units : sentences) {
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (i) out << ' ';
            out << units[i];
        }
        out << '\n';
    }
}

std::vector<std::vector<std::string>> read_unit_stream(std::istream& in) {
    std::vector<std::vector<std::string>> sentences;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream words(line);
        std::vector<std::string> units;
        for (std::string w; words >> w;) units.push_back(std::move(w));
        if (!units.empty()) sentences.push_back(std::move(units));
    }
    return sentences;
}

void write_pairs_tsv(std::ostream& out, std::span<const TrainingPair> pairs) {
    for (const auto& p : pairs) out << p.target << '\t' << p.context << '\n';
}

std::vector<TrainingPair> read_pairs_tsv(std::istream& in) {
    std::vector<TrainingPair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 == line.size() ||
            line.find('\t', tab + 1) != std::string::npos) {
            fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": expected target<TAB>context");
        }
        pairs.push_back({line.substr(0, tab), line.substr(tab + 1)});
    }
    return pairs;
}

}  // namespace lingemb
