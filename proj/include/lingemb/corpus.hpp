#pragma once

// Corpus ingestion: CoNLL-U dependency annotations, the labeled id,text,label
// dataset, and a rule-based tokenizer for raw text.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lingemb {

struct Token {
    std::string form;
    std::string lemma;
    std::string upos;
    std::size_t head = 0;  // 0 = root, otherwise 1-based index of the head
    std::string deprel;

    bool operator==(const Token&) const = default;
};

struct AnnotatedSentence {
    std::vector<Token> tokens;
    // Most recent "# doc_id = ..." comment at or before the sentence. The id
    // stays in effect for following sentences until the next doc_id comment.
    std::optional<std::string> doc_id;

    std::size_t size() const { return tokens.size(); }
    // 0-based position of the root token.
    std::size_t root() const;

    bool operator==(const AnnotatedSentence&) const = default;
};

// Throws Error(Structure) unless the sentence has exactly one root, every
// head is in range and no token heads itself, and all head chains reach the
// root. `name` identifies the sentence in the message.
void validate_tree(const AnnotatedSentence& sentence, std::string_view name);

enum class Label { Clean = 0, Harmful = 1 };

struct LabeledDocument {
    std::string id;
    std::string text;
    Label label = Label::Clean;
    // Empty when the document has no dependency annotation; such documents
    // are usable under the TOK scheme only.
    std::vector<AnnotatedSentence> sentences;

    bool annotated() const { return !sentences.empty(); }
};

struct LabeledCorpus {
    std::vector<LabeledDocument> documents;
    std::size_t clean = 0;
    std::size_t harmful = 0;

    std::size_t size() const { return documents.size(); }
    std::vector<Label> labels() const;
};

// Parses CoNLL-U. Multiword-token ranges and empty nodes are skipped; forms
// and lemmas are lowercased. Throws Error(Parse) with the 1-based line
// number for malformed lines and Error(Structure) for broken trees.
std::vector<AnnotatedSentence> parse_conllu(std::istream& in);
std::vector<AnnotatedSentence> parse_conllu_file(const std::string& path);

// Writes sentences back out as CoNLL-U (unused columns as "_"), including a
// "# doc_id" comment when the sentence carries one.
void write_conllu(std::ostream& out, const std::vector<AnnotatedSentence>& sentences);

// Parses the id,text,label CSV. When `conllu` is given, its sentences are
// attached to documents through their "# doc_id" comments.
LabeledCorpus parse_labeled_dataset(std::istream& csv, std::istream* conllu = nullptr);
LabeledCorpus load_labeled_dataset(const std::string& csv_path,
                                   const std::optional<std::string>& conllu_path = std::nullopt);

// Splits on whitespace, detaches leading and trailing punctuation as
// separate units, lowercases.
std::vector<std::string> tokenize_raw(std::string_view text);

// ASCII lowercase; bytes outside ASCII are left as-is.
std::string to_lower(std::string_view text);

// Minimal RFC 4180 reader: quoted fields, doubled quotes, embedded newlines.
// Returns false at end of input.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_number);

}  // namespace lingemb
