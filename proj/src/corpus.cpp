#include "lingemb/corpus.hpp"

#include "lingemb/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace lingemb {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> cols;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string_view::npos) {
            cols.push_back(line.substr(start));
            break;
        }
        cols.push_back(line.substr(start, tab - start));
        start = tab + 1;
    }
    return cols;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

bool parse_size(std::string_view text, std::size_t& value) {
    if (text.empty()) return false;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    return ec == std::errc() && ptr == end;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
    fail(ErrorKind::Parse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::size_t AnnotatedSentence::root() const {
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (tokens[i].head == 0) return i;
    }
    fail(ErrorKind::Structure, "sentence has no root");
}

void validate_tree(const AnnotatedSentence& sentence, std::string_view name) {
    const std::size_t n = sentence.tokens.size();
    auto structural = [&](const std::string& what) {
        fail(ErrorKind::Structure, std::string(name) + ": " + what);
    };
    if (n == 0) structural("empty sentence");
    std::size_t roots = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Token& t = sentence.tokens[i];
        if (t.form.empty()) structural("token " + std::to_string(i + 1) + " has an empty form");
        if (t.head > n) structural("token " + std::to_string(i + 1) + " has head out of range");
        if (t.head == i + 1) structural("token " + std::to_string(i + 1) + " is its own head");
        if (t.head == 0) ++roots;
    }
    if (roots != 1) structural("expected exactly one root, found " + std::to_string(roots));
    // 0 = unvisited, 1 = on current path, 2 = known to reach the root
    std::vector<char> state(n, 0);
    for (std::size_t start = 0; start < n; ++start) {
        std::size_t cur = start;
        std::vector<std::size_t> path;
        while (state[cur] == 0) {
            state[cur] = 1;
            path.push_back(cur);
            const std::size_t head = sentence.tokens[cur].head;
            if (head == 0) break;
            cur = head - 1;
            if (state[cur] == 1) structural("head links form a cycle through token " + std::to_string(cur + 1));
        }
        for (std::size_t p : path) state[p] = 2;
    }
}

std::vector<AnnotatedSentence> parse_conllu(std::istream& in) {
    std::vector<AnnotatedSentence> sentences;
    AnnotatedSentence current;
    std::optional<std::string> doc_id;
    std::size_t line_no = 0;
    std::size_t first_line = 0;
    std::string line;

    auto flush = [&] {
        if (current.tokens.empty()) return;
        current.doc_id = doc_id;
        std::string name = "sentence " + std::to_string(sentences.size() + 1) + " (line " +
                           std::to_string(first_line) + ")";
        if (doc_id) name += " of document '" + *doc_id + "'";
        validate_tree(current, name);
        sentences.push_back(std::move(current));
        current = AnnotatedSentence{};
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
        if (trim(line).empty()) {
            flush();
            continue;
        }
        if (line.front() == '#') {
            std::string_view body = trim(std::string_view(line).substr(1));
            if (body.rfind("doc_id", 0) == 0) {
                std::string_view rest = trim(body.substr(6));
                if (!rest.empty() && rest.front() == '=') doc_id = std::string(trim(rest.substr(1)));
            }
            continue;
        }
        const auto cols = split_tabs(line);
        if (cols.size() != 10) {
            parse_error(line_no, "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
        }
        const std::string_view id = cols[0];
        if (id.find('-') != std::string_view::npos || id.find('.') != std::string_view::npos) continue;
        std::size_t index = 0;
        if (!parse_size(id, index)) parse_error(line_no, "ID column '" + std::string(id) + "' is not an integer");
        if (index != current.tokens.size() + 1) {
            parse_error(line_no, "ID " + std::string(id) + " out of sequence, expected " +
                                     std::to_string(current.tokens.size() + 1));
        }
        Token token;
        token.form = to_lower(cols[1]);
        token.lemma = to_lower(cols[2]);
        token.upos = std::string(cols[3]);
        if (!parse_size(cols[6], token.head)) {
            parse_error(line_no, "HEAD column '" + std::string(cols[6]) + "' is not an integer");
        }
        token.deprel = std::string(cols[7]);
        if (token.form.empty()) parse_error(line_no, "empty FORM");
        if (token.deprel.empty()) parse_error(line_no, "empty DEPREL");
        if (current.tokens.empty()) first_line = line_no;
        current.tokens.push_back(std::move(token));
    }
    flush();
    return sentences;
}

std::vector<AnnotatedSentence> parse_conllu_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open CoNLL-U file '" + path + "'");
    try {
        return parse_conllu(in);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

void write_conllu(std::ostream& out, const std::vector<AnnotatedSentence>& sentences) {
    auto field = [](const std::string& s) -> const std::string& {
        static const std::string underscore = "_";
        return s.empty() ? underscore : s;
    };
    for (const AnnotatedSentence& s : sentences) {
        if (s.doc_id) out << "# doc_id = " << *s.doc_id << '\n';
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            const Token& t = s.tokens[i];
            out << (i + 1) << '\t' << t.form << '\t' << field(t.lemma) << '\t' << field(t.upos) << "\t_\t_\t"
                << t.head << '\t' << field(t.deprel) << "\t_\t_\n";
        }
        out << '\n';
    }
}

std::vector<Label> LabeledCorpus::labels() const {
    std::vector<Label> out;
    out.reserve(documents.size());
    for (const auto& d : documents) out.push_back(d.label);
    return out;
}

bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line_number) {
    fields.clear();
    if (in.peek() == std::char_traits<char>::eof()) return false;
    ++line_number;
    const std::size_t start_line = line_number;
    std::string field;
    bool quoted = false;
    bool any = false;
    char c;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line_number;
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) parse_error(start_line, "unterminated quoted field");
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

LabeledCorpus parse_labeled_dataset(std::istream& csv, std::istream* conllu) {
    LabeledCorpus corpus;
    std::vector<std::string> fields;
    std::size_t line = 0;
    if (!read_csv_record(csv, fields, line)) parse_error(1, "missing header");
    if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
    if (fields != std::vector<std::string>{"id", "text", "label"}) {
        parse_error(1, "header must be exactly 'id,text,label'");
    }
    std::unordered_map<std::string, std::size_t> by_id;
    while (true) {
        const std::size_t row_line = line + 1;
        if (!read_csv_record(csv, fields, line)) break;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;
        if (fields.size() != 3) {
            parse_error(row_line, "expected 3 fields, found " + std::to_string(fields.size()));
        }
        LabeledDocument doc;
        doc.id = fields[0];
        doc.text = fields[1];
        const std::string_view label = trim(fields[2]);
        if (label == "0") {
            doc.label = Label::Clean;
        } else if (label == "1") {
            doc.label = Label::Harmful;
        } else {
            fail(ErrorKind::Value, "line " + std::to_string(row_line) + ": row '" + doc.id + "' has label '" +
                                       std::string(label) + "', expected 0 or 1");
        }
        if (!by_id.emplace(doc.id, corpus.documents.size()).second) {
            fail(ErrorKind::Duplicate, "line " + std::to_string(row_line) + ": duplicate id '" + doc.id + "'");
        }
        (doc.label == Label::Harmful ? corpus.harmful : corpus.clean) += 1;
        corpus.documents.push_back(std::move(doc));
    }
    if (conllu != nullptr) {
        auto sentences = parse_conllu(*conllu);
        for (std::size_t i = 0; i < sentences.size(); ++i) {
            auto& s = sentences[i];
            if (!s.doc_id) {
                fail(ErrorKind::DanglingAnnotation,
                     "annotated sentence " + std::to_string(i + 1) + " carries no '# doc_id' comment");
            }
            auto it = by_id.find(*s.doc_id);
            if (it == by_id.end()) {
                fail(ErrorKind::DanglingAnnotation,
                     "annotation for document '" + *s.doc_id + "' has no dataset row");
            }
            corpus.documents[it->second].sentences.push_back(std::move(s));
        }
    }
    return corpus;
}

LabeledCorpus load_labeled_dataset(const std::string& csv_path, const std::optional<std::string>& conllu_path) {
    std::ifstream csv(csv_path, std::ios::binary);
    if (!csv) fail(ErrorKind::Io, "cannot open dataset '" + csv_path + "'");
    std::ifstream conllu;
    if (conllu_path) {
        conllu.open(*conllu_path);
        if (!conllu) fail(ErrorKind::Io, "cannot open CoNLL-U file '" + *conllu_path + "'");
    }
    try {
        return parse_labeled_dataset(csv, conllu_path ? &conllu : nullptr);
    } catch (const Error& e) {
        throw Error(e.kind(), csv_path + ": " + e.what());
    }
}

std::string to_lower(std::string_view text) {
    std::string out(text);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

std::vector<std::string> tokenize_raw(std::string_view text) {
    auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
    auto is_punct = [](char c) {
        const auto u = static_cast<unsigned char>(c);
        return u < 0x80 && std::ispunct(u) != 0;
    };
    std::vector<std::string> units;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j == i) break;
        std::string_view chunk = text.substr(i, j - i);
        i = j;

        std::size_t lead = 0;
        while (lead < chunk.size() && is_punct(chunk[lead])) ++lead;
        std::size_t trail = chunk.size();
        while (trail > lead && is_punct(chunk[trail - 1])) --trail;

        for (std::size_t k = 0; k < lead; ++k) units.emplace_back(1, chunk[k]);
        if (trail > lead) units.push_back(to_lower(chunk.substr(lead, trail - lead)));
        for (std::size_t k = trail; k < chunk.size(); ++k) units.emplace_back(1, chunk[k]);
    }
    return units;
}

}  // namespace lingemb
