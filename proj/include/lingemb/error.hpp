#pragma once

#include <stdexcept>
#include <string>

namespace lingemb {

// Every failure raised by the library derives from Error. The kind lets the
// CLI map failures to exit codes and lets tests assert on the category
// without string matching.
enum class ErrorKind {
    Parse,               // malformed input line
    Structure,           // dependency tree violates single-root / acyclicity
    Value,               // field value out of its domain
    DanglingAnnotation,  // CoNLL-U document id with no dataset row
    Duplicate,           // repeated document id
    InvalidScheme,       // scheme not valid for the requested operation
    AnnotationRequired,  // non-TOK scheme on a raw-text document
    Parameter,           // bad numeric parameter
    EmptyVocab,
    EmptyStream,
    Lookup,              // unit not in vocabulary
    Numeric,             // non-finite loss, gradient or parameter
    Format,              // serialized file does not match its layout
    DegenerateData,      // single-class data where two classes are needed
    Shape,               // representation does not match the model
    Configuration,       // inconsistent pipeline / cell configuration
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace lingemb
