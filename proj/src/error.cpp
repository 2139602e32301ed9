#include "lingemb/error.hpp"

namespace lingemb {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Structure: return "structural error";
        case ErrorKind::Value: return "value error";
        case ErrorKind::DanglingAnnotation: return "dangling annotation";
        case ErrorKind::Duplicate: return "duplicate id";
        case ErrorKind::InvalidScheme: return "invalid scheme";
        case ErrorKind::AnnotationRequired: return "annotation required";
        case ErrorKind::Parameter: return "parameter error";
        case ErrorKind::EmptyVocab: return "empty vocabulary";
        case ErrorKind::EmptyStream: return "empty pair stream";
        case ErrorKind::Lookup: return "lookup error";
        case ErrorKind::Numeric: return "numeric error";
        case ErrorKind::Format: return "format error";
        case ErrorKind::DegenerateData: return "degenerate data";
        case ErrorKind::Shape: return "shape error";
        case ErrorKind::Configuration: return "configuration error";
        case ErrorKind::Io: return "I/O error";
    }
    return "error";
}

}  // namespace lingemb
