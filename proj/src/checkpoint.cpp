#include "lingemb/classifiers.hpp"
#include "lingemb/error.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

// Layout (text, one record per line):
//   lingemb-checkpoint 1
//   architecture <SVM|MLP|CNN|LSTM>
//   features <sequence|mean|flat|tfidf>
//   config <key> <value>            (every ClassifierConfig field)
//   lexicon <n>                     then n lines, one unit each
//   tfidf <n>                       then n lines "<term> <idf>"
//   tensor <name>                   then "<rows> <cols>" and rows of decimals
//   end
// The frozen pretrained table is stored as tensor "frozen_embedding".

namespace lingemb {

namespace {

constexpr const char* kMagic = "lingemb-checkpoint";
constexpr const char* kFrozen = "frozen_embedding";

std::string_view feature_name(FeatureKind k) {
    switch (k) {
        case FeatureKind::Sequence: return "sequence";
        case FeatureKind::MeanEmbedding: return "mean";
        case FeatureKind::FlatEmbedding: return "flat";
        case FeatureKind::Tfidf: return "tfidf";
    }
    return "?";
}

FeatureKind parse_feature(const std::string& s) {
    if (s == "sequence") return FeatureKind::Sequence;
    if (s == "mean") return FeatureKind::MeanEmbedding;
    if (s == "flat") return FeatureKind::FlatEmbedding;
    if (s == "tfidf") return FeatureKind::Tfidf;
    fail(ErrorKind::Format, "unknown feature kind '" + s + "' in checkpoint");
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_tensor(std::ostream& out, const Tensor& t) {
    out << "tensor " << t.name << '\n' << t.rows << ' ' << t.cols << '\n';
    for (std::size_t r = 0; r < t.rows; ++r) {
        for (std::size_t c = 0; c < t.cols; ++c) out << (c ? " " : "") << num(t.data[r * t.cols + c]);
        out << '\n';
    }
}

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}

    bool next(std::string& line) {
        while (std::getline(in_, line)) {
            ++line_no_;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) return true;
        }
        return false;
    }
    std::string require() {
        std::string line;
        if (!next(line)) bad("unexpected end of checkpoint");
        return line;
    }
    [[noreturn]] void bad(const std::string& what) const {
        fail(ErrorKind::Format, "checkpoint line " + std::to_string(line_no_) + ": " + what);
    }
    double number(const std::string& token) const {
        char* end = nullptr;
        const double v = std::strtod(token.c_str(), &end);
        if (end == token.c_str() || *end != '\0') bad("not a number: '" + token + "'");
        return v;
    }
    std::size_t count(const std::string& token) const {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(token.c_str(), &end, 10);
        if (token.empty() || token[0] == '-' || *end != '\0') bad("not a count: '" + token + "'");
        return static_cast<std::size_t>(v);
    }

private:
    std::istream& in_;
    std::size_t line_no_ = 0;
};

Tensor read_tensor(Reader& r, const std::string& name) {
    std::istringstream shape(r.require());
    std::string rs, cs, extra;
    if (!(shape >> rs >> cs) || (shape >> extra)) r.bad("tensor '" + name + "' needs a '<rows> <cols>' line");
    Tensor t(name, r.count(rs), r.count(cs));
    for (std::size_t row = 0; row < t.rows; ++row) {
        std::istringstream line(r.require());
        std::string tok;
        std::size_t c = 0;
        while (line >> tok) {
            if (c == t.cols) r.bad("too many values in tensor '" + name + "'");
            t.data[row * t.cols + c++] = r.number(tok);
        }
        if (c != t.cols) r.bad("too few values in tensor '" + name + "'");
    }
    return t;
}

}  // namespace

void save_checkpoint(const NetworkModel& model, std::ostream& out) {
    const ClassifierConfig& c = model.config;
    out << kMagic << " 1\n";
    out << "architecture " << to_string(model.arch) << '\n';
    out << "features " << feature_name(model.features) << '\n';
    out << "config maxlen " << c.maxlen << '\n'
        << "config mlp_hidden " << c.mlp_hidden << '\n'
        << "config cnn_filters " << c.cnn_filters << '\n'
        << "config lstm_hidden " << c.lstm_hidden << '\n'
        << "config dropout " << num(c.dropout) << '\n'
        << "config batch_size " << c.batch_size << '\n'
        << "config epochs " << c.epochs << '\n'
        << "config adam_alpha " << num(c.adam.alpha) << '\n'
        << "config adam_beta1 " << num(c.adam.beta1) << '\n'
        << "config adam_beta2 " << num(c.adam.beta2) << '\n'
        << "config adam_epsilon " << num(c.adam.epsilon) << '\n'
        << "config svm_lambda " << num(c.svm_lambda) << '\n'
        << "config svm_epochs " << c.svm_epochs << '\n'
        << "config svm_lr " << num(c.svm_lr) << '\n'
        << "config adhoc_dim " << c.adhoc_dim << '\n'
        << "config mlp_input " << (c.mlp_input == PoolingInput::Mean ? "mean" : "flatten") << '\n'
        << "config svm_input " << (c.svm_input == PoolingInput::Mean ? "mean" : "flatten") << '\n'
        << "config seed " << c.seed << '\n';
    if (model.lexicon) {
        out << "lexicon " << model.lexicon->size() << '\n';
        for (const auto& u : model.lexicon->units()) out << u << '\n';
    }
    if (model.tfidf) {
        out << "tfidf " << model.tfidf->dimension() << '\n';
        for (std::size_t i = 0; i < model.tfidf->dimension(); ++i) {
            out << model.tfidf->terms()[i] << ' ' << num(model.tfidf->idf()[i]) << '\n';
        }
    }
    if (model.frozen_embedding) {
        Tensor copy = *model.frozen_embedding;
        copy.name = kFrozen;
        write_tensor(out, copy);
    }
    for (const auto& t : model.params) write_tensor(out, t);
    out << "end\n";
    if (!out) fail(ErrorKind::Io, "failed to write checkpoint");
}

void save_checkpoint(const NetworkModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot open '" + path + "' for writing");
    save_checkpoint(model, out);
}

NetworkModel load_checkpoint(std::istream& in) {
    Reader r(in);
    NetworkModel m;
    {
        std::istringstream head(r.require());
        std::string magic, version;
        head >> magic >> version;
        if (magic != kMagic || version != "1") r.bad("not a version 1 checkpoint");
    }
    bool ended = false;
    bool have_arch = false;
    std::string line;
    while (r.next(line)) {
        std::istringstream ls(line);
        std::string key, a, b;
        ls >> key;
        if (key == "end") {
            ended = true;
            break;
        } else if (key == "architecture") {
            ls >> a;
            m.arch = parse_architecture(a);
            have_arch = true;
        } else if (key == "features") {
            ls >> a;
            m.features = parse_feature(a);
        } else if (key == "config") {
            if (!(ls >> a >> b)) r.bad("config needs a key and a value");
            ClassifierConfig& c = m.config;
            auto pool = [&](const std::string& v) {
                if (v == "mean") return PoolingInput::Mean;
                if (v == "flatten") return PoolingInput::Flatten;
                r.bad("unknown pooling '" + v + "'");
            };
            if (a == "maxlen") c.maxlen = r.count(b);
            else if (a == "mlp_hidden") c.mlp_hidden = r.count(b);
            else if (a == "cnn_filters") c.cnn_filters = r.count(b);
            else if (a == "lstm_hidden") c.lstm_hidden = r.count(b);
            else if (a == "dropout") c.dropout = r.number(b);
            else if (a == "batch_size") c.batch_size = r.count(b);
            else if (a == "epochs") c.epochs = r.count(b);
            else if (a == "adam_alpha") c.adam.alpha = r.number(b);
            else if (a == "adam_beta1") c.adam.beta1 = r.number(b);
            else if (a == "adam_beta2") c.adam.beta2 = r.number(b);
            else if (a == "adam_epsilon") c.adam.epsilon = r.number(b);
            else if (a == "svm_lambda") c.svm_lambda = r.number(b);
            else if (a == "svm_epochs") c.svm_epochs = r.count(b);
            else if (a == "svm_lr") c.svm_lr = r.number(b);
            else if (a == "adhoc_dim") c.adhoc_dim = r.count(b);
            else if (a == "mlp_input") c.mlp_input = pool(b);
            else if (a == "svm_input") c.svm_input = pool(b);
            else if (a == "seed") c.seed = r.count(b);
            else r.bad("unknown config key '" + a + "'");
        } else if (key == "lexicon") {
            ls >> a;
            const std::size_t n = r.count(a);
            std::vector<std::string> units;
            units.reserve(n);
            for (std::size_t i = 0; i < n; ++i) units.push_back(r.require());
            m.lexicon = std::make_shared<const Lexicon>(std::move(units));
        } else if (key == "tfidf") {
            ls >> a;
            const std::size_t n = r.count(a);
            std::vector<std::string> terms;
            std::vector<double> idf;
            for (std::size_t i = 0; i < n; ++i) {
                std::istringstream ts(r.require());
                std::string term, value;
                if (!(ts >> term >> value)) r.bad("tf-idf entries need a term and an idf");
                terms.push_back(term);
                idf.push_back(r.number(value));
            }
            m.tfidf = std::make_shared<const TfidfModel>(TfidfModel::from_parts(std::move(terms), std::move(idf)));
        } else if (key == "tensor") {
            if (!(ls >> a)) r.bad("tensor needs a name");
            Tensor t = read_tensor(r, a);
            if (a == kFrozen) {
                m.frozen_embedding = std::make_shared<const Tensor>(std::move(t));
            } else {
                if (m.has_param(a)) r.bad("tensor '" + a + "' appears twice");
                m.params.push_back(std::move(t));
            }
        } else {
            r.bad("unknown record '" + key + "'");
        }
    }
    if (!ended) r.bad("checkpoint is truncated (no 'end' record)");
    if (!have_arch) r.bad("checkpoint names no architecture");
    m.config.validate();
    return m;
}

NetworkModel load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open checkpoint '" + path + "'");
    return load_checkpoint(in);
}

}  // namespace lingemb
