#include "lingemb/evaluation.hpp"
#include "lingemb/error.hpp"
#include "lingemb/seed.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <thread>

namespace lingemb {

std::vector<std::size_t> FoldAssignment::test_indices(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i) {
        if (fold[i] == f) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldAssignment::train_indices(std::size_t f) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold.size(); ++i) {
        if (fold[i] != f) out.push_back(i);
    }
    return out;
}

FoldAssignment stratified_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed) {
    if (k < 2) fail(ErrorKind::Parameter, "k must be at least 2");
    if (k > labels.size()) {
        fail(ErrorKind::Parameter,
             "k = " + std::to_string(k) + " exceeds the " + std::to_string(labels.size()) + " documents");
    }
    FoldAssignment out;
    out.k = k;
    out.fold.assign(labels.size(), 0);
    std::mt19937_64 rng(mix_seed(seed, 0xF01D));
    std::size_t next = 0;
    for (const Label label : {Label::Clean, Label::Harmful}) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == label) members.push_back(i);
        }
        if (members.size() < k) {
            out.warnings.push_back(std::string(label == Label::Harmful ? "harmful" : "clean") + " label has only " +
                                   std::to_string(members.size()) + " documents for " + std::to_string(k) +
                                   " folds");
        }
        std::shuffle(members.begin(), members.end(), rng);
        for (const std::size_t i : members) {
            out.fold[i] = next;
            next = (next + 1) % k;
        }
    }
    return out;
}

ClassWeights derive_class_weights(std::span<const Label> labels) {
    const auto harmful = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), Label::Harmful));
    const std::size_t clean = labels.size() - harmful;
    if (harmful == 0 || clean == 0) fail(ErrorKind::DegenerateData, "class weights need both labels present");
    const double n = static_cast<double>(labels.size());
    return {n / (2.0 * static_cast<double>(clean)), n / (2.0 * static_cast<double>(harmful))};
}

namespace {

double safe_div(double a, double b) { return b == 0.0 ? 0.0 : a / b; }

double f1_of(std::size_t tp, std::size_t fp, std::size_t fn) {
    const double p = safe_div(static_cast<double>(tp), static_cast<double>(tp + fp));
    const double r = safe_div(static_cast<double>(tp), static_cast<double>(tp + fn));
    return safe_div(2.0 * p * r, p + r);
}

double mean_of(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

}  // namespace

MetricsReport f_score(std::span<const Label> predictions, std::span<const Label> golds) {
    if (predictions.size() != golds.size()) {
        fail(ErrorKind::Shape, "f_score: " + std::to_string(predictions.size()) + " predictions for " +
                                   std::to_string(golds.size()) + " gold labels");
    }
    MetricsReport r;
    for (std::size_t i = 0; i < golds.size(); ++i) {
        const bool p = predictions[i] == Label::Harmful;
        const bool g = golds[i] == Label::Harmful;
        if (p && g) ++r.tp;
        else if (p) ++r.fp;
        else if (g) ++r.fn;
        else ++r.tn;
    }
    r.precision = safe_div(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fp));
    r.recall = safe_div(static_cast<double>(r.tp), static_cast<double>(r.tp + r.fn));
    r.f1 = safe_div(2.0 * r.precision * r.recall, r.precision + r.recall);
    r.f1_clean = f1_of(r.tn, r.fn, r.fp);
    r.f1_macro = 0.5 * (r.f1 + r.f1_clean);
    return r;
}

std::string CellSpec::name() const {
    return std::string(to_string(condition)) + "/" + std::string(to_string(arch)) + "/" +
           (column.empty() ? std::string(to_string(scheme)) : column);
}

std::vector<std::vector<std::string>> encode_corpus(const LabeledCorpus& corpus, FeatureScheme scheme,
                                                    const EncodingOptions& options) {
    const FeatureScheme unit_scheme = document_unit_scheme(scheme, options);
    std::vector<std::vector<std::string>> out;
    out.reserve(corpus.size());
    for (const auto& doc : corpus.documents) {
        try {
            out.push_back(encode_document(doc, unit_scheme, options));
        } catch (const Error& e) {
            throw Error(e.kind(), "document '" + doc.id + "': " + e.what());
        }
    }
    return out;
}

FoldSplit split_fold(const std::vector<std::vector<std::string>>& docs, std::span<const Label> labels,
                     const FoldAssignment& folds, std::size_t f) {
    if (docs.size() != labels.size() || folds.fold.size() != docs.size()) {
        fail(ErrorKind::Shape, "documents, labels and fold assignment differ in size");
    }
    FoldSplit s;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        if (folds.fold[i] == f) {
            s.test_docs.push_back(docs[i]);
            s.test_labels.push_back(labels[i]);
        } else {
            s.train_docs.push_back(docs[i]);
            s.train_labels.push_back(labels[i]);
        }
    }
    return s;
}

std::uint64_t fold_seed(std::uint64_t seed, std::size_t fold) { return mix_seed(seed, 1000 + fold); }

namespace {

void check_cell(const CellSpec& cell) {
    if (cell.condition == Condition::Pretrained) {
        if (cell.embeddings == nullptr) fail(ErrorKind::Configuration, "no embeddings supplied for this column");
        if (cell.embeddings->scheme && *cell.embeddings->scheme != cell.scheme) {
            fail(ErrorKind::Configuration, "embeddings were trained on " +
                                               std::string(to_string(*cell.embeddings->scheme)) + ", not " +
                                               std::string(to_string(cell.scheme)));
        }
    } else if (!is_unit_scheme(cell.scheme)) {
        fail(ErrorKind::Configuration, "DEPC only defines embedding contexts; it has no ad-hoc cell");
    }
}

CellResult run_encoded(const std::vector<std::vector<std::string>>& docs, std::span<const Label> labels,
                       const CellSpec& cell, const EvalConfig& config) {
    check_cell(cell);
    const FoldAssignment folds = stratified_folds(labels, config.k, config.seed);
    CellResult r;
    r.scheme = cell.scheme;
    r.arch = cell.arch;
    r.condition = cell.condition;
    r.column = cell.column.empty() ? std::string(to_string(cell.scheme)) : cell.column;
    for (std::size_t f = 0; f < config.k; ++f) {
        const FoldSplit split = split_fold(docs, labels, folds, f);
        ClassifierConfig cc = config.classifier;
        cc.seed = fold_seed(config.seed, f);
        const ClassWeights weights = derive_class_weights(split.train_labels);
        const NetworkModel model = train_classifier(cell.arch, cell.condition, split.train_docs, split.train_labels,
                                                    weights, cell.embeddings, cc);
        std::vector<Label> predicted;
        predicted.reserve(split.test_docs.size());
        for (const auto& doc : split.test_docs) predicted.push_back(predict(model, doc).label);
        const MetricsReport m = f_score(predicted, split.test_labels);
        r.fold_f1.push_back(m.f1);
        r.fold_f1_macro.push_back(m.f1_macro);
        r.fold_seeds.push_back(cc.seed);
    }
    r.mean_f1 = mean_of(r.fold_f1);
    r.std_f1 = sample_std(r.fold_f1);
    r.mean_f1_macro = mean_of(r.fold_f1_macro);
    r.ok = true;
    return r;
}

CellResult run_guarded(const std::vector<std::vector<std::string>>& docs, std::span<const Label> labels,
                       const CellSpec& cell, const EvalConfig& config) {
    try {
        return run_encoded(docs, labels, cell, config);
    } catch (const Error& e) {
        throw Error(e.kind(), cell.name() + ": " + e.what());
    }
}

}  // namespace

CellResult run_cell(const LabeledCorpus& corpus, const CellSpec& cell, const EvalConfig& config) {
    std::vector<std::vector<std::string>> docs;
    try {
        docs = encode_corpus(corpus, cell.scheme, config.encoding);
    } catch (const Error& e) {
        throw Error(e.kind(), cell.name() + ": " + e.what());
    }
    return run_guarded(docs, corpus.labels(), cell, config);
}

std::size_t ExperimentReport::failed() const {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const CellResult& c) { return !c.ok; }));
}

const CellResult* ExperimentReport::find(Condition condition, Architecture arch, const std::string& column) const {
    for (const auto& c : cells) {
        if (c.condition == condition && c.arch == arch && c.column == column) return &c;
    }
    return nullptr;
}

ExperimentReport run_matrix(const LabeledCorpus& corpus, const std::vector<MatrixColumn>& columns,
                            const std::vector<Architecture>& models, const std::vector<Condition>& conditions,
                            const EvalConfig& config) {
    if (columns.empty()) fail(ErrorKind::Parameter, "experiment matrix needs at least one scheme");
    if (models.empty()) fail(ErrorKind::Parameter, "experiment matrix needs at least one model");
    if (conditions.empty()) fail(ErrorKind::Parameter, "experiment matrix needs at least one condition");
    for (std::size_t i = 0; i < columns.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (columns[i].label == columns[j].label) {
                fail(ErrorKind::Parameter, "column '" + columns[i].label + "' is listed twice");
            }
        }
    }

    ExperimentReport report;
    report.k = config.k;
    report.seed = config.seed;
    report.conditions = conditions;
    report.models = models;
    for (const auto& c : columns) report.columns.push_back(c.label);

    // Encode each column once; an encoding failure fails that column's cells.
    std::vector<std::vector<std::vector<std::string>>> encoded(columns.size());
    std::vector<std::string> encode_error(columns.size());
    for (std::size_t c = 0; c < columns.size(); ++c) {
        try {
            encoded[c] = encode_corpus(corpus, columns[c].scheme, config.encoding);
        } catch (const Error& e) {
            encode_error[c] = e.what();
        }
    }
    const std::vector<Label> labels = corpus.labels();

    std::vector<CellSpec> specs;
    std::vector<std::size_t> column_of;
    for (const auto cond : conditions) {
        for (const auto arch : models) {
            for (std::size_t c = 0; c < columns.size(); ++c) {
                CellSpec s;
                s.scheme = columns[c].scheme;
                s.arch = arch;
                s.condition = cond;
                s.column = columns[c].label;
                s.embeddings = cond == Condition::Pretrained ? columns[c].embeddings : nullptr;
                specs.push_back(s);
                column_of.push_back(c);
            }
        }
    }
    report.cells.resize(specs.size());

    auto run_one = [&](std::size_t i) {
        const CellSpec& s = specs[i];
        CellResult& out = report.cells[i];
        const std::size_t c = column_of[i];
        try {
            if (!encode_error[c].empty()) throw Error(ErrorKind::AnnotationRequired, s.name() + ": " + encode_error[c]);
            out = run_guarded(encoded[c], labels, s, config);
        } catch (const std::exception& e) {
            out = CellResult{};
            out.ok = false;
            out.error = e.what();
        }
        out.scheme = s.scheme;
        out.arch = s.arch;
        out.condition = s.condition;
        out.column = s.column;
    };

    const std::size_t workers = std::max<std::size_t>(1, std::min(config.workers, specs.size()));
    if (workers == 1) {
        for (std::size_t i = 0; i < specs.size(); ++i) run_one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < specs.size(); i = next++) run_one(i);
            });
        }
        for (auto& t : pool) t.join();
    }
    return report;
}

std::string render_tsv(const ExperimentReport& report) {
    std::string out;
    for (std::size_t ci = 0; ci < report.conditions.size(); ++ci) {
        const Condition cond = report.conditions[ci];
        if (ci > 0) out += '\n';
        std::vector<std::string> columns;
        for (const auto& col : report.columns) {
            const bool present = std::any_of(report.cells.begin(), report.cells.end(), [&](const CellResult& c) {
                return c.condition == cond && c.column == col;
            });
            if (present) columns.push_back(col);
        }
        out += to_string(cond);
        for (const auto& col : columns) out += '\t' + col;
        out += '\n';
        for (const auto arch : report.models) {
            out += to_string(arch);
            for (const auto& col : columns) {
                const CellResult* c = report.find(cond, arch, col);
                out += '\t';
                out += c == nullptr ? "-" : c->ok ? fixed3(c->mean_f1) : "failed";
            }
            out += '\n';
        }
    }
    return out;
}

std::string render_json(const ExperimentReport& report) {
    using nlohmann::ordered_json;
    ordered_json j;
    j["metric"] = "f1_harmful";
    j["secondary_metric"] = "f1_macro";
    j["k"] = report.k;
    j["seed"] = report.seed;
    j["conditions"] = ordered_json::array();
    for (const auto c : report.conditions) j["conditions"].push_back(to_string(c));
    j["models"] = ordered_json::array();
    for (const auto m : report.models) j["models"].push_back(to_string(m));
    j["columns"] = report.columns;
    ordered_json cells = ordered_json::array();
    for (const auto& c : report.cells) {
        ordered_json cell;
        cell["condition"] = to_string(c.condition);
        cell["model"] = to_string(c.arch);
        cell["column"] = c.column;
        cell["scheme"] = to_string(c.scheme);
        cell["status"] = c.ok ? "ok" : "failed";
        if (c.ok) {
            cell["mean_f1"] = c.mean_f1;
            cell["std_f1"] = c.std_f1;
            cell["mean_f1_macro"] = c.mean_f1_macro;
            cell["fold_f1"] = c.fold_f1;
            cell["fold_f1_macro"] = c.fold_f1_macro;
            cell["fold_seeds"] = c.fold_seeds;
        } else {
            cell["error"] = c.error;
        }
        cells.push_back(std::move(cell));
    }
    j["cells"] = std::move(cells);
    return j.dump(2) + "\n";
}

ExperimentReport parse_report_json(const std::string& text) {
    using nlohmann::json;
    ExperimentReport r;
    try {
        const json j = json::parse(text);
        r.k = j.at("k").get<std::size_t>();
        r.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& c : j.at("conditions")) r.conditions.push_back(parse_condition(c.get<std::string>()));
        for (const auto& m : j.at("models")) r.models.push_back(parse_architecture(m.get<std::string>()));
        r.columns = j.at("columns").get<std::vector<std::string>>();
        for (const auto& c : j.at("cells")) {
            CellResult cell;
            cell.condition = parse_condition(c.at("condition").get<std::string>());
            cell.arch = parse_architecture(c.at("model").get<std::string>());
            cell.column = c.at("column").get<std::string>();
            cell.scheme = parse_scheme(c.at("scheme").get<std::string>());
            cell.ok = c.at("status").get<std::string>() == "ok";
            if (cell.ok) {
                cell.mean_f1 = c.at("mean_f1").get<double>();
                cell.std_f1 = c.at("std_f1").get<double>();
                cell.mean_f1_macro = c.at("mean_f1_macro").get<double>();
                cell.fold_f1 = c.at("fold_f1").get<std::vector<double>>();
                cell.fold_f1_macro = c.at("fold_f1_macro").get<std::vector<double>>();
                cell.fold_seeds = c.at("fold_seeds").get<std::vector<std::uint64_t>>();
            } else {
                cell.error = c.value("error", "");
            }
            r.cells.push_back(std::move(cell));
        }
    } catch (const json::exception& e) {
        fail(ErrorKind::Format, std::string("report JSON: ") + e.what());
    }
    return r;
}

}  // namespace lingemb
