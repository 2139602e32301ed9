#include "pipeline.hpp"

#include "lingemb/corpus.hpp"
#include "lingemb/error.hpp"
#include "lingemb/evaluation.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;

namespace lingemb::cli {

namespace {

[[noreturn]] void config_error(const std::string& msg) { fail(ErrorKind::Configuration, msg); }

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) config_error(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) config_error("unknown key '" + key + "' in " + where);
    }
}

template <class T>
T get(const json& j, const char* key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        config_error(where + "." + key + " has the wrong type");
    }
}

std::string resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() || base.empty() ? path.string() : (base / path).string();
}

UnitSource parse_unit_source(const std::string& s) {
    if (s == "form") return UnitSource::Form;
    if (s == "lemma") return UnitSource::Lemma;
    config_error("unit source must be 'form' or 'lemma', got '" + s + "'");
}

PoolingInput parse_pooling(const std::string& s) {
    if (s == "mean") return PoolingInput::Mean;
    if (s == "flatten") return PoolingInput::Flatten;
    config_error("pooling must be 'mean' or 'flatten', got '" + s + "'");
}

std::size_t effective_workers(const PipelineConfig& c) { return c.deterministic ? 1 : c.workers; }

std::string stream_file(FeatureScheme s) {
    return std::string(to_string(s)) + (s == FeatureScheme::Depc ? ".tsv" : ".txt");
}

void require_file(const std::optional<std::string>& p, const char* what) {
    if (p && !fs::is_regular_file(*p)) config_error(std::string(what) + " '" + *p + "' does not exist");
}

const EmbeddingSource* source_for(const PipelineConfig& c, const std::string& label) {
    for (const auto& e : c.embeddings) {
        if (e.label == label) return &e;
    }
    return nullptr;
}

struct Pretraining {
    std::vector<AnnotatedSentence> annotated;
    std::vector<std::vector<std::string>> raw;
};

Pretraining load_pretraining(const PipelineConfig& c) {
    Pretraining p;
    if (c.corpus) {
        p.annotated = parse_conllu_file(*c.corpus);
        return p;
    }
    std::ifstream in(*c.corpus_text);
    if (!in) fail(ErrorKind::Io, "cannot open '" + *c.corpus_text + "'");
    std::string line;
    while (std::getline(in, line)) {
        auto units = tokenize_raw(line);
        if (!units.empty()) p.raw.push_back(std::move(units));
    }
    return p;
}

std::vector<std::vector<std::string>> unit_sentences(const Pretraining& p, FeatureScheme scheme,
                                                     const EncodingOptions& enc) {
    if (p.annotated.empty()) {
        if (scheme != FeatureScheme::Tok) {
            fail(ErrorKind::AnnotationRequired, std::string(to_string(scheme)) + " needs an annotated corpus");
        }
        return p.raw;
    }
    std::vector<std::vector<std::string>> out;
    out.reserve(p.annotated.size());
    for (const auto& s : p.annotated) out.push_back(encode_units(s, scheme, enc));
    return out;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
    return out;
}

LabeledCorpus load_dataset(const PipelineConfig& c) { return load_labeled_dataset(*c.dataset, c.annotations); }

std::map<std::string, EmbeddingModel> load_sources(const PipelineConfig& c, std::ostream& log) {
    std::map<std::string, EmbeddingModel> out;
    for (const auto& e : c.embeddings) {
        try {
            out.emplace(e.label, load_embeddings(e.path));
        } catch (const Error& err) {
            throw Error(err.kind(), "embeddings '" + e.path + "': " + err.what());
        }
        log << "loaded " << e.label << " vectors from " << e.path << " (" << out.at(e.label).target_vocab.size()
            << " units, d = " << out.at(e.label).dim << ")\n";
    }
    return out;
}

}  // namespace

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
    const std::string w = "train";
    check_keys(j, w,
               {"d", "window", "negatives", "initial_lr", "final_lr", "epochs", "min_count", "subsample_t", "seed",
                "worker_count"});
    if (j.contains("d")) c.d = get<std::size_t>(j, "d", w);
    if (j.contains("window")) c.window = get<std::size_t>(j, "window", w);
    if (j.contains("negatives")) c.negatives = get<std::size_t>(j, "negatives", w);
    if (j.contains("initial_lr")) c.initial_lr = get<double>(j, "initial_lr", w);
    if (j.contains("final_lr")) c.final_lr = get<double>(j, "final_lr", w);
    if (j.contains("epochs")) c.epochs = get<std::size_t>(j, "epochs", w);
    if (j.contains("min_count")) c.min_count = get<std::uint64_t>(j, "min_count", w);
    if (j.contains("subsample_t")) c.subsample_t = get<double>(j, "subsample_t", w);
    if (j.contains("seed")) c.seed = get<std::uint64_t>(j, "seed", w);
    if (j.contains("worker_count")) c.worker_count = get<std::size_t>(j, "worker_count", w);
    return c;
}

json to_json(const TrainConfig& c) {
    return json{{"d", c.d},
                {"window", c.window},
                {"negatives", c.negatives},
                {"initial_lr", c.initial_lr},
                {"final_lr", c.final_lr},
                {"epochs", c.epochs},
                {"min_count", c.min_count},
                {"subsample_t", c.subsample_t},
                {"seed", c.seed},
                {"worker_count", c.worker_count}};
}

ClassifierConfig classifier_config_from_json(const json& j, ClassifierConfig c) {
    const std::string w = "classifier";
    check_keys(j, w,
               {"maxlen", "mlp_hidden", "cnn_filters", "lstm_hidden", "dropout", "batch_size", "epochs", "adam_alpha",
                "adam_beta1", "adam_beta2", "adam_epsilon", "svm_lambda", "svm_epochs", "svm_lr", "adhoc_dim",
                "mlp_input", "svm_input"});
    if (j.contains("maxlen")) c.maxlen = get<std::size_t>(j, "maxlen", w);
    if (j.contains("mlp_hidden")) c.mlp_hidden = get<std::size_t>(j, "mlp_hidden", w);
    if (j.contains("cnn_filters")) c.cnn_filters = get<std::size_t>(j, "cnn_filters", w);
    if (j.contains("lstm_hidden")) c.lstm_hidden = get<std::size_t>(j, "lstm_hidden", w);
    if (j.contains("dropout")) c.dropout = get<double>(j, "dropout", w);
    if (j.contains("batch_size")) c.batch_size = get<std::size_t>(j, "batch_size", w);
    if (j.contains("epochs")) c.epochs = get<std::size_t>(j, "epochs", w);
    if (j.contains("adam_alpha")) c.adam.alpha = get<double>(j, "adam_alpha", w);
    if (j.contains("adam_beta1")) c.adam.beta1 = get<double>(j, "adam_beta1", w);
    if (j.contains("adam_beta2")) c.adam.beta2 = get<double>(j, "adam_beta2", w);
    if (j.contains("adam_epsilon")) c.adam.epsilon = get<double>(j, "adam_epsilon", w);
    if (j.contains("svm_lambda")) c.svm_lambda = get<double>(j, "svm_lambda", w);
    if (j.contains("svm_epochs")) c.svm_epochs = get<std::size_t>(j, "svm_epochs", w);
    if (j.contains("svm_lr")) c.svm_lr = get<double>(j, "svm_lr", w);
    if (j.contains("adhoc_dim")) c.adhoc_dim = get<std::size_t>(j, "adhoc_dim", w);
    if (j.contains("mlp_input")) c.mlp_input = parse_pooling(get<std::string>(j, "mlp_input", w));
    if (j.contains("svm_input")) c.svm_input = parse_pooling(get<std::string>(j, "svm_input", w));
    return c;
}

PipelineConfig config_from_json(const json& j, const fs::path& base) {
    check_keys(j, "config",
               {"seed", "workers", "deterministic", "out", "paths", "embeddings", "schemes", "encoding", "train",
                "classifier", "experiment"});
    PipelineConfig c;
    if (j.contains("train")) c.train = train_config_from_json(j.at("train"));
    // The global seed and worker count propagate into the trainer; a bare
    // train block supplies them when the top level does not.
    c.seed = j.contains("seed") ? get<std::uint64_t>(j, "seed", "config") : c.train.seed;
    c.workers = j.contains("workers") ? get<std::size_t>(j, "workers", "config") : c.train.worker_count;
    if (j.contains("deterministic")) c.deterministic = get<bool>(j, "deterministic", "config");
    if (j.contains("out")) c.out = resolve(base, get<std::string>(j, "out", "config"));
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        check_keys(p, "paths", {"dataset", "annotations", "corpus", "corpus_text", "encoded", "report"});
        auto opt = [&](const char* key, std::optional<std::string>& dst) {
            if (p.contains(key)) dst = resolve(base, get<std::string>(p, key, "paths"));
        };
        opt("dataset", c.dataset);
        opt("annotations", c.annotations);
        opt("corpus", c.corpus);
        opt("corpus_text", c.corpus_text);
        opt("encoded", c.encoded);
        opt("report", c.report);
    }
    if (j.contains("embeddings")) {
        const json& e = j.at("embeddings");
        if (!e.is_object()) config_error("embeddings must map column labels to files");
        for (const auto& [label, v] : e.items()) {
            EmbeddingSource s;
            s.label = label;
            if (v.is_string()) {
                try {
                    s.scheme = parse_scheme(label);
                } catch (const Error&) {
                    config_error("embeddings label '" + label + "' is not a scheme name; give {scheme, path}");
                }
                s.path = resolve(base, v.get<std::string>());
            } else {
                check_keys(v, "embeddings." + label, {"scheme", "path"});
                s.scheme = parse_scheme(get<std::string>(v, "scheme", "embeddings." + label));
                s.path = resolve(base, get<std::string>(v, "path", "embeddings." + label));
            }
            c.embeddings.push_back(std::move(s));
        }
    }
    if (j.contains("schemes")) {
        for (const auto& s : get<std::vector<std::string>>(j, "schemes", "config")) c.schemes.push_back(parse_scheme(s));
    }
    if (j.contains("encoding")) {
        const json& e = j.at("encoding");
        check_keys(e, "encoding", {"dep_units", "depc_targets"});
        if (e.contains("dep_units")) c.encoding.dep_units = parse_unit_source(get<std::string>(e, "dep_units", "encoding"));
        if (e.contains("depc_targets")) {
            c.encoding.depc_targets = parse_unit_source(get<std::string>(e, "depc_targets", "encoding"));
        }
    }
    if (j.contains("classifier")) c.classifier = classifier_config_from_json(j.at("classifier"));
    if (j.contains("experiment")) {
        const json& x = j.at("experiment");
        check_keys(x, "experiment", {"models", "conditions", "k"});
        if (x.contains("models")) {
            c.models.clear();
            for (const auto& m : get<std::vector<std::string>>(x, "models", "experiment")) {
                c.models.push_back(parse_architecture(m));
            }
        }
        if (x.contains("conditions")) {
            c.conditions.clear();
            for (const auto& m : get<std::vector<std::string>>(x, "conditions", "experiment")) {
                c.conditions.push_back(parse_condition(m));
            }
        }
        if (x.contains("k")) c.k = get<std::size_t>(x, "k", "experiment");
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_error("config file '" + path + "' does not exist");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        config_error("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j, fs::path(path).parent_path());
}

void apply_overrides(PipelineConfig& c, const Overrides& o) {
    if (o.seed) c.seed = *o.seed;
    if (o.workers) c.workers = *o.workers;
    if (o.deterministic) c.deterministic = true;
    if (!o.schemes.empty()) {
        c.schemes.clear();
        for (const auto& s : o.schemes) c.schemes.push_back(parse_scheme(s));
    }
    if (!o.models.empty()) {
        c.models.clear();
        for (const auto& m : o.models) c.models.push_back(parse_architecture(m));
    }
    if (o.condition) c.conditions = {parse_condition(*o.condition)};
    if (o.out) c.out = *o.out;
}

void validate(Command command, const PipelineConfig& c) {
    TrainConfig tc = c.train;
    tc.seed = c.seed;
    tc.worker_count = effective_workers(c);
    if (c.workers == 0) config_error("workers must be at least 1");
    tc.validate();
    c.classifier.validate();
    if (c.k < 2) config_error("experiment.k must be at least 2");

    require_file(c.dataset, "dataset");
    require_file(c.annotations, "annotations");
    require_file(c.corpus, "corpus");
    require_file(c.corpus_text, "corpus_text");
    require_file(c.report, "report");
    if (c.encoded && !fs::is_directory(*c.encoded)) config_error("encoded directory '" + *c.encoded + "' does not exist");
    // Vectors are inputs only to the classifier commands; earlier stages may run before they exist.
    const bool reads_vectors = command == Command::TrainClassifier || command == Command::Experiment;
    if (reads_vectors && std::find(c.conditions.begin(), c.conditions.end(), Condition::Pretrained) != c.conditions.end()) {
        for (const auto& e : c.embeddings) require_file(e.path, ("embeddings for " + e.label).c_str());
    }
    if (fs::exists(c.out) && !fs::is_directory(c.out)) config_error("output '" + c.out + "' is not a directory");

    auto need_schemes = [&] {
        if (c.schemes.empty()) fail(ErrorKind::Parameter, "no scheme requested (use --scheme or \"schemes\")");
    };
    auto pretraining_supports = [&](FeatureScheme s) {
        if (!c.corpus && s != FeatureScheme::Tok) {
            fail(ErrorKind::AnnotationRequired,
                 std::string(to_string(s)) + " needs an annotated corpus; corpus_text is raw text");
        }
    };
    auto dataset_supports = [&](FeatureScheme s) {
        if (!c.dataset) config_error("paths.dataset is required");
        if (!c.annotations && document_unit_scheme(s, c.encoding) != FeatureScheme::Tok) {
            fail(ErrorKind::AnnotationRequired, std::string(to_string(s)) + " needs paths.annotations");
        }
    };

    switch (command) {
        case Command::IngestCheck:
            if (!c.dataset && !c.corpus && !c.corpus_text) {
                config_error("ingest-check needs paths.dataset, paths.corpus or paths.corpus_text");
            }
            if (c.annotations && !c.dataset) config_error("paths.annotations needs paths.dataset");
            break;
        case Command::Encode:
            need_schemes();
            if (!c.corpus && !c.corpus_text) config_error("encode needs paths.corpus or paths.corpus_text");
            for (auto s : c.schemes) pretraining_supports(s);
            break;
        case Command::TrainEmbeddings:
            need_schemes();
            if (c.encoded) {
                for (auto s : c.schemes) {
                    const fs::path f = fs::path(*c.encoded) / stream_file(s);
                    if (!fs::is_regular_file(f)) config_error("encoded stream '" + f.string() + "' does not exist");
                }
            } else {
                if (!c.corpus && !c.corpus_text) {
                    config_error("train-embeddings needs paths.encoded, paths.corpus or paths.corpus_text");
                }
                for (auto s : c.schemes) pretraining_supports(s);
            }
            break;
        case Command::TrainClassifier:
            need_schemes();
            if (c.models.empty()) fail(ErrorKind::Parameter, "no model requested");
            if (c.conditions.size() != 1) config_error("train-classifier needs exactly one --condition");
            for (auto s : c.schemes) {
                dataset_supports(s);
                if (c.conditions[0] == Condition::Pretrained && !source_for(c, std::string(to_string(s)))) {
                    config_error("no embeddings configured for " + std::string(to_string(s)));
                }
                if (c.conditions[0] == Condition::Adhoc && !is_unit_scheme(s)) {
                    config_error("DEPC has no ad-hoc classifier");
                }
            }
            break;
        case Command::Experiment:
            if (c.schemes.empty() && c.embeddings.empty()) need_schemes();
            if (c.models.empty()) fail(ErrorKind::Parameter, "no model requested");
            if (c.conditions.empty()) fail(ErrorKind::Parameter, "no condition requested");
            for (auto s : c.schemes) dataset_supports(s);
            for (const auto& e : c.embeddings) dataset_supports(e.scheme);
            break;
        case Command::Report:
            if (!c.report) config_error("report needs paths.report");
            break;
    }
}

int cmd_ingest_check(const PipelineConfig& c, std::ostream& out, std::ostream&) {
    if (c.dataset) {
        const LabeledCorpus corpus = load_dataset(c);
        std::size_t annotated = 0, sentences = 0;
        for (const auto& d : corpus.documents) {
            annotated += d.annotated();
            sentences += d.sentences.size();
        }
        out << "dataset " << *c.dataset << ": " << corpus.size() << " documents, " << corpus.clean << " clean, "
            << corpus.harmful << " harmful, " << annotated << " annotated (" << sentences << " sentences)\n";
    }
    if (c.corpus || c.corpus_text) {
        const Pretraining p = load_pretraining(c);
        std::size_t tokens = 0;
        for (const auto& s : p.annotated) tokens += s.size();
        for (const auto& s : p.raw) tokens += s.size();
        out << "corpus " << (c.corpus ? *c.corpus : *c.corpus_text) << ": "
            << (p.annotated.empty() ? p.raw.size() : p.annotated.size()) << " sentences, " << tokens << " tokens"
            << (p.annotated.empty() ? " (raw text, TOK only)" : "") << '\n';
    }
    return kOk;
}

int cmd_encode(const PipelineConfig& c, std::ostream& out, std::ostream&) {
    const Pretraining p = load_pretraining(c);
    fs::create_directories(c.out);
    for (auto scheme : c.schemes) {
        const fs::path path = fs::path(c.out) / stream_file(scheme);
        std::ofstream file = open_out(path);
        std::size_t written = 0;
        if (scheme == FeatureScheme::Depc) {
            std::vector<TrainingPair> pairs;
            for (const auto& s : p.annotated) {
                auto sp = dependency_pairs(s, c.encoding.depc_targets);
                pairs.insert(pairs.end(), sp.begin(), sp.end());
            }
            write_pairs_tsv(file, pairs);
            written = pairs.size();
        } else {
            const auto sentences = unit_sentences(p, scheme, c.encoding);
            write_unit_stream(file, sentences);
            written = sentences.size();
        }
        if (!file) fail(ErrorKind::Io, "failed writing '" + path.string() + "'");
        out << "wrote " << path.string() << " (" << written << (scheme == FeatureScheme::Depc ? " pairs" : " sentences")
            << ")\n";
    }
    return kOk;
}

int cmd_train_embeddings(const PipelineConfig& c, std::ostream& out, std::ostream& log) {
    std::optional<Pretraining> pre;
    if (!c.encoded) pre = load_pretraining(c);
    TrainConfig tc = c.train;
    tc.seed = c.seed;
    tc.worker_count = effective_workers(c);

    for (auto scheme : c.schemes) {
        const std::string name(to_string(scheme));
        std::unique_ptr<PairSource> source;
        if (c.encoded) {
            const fs::path f = fs::path(*c.encoded) / stream_file(scheme);
            std::ifstream in(f);
            if (!in) fail(ErrorKind::Io, "cannot open '" + f.string() + "'");
            if (scheme == FeatureScheme::Depc) {
                source = std::make_unique<ExplicitPairSource>(read_pairs_tsv(in));
            } else {
                source = std::make_unique<WindowPairSource>(read_unit_stream(in), tc.window);
            }
        } else if (scheme == FeatureScheme::Depc) {
            source = std::make_unique<DependencyPairSource>(pre->annotated, c.encoding.depc_targets);
        } else {
            source = std::make_unique<WindowPairSource>(unit_sentences(*pre, scheme, c.encoding), tc.window);
        }
        EmbeddingModel model;
        try {
            model = train_embeddings(*source, tc, [&](const EpochStats& s) {
                log << '[' << name << "] epoch " << s.epoch << '/' << tc.epochs << " loss " << s.mean_loss << " lr "
                    << s.lr << " pairs " << s.pairs << '\n';
            });
        } catch (const Error& e) {
            throw Error(e.kind(), name + ": " + e.what());
        }
        fs::create_directories(c.out);
        const fs::path path = fs::path(c.out) / (name + ".vec");
        save_embeddings(model, path.string());
        out << "wrote " << path.string() << " (" << model.target_vocab.size() << " x " << model.dim << ")\n";
    }
    return kOk;
}

int cmd_train_classifier(const PipelineConfig& c, std::ostream& out, std::ostream& log) {
    const LabeledCorpus corpus = load_dataset(c);
    const auto labels = corpus.labels();
    const ClassWeights weights = derive_class_weights(labels);
    const Condition cond = c.conditions.front();
    std::map<std::string, EmbeddingModel> sources;
    if (cond == Condition::Pretrained) sources = load_sources(c, log);
    fs::create_directories(c.out);
    for (auto scheme : c.schemes) {
        const std::string sname(to_string(scheme));
        const auto docs = encode_corpus(corpus, scheme, c.encoding);
        const EmbeddingModel* emb = cond == Condition::Pretrained ? &sources.at(sname) : nullptr;
        for (auto arch : c.models) {
            const std::string cell = std::string(to_string(cond)) + "-" + std::string(to_string(arch)) + "-" + sname;
            ClassifierConfig cc = c.classifier;
            cc.seed = c.seed;
            TrainingLog tlog;
            NetworkModel model;
            try {
                model = train_classifier(arch, cond, docs, labels, weights, emb, cc, &tlog);
            } catch (const Error& e) {
                throw Error(e.kind(), cell + ": " + e.what());
            }
            for (std::size_t e = 0; e < tlog.epoch_loss.size(); ++e) {
                log << '[' << cell << "] epoch " << e + 1 << '/' << tlog.epoch_loss.size() << " loss "
                    << tlog.epoch_loss[e] << '\n';
            }
            std::vector<Label> predicted;
            for (const auto& d : docs) predicted.push_back(predict(model, d).label);
            const auto m = f_score(predicted, labels);
            const fs::path path = fs::path(c.out) / (cell + ".ckpt");
            save_checkpoint(model, path.string());
            out << "wrote " << path.string() << " (training F1 " << m.f1 << ", macro-F1 " << m.f1_macro << ")\n";
        }
    }
    return kOk;
}

int cmd_experiment(const PipelineConfig& c, std::ostream& out, std::ostream& log) {
    const LabeledCorpus corpus = load_dataset(c);
    const bool pretrained = std::find(c.conditions.begin(), c.conditions.end(), Condition::Pretrained) != c.conditions.end();
    const std::map<std::string, EmbeddingModel> sources = pretrained ? load_sources(c, log)
                                                                     : std::map<std::string, EmbeddingModel>{};

    EvalConfig ec;
    ec.k = c.k;
    ec.seed = c.seed;
    ec.classifier = c.classifier;
    ec.encoding = c.encoding;
    ec.workers = effective_workers(c);

    ExperimentReport merged;
    merged.k = c.k;
    merged.seed = c.seed;
    merged.models = c.models;
    std::set<std::string> scheme_names;
    for (auto s : c.schemes) scheme_names.insert(std::string(to_string(s)));
    for (auto s : c.schemes) merged.columns.push_back(std::string(to_string(s)));
    for (const auto& e : c.embeddings) {
        if (!scheme_names.count(e.label)) merged.columns.push_back(e.label);
    }

    for (const auto cond : c.conditions) {
        std::vector<MatrixColumn> columns;
        for (auto s : c.schemes) {
            if (cond == Condition::Adhoc && !is_unit_scheme(s)) {
                log << "skipping ad-hoc " << to_string(s) << ": it only defines embedding contexts\n";
                continue;
            }
            const std::string label(to_string(s));
            const auto it = sources.find(label);
            columns.push_back({label, s, it == sources.end() ? nullptr : &it->second});
        }
        if (cond == Condition::Pretrained) {
            for (const auto& e : c.embeddings) {
                if (!scheme_names.count(e.label)) columns.push_back({e.label, e.scheme, &sources.at(e.label)});
            }
        }
        if (columns.empty()) continue;
        log << "running " << to_string(cond) << ": " << c.models.size() << " models x " << columns.size()
            << " columns, k = " << c.k << '\n';
        const ExperimentReport part = run_matrix(corpus, columns, c.models, {cond}, ec);
        merged.conditions.push_back(cond);
        merged.cells.insert(merged.cells.end(), part.cells.begin(), part.cells.end());
    }

    fs::create_directories(c.out);
    const std::string tsv = render_tsv(merged);
    {
        std::ofstream f = open_out(fs::path(c.out) / "report.tsv");
        f << tsv;
        std::ofstream j = open_out(fs::path(c.out) / "report.json");
        j << render_json(merged);
        if (!f || !j) fail(ErrorKind::Io, "failed writing reports into '" + c.out + "'");
    }
    out << tsv;
    for (const auto& cell : merged.cells) {
        if (!cell.ok) log << "failed: " << cell.error << '\n';
    }
    return merged.failed() == 0 ? kOk : kPartialFailure;
}

int cmd_report(const PipelineConfig& c, std::ostream& out, std::ostream& log) {
    std::ifstream in(*c.report);
    if (!in) fail(ErrorKind::Io, "cannot open '" + *c.report + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const ExperimentReport r = parse_report_json(buf.str());
    out << render_tsv(r);
    for (const auto& cell : r.cells) {
        if (!cell.ok) log << "failed: " << cell.error << '\n';
    }
    return r.failed() == 0 ? kOk : kPartialFailure;
}

int run_command(Command command, const PipelineConfig& config, std::ostream& out, std::ostream& log) {
    try {
        validate(command, config);
    } catch (const std::exception& e) {
        log << "lingemb: invalid configuration: " << e.what() << '\n';
        return kValidationError;
    }
    try {
        switch (command) {
            case Command::IngestCheck: return cmd_ingest_check(config, out, log);
            case Command::Encode: return cmd_encode(config, out, log);
            case Command::TrainEmbeddings: return cmd_train_embeddings(config, out, log);
            case Command::TrainClassifier: return cmd_train_classifier(config, out, log);
            case Command::Experiment: return cmd_experiment(config, out, log);
            case Command::Report: return cmd_report(config, out, log);
        }
    } catch (const Error& e) {
        log << "lingemb: " << to_string(e.kind()) << " error: " << e.what() << '\n';
        return kRuntimeError;
    } catch (const std::exception& e) {
        log << "lingemb: error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return kRuntimeError;
}

}  // namespace lingemb::cli
