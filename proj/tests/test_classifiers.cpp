#include "doctest.h"

#include "gradcheck.hpp"
#include "lingemb/classifiers.hpp"
#include "lingemb/error.hpp"

#include <cmath>
#include <functional>
#include <sstream>

using namespace lingemb;
using lingemb::testing::network_gradient_error;
using lingemb::testing::small_network;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("expected an Error");
    return ErrorKind::Io;
}

EmbeddingModel toy_embeddings(std::vector<std::string> units, std::vector<std::vector<double>> rows) {
    EmbeddingModel m;
    m.target_vocab = Vocabulary::from_units(units);
    m.context_vocab = m.target_vocab;
    m.dim = rows.front().size();
    for (const auto& r : rows) m.target.insert(m.target.end(), r.begin(), r.end());
    m.context.assign(m.target.size(), 0.0);
    return m;
}

// Documents drawn from two disjoint vocabularies, one per label.
struct Separable {
    std::vector<std::vector<std::string>> docs;
    std::vector<Label> labels;
};

Separable separable_docs(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> word(0, 7), len(3, 8);
    Separable s;
    for (std::size_t i = 0; i < n; ++i) {
        const bool harmful = i % 4 == 0;
        std::vector<std::string> doc;
        const int l = len(rng);
        for (int k = 0; k < l; ++k) doc.push_back((harmful ? "bad" : "ok") + std::to_string(word(rng)));
        s.docs.push_back(doc);
        s.labels.push_back(harmful ? Label::Harmful : Label::Clean);
    }
    return s;
}

EmbeddingModel separable_embeddings(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.3);
    std::vector<std::string> units;
    std::vector<std::vector<double>> rows;
    for (int side = 0; side < 2; ++side) {
        for (int w = 0; w < 8; ++w) {
            units.push_back((side ? "bad" : "ok") + std::to_string(w));
            std::vector<double> r(6);
            for (auto& v : r) v = g(rng);
            r[0] += side ? 1.0 : -1.0;
            rows.push_back(r);
        }
    }
    return toy_embeddings(units, rows);
}

double accuracy(const NetworkModel& m, const Separable& s) {
    std::size_t right = 0;
    for (std::size_t i = 0; i < s.docs.size(); ++i) right += predict(m, s.docs[i]).label == s.labels[i];
    return static_cast<double>(right) / static_cast<double>(s.docs.size());
}

}  // namespace

TEST_CASE("doc_mean_vector and doc_padded_matrix") {
    const auto emb = toy_embeddings({"a", "b"}, {{1, 0}, {0, 1}});
    const std::vector<std::string> aa{"a", "a"}, ab{"a", "b"}, none{"x", "y"};
    CHECK(doc_mean_vector(aa, emb) == std::vector<double>{1, 0});
    CHECK(doc_mean_vector(ab, emb) == std::vector<double>{0.5, 0.5});
    CHECK(doc_mean_vector(none, emb) == std::vector<double>{0, 0});

    auto m = doc_padded_matrix(ab, emb, 4);
    CHECK(m.mask == std::vector<unsigned char>{1, 1, 0, 0});
    CHECK(m.values == std::vector<double>{1, 0, 0, 1, 0, 0, 0, 0});
    const std::vector<std::string> five{"a", "b", "a", "b", "a"};
    m = doc_padded_matrix(five, emb, 4);
    CHECK(m.mask == std::vector<unsigned char>{1, 1, 1, 1});
    CHECK(m.values[6] == 0.0);
    CHECK(m.values[7] == 1.0);
    m = doc_padded_matrix(none, emb, 3);
    CHECK(m.mask == std::vector<unsigned char>{0, 0, 0});
    CHECK(std::all_of(m.values.begin(), m.values.end(), [](double v) { return v == 0.0; }));
}

TEST_CASE("index sequences reserve row 0 for padding") {
    const Lexicon lex({"a", "b", "c"});
    CHECK(lex.rows() == 4);
    const std::vector<std::string> doc{"c", "zz", "a", "b", "a"};
    CHECK(doc_index_sequence(doc, lex, 3) == std::vector<std::uint32_t>{3, 1, 2});
    CHECK(doc_index_sequence(doc, lex, 10) == std::vector<std::uint32_t>{3, 1, 2, 1});
    CHECK(kind_of([] { Lexicon({"a", "a"}); }) == ErrorKind::Format);

    const auto emb = toy_embeddings({"a", "b"}, {{1, 2}, {3, 4}});
    const auto table = frozen_table(emb);
    CHECK(table->rows == 3);
    CHECK(table->data == std::vector<double>{0, 0, 1, 2, 3, 4});
}

TEST_CASE("tfidf_bow") {
    const std::vector<std::vector<std::string>> docs{{"x", "y"}, {"x"}};
    const auto r = tfidf_bow(docs);
    REQUIRE(r.model.terms() == std::vector<std::string>{"x", "y"});
    CHECK(r.model.idf()[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(r.model.idf()[1] == doctest::Approx(1.4054651081081644).epsilon(1e-12));
    // Single-term document normalizes to exactly 1.
    REQUIRE(r.rows[1].nnz() == 1);
    CHECK(r.rows[1].value[0] == doctest::Approx(1.0));
    // Two-term document: (1, 1.405..) / norm.
    const double norm = std::sqrt(1.0 + r.model.idf()[1] * r.model.idf()[1]);
    CHECK(r.rows[0].value[0] == doctest::Approx(1.0 / norm));
    CHECK(r.rows[0].value[1] == doctest::Approx(r.model.idf()[1] / norm));

    const std::vector<std::string> unseen{"q", "y", "y"};
    const auto v = r.model.transform(unseen);
    REQUIRE(v.nnz() == 1);
    CHECK(v.index[0] == 1);
    CHECK(v.value[0] == doctest::Approx(1.0));
    CHECK(kind_of([] { TfidfModel::fit({}); }) == ErrorKind::EmptyStream);
}

TEST_CASE("adam_update") {
    SUBCASE("zero gradient leaves parameters alone") {
        AdamState s(2, {});
        std::vector<double> p{0.5, -1.0};
        adam_update(s, p, std::vector<double>{0.0, 0.0});
        CHECK(p == std::vector<double>{0.5, -1.0});
        CHECK(s.t == 1);
    }
    SUBCASE("first step moves by alpha") {
        AdamState s(1, {});
        std::vector<double> p{0.0};
        adam_update(s, p, std::vector<double>{0.1});
        // m_hat = 0.1, v_hat = 0.01 -> -0.001 * 0.1 / (0.1 + 1e-8)
        CHECK(p[0] == doctest::Approx(-0.001 * 0.1 / (0.1 + 1e-8)).epsilon(1e-12));
    }
    SUBCASE("constant gradient approaches steps of alpha") {
        AdamState s(1, {});
        std::vector<double> p{0.0};
        double before = 0.0;
        for (int i = 0; i < 2000; ++i) {
            before = p[0];
            adam_update(s, p, std::vector<double>{-3.0});
        }
        CHECK(std::abs(p[0] - before) == doctest::Approx(0.001).epsilon(1e-6));
    }
    SUBCASE("non-finite gradient is rejected before any change") {
        AdamState s(2, {});
        std::vector<double> p{1.0, 2.0};
        CHECK(kind_of([&] { adam_update(s, p, std::vector<double>{0.1, NAN}); }) == ErrorKind::Numeric);
        CHECK(p == std::vector<double>{1.0, 2.0});
        CHECK(s.t == 0);
        CHECK(kind_of([&] { adam_update(s, p, std::vector<double>{0.1}); }) == ErrorKind::Shape);
    }
}

TEST_CASE("train_svm") {
    ClassifierConfig cfg;
    cfg.svm_lambda = 1e-4;
    SUBCASE("two separable points in 1-D") {
        const std::vector<SparseVector> rows{to_sparse(std::vector<double>{1.0}), to_sparse(std::vector<double>{-1.0})};
        const std::vector<Label> labels{Label::Harmful, Label::Clean};
        const auto m = train_svm(rows, 1, labels, {}, cfg);
        CHECK(predict(m, DocRepresentation{std::vector<double>{1.0}}).label == Label::Harmful);
        CHECK(predict(m, DocRepresentation{std::vector<double>{-1.0}}).label == Label::Clean);
    }
    SUBCASE("Gaussian blobs 6 sigma apart") {
        std::mt19937_64 rng(11);
        std::normal_distribution<double> g(0.0, 1.0);
        std::vector<SparseVector> rows;
        std::vector<std::vector<double>> points;
        std::vector<Label> labels;
        for (int i = 0; i < 400; ++i) {
            const bool pos = i % 2 == 0;
            std::vector<double> x{g(rng) + (pos ? 3.0 : -3.0), g(rng) + (pos ? 3.0 : -3.0)};
            // 6 sigma along the diagonal between the centers.
            x[0] *= 1.0 / std::sqrt(2.0);
            x[1] *= 1.0 / std::sqrt(2.0);
            points.push_back(x);
            rows.push_back(to_sparse(x));
            labels.push_back(pos ? Label::Harmful : Label::Clean);
        }
        const auto m = train_svm(rows, 2, labels, {}, cfg);
        const auto w = m.param("w").data;
        const double b = m.param("b").data[0];
        std::size_t right = 0;
        for (std::size_t i = 0; i < points.size(); ++i) {
            const bool pos = w[0] * points[i][0] + w[1] * points[i][1] + b >= 0.0;
            right += pos == (labels[i] == Label::Harmful);
        }
        CHECK(static_cast<double>(right) / points.size() >= 0.99);
    }
    SUBCASE("single class is degenerate") {
        const std::vector<SparseVector> rows{to_sparse(std::vector<double>{1.0})};
        const std::vector<Label> labels{Label::Clean};
        CHECK(kind_of([&] { train_svm(rows, 1, labels, {}, cfg); }) == ErrorKind::DegenerateData);
    }
}

TEST_CASE("SVM gradient") {
    SUBCASE("margin satisfied everywhere leaves only the shrinkage term") {
        NetworkModel m;
        m.arch = Architecture::Svm;
        m.params.emplace_back("w", 1, 2);
        m.params.emplace_back("b", 1, 1);
        m.params[0].data = {4.0, -2.0};
        const std::vector<SparseVector> rows{to_sparse(std::vector<double>{1, 0}), to_sparse(std::vector<double>{-1, 0})};
        const std::vector<Label> labels{Label::Harmful, Label::Clean};
        const auto g = svm_gradient(m, rows, labels, {}, 0.1);
        CHECK(g[0] == std::vector<double>{0.4, -0.2});
        CHECK(g[1][0] == 0.0);
    }
    SUBCASE("property: matches finite differences off the hinge") {
        int checked = 0;
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            const double err = lingemb::testing::svm_gradient_error(seed);
            if (err < 0) continue;
            ++checked;
            CHECK(err < 1e-4);
        }
        CHECK(checked >= 20);
    }
}

TEST_CASE("property: network gradients match finite differences") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        for (bool frozen : {true, false}) {
            CAPTURE(seed);
            CAPTURE(frozen);
            auto mlp = small_network(Architecture::Mlp, frozen, 4, 3, 2, seed);
            CHECK(network_gradient_error(mlp) < 1e-4);
            auto lstm = small_network(Architecture::Lstm, frozen, 4, 3, 2, seed);
            CHECK(network_gradient_error(lstm) < 1e-4);
            // A 4x4 patch then 2x2 pooling needs at least 5 rows and columns.
            auto cnn = small_network(Architecture::Cnn, frozen, 5, 5, 2, seed);
            CHECK(network_gradient_error(cnn) < 1e-4);
        }
    }
    SUBCASE("mean-pooled MLP input") {
        auto inst = small_network(Architecture::Mlp, false, 4, 3, 2, 9);
        inst.model.config.mlp_input = PoolingInput::Mean;
        std::mt19937_64 rng(9);
        auto fresh = init_network(Architecture::Mlp, inst.model.lexicon, nullptr, inst.model.config, rng);
        inst.model = fresh;
        CHECK(network_gradient_error(inst) < 1e-4);
    }
}

TEST_CASE("network shapes and degenerate parameters") {
    auto lexicon = std::make_shared<const Lexicon>(std::vector<std::string>{"a", "b"});
    std::mt19937_64 rng(1);
    ClassifierConfig cfg;
    cfg.cnn_filters = 1;
    auto table = std::make_shared<Tensor>("frozen_embedding", 3, 50);
    const auto cnn = init_network(Architecture::Cnn, lexicon, table, cfg, rng);
    CHECK(cnn.param("filters").rows == 1);
    CHECK(cnn.param("filters").cols == 16);
    CHECK(cnn.param("Wo").cols == 30 * 23);  // 64x50 -> 61x47 -> 30x23

    cfg.maxlen = 4;
    CHECK(kind_of([&] { init_network(Architecture::Cnn, lexicon, table, cfg, rng); }) == ErrorKind::Shape);
    cfg.maxlen = 64;

    SUBCASE("zero-parameter LSTM outputs sigmoid(bo)") {
        auto m = init_network(Architecture::Lstm, lexicon, table, cfg, rng);
        for (auto& p : m.params) std::fill(p.data.begin(), p.data.end(), 0.0);
        m.param("bo").data[0] = 0.7;
        for (const IndexSequence& s : {IndexSequence{}, IndexSequence{1, 2}}) {
            CHECK(predict(m, DocRepresentation{s}).score == doctest::Approx(1.0 / (1.0 + std::exp(-0.7))));
        }
    }
    SUBCASE("zero-parameter MLP outputs sigmoid(b2) and 0.5 is harmful") {
        auto m = init_network(Architecture::Mlp, lexicon, table, cfg, rng);
        for (auto& p : m.params) std::fill(p.data.begin(), p.data.end(), 0.0);
        const auto p = predict(m, DocRepresentation{IndexSequence{1}});
        CHECK(p.score == 0.5);
        CHECK(p.label == Label::Harmful);
        m.param("b2").data[0] = -0.2;
        CHECK(predict(m, DocRepresentation{IndexSequence{2, 1}}).score == doctest::Approx(1.0 / (1.0 + std::exp(0.2))));
    }
    SUBCASE("SVM on the boundary is harmful") {
        NetworkModel m;
        m.arch = Architecture::Svm;
        m.params.emplace_back("w", 1, 2);
        m.params.emplace_back("b", 1, 1);
        CHECK(predict(m, DocRepresentation{std::vector<double>{1, 1}}).label == Label::Harmful);
        CHECK(kind_of([&] { predict(m, DocRepresentation{std::vector<double>{1}}); }) == ErrorKind::Shape);
        CHECK(kind_of([&] { predict(m, DocRepresentation{IndexSequence{1}}); }) == ErrorKind::Shape);
    }
}

TEST_CASE("class weights scale the loss of a misclassified minority example") {
    auto inst = small_network(Architecture::Mlp, true, 4, 3, 2, 5);
    const std::vector<IndexSequence> one{inst.docs[1]};
    const double z = network_logit(inst.model, one[0]);
    // Label the example against its current prediction.
    const std::vector<Label> wrong{z >= 0 ? Label::Clean : Label::Harmful};
    ClassWeights w;
    double previous = network_loss(inst.model, one, wrong, w);
    for (double scale : {1.5, 3.0, 10.0}) {
        (wrong[0] == Label::Harmful ? w.harmful : w.clean) = scale;
        const double now = network_loss(inst.model, one, wrong, w);
        CHECK(now > previous);
        previous = now;
    }
}

TEST_CASE("training on separable documents") {
    const auto data = separable_docs(80, 3);
    const auto emb = separable_embeddings(4);
    const ClassWeights weights{80.0 / (2 * 60), 80.0 / (2 * 20)};
    ClassifierConfig cfg;
    cfg.maxlen = 10;
    cfg.mlp_hidden = 16;
    cfg.cnn_filters = 4;
    cfg.lstm_hidden = 8;
    cfg.batch_size = 8;
    cfg.epochs = 8;
    cfg.adhoc_dim = 6;
    cfg.adam.alpha = 0.01;

    for (auto arch : {Architecture::Mlp, Architecture::Cnn, Architecture::Lstm}) {
        for (auto cond : {Condition::Pretrained, Condition::Adhoc}) {
            CAPTURE(to_string(arch));
            CAPTURE(to_string(cond));
            TrainingLog log;
            const auto m = train_classifier(arch, cond, data.docs, data.labels, weights,
                                            cond == Condition::Pretrained ? &emb : nullptr, cfg, &log);
            REQUIRE(log.epoch_loss.size() == cfg.epochs);
            CHECK(log.epoch_loss.back() < log.epoch_loss.front());
            CHECK(accuracy(m, data) >= 0.9);
        }
    }
    for (auto cond : {Condition::Pretrained, Condition::Adhoc}) {
        const auto m = train_classifier(Architecture::Svm, cond, data.docs, data.labels, weights,
                                        cond == Condition::Pretrained ? &emb : nullptr, cfg);
        CHECK(accuracy(m, data) >= 0.95);
    }
}

TEST_CASE("frozen embeddings stay bit-identical and training is seeded") {
    const auto data = separable_docs(40, 8);
    const auto emb = separable_embeddings(2);
    ClassifierConfig cfg;
    cfg.maxlen = 8;
    cfg.mlp_hidden = 8;
    cfg.epochs = 3;
    const auto before = emb.target;
    const auto a = train_classifier(Architecture::Mlp, Condition::Pretrained, data.docs, data.labels, {}, &emb, cfg);
    CHECK(emb.target == before);
    const auto table = frozen_table(emb);
    CHECK(a.frozen_embedding->data == table->data);
    CHECK_FALSE(a.has_param("embedding"));

    const auto b = train_classifier(Architecture::Mlp, Condition::Pretrained, data.docs, data.labels, {}, &emb, cfg);
    for (std::size_t p = 0; p < a.params.size(); ++p) CHECK(a.params[p].data == b.params[p].data);

    const auto adhoc = train_classifier(Architecture::Lstm, Condition::Adhoc, data.docs, data.labels, {}, nullptr, cfg);
    const auto& e = adhoc.param("embedding");
    CHECK(std::all_of(e.data.begin(), e.data.begin() + static_cast<std::ptrdiff_t>(e.cols),
                      [](double v) { return v == 0.0; }));
}

TEST_CASE("train_classifier configuration errors") {
    const auto data = separable_docs(20, 1);
    const auto other = toy_embeddings({"zz"}, {{1.0, 2.0}});
    ClassifierConfig cfg;
    CHECK(kind_of([&] {
              train_classifier(Architecture::Mlp, Condition::Pretrained, data.docs, data.labels, {}, nullptr, cfg);
          }) == ErrorKind::Configuration);
    CHECK(kind_of([&] {
              train_classifier(Architecture::Mlp, Condition::Pretrained, data.docs, data.labels, {}, &other, cfg);
          }) == ErrorKind::Configuration);
    cfg.dropout = 1.0;
    CHECK(kind_of([&] { cfg.validate(); }) == ErrorKind::Parameter);
    CHECK(parse_architecture("cnn") == Architecture::Cnn);
    CHECK(kind_of([] { parse_architecture("rnn"); }) == ErrorKind::Parameter);
    CHECK(parse_condition("AdHoc") == Condition::Adhoc);
}

TEST_CASE("checkpoints round trip") {
    const auto data = separable_docs(40, 6);
    const auto emb = separable_embeddings(6);
    ClassifierConfig cfg;
    cfg.maxlen = 8;
    cfg.mlp_hidden = 6;
    cfg.cnn_filters = 2;
    cfg.lstm_hidden = 4;
    cfg.adhoc_dim = 6;
    cfg.epochs = 1;
    cfg.svm_epochs = 2;
    for (auto arch : {Architecture::Svm, Architecture::Mlp, Architecture::Cnn, Architecture::Lstm}) {
        for (auto cond : {Condition::Pretrained, Condition::Adhoc}) {
            CAPTURE(to_string(arch));
            CAPTURE(to_string(cond));
            const auto m = train_classifier(arch, cond, data.docs, data.labels, {},
                                            cond == Condition::Pretrained ? &emb : nullptr, cfg);
            std::stringstream buf;
            save_checkpoint(m, buf);
            const auto back = load_checkpoint(buf);
            CHECK(back.arch == m.arch);
            CHECK(back.features == m.features);
            REQUIRE(back.params.size() == m.params.size());
            for (std::size_t p = 0; p < m.params.size(); ++p) {
                CHECK(back.params[p].name == m.params[p].name);
                for (std::size_t i = 0; i < m.params[p].data.size(); ++i) {
                    CHECK(std::abs(back.params[p].data[i] - m.params[p].data[i]) < 1e-8);
                }
            }
            for (const auto& doc : data.docs) {
                CHECK(predict(back, doc).score == doctest::Approx(predict(m, doc).score).epsilon(1e-12));
            }
        }
    }
    std::stringstream truncated("lingemb-checkpoint 1\narchitecture MLP\n");
    CHECK(kind_of([&] { load_checkpoint(truncated); }) == ErrorKind::Format);
    std::stringstream wrong("something else\n");
    CHECK(kind_of([&] { load_checkpoint(wrong); }) == ErrorKind::Format);
}
