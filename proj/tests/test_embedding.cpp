#include "doctest.h"

#include "lingemb/embedding.hpp"
#include "lingemb/error.hpp"
#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

using namespace lingemb;

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

double log_sigmoid(double x) { return -std::log1p(std::exp(-x)); }

// Independent SGNS loss used by the finite-difference oracle.
double reference_loss(const std::vector<double>& u, const std::vector<std::vector<double>>& ctx,
                      std::size_t c, const std::vector<std::size_t>& negs) {
    auto dotp = [](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0;
        for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
        return s;
    };
    double loss = -log_sigmoid(dotp(u, ctx[c]));
    for (auto n : negs) loss -= log_sigmoid(-dotp(u, ctx[n]));
    return loss;
}

EmbeddingModel small_model(std::size_t targets, std::size_t contexts, std::size_t d, std::mt19937_64& rng) {
    std::vector<std::string> tu, cu;
    for (std::size_t i = 0; i < targets; ++i) tu.push_back("t" + std::to_string(i));
    for (std::size_t i = 0; i < contexts; ++i) cu.push_back("c" + std::to_string(i));
    EmbeddingModel m;
    m.target_vocab = Vocabulary::from_units(tu);
    m.context_vocab = Vocabulary::from_units(cu);
    m.dim = d;
    std::normal_distribution<double> g(0.0, 0.7);
    m.target.resize(targets * d);
    m.context.resize(contexts * d);
    for (auto& x : m.target) x = g(rng);
    for (auto& x : m.context) x = g(rng);
    return m;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), 1e-12});
}

std::vector<std::vector<std::string>> synonym_corpus() {
    std::vector<std::vector<std::string>> out;
    const std::vector<std::vector<std::string>> templates{
        {"the", "food", "was", "@", "and", "cheap"},
        {"a", "@", "movie", "with", "nice", "music"},
        {"my", "cat", "sleeps", "on", "the", "sofa"},
        {"they", "drive", "fast", "cars", "every", "sunday"},
    };
    for (int rep = 0; rep < 60; ++rep) {
        for (const auto& t : templates) {
            for (const char* fill : {"good", "great"}) {
                auto s = t;
                for (auto& w : s) {
                    if (w == "@") w = fill;
                }
                out.push_back(s);
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("build_vocab") {
    const std::vector<std::string> units{"a", "a", "a", "a", "a", "b", "b"};
    auto v = build_vocab(units, 3);
    REQUIRE(v.size() == 1);
    CHECK(v.unit(0) == "a");
    CHECK(v.count(0) == 5);

    const std::vector<std::string> tie{"b", "a", "b", "a"};
    auto t = build_vocab(tie, 1);
    CHECK(t.index("a") == 0);
    CHECK(t.index("b") == 1);
    CHECK(t.total() == 4);
    for (std::size_t i = 0; i < t.size(); ++i) CHECK(t.index(t.unit(i)) == i);

    CHECK(kind_of([] { build_vocab(std::vector<std::string>{"a"}, 2); }) == ErrorKind::EmptyVocab);
    CHECK(kind_of([] { build_vocab(std::vector<std::string>{"a"}, 1).index("zzz"); }) == ErrorKind::Lookup);
}

TEST_CASE("negative_sampler probabilities") {
    UnitCounts counts{{"a", 3}, {"b", 1}};
    const auto v = Vocabulary::from_counts(counts, 1);
    NegativeSampler s(v, 0.75);
    // 3^0.75 = 2.2795070569547775
    CHECK(s.probability(v.index("a")) == doctest::Approx(2.2795070569547775 / 3.2795070569547775).epsilon(1e-12));

    UnitCounts even{{"a", 1}, {"b", 1}};
    NegativeSampler e(Vocabulary::from_counts(even, 1));
    CHECK(e.probability(0) == doctest::Approx(0.5));

    NegativeSampler uniform(v, 0.0);
    CHECK(uniform.probability(0) == doctest::Approx(0.5));
}

TEST_CASE("property: sampler frequencies over 1e6 draws") {
    UnitCounts counts;
    for (int i = 0; i < 10; ++i) counts["u" + std::to_string(i)] = static_cast<std::uint64_t>((i + 1) * (i + 1));
    const auto v = Vocabulary::from_counts(counts, 1);
    NegativeSampler s(v);
    std::mt19937_64 rng(21);
    std::vector<double> hits(v.size(), 0.0);
    const int draws = 1'000'000;
    for (int i = 0; i < draws; ++i) hits[s.sample(rng)] += 1.0;
    double total_p = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double expected = std::pow(static_cast<double>(v.count(i)), 0.75);
        total_p += expected;
    }
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double p = std::pow(static_cast<double>(v.count(i)), 0.75) / total_p;
        CHECK(std::abs(hits[i] / draws - p) < 0.01);
        CHECK(s.probability(i) == doctest::Approx(p).epsilon(1e-12));
    }
}

TEST_CASE("subsample_keep_probability") {
    UnitCounts counts{{"a", 1}, {"b", 99}};
    const auto v = Vocabulary::from_counts(counts, 1);
    CHECK(subsample_keep_probability("b", v, 0.0) == 1.0);
    CHECK(subsample_keep_probability("a", v, 0.01) == 1.0);  // f == t
    UnitCounts hundred{{"x", 1}, {"y", 99}};
    const auto h = Vocabulary::from_counts(hundred, 1);
    // f(x) = 0.01, t = 1e-4 -> sqrt(0.01) + 0.01
    CHECK(subsample_keep_probability("x", h, 1e-4) == doctest::Approx(0.11).epsilon(1e-12));
    CHECK(kind_of([&] { subsample_keep_probability("zzz", h, 1e-4); }) == ErrorKind::Lookup);
}

TEST_CASE("sgns_step hand cases") {
    std::mt19937_64 rng(1);
    auto m = small_model(1, 2, 3, rng);
    std::fill(m.context.begin(), m.context.end(), 0.0);
    const std::vector<std::size_t> neg{1};
    CHECK(sgns_step(m, 0, 0, neg, 0.1) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));

    auto z = small_model(2, 3, 4, rng);
    const auto before = z;
    const std::vector<std::size_t> negs{1, 2};
    const double loss = sgns_step(z, 1, 0, negs, 0.0);
    CHECK(loss == doctest::Approx(reference_loss(
                      {before.target.begin() + 4, before.target.begin() + 8},
                      {{before.context.begin(), before.context.begin() + 4},
                       {before.context.begin() + 4, before.context.begin() + 8},
                       {before.context.begin() + 8, before.context.end()}},
                      0, {1, 2})));
    CHECK(z.target == before.target);
    CHECK(z.context == before.context);
}

TEST_CASE("property: SGNS gradients match central finite differences") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t d = 1 + rng() % 5;
        const std::size_t k = 1 + rng() % 3;
        const std::size_t contexts = 4;
        auto m = small_model(1, contexts, d, rng);
        const std::size_t c = rng() % contexts;
        std::vector<std::size_t> negs;
        for (std::size_t i = 0; i < k; ++i) negs.push_back(rng() % contexts);  // repeats allowed

        std::vector<double> u(m.target.begin(), m.target.end());
        std::vector<std::vector<double>> ctx(contexts);
        for (std::size_t r = 0; r < contexts; ++r) ctx[r].assign(m.context.begin() + r * d, m.context.begin() + (r + 1) * d);

        // Analytic gradient via one step with lr = 1: theta_after = theta - grad.
        auto stepped = m;
        sgns_step(stepped, 0, c, negs, 1.0);
        std::vector<double> analytic, numeric;
        const double h = 1e-6;
        for (std::size_t i = 0; i < d; ++i) {
            analytic.push_back(m.target[i] - stepped.target[i]);
            auto up = u, dn = u;
            up[i] += h;
            dn[i] -= h;
            numeric.push_back((reference_loss(up, ctx, c, negs) - reference_loss(dn, ctx, c, negs)) / (2 * h));
        }
        for (std::size_t r = 0; r < contexts; ++r) {
            for (std::size_t i = 0; i < d; ++i) {
                analytic.push_back(m.context[r * d + i] - stepped.context[r * d + i]);
                auto up = ctx, dn = ctx;
                up[r][i] += h;
                dn[r][i] -= h;
                numeric.push_back((reference_loss(u, up, c, negs) - reference_loss(u, dn, c, negs)) / (2 * h));
            }
        }
        CHECK(rel_error(analytic, numeric) < 1e-5);
    }
}

TEST_CASE("TrainConfig validation") {
    TrainConfig c;
    c.epochs = 0;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::Parameter);
    c = TrainConfig{};
    c.final_lr = 0.1;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::Parameter);
    c = TrainConfig{};
    c.d = 0;
    CHECK(kind_of([&] { c.validate(); }) == ErrorKind::Parameter);
}

TEST_CASE("train_embeddings on a synonym toy corpus") {
    TrainConfig config;
    config.d = 25;
    config.epochs = 30;
    config.min_count = 1;
    config.subsample_t = 0.0;
    config.window = 2;
    config.seed = 4;
    std::vector<EpochStats> stats;
    WindowPairSource source(synonym_corpus(), config.window, false);
    const auto model = train_embeddings(source, config, [&](const EpochStats& s) { stats.push_back(s); });
    model.validate();
    const double best = model.cosine("good", "great");
    for (const auto& unit : model.target_vocab.units()) {
        if (unit == "good" || unit == "great") continue;
        CAPTURE(unit);
        CHECK(model.cosine("good", unit) < best);
    }
    REQUIRE(stats.size() == 30);
    CHECK(stats[9].mean_loss < stats[0].mean_loss);
    CHECK(stats.back().lr == doctest::Approx(config.final_lr).epsilon(0.05));

    SUBCASE("same seed, one worker: bit-identical") {
        WindowPairSource again(synonym_corpus(), config.window, false);
        const auto twin = train_embeddings(again, config);
        CHECK(twin.target == model.target);
        CHECK(twin.context == model.context);
    }
}

TEST_CASE("train_embeddings edge cases") {
    TrainConfig config;
    config.min_count = 1;
    WindowPairSource empty({}, 5);
    CHECK(kind_of([&] { train_embeddings(empty, config); }) == ErrorKind::EmptyStream);
    config.epochs = 0;
    WindowPairSource one({{"a", "b"}}, 5);
    CHECK(kind_of([&] { train_embeddings(one, config); }) == ErrorKind::Parameter);
}

TEST_CASE("dependency contexts train separate vocabularies") {
    std::mt19937_64 rng(2);
    std::vector<AnnotatedSentence> sentences;
    for (int i = 0; i < 50; ++i) sentences.push_back(testing::random_sentence(6, rng));
    DependencyPairSource source(sentences);
    TrainConfig config;
    config.d = 8;
    config.min_count = 1;
    config.epochs = 2;
    const auto model = train_embeddings(source, config);
    model.validate();
    for (const auto& u : model.target_vocab.units()) CHECK(u.find('/') == std::string::npos);
    for (const auto& u : model.context_vocab.units()) CHECK(u.find('/') != std::string::npos);
}

TEST_CASE("hogwild workers produce a usable model") {
    TrainConfig config;
    config.d = 25;
    config.epochs = 30;
    config.min_count = 1;
    config.subsample_t = 0.0;
    config.window = 2;
    config.worker_count = 4;
    WindowPairSource source(synonym_corpus(), config.window, false);
    const auto model = train_embeddings(source, config);
    model.validate();
    CHECK(model.cosine("good", "great") > model.cosine("good", "sofa"));
}

TEST_CASE("word2vec text format") {
    std::mt19937_64 rng(8);
    auto m = small_model(2, 1, 3, rng);
    std::ostringstream out;
    save_embeddings(m, out);
    const std::string text = out.str();
    CHECK(text.rfind("2 3\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    std::istringstream in(text);
    const auto loaded = load_embeddings(in);
    CHECK(loaded.target_vocab.units() == m.target_vocab.units());
    REQUIRE(loaded.target.size() == m.target.size());
    for (std::size_t i = 0; i < m.target.size(); ++i) CHECK(std::abs(loaded.target[i] - m.target[i]) < 1e-8);
    CHECK(loaded.context.empty());

    std::istringstream bad("2 4\na 1 2 3\nb 1 2 3\n");
    try {
        load_embeddings(bad);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::Format);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    std::istringstream short_file("3 1\na 1\n");
    CHECK(kind_of([&] { load_embeddings(short_file); }) == ErrorKind::Format);
}
