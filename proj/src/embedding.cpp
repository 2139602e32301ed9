#include "lingemb/embedding.hpp"

#include "lingemb/error.hpp"
#include "lingemb/seed.hpp"
#include "lingemb/simd/kernels.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

namespace lingemb {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double step_impl(EmbeddingModel& model, std::size_t target, std::size_t context,
                 std::span<const std::size_t> negatives, double lr, std::vector<double>& grad) {
    const std::size_t d = model.dim;
    auto u = model.target_row(target);
    grad.assign(d, 0.0);

    // Scores and coefficients from the pre-update parameters.
    const double pos = simd::dot(u, model.context_row(context));
    const double g_pos = sigmoid(pos) - 1.0;
    double loss = softplus(-pos);
    simd::axpy(g_pos, model.context_row(context), grad);

    thread_local std::vector<double> g_neg;
    g_neg.resize(negatives.size());
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        const double s = simd::dot(u, model.context_row(negatives[i]));
        g_neg[i] = sigmoid(s);
        loss += softplus(s);
        simd::axpy(g_neg[i], model.context_row(negatives[i]), grad);
    }
    if (!std::isfinite(loss) || !std::isfinite(simd::sum_squares(grad))) {
        fail(ErrorKind::Numeric, "non-finite SGNS loss or gradient for target '" +
                                     model.target_vocab.unit(target) + "'");
    }
    if (lr == 0.0) return loss;

    // Context updates depend only on u, so applying them in sequence sums the
    // contributions of repeated indices.
    simd::axpy(-lr * g_pos, u, model.context_row(context));
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        simd::axpy(-lr * g_neg[i], u, model.context_row(negatives[i]));
    }
    simd::axpy(-lr, grad, u);
    return loss;
}

}  // namespace

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::from_counts(const UnitCounts& counts, std::uint64_t min_count) {
    if (min_count == 0) fail(ErrorKind::Parameter, "min_count must be at least 1");
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    for (const auto& [unit, count] : counts) {
        if (count >= min_count) kept.emplace_back(unit, count);
    }
    if (kept.empty()) {
        fail(ErrorKind::EmptyVocab, "no unit reaches min_count " + std::to_string(min_count));
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    Vocabulary v;
    v.units_.reserve(kept.size());
    v.counts_.reserve(kept.size());
    for (auto& [unit, count] : kept) {
        v.index_.emplace(unit, v.units_.size());
        v.units_.push_back(std::move(unit));
        v.counts_.push_back(count);
        v.total_ += count;
    }
    return v;
}

Vocabulary Vocabulary::from_units(std::vector<std::string> units) {
    Vocabulary v;
    for (std::size_t i = 0; i < units.size(); ++i) {
        if (!v.index_.emplace(units[i], i).second) {
            fail(ErrorKind::Format, "unit '" + units[i] + "' appears twice");
        }
    }
    v.units_ = std::move(units);
    v.counts_.assign(v.units_.size(), 0);
    return v;
}

std::optional<std::size_t> Vocabulary::find(std::string_view unit) const {
    auto it = index_.find(std::string(unit));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::size_t Vocabulary::index(std::string_view unit) const {
    if (auto i = find(unit)) return *i;
    fail(ErrorKind::Lookup, "unit '" + std::string(unit) + "' is not in the vocabulary");
}

Vocabulary build_vocab(std::span<const std::string> units, std::uint64_t min_count) {
    UnitCounts counts;
    for (const auto& u : units) ++counts[u];
    return Vocabulary::from_counts(counts, min_count);
}

// ---------------------------------------------------------------------------
// Sampling

NegativeSampler::NegativeSampler(const Vocabulary& vocab, double power) {
    if (vocab.empty()) fail(ErrorKind::EmptyVocab, "negative sampler needs a non-empty vocabulary");
    std::vector<double> weights(vocab.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
        weights[i] = std::pow(static_cast<double>(vocab.count(i)), power);
        total += weights[i];
    }
    if (!(total > 0.0)) {
        // Loaded vocabularies carry no counts; fall back to uniform.
        std::fill(weights.begin(), weights.end(), 1.0);
        total = static_cast<double>(weights.size());
    }
    probabilities_.resize(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i) probabilities_[i] = weights[i] / total;
    dist_ = std::discrete_distribution<std::size_t>(weights.begin(), weights.end());
}

double subsample_keep_probability(std::size_t index, const Vocabulary& vocab, double t) {
    if (t < 0.0) fail(ErrorKind::Parameter, "subsampling threshold must be non-negative");
    if (t == 0.0) return 1.0;
    const double f = static_cast<double>(vocab.count(index)) / static_cast<double>(vocab.total());
    const double r = t / f;
    return std::min(1.0, std::sqrt(r) + r);
}

double subsample_keep_probability(std::string_view unit, const Vocabulary& vocab, double t) {
    return subsample_keep_probability(vocab.index(unit), vocab, t);
}

// ---------------------------------------------------------------------------
// Model

std::optional<std::span<const double>> EmbeddingModel::vector(std::string_view unit) const {
    if (auto i = target_vocab.find(unit)) return target_row(*i);
    return std::nullopt;
}

double EmbeddingModel::cosine(std::string_view a, std::string_view b) const {
    const auto va = vector(a);
    const auto vb = vector(b);
    if (!va) fail(ErrorKind::Lookup, "unit '" + std::string(a) + "' is not in the vocabulary");
    if (!vb) fail(ErrorKind::Lookup, "unit '" + std::string(b) + "' is not in the vocabulary");
    const double denom = std::sqrt(simd::sum_squares(*va) * simd::sum_squares(*vb));
    return denom > 0.0 ? simd::dot(*va, *vb) / denom : 0.0;
}

void EmbeddingModel::validate() const {
    if (dim == 0) fail(ErrorKind::Shape, "embedding dimension must be at least 1");
    if (target.size() != target_vocab.size() * dim || context.size() != context_vocab.size() * dim) {
        fail(ErrorKind::Shape, "embedding matrices do not match vocabulary sizes");
    }
    for (double x : target) {
        if (!std::isfinite(x)) fail(ErrorKind::Numeric, "non-finite target vector entry");
    }
    for (double x : context) {
        if (!std::isfinite(x)) fail(ErrorKind::Numeric, "non-finite context vector entry");
    }
}

void TrainConfig::validate() const {
    auto bad = [](const std::string& what) { fail(ErrorKind::Parameter, "TrainConfig: " + what); };
    if (d < 1) bad("d must be at least 1");
    if (window < 1) bad("window must be at least 1");
    if (negatives < 1) bad("negatives must be at least 1");
    if (!(final_lr > 0.0) || !(final_lr <= initial_lr)) bad("need 0 < final_lr <= initial_lr");
    if (epochs < 1) bad("epochs must be at least 1");
    if (min_count < 1) bad("min_count must be at least 1");
    if (!(subsample_t >= 0.0)) bad("subsample_t must be non-negative");
    if (worker_count < 1) bad("worker_count must be at least 1");
}

double sgns_step(EmbeddingModel& model, std::size_t target, std::size_t context,
                 std::span<const std::size_t> negatives, double lr) {
    if (target >= model.target_vocab.size()) fail(ErrorKind::Lookup, "target index out of range");
    if (context >= model.context_vocab.size()) fail(ErrorKind::Lookup, "context index out of range");
    for (std::size_t n : negatives) {
        if (n >= model.context_vocab.size()) fail(ErrorKind::Lookup, "negative index out of range");
    }
    std::vector<double> grad;
    return step_impl(model, target, context, negatives, lr, grad);
}

double sgns_step(EmbeddingModel& model, const TrainingPair& pair, std::span<const std::size_t> negatives,
                 double lr) {
    return sgns_step(model, model.target_vocab.index(pair.target), model.context_vocab.index(pair.context),
                     negatives, lr);
}

// ---------------------------------------------------------------------------
// Pair sources

WindowPairSource::WindowPairSource(std::vector<std::vector<std::string>> sentences, std::size_t window,
                                   bool shrink)
    : sentences_(std::move(sentences)), window_(window), shrink_(shrink) {
    if (window_ == 0) fail(ErrorKind::Parameter, "window size must be at least 1");
}

void WindowPairSource::count_units(UnitCounts& targets, UnitCounts&) const {
    for (const auto& s : sentences_) {
        for (const auto& u : s) ++targets[u];
    }
}

void WindowPairSource::bind(const Vocabulary& targets, const Vocabulary&) {
    indexed_.assign(sentences_.size(), {});
    for (std::size_t i = 0; i < sentences_.size(); ++i) {
        for (const auto& u : sentences_[i]) {
            if (auto idx = targets.find(u)) indexed_[i].push_back(static_cast<std::uint32_t>(*idx));
        }
    }
}

void WindowPairSource::pairs(std::size_t chunk, std::mt19937_64& rng, std::span<const double> keep,
                             std::vector<IndexPair>& out) const {
    thread_local std::vector<std::uint32_t> kept;
    kept.clear();
    const auto& units = indexed_.at(chunk);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::uint32_t u : units) {
        if (!keep.empty() && keep[u] < 1.0 && coin(rng) >= keep[u]) continue;
        kept.push_back(u);
    }
    for_each_window_pair(kept.size(), window_, shrink_ ? &rng : nullptr,
                         [&](std::size_t i, std::size_t j) { out.push_back({kept[i], kept[j]}); });
}

DependencyPairSource::DependencyPairSource(const std::vector<AnnotatedSentence>& sentences, UnitSource units) {
    sentences_.reserve(sentences.size());
    token_counts_.reserve(sentences.size());
    for (const auto& s : sentences) {
        auto pairs = dependency_pairs(s, units);
        std::vector<NamedArc> arcs;
        arcs.reserve(pairs.size());
        // dependency_pairs emits (head, dep/rel) then (dep, head/rel-1) per
        // non-root token in order; recover the target token of each pair.
        std::size_t k = 0;
        for (std::size_t m = 0; m < s.tokens.size(); ++m) {
            if (s.tokens[m].head == 0) continue;
            const auto head = static_cast<std::uint32_t>(s.tokens[m].head - 1);
            arcs.push_back({head, std::move(pairs[k++])});
            arcs.push_back({static_cast<std::uint32_t>(m), std::move(pairs[k++])});
        }
        sentences_.push_back(std::move(arcs));
        token_counts_.push_back(s.tokens.size());
    }
}

void DependencyPairSource::count_units(UnitCounts& targets, UnitCounts& contexts) const {
    // Target counts are token occurrences, not arc participations.
    for (const auto& arcs : sentences_) {
        std::vector<std::pair<std::uint32_t, const std::string*>> seen;
        for (const auto& a : arcs) {
            ++contexts[a.pair.context];
            seen.emplace_back(a.token, &a.pair.target);
        }
        std::sort(seen.begin(), seen.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
        seen.erase(std::unique(seen.begin(), seen.end(),
                               [](const auto& x, const auto& y) { return x.first == y.first; }),
                   seen.end());
        for (const auto& [token, unit] : seen) ++targets[*unit];
    }
}

void DependencyPairSource::bind(const Vocabulary& targets, const Vocabulary& contexts) {
    indexed_.assign(sentences_.size(), {});
    for (std::size_t i = 0; i < sentences_.size(); ++i) {
        for (const auto& a : sentences_[i]) {
            auto t = targets.find(a.pair.target);
            auto c = contexts.find(a.pair.context);
            if (t && c) {
                indexed_[i].push_back(
                    {a.token, static_cast<std::uint32_t>(*t), static_cast<std::uint32_t>(*c)});
            }
        }
    }
}

void DependencyPairSource::pairs(std::size_t chunk, std::mt19937_64& rng, std::span<const double> keep,
                                 std::vector<IndexPair>& out) const {
    const auto& arcs = indexed_.at(chunk);
    thread_local std::vector<signed char> decided;  // -1 unknown, 0 drop, 1 keep
    decided.assign(token_counts_[chunk], -1);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (const auto& a : arcs) {
        if (!keep.empty() && keep[a.target] < 1.0) {
            if (decided[a.token] < 0) decided[a.token] = coin(rng) < keep[a.target] ? 1 : 0;
            if (decided[a.token] == 0) continue;
        }
        out.push_back({a.target, a.context});
    }
}

ExplicitPairSource::ExplicitPairSource(std::vector<TrainingPair> pairs, std::size_t chunk_size)
    : pairs_(std::move(pairs)), chunk_size_(std::max<std::size_t>(1, chunk_size)) {}

void ExplicitPairSource::count_units(UnitCounts& targets, UnitCounts& contexts) const {
    for (const auto& p : pairs_) {
        ++targets[p.target];
        ++contexts[p.context];
    }
}

void ExplicitPairSource::bind(const Vocabulary& targets, const Vocabulary& contexts) {
    indexed_.clear();
    bounds_.assign(1, 0);
    std::size_t in_chunk = 0;
    for (const auto& p : pairs_) {
        auto t = targets.find(p.target);
        auto c = contexts.find(p.context);
        if (t && c) indexed_.push_back({static_cast<std::uint32_t>(*t), static_cast<std::uint32_t>(*c)});
        if (++in_chunk == chunk_size_) {
            bounds_.push_back(indexed_.size());
            in_chunk = 0;
        }
    }
    if (in_chunk > 0) bounds_.push_back(indexed_.size());
}

std::size_t ExplicitPairSource::chunk_count() const {
    return bounds_.empty() ? (pairs_.size() + chunk_size_ - 1) / chunk_size_ : bounds_.size() - 1;
}

std::size_t ExplicitPairSource::positions(std::size_t chunk) const {
    const std::size_t begin = chunk * chunk_size_;
    return std::min(pairs_.size(), begin + chunk_size_) - begin;
}

void ExplicitPairSource::pairs(std::size_t chunk, std::mt19937_64& rng, std::span<const double> keep,
                               std::vector<IndexPair>& out) const {
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    for (std::size_t i = bounds_.at(chunk); i < bounds_.at(chunk + 1); ++i) {
        const IndexPair p = indexed_[i];
        if (!keep.empty() && keep[p.target] < 1.0 && coin(rng) >= keep[p.target]) continue;
        out.push_back(p);
    }
}

// ---------------------------------------------------------------------------
// Training

EmbeddingModel train_embeddings(PairSource& source, const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (source.chunk_count() == 0) fail(ErrorKind::EmptyStream, "pair stream is empty");

    EmbeddingModel model;
    UnitCounts target_counts;
    UnitCounts context_counts;
    source.count_units(target_counts, context_counts);
    if (target_counts.empty()) fail(ErrorKind::EmptyStream, "pair stream contains no units");
    model.target_vocab = Vocabulary::from_counts(target_counts, config.min_count);
    model.context_vocab = source.shared_vocabulary()
                              ? model.target_vocab
                              : Vocabulary::from_counts(context_counts, config.min_count);
    source.bind(model.target_vocab, model.context_vocab);

    const std::size_t d = config.d;
    model.dim = d;
    model.target.resize(model.target_vocab.size() * d);
    model.context.assign(model.context_vocab.size() * d, 0.0);
    {
        std::mt19937_64 init_rng(mix_seed(config.seed, 0));
        std::uniform_real_distribution<double> init(-0.5 / static_cast<double>(d), 0.5 / static_cast<double>(d));
        for (double& w : model.target) w = init(init_rng);
    }

    const NegativeSampler sampler(model.context_vocab);
    std::vector<double> keep(model.target_vocab.size(), 1.0);
    for (std::size_t i = 0; i < keep.size(); ++i) {
        keep[i] = subsample_keep_probability(i, model.target_vocab, config.subsample_t);
    }
    const std::span<const double> keep_span =
        config.subsample_t > 0.0 ? std::span<const double>(keep) : std::span<const double>();

    std::uint64_t positions_per_epoch = 0;
    for (std::size_t c = 0; c < source.chunk_count(); ++c) positions_per_epoch += source.positions(c);
    const double total_positions =
        std::max(1.0, static_cast<double>(positions_per_epoch) * static_cast<double>(config.epochs));
    const double lr_span = config.initial_lr - config.final_lr;
    auto lr_at = [&](double processed) {
        return std::max(config.final_lr, config.initial_lr - lr_span * processed / total_positions);
    };

    const std::size_t workers = std::min(config.worker_count, source.chunk_count());
    std::vector<std::mt19937_64> rngs;
    for (std::size_t w = 0; w < workers; ++w) rngs.emplace_back(mix_seed(config.seed, w + 1));

    std::atomic<std::uint64_t> processed{0};
    double last_lr = config.initial_lr;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<double> loss_sum(workers, 0.0);
        std::vector<std::uint64_t> pair_count(workers, 0);
        std::vector<double> worker_lr(workers, config.initial_lr);
        std::mutex error_mutex;
        std::exception_ptr error;

        auto run_worker = [&](std::size_t w) {
            try {
                const std::size_t chunks = source.chunk_count();
                const std::size_t begin = chunks * w / workers;
                const std::size_t end = chunks * (w + 1) / workers;
                std::vector<IndexPair> buffer;
                std::vector<std::size_t> negatives(config.negatives);
                std::vector<double> grad;
                auto& rng = rngs[w];
                for (std::size_t c = begin; c < end; ++c) {
                    buffer.clear();
                    source.pairs(c, rng, keep_span, buffer);
                    const double base = static_cast<double>(processed.load(std::memory_order_relaxed));
                    const double chunk_positions = static_cast<double>(source.positions(c));
                    for (std::size_t p = 0; p < buffer.size(); ++p) {
                        const double frac = static_cast<double>(p) / static_cast<double>(buffer.size());
                        const double lr = lr_at(base + frac * chunk_positions);
                        for (auto& n : negatives) n = sampler.sample(rng);
                        loss_sum[w] += step_impl(model, buffer[p].target, buffer[p].context, negatives, lr, grad);
                        worker_lr[w] = lr;
                    }
                    pair_count[w] += buffer.size();
                    processed.fetch_add(source.positions(c), std::memory_order_relaxed);
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        };

        if (workers == 1) {
            run_worker(0);
        } else {
            std::vector<std::thread> threads;
            for (std::size_t w = 0; w < workers; ++w) threads.emplace_back(run_worker, w);
            for (auto& t : threads) t.join();
        }
        if (error) std::rethrow_exception(error);

        EpochStats stats;
        stats.epoch = epoch + 1;
        double total_loss = 0.0;
        for (std::size_t w = 0; w < workers; ++w) {
            total_loss += loss_sum[w];
            stats.pairs += pair_count[w];
        }
        if (epoch == 0 && stats.pairs == 0) fail(ErrorKind::EmptyStream, "pair stream produced no pairs");
        stats.mean_loss = stats.pairs ? total_loss / static_cast<double>(stats.pairs) : 0.0;
        last_lr = *std::min_element(worker_lr.begin(), worker_lr.end());
        stats.lr = last_lr;
        if (on_epoch) on_epoch(stats);
    }
    return model;
}

// ---------------------------------------------------------------------------
// word2vec text format

void save_embeddings(const EmbeddingModel& model, std::ostream& out) {
    out << model.target_vocab.size() << ' ' << model.dim << '\n';
    char buf[32];
    for (std::size_t i = 0; i < model.target_vocab.size(); ++i) {
        out << model.target_vocab.unit(i);
        for (double x : model.target_row(i)) {
            std::snprintf(buf, sizeof buf, " %.9g", x);
            out << buf;
        }
        out << '\n';
    }
}

void save_embeddings(const EmbeddingModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorKind::Io, "cannot write embeddings to '" + path + "'");
    save_embeddings(model, out);
    if (!out) fail(ErrorKind::Io, "failed writing embeddings to '" + path + "'");
}

EmbeddingModel load_embeddings(std::istream& in) {
    auto format_error = [](std::size_t line, const std::string& what) {
        fail(ErrorKind::Format, "line " + std::to_string(line) + ": " + what);
    };
    std::string line;
    if (!std::getline(in, line)) format_error(1, "missing header");
    std::size_t rows = 0;
    std::size_t dim = 0;
    {
        std::istringstream header(line);
        std::string extra;
        if (!(header >> rows >> dim) || (header >> extra)) format_error(1, "header must be '<count> <dim>'");
        if (dim == 0) format_error(1, "dimension must be at least 1");
    }
    std::vector<std::string> units;
    std::vector<double> values;
    units.reserve(rows);
    values.reserve(rows * dim);
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string unit;
        row >> unit;
        std::size_t n = 0;
        std::string tok;
        while (row >> tok) {
            char* end = nullptr;
            const double v = std::strtod(tok.c_str(), &end);
            if (end != tok.c_str() + tok.size()) format_error(line_no, "'" + tok + "' is not a number");
            values.push_back(v);
            ++n;
        }
        if (n != dim) {
            format_error(line_no, "expected " + std::to_string(dim) + " values, found " + std::to_string(n));
        }
        units.push_back(std::move(unit));
    }
    if (units.size() != rows) {
        format_error(line_no, "header announces " + std::to_string(rows) + " rows, found " +
                                  std::to_string(units.size()));
    }
    EmbeddingModel model;
    model.dim = dim;
    model.target_vocab = Vocabulary::from_units(std::move(units));
    model.target = std::move(values);
    return model;
}

EmbeddingModel load_embeddings(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open embeddings '" + path + "'");
    try {
        return load_embeddings(in);
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

}  // namespace lingemb
