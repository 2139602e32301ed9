#include "lingemb/classifiers.hpp"
#include "lingemb/error.hpp"
#include "lingemb/seed.hpp"
#include "lingemb/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lingemb {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

std::span<const double> cspan(const double* p, std::size_t n) { return {p, n}; }
std::span<double> mspan(double* p, std::size_t n) { return {p, n}; }

std::size_t index_of(const NetworkModel& m, std::string_view name) {
    for (std::size_t i = 0; i < m.params.size(); ++i) {
        if (m.params[i].name == name) return i;
    }
    fail(ErrorKind::Shape, "model has no tensor '" + std::string(name) + "'");
}

// Loss bookkeeping for one example during backpropagation.
struct Backprop {
    double label = 0.0;   // 1 harmful, 0 clean
    double weight = 1.0;  // class weight
    double scale = 1.0;   // 1 / batch size
    Gradients* grads = nullptr;
    double loss = 0.0;

    // Records the loss at logit z and returns dLoss/dz (already scaled).
    double finish(double z) {
        loss = weight * (softplus(z) - label * z);
        return scale * weight * (sigmoid(z) - label);
    }
    std::vector<double>& g(const NetworkModel& m, std::string_view name) { return (*grads)[index_of(m, name)]; }
};

void fill_dropout(std::vector<double>& mask, double p, std::mt19937_64* rng) {
    if (rng == nullptr || p <= 0.0) {
        std::fill(mask.begin(), mask.end(), 1.0);
        return;
    }
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double keep_scale = 1.0 / (1.0 - p);
    for (double& v : mask) v = u(*rng) >= p ? keep_scale : 0.0;
}

// Padded maxlen x d input; returns the number of real rows.
std::size_t build_input(const NetworkModel& m, const IndexSequence& seq, std::vector<double>& x) {
    const Tensor& table = m.embedding_table();
    const std::size_t L = m.config.maxlen;
    const std::size_t d = table.cols;
    x.assign(L * d, 0.0);
    const std::size_t len = std::min(seq.size(), L);
    for (std::size_t t = 0; t < len; ++t) {
        if (seq[t] >= table.rows) fail(ErrorKind::Shape, "index sequence refers past the embedding table");
        const auto row = table.row(seq[t]);
        std::copy(row.begin(), row.end(), x.begin() + static_cast<std::ptrdiff_t>(t * d));
    }
    return len;
}

// Adds the input gradient of the real rows to the trainable table.
void scatter_input_grad(const NetworkModel& m, Backprop& bp, const IndexSequence& seq, std::size_t len,
                        const std::vector<double>& dx) {
    auto& ge = bp.g(m, "embedding");
    const std::size_t d = m.embedding_table().cols;
    for (std::size_t t = 0; t < len; ++t) {
        simd::axpy(1.0, cspan(dx.data() + t * d, d), mspan(ge.data() + seq[t] * d, d));
    }
}

bool trainable_table(const NetworkModel& m) { return !m.frozen_embedding; }

// --- MLP -------------------------------------------------------------------

double run_mlp(const NetworkModel& m, const IndexSequence& seq, std::mt19937_64* rng, Backprop* bp) {
    const Tensor& W1 = m.param("W1");
    const Tensor& b1 = m.param("b1");
    const Tensor& W2 = m.param("W2");
    const Tensor& b2 = m.param("b2");
    const std::size_t d = m.embedding_table().cols;

    std::vector<double> padded;
    const std::size_t len = build_input(m, seq, padded);
    std::vector<double> x;
    if (m.config.mlp_input == PoolingInput::Flatten) {
        x = std::move(padded);
    } else {
        x.assign(d, 0.0);
        for (std::size_t t = 0; t < len; ++t) simd::axpy(1.0, cspan(padded.data() + t * d, d), x);
        if (len > 0) simd::scale(1.0 / static_cast<double>(len), x);
    }
    if (x.size() != W1.cols) fail(ErrorKind::Shape, "MLP input width does not match W1");

    // Flattened input is zero past the real rows.
    const std::size_t used = m.config.mlp_input == PoolingInput::Flatten ? len * d : x.size();
    const auto xu = cspan(x.data(), used);
    const std::size_t H = W1.rows;
    std::vector<double> pre(H), hidden(H), mask(H);
    for (std::size_t j = 0; j < H; ++j) {
        pre[j] = simd::dot(W1.row(j).first(used), xu) + b1.data[j];
        hidden[j] = std::max(0.0, pre[j]);
    }
    fill_dropout(mask, m.config.dropout, rng);
    for (std::size_t j = 0; j < H; ++j) hidden[j] *= mask[j];
    const double z = simd::dot(W2.row(0), hidden) + b2.data[0];
    if (bp == nullptr) return z;

    const double dz = bp->finish(z);
    simd::axpy(dz, hidden, bp->g(m, "W2"));
    bp->g(m, "b2")[0] += dz;
    auto& gW1 = bp->g(m, "W1");
    auto& gb1 = bp->g(m, "b1");
    const bool train_table = trainable_table(m);
    std::vector<double> dx(train_table ? x.size() : 0, 0.0);
    for (std::size_t j = 0; j < H; ++j) {
        if (pre[j] <= 0.0 || mask[j] == 0.0) continue;
        const double dpre = dz * W2.data[j] * mask[j];
        simd::axpy(dpre, xu, mspan(gW1.data() + j * W1.cols, used));
        gb1[j] += dpre;
        if (train_table) simd::axpy(dpre, W1.row(j).first(used), mspan(dx.data(), used));
    }
    if (train_table) {
        if (m.config.mlp_input == PoolingInput::Flatten) {
            scatter_input_grad(m, *bp, seq, len, dx);
        } else if (len > 0) {
            std::vector<double> rows(len * d);
            for (std::size_t t = 0; t < len; ++t) {
                for (std::size_t k = 0; k < d; ++k) rows[t * d + k] = dx[k] / static_cast<double>(len);
            }
            scatter_input_grad(m, *bp, seq, len, rows);
        }
    }
    return z;
}

// --- CNN -------------------------------------------------------------------

constexpr std::size_t kPatch = 4;

double run_cnn(const NetworkModel& m, const IndexSequence& seq, std::mt19937_64* rng, Backprop* bp) {
    const Tensor& F = m.param("filters");       // nf x 16
    const Tensor& fb = m.param("filter_bias");  // 1 x nf
    const Tensor& Wo = m.param("Wo");
    const Tensor& bo = m.param("bo");
    const std::size_t L = m.config.maxlen;
    const std::size_t d = m.embedding_table().cols;
    const std::size_t R = L - kPatch + 1;
    const std::size_t C = d - kPatch + 1;
    const std::size_t PR = R / 2;
    const std::size_t PC = C / 2;
    const std::size_t nf = F.rows;
    if (Wo.cols != nf * PR * PC) fail(ErrorKind::Shape, "CNN output layer does not match the pooled map");

    std::vector<double> x;
    const std::size_t len = build_input(m, seq, x);

    std::vector<double> conv(nf * R * C);
    for (std::size_t f = 0; f < nf; ++f) {
        const auto kernel = F.row(f);
        for (std::size_t r = 0; r < R; ++r) {
            double* out = conv.data() + (f * R + r) * C;
            std::fill(out, out + C, fb.data[f]);
            for (std::size_t kr = 0; kr < kPatch && r + kr < len; ++kr) {  // padding rows are zero
                const double* in = x.data() + (r + kr) * d;
                for (std::size_t kc = 0; kc < kPatch; ++kc) {
                    simd::axpy(kernel[kr * kPatch + kc], cspan(in + kc, C), mspan(out, C));
                }
            }
            for (std::size_t c = 0; c < C; ++c) out[c] = std::max(0.0, out[c]);
        }
    }

    const std::size_t flat_n = nf * PR * PC;
    std::vector<double> flat(flat_n), mask(flat_n);
    std::vector<std::size_t> arg(flat_n);
    for (std::size_t f = 0; f < nf; ++f) {
        for (std::size_t pr = 0; pr < PR; ++pr) {
            for (std::size_t pc = 0; pc < PC; ++pc) {
                std::size_t best = (f * R + 2 * pr) * C + 2 * pc;
                for (std::size_t dr = 0; dr < 2; ++dr) {
                    for (std::size_t dc = 0; dc < 2; ++dc) {
                        const std::size_t at = (f * R + 2 * pr + dr) * C + 2 * pc + dc;
                        if (conv[at] > conv[best]) best = at;
                    }
                }
                const std::size_t k = (f * PR + pr) * PC + pc;
                flat[k] = conv[best];
                arg[k] = best;
            }
        }
    }
    fill_dropout(mask, m.config.dropout, rng);
    for (std::size_t k = 0; k < flat_n; ++k) flat[k] *= mask[k];
    const double z = simd::dot(Wo.row(0), flat) + bo.data[0];
    if (bp == nullptr) return z;

    const double dz = bp->finish(z);
    simd::axpy(dz, flat, bp->g(m, "Wo"));
    bp->g(m, "bo")[0] += dz;

    std::vector<double> gconv(conv.size(), 0.0);
    std::vector<char> row_active(nf * R, 0);
    for (std::size_t k = 0; k < flat_n; ++k) {
        if (mask[k] == 0.0 || conv[arg[k]] <= 0.0) continue;
        gconv[arg[k]] += dz * Wo.data[k] * mask[k];
        row_active[arg[k] / C] = 1;
    }
    auto& gF = bp->g(m, "filters");
    auto& gfb = bp->g(m, "filter_bias");
    const bool train_table = trainable_table(m);
    std::vector<double> dx(train_table ? x.size() : 0, 0.0);
    for (std::size_t f = 0; f < nf; ++f) {
        const auto kernel = F.row(f);
        for (std::size_t r = 0; r < R; ++r) {
            if (!row_active[f * R + r]) continue;
            const auto grow = cspan(gconv.data() + (f * R + r) * C, C);
            gfb[f] += std::accumulate(grow.begin(), grow.end(), 0.0);
            for (std::size_t kr = 0; kr < kPatch && r + kr < len; ++kr) {
                const double* in = x.data() + (r + kr) * d;
                for (std::size_t kc = 0; kc < kPatch; ++kc) {
                    gF[f * kPatch * kPatch + kr * kPatch + kc] += simd::dot(grow, cspan(in + kc, C));
                    if (train_table) {
                        simd::axpy(kernel[kr * kPatch + kc], grow, mspan(dx.data() + (r + kr) * d + kc, C));
                    }
                }
            }
        }
    }
    if (train_table) scatter_input_grad(m, *bp, seq, len, dx);
    return z;
}

// --- LSTM ------------------------------------------------------------------

// Gate rows in W, U and b: [input | forget | output | candidate].
double run_lstm(const NetworkModel& m, const IndexSequence& seq, std::mt19937_64* rng, Backprop* bp) {
    const Tensor& W = m.param("W");
    const Tensor& U = m.param("U");
    const Tensor& b = m.param("b");
    const Tensor& Wo = m.param("Wo");
    const Tensor& bo = m.param("bo");
    const std::size_t H = U.cols;
    const std::size_t d = m.embedding_table().cols;
    if (W.cols != d || W.rows != 4 * H) fail(ErrorKind::Shape, "LSTM input weights do not match the embeddings");

    std::vector<double> x;
    const std::size_t T = build_input(m, seq, x);

    // gates[t] holds activated i, f, o, g; cells[t+1] and hiddens[t+1] the state after step t.
    std::vector<double> gates(T * 4 * H);
    std::vector<double> cells((T + 1) * H, 0.0);
    std::vector<double> hiddens((T + 1) * H, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
        const auto xt = cspan(x.data() + t * d, d);
        const auto h_prev = cspan(hiddens.data() + t * H, H);
        double* a = gates.data() + t * 4 * H;
        for (std::size_t r = 0; r < 4 * H; ++r) {
            a[r] = simd::dot(W.row(r), xt) + simd::dot(U.row(r), h_prev) + b.data[r];
        }
        for (std::size_t j = 0; j < 3 * H; ++j) a[j] = sigmoid(a[j]);
        for (std::size_t j = 3 * H; j < 4 * H; ++j) a[j] = std::tanh(a[j]);
        const double* c_prev = cells.data() + t * H;
        double* c = cells.data() + (t + 1) * H;
        double* h = hiddens.data() + (t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
            c[j] = a[H + j] * c_prev[j] + a[j] * a[3 * H + j];
            h[j] = a[2 * H + j] * std::tanh(c[j]);
        }
    }

    std::vector<double> last(hiddens.begin() + static_cast<std::ptrdiff_t>(T * H), hiddens.end());
    std::vector<double> mask(H);
    fill_dropout(mask, m.config.dropout, rng);
    for (std::size_t j = 0; j < H; ++j) last[j] *= mask[j];
    const double z = simd::dot(Wo.row(0), last) + bo.data[0];
    if (bp == nullptr) return z;

    const double dz = bp->finish(z);
    simd::axpy(dz, last, bp->g(m, "Wo"));
    bp->g(m, "bo")[0] += dz;
    auto& gW = bp->g(m, "W");
    auto& gU = bp->g(m, "U");
    auto& gb = bp->g(m, "b");
    const bool train_table = trainable_table(m);
    std::vector<double> dx(train_table ? x.size() : 0, 0.0);

    std::vector<double> dh(H), dc(H, 0.0), da(4 * H), dh_prev(H);
    for (std::size_t j = 0; j < H; ++j) dh[j] = dz * Wo.data[j] * mask[j];
    for (std::size_t t = T; t-- > 0;) {
        const double* a = gates.data() + t * 4 * H;
        const double* c_prev = cells.data() + t * H;
        const double* c = cells.data() + (t + 1) * H;
        for (std::size_t j = 0; j < H; ++j) {
            const double i = a[j], f = a[H + j], o = a[2 * H + j], g = a[3 * H + j];
            const double tc = std::tanh(c[j]);
            const double d_o = dh[j] * tc;
            dc[j] += dh[j] * o * (1.0 - tc * tc);
            da[j] = dc[j] * g * i * (1.0 - i);
            da[H + j] = dc[j] * c_prev[j] * f * (1.0 - f);
            da[2 * H + j] = d_o * o * (1.0 - o);
            da[3 * H + j] = dc[j] * i * (1.0 - g * g);
            dc[j] *= f;
        }
        const auto xt = cspan(x.data() + t * d, d);
        const auto h_prev = cspan(hiddens.data() + t * H, H);
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        for (std::size_t r = 0; r < 4 * H; ++r) {
            if (da[r] == 0.0) continue;
            simd::axpy(da[r], xt, mspan(gW.data() + r * d, d));
            simd::axpy(da[r], h_prev, mspan(gU.data() + r * H, H));
            gb[r] += da[r];
            simd::axpy(da[r], U.row(r), dh_prev);
            if (train_table) simd::axpy(da[r], W.row(r), mspan(dx.data() + t * d, d));
        }
        dh.swap(dh_prev);
    }
    if (train_table) scatter_input_grad(m, *bp, seq, T, dx);
    return z;
}

double run(const NetworkModel& m, const IndexSequence& seq, std::mt19937_64* rng, Backprop* bp) {
    switch (m.arch) {
        case Architecture::Mlp: return run_mlp(m, seq, rng, bp);
        case Architecture::Cnn: return run_cnn(m, seq, rng, bp);
        case Architecture::Lstm: return run_lstm(m, seq, rng, bp);
        case Architecture::Svm: break;
    }
    fail(ErrorKind::Shape, "SVM models take vector inputs, not index sequences");
}

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& v : t.data) v = u(rng);
}

Gradients zero_grads(const NetworkModel& m) {
    Gradients g;
    g.reserve(m.params.size());
    for (const auto& p : m.params) g.emplace_back(p.data.size(), 0.0);
    return g;
}

}  // namespace

// ---------------------------------------------------------------------------

Tensor& NetworkModel::param(std::string_view name) { return params[index_of(*this, name)]; }
const Tensor& NetworkModel::param(std::string_view name) const { return params[index_of(*this, name)]; }

bool NetworkModel::has_param(std::string_view name) const {
    return std::any_of(params.begin(), params.end(), [&](const Tensor& t) { return t.name == name; });
}

const Tensor& NetworkModel::embedding_table() const {
    if (frozen_embedding) return *frozen_embedding;
    return param("embedding");
}

std::size_t NetworkModel::input_dim() const {
    if (arch == Architecture::Svm) return param("w").cols;
    return embedding_table().cols;
}

NetworkModel init_network(Architecture arch, std::shared_ptr<const Lexicon> lexicon,
                          std::shared_ptr<const Tensor> table, const ClassifierConfig& config,
                          std::mt19937_64& rng) {
    config.validate();
    if (arch == Architecture::Svm) fail(ErrorKind::Configuration, "init_network builds MLP, CNN and LSTM models");
    if (!lexicon) fail(ErrorKind::Configuration, "network needs a lexicon");
    NetworkModel m;
    m.arch = arch;
    m.config = config;
    m.features = FeatureKind::Sequence;
    m.lexicon = std::move(lexicon);
    std::size_t d = 0;
    if (table) {
        if (table->rows != m.lexicon->rows()) fail(ErrorKind::Shape, "frozen table rows do not match the lexicon");
        d = table->cols;
        m.frozen_embedding = std::move(table);
    } else {
        d = config.adhoc_dim;
        Tensor e("embedding", m.lexicon->rows(), d);
        std::uniform_real_distribution<double> u(-0.05, 0.05);
        for (std::size_t i = d; i < e.data.size(); ++i) e.data[i] = u(rng);
        m.params.push_back(std::move(e));
    }
    const std::size_t L = config.maxlen;
    switch (arch) {
        case Architecture::Mlp: {
            const std::size_t in = config.mlp_input == PoolingInput::Flatten ? L * d : d;
            const std::size_t H = config.mlp_hidden;
            Tensor W1("W1", H, in), b1("b1", 1, H), W2("W2", 1, H), b2("b2", 1, 1);
            glorot(W1, in, H, rng);
            glorot(W2, H, 1, rng);
            for (auto* t : {&W1, &b1, &W2, &b2}) m.params.push_back(std::move(*t));
            break;
        }
        case Architecture::Cnn: {
            if (L < kPatch + 1 || d < kPatch + 1) {
                fail(ErrorKind::Shape, "CNN needs maxlen and embedding width of at least 5 for a 4x4 patch "
                                       "followed by 2x2 pooling");
            }
            const std::size_t nf = config.cnn_filters;
            const std::size_t flat = nf * ((L - kPatch + 1) / 2) * ((d - kPatch + 1) / 2);
            Tensor F("filters", nf, kPatch * kPatch), fb("filter_bias", 1, nf), Wo("Wo", 1, flat), bo("bo", 1, 1);
            glorot(F, kPatch * kPatch, kPatch * kPatch * nf, rng);
            glorot(Wo, flat, 1, rng);
            for (auto* t : {&F, &fb, &Wo, &bo}) m.params.push_back(std::move(*t));
            break;
        }
        case Architecture::Lstm: {
            const std::size_t H = config.lstm_hidden;
            Tensor W("W", 4 * H, d), U("U", 4 * H, H), b("b", 1, 4 * H), Wo("Wo", 1, H), bo("bo", 1, 1);
            glorot(W, d, 4 * H, rng);
            glorot(U, H, 4 * H, rng);
            for (std::size_t j = H; j < 2 * H; ++j) b.data[j] = 1.0;  // forget gate
            glorot(Wo, H, 1, rng);
            for (auto* t : {&W, &U, &b, &Wo, &bo}) m.params.push_back(std::move(*t));
            break;
        }
        case Architecture::Svm: break;
    }
    return m;
}

double network_logit(const NetworkModel& model, const IndexSequence& doc) { return run(model, doc, nullptr, nullptr); }

double network_loss(const NetworkModel& model, const std::vector<IndexSequence>& docs, std::span<const Label> labels,
                    const ClassWeights& weights, Gradients* grads) {
    if (docs.size() != labels.size()) fail(ErrorKind::Shape, "documents and labels differ in count");
    if (docs.empty()) return 0.0;
    if (grads) *grads = zero_grads(model);
    const double scale = 1.0 / static_cast<double>(docs.size());
    double total = 0.0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        Backprop bp;
        bp.label = labels[i] == Label::Harmful ? 1.0 : 0.0;
        bp.weight = weights.of(labels[i]);
        bp.scale = scale;
        bp.grads = grads;
        if (grads) {
            run(model, docs[i], nullptr, &bp);
            total += bp.loss;
        } else {
            const double z = network_logit(model, docs[i]);
            total += bp.weight * (softplus(z) - bp.label * z);
        }
    }
    return total * scale;
}

void train_network(NetworkModel& model, const std::vector<IndexSequence>& docs, std::span<const Label> labels,
                   const ClassWeights& weights, TrainingLog* log) {
    model.config.validate();
    if (docs.size() != labels.size()) fail(ErrorKind::Shape, "documents and labels differ in count");
    if (docs.empty()) fail(ErrorKind::EmptyStream, "no training documents");
    const ClassifierConfig& cfg = model.config;

    std::vector<AdamState> states;
    states.reserve(model.params.size());
    for (const auto& p : model.params) states.emplace_back(p.data.size(), cfg.adam);

    std::mt19937_64 rng(mix_seed(cfg.seed, 101));
    std::vector<std::size_t> order(docs.size());
    std::iota(order.begin(), order.end(), 0);
    Gradients grads = zero_grads(model);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_no) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            for (auto& g : grads) std::fill(g.begin(), g.end(), 0.0);
            double batch_loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const std::size_t i = order[k];
                Backprop bp;
                bp.label = labels[i] == Label::Harmful ? 1.0 : 0.0;
                bp.weight = weights.of(labels[i]);
                bp.scale = 1.0 / static_cast<double>(end - start);
                bp.grads = &grads;
                run(model, docs[i], cfg.dropout > 0.0 ? &rng : nullptr, &bp);
                batch_loss += bp.loss;
            }
            if (!std::isfinite(batch_loss)) {
                fail(ErrorKind::Numeric, "non-finite loss in epoch " + std::to_string(epoch + 1) + ", batch " +
                                             std::to_string(batch_no + 1));
            }
            for (std::size_t p = 0; p < model.params.size(); ++p) {
                try {
                    adam_update(states[p], model.params[p].data, grads[p]);
                } catch (const Error& e) {
                    throw Error(e.kind(), std::string(e.what()) + " for '" + model.params[p].name + "' in epoch " +
                                              std::to_string(epoch + 1) + ", batch " + std::to_string(batch_no + 1));
                }
            }
            epoch_loss += batch_loss;
        }
        if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(docs.size()));
    }
}

}  // namespace lingemb
