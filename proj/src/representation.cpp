#include "lingemb/classifiers.hpp"
#include "lingemb/error.hpp"
#include "lingemb/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace lingemb {

std::vector<double> doc_mean_vector(std::span<const std::string> units, const EmbeddingModel& embeddings) {
    std::vector<double> mean(embeddings.dim, 0.0);
    std::size_t found = 0;
    for (const auto& u : units) {
        if (auto v = embeddings.vector(u)) {
            simd::axpy(1.0, *v, mean);
            ++found;
        }
    }
    if (found > 0) simd::scale(1.0 / static_cast<double>(found), mean);
    return mean;
}

PaddedMatrix doc_padded_matrix(std::span<const std::string> units, const EmbeddingModel& embeddings,
                               std::size_t maxlen) {
    if (maxlen == 0) fail(ErrorKind::Parameter, "maxlen must be at least 1");
    PaddedMatrix m;
    m.rows = maxlen;
    m.cols = embeddings.dim;
    m.values.assign(maxlen * embeddings.dim, 0.0);
    m.mask.assign(maxlen, 0);
    std::size_t r = 0;
    for (const auto& u : units) {
        if (r == maxlen) break;
        if (auto v = embeddings.vector(u)) {
            std::copy(v->begin(), v->end(), m.values.begin() + static_cast<std::ptrdiff_t>(r * m.cols));
            m.mask[r++] = 1;
        }
    }
    return m;
}

Lexicon::Lexicon(std::vector<std::string> units) : units_(std::move(units)) {
    for (std::size_t i = 0; i < units_.size(); ++i) {
        if (!rows_.emplace(units_[i], static_cast<std::uint32_t>(i + 1)).second) {
            fail(ErrorKind::Format, "unit '" + units_[i] + "' appears twice in a lexicon");
        }
    }
}

std::optional<std::uint32_t> Lexicon::row(std::string_view unit) const {
    auto it = rows_.find(std::string(unit));
    if (it == rows_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::uint32_t> doc_index_sequence(std::span<const std::string> units, const Lexicon& lexicon,
                                              std::size_t maxlen) {
    std::vector<std::uint32_t> seq;
    for (const auto& u : units) {
        if (seq.size() == maxlen) break;
        if (auto r = lexicon.row(u)) seq.push_back(*r);
    }
    return seq;
}

TfidfModel TfidfModel::fit(const std::vector<std::vector<std::string>>& documents) {
    if (documents.empty()) fail(ErrorKind::EmptyStream, "tf-idf needs at least one document");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : documents) {
        std::vector<std::string> seen(doc.begin(), doc.end());
        std::sort(seen.begin(), seen.end());
        seen.erase(std::unique(seen.begin(), seen.end()), seen.end());
        for (auto& term : seen) ++df[term];
    }
    const double n = static_cast<double>(documents.size());
    std::vector<std::string> terms;
    std::vector<double> idf;
    terms.reserve(df.size());
    idf.reserve(df.size());
    for (const auto& [term, count] : df) {
        terms.push_back(term);
        idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return from_parts(std::move(terms), std::move(idf));
}

TfidfModel TfidfModel::from_parts(std::vector<std::string> terms, std::vector<double> idf) {
    if (terms.size() != idf.size()) fail(ErrorKind::Shape, "tf-idf terms and weights differ in length");
    if (!std::is_sorted(terms.begin(), terms.end())) fail(ErrorKind::Format, "tf-idf terms must be sorted");
    TfidfModel m;
    m.terms_ = std::move(terms);
    m.idf_ = std::move(idf);
    for (std::size_t i = 0; i < m.terms_.size(); ++i) m.index_.emplace(m.terms_[i], static_cast<std::uint32_t>(i));
    return m;
}

SparseVector TfidfModel::transform(std::span<const std::string> units) const {
    std::map<std::uint32_t, double> counts;
    for (const auto& u : units) {
        auto it = index_.find(u);
        if (it != index_.end()) counts[it->second] += 1.0;
    }
    SparseVector v;
    double norm = 0.0;
    for (const auto& [i, tf] : counts) {
        const double w = tf * idf_[i];
        v.index.push_back(i);
        v.value.push_back(w);
        norm += w * w;
    }
    if (norm > 0.0) simd::scale(1.0 / std::sqrt(norm), v.value);
    return v;
}

TfidfResult tfidf_bow(const std::vector<std::vector<std::string>>& documents) {
    TfidfResult result{TfidfModel::fit(documents), {}};
    result.rows.reserve(documents.size());
    for (const auto& doc : documents) result.rows.push_back(result.model.transform(doc));
    return result;
}

SparseVector to_sparse(std::span<const double> dense) {
    SparseVector v;
    v.index.resize(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i) v.index[i] = static_cast<std::uint32_t>(i);
    v.value.assign(dense.begin(), dense.end());
    return v;
}

void adam_update(AdamState& state, std::span<double> params, std::span<const double> grads) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        fail(ErrorKind::Shape, "Adam: parameter, gradient and moment sizes differ");
    }
    for (double g : grads) {
        if (!std::isfinite(g)) fail(ErrorKind::Numeric, "Adam: non-finite gradient");
    }
    const AdamConfig& c = state.config;
    state.t += 1;
    const double t = static_cast<double>(state.t);
    const double correct1 = 1.0 - std::pow(c.beta1, t);
    const double correct2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        state.m[i] = c.beta1 * state.m[i] + (1.0 - c.beta1) * g;
        state.v[i] = c.beta2 * state.v[i] + (1.0 - c.beta2) * g * g;
        const double m_hat = state.m[i] / correct1;
        const double v_hat = state.v[i] / correct2;
        params[i] -= c.alpha * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
}

}  // namespace lingemb
