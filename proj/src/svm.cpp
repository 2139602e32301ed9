#include "lingemb/classifiers.hpp"
#include "lingemb/error.hpp"
#include "lingemb/seed.hpp"
#include "lingemb/simd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lingemb {

namespace {

double sparse_dot(const SparseVector& x, std::span<const double> w) {
    double s = 0.0;
    for (std::size_t k = 0; k < x.nnz(); ++k) s += x.value[k] * w[x.index[k]];
    return s;
}

double sign_of(Label label) { return label == Label::Harmful ? 1.0 : -1.0; }

void check_rows(const std::vector<SparseVector>& rows, std::size_t dimension, std::span<const Label> labels) {
    if (rows.size() != labels.size()) fail(ErrorKind::Shape, "feature rows and labels differ in count");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].index.size() != rows[i].value.size()) fail(ErrorKind::Shape, "malformed sparse row");
        if (!rows[i].index.empty() && rows[i].index.back() >= dimension) {
            fail(ErrorKind::Shape, "row " + std::to_string(i) + " exceeds dimension " + std::to_string(dimension));
        }
    }
}

}  // namespace

NetworkModel train_svm(const std::vector<SparseVector>& rows, std::size_t dimension, std::span<const Label> labels,
                       const ClassWeights& weights, const ClassifierConfig& config) {
    config.validate();
    check_rows(rows, dimension, labels);
    if (dimension == 0) fail(ErrorKind::Shape, "SVM input has dimension 0");
    const bool has_pos = std::find(labels.begin(), labels.end(), Label::Harmful) != labels.end();
    const bool has_neg = std::find(labels.begin(), labels.end(), Label::Clean) != labels.end();
    if (!has_pos || !has_neg) fail(ErrorKind::DegenerateData, "SVM training data holds a single class");

    // w = scale * v keeps the shrinkage step O(1) on sparse rows.
    std::vector<double> v(dimension, 0.0);
    double scale = 1.0;
    double bias = 0.0;
    const double n = static_cast<double>(rows.size());
    std::vector<std::size_t> order(rows.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(config.seed, 202));
    std::uint64_t t = 0;

    for (std::size_t epoch = 0; epoch < config.svm_epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (const std::size_t i : order) {
            const double eta = config.svm_lr / (1.0 + static_cast<double>(t) / n);
            ++t;
            const SparseVector& x = rows[i];
            const double y = sign_of(labels[i]);
            const double margin = y * (scale * sparse_dot(x, v) + bias);
            scale *= 1.0 - eta * config.svm_lambda;
            if (margin < 1.0) {
                const double step = eta * weights.of(labels[i]) * y;
                for (std::size_t k = 0; k < x.nnz(); ++k) v[x.index[k]] += step / scale * x.value[k];
                bias += step;
            }
            if (scale < 1e-9) {
                simd::scale(scale, v);
                scale = 1.0;
            }
        }
    }
    simd::scale(scale, v);
    for (double value : v) {
        if (!std::isfinite(value)) fail(ErrorKind::Numeric, "SVM weights became non-finite");
    }

    NetworkModel model;
    model.arch = Architecture::Svm;
    model.config = config;
    Tensor w("w", 1, dimension);
    w.data = std::move(v);
    Tensor b("b", 1, 1);
    b.data[0] = bias;
    model.params.push_back(std::move(w));
    model.params.push_back(std::move(b));
    return model;
}

double svm_objective(const NetworkModel& model, const std::vector<SparseVector>& rows, std::span<const Label> labels,
                     const ClassWeights& weights, double lambda) {
    const auto w = model.param("w").row(0);
    const double b = model.param("b").data[0];
    check_rows(rows, w.size(), labels);
    double hinge = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double m = sign_of(labels[i]) * (sparse_dot(rows[i], w) + b);
        hinge += weights.of(labels[i]) * std::max(0.0, 1.0 - m);
    }
    const double reg = 0.5 * lambda * simd::sum_squares(w);
    return rows.empty() ? reg : reg + hinge / static_cast<double>(rows.size());
}

Gradients svm_gradient(const NetworkModel& model, const std::vector<SparseVector>& rows,
                       std::span<const Label> labels, const ClassWeights& weights, double lambda) {
    const auto w = model.param("w").row(0);
    const double b = model.param("b").data[0];
    check_rows(rows, w.size(), labels);
    Gradients g(2);
    g[0].assign(w.begin(), w.end());
    simd::scale(lambda, g[0]);
    g[1].assign(1, 0.0);
    if (rows.empty()) return g;
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const double y = sign_of(labels[i]);
        if (y * (sparse_dot(rows[i], w) + b) >= 1.0) continue;
        const double c = -weights.of(labels[i]) * y * inv_n;
        for (std::size_t k = 0; k < rows[i].nnz(); ++k) g[0][rows[i].index[k]] += c * rows[i].value[k];
        g[1][0] += c;
    }
    return g;
}

}  // namespace lingemb
