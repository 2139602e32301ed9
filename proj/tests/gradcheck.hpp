#pragma once

// Central finite-difference oracle for the classifier gradients.

#include "lingemb/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace lingemb::testing {

inline double relative_error(double analytic, double numeric) {
    return std::abs(analytic - numeric) / std::max(1e-6, std::abs(analytic) + std::abs(numeric));
}

struct NetworkInstance {
    NetworkModel model;
    std::vector<IndexSequence> docs;
    std::vector<Label> labels;
    ClassWeights weights{0.7, 2.3};
};

// Small seeded instance with every parameter (biases included) randomized.
inline NetworkInstance small_network(Architecture arch, bool frozen, std::size_t d, std::size_t maxlen,
                                     std::size_t hidden, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-0.8, 0.8);
    std::vector<std::string> units;
    for (int i = 0; i < 6; ++i) units.push_back("u" + std::to_string(i));
    auto lexicon = std::make_shared<const Lexicon>(units);

    ClassifierConfig cfg;
    cfg.maxlen = maxlen;
    cfg.mlp_hidden = hidden;
    cfg.lstm_hidden = hidden;
    cfg.cnn_filters = hidden;
    cfg.adhoc_dim = d;
    cfg.dropout = 0.0;

    std::shared_ptr<const Tensor> table;
    if (frozen) {
        auto t = std::make_shared<Tensor>("frozen_embedding", lexicon->rows(), d);
        for (std::size_t i = d; i < t->data.size(); ++i) t->data[i] = u(rng);
        table = t;
    }
    NetworkInstance inst;
    inst.model = init_network(arch, lexicon, table, cfg, rng);
    for (auto& p : inst.model.params) {
        const std::size_t skip = p.name == "embedding" ? p.cols : 0;  // padding row stays zero
        for (std::size_t i = skip; i < p.data.size(); ++i) p.data[i] = u(rng);
    }
    std::uniform_int_distribution<std::uint32_t> row(1, static_cast<std::uint32_t>(units.size()));
    for (std::size_t k = 0; k < 5; ++k) {
        IndexSequence seq(1 + k % (maxlen + 1));
        for (auto& r : seq) r = row(rng);
        inst.docs.push_back(seq);
        inst.labels.push_back(k % 2 ? Label::Harmful : Label::Clean);
    }
    return inst;
}

// Largest per-coordinate relative error between the analytic gradient and
// central differences of the full loss, over every trainable tensor.
inline double network_gradient_error(NetworkInstance& inst, double h = 1e-5) {
    Gradients analytic;
    network_loss(inst.model, inst.docs, inst.labels, inst.weights, &analytic);
    double worst = 0.0;
    for (std::size_t p = 0; p < inst.model.params.size(); ++p) {
        auto& data = inst.model.params[p].data;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + h;
            const double up = network_loss(inst.model, inst.docs, inst.labels, inst.weights);
            data[i] = saved - h;
            const double down = network_loss(inst.model, inst.docs, inst.labels, inst.weights);
            data[i] = saved;
            worst = std::max(worst, relative_error(analytic[p][i], (up - down) / (2 * h)));
        }
    }
    return worst;
}

// SVM objective gradient away from the hinge; returns -1 if the seeded
// instance puts a point within `margin_gap` of the hinge.
inline double svm_gradient_error(std::uint64_t seed, double margin_gap = 1e-2, double h = 1e-4) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    const std::size_t dim = 5;
    std::vector<SparseVector> rows;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < 8; ++i) {
        std::vector<double> x(dim);
        for (auto& v : x) v = g(rng);
        rows.push_back(to_sparse(x));
        labels.push_back(i % 3 == 0 ? Label::Harmful : Label::Clean);
    }
    NetworkModel m;
    m.arch = Architecture::Svm;
    m.params.emplace_back("w", 1, dim);
    m.params.emplace_back("b", 1, 1);
    for (auto& v : m.params[0].data) v = g(rng);
    m.params[1].data[0] = 0.3 * g(rng);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        double s = m.params[1].data[0];
        for (std::size_t k = 0; k < rows[i].nnz(); ++k) s += rows[i].value[k] * m.params[0].data[rows[i].index[k]];
        const double y = labels[i] == Label::Harmful ? 1.0 : -1.0;
        if (std::abs(1.0 - y * s) < margin_gap) return -1.0;
    }
    const ClassWeights w{0.8, 1.6};
    const double lambda = 0.05;
    const Gradients analytic = svm_gradient(m, rows, labels, w, lambda);
    double worst = 0.0;
    for (std::size_t p = 0; p < 2; ++p) {
        auto& data = m.params[p].data;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            data[i] = saved + h;
            const double up = svm_objective(m, rows, labels, w, lambda);
            data[i] = saved - h;
            const double down = svm_objective(m, rows, labels, w, lambda);
            data[i] = saved;
            worst = std::max(worst, relative_error(analytic[p][i], (up - down) / (2 * h)));
        }
    }
    return worst;
}

}  // namespace lingemb::testing
