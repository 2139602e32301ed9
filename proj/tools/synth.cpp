// Writes a seeded synthetic dataset and pretraining corpus for smoke runs.

#include "lingemb/synthetic.hpp"

#include "CLI11.hpp"

#include <exception>
#include <filesystem>
#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"lingemb-synth: generate a synthetic labeled corpus"};
    lingemb::SyntheticOptions opt;
    std::string dir = "synthetic";
    app.add_option("--out", dir, "output directory");
    app.add_option("--documents", opt.documents)->check(CLI::PositiveNumber);
    app.add_option("--harmful-fraction", opt.harmful_fraction)->check(CLI::Range(0.0, 1.0));
    app.add_option("--pretraining", opt.pretraining_sentences);
    app.add_option("--seed", opt.seed);
    CLI11_PARSE(app, argc, argv);

    try {
        const auto syn = lingemb::make_synthetic_corpus(opt);
        std::filesystem::create_directories(dir);
        lingemb::write_synthetic_corpus(syn, dir);
        std::cout << "wrote " << dir << ": " << syn.corpus.size() << " documents (" << syn.corpus.harmful
                  << " harmful), " << syn.pretraining.size() << " pretraining sentences\n";
    } catch (const std::exception& e) {
        std::cerr << "lingemb-synth: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
