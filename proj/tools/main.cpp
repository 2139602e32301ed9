#include "pipeline.hpp"

#include "CLI11.hpp"

#include <iostream>

using namespace lingemb::cli;

int main(int argc, char** argv) {
    CLI::App app{"lingemb: word embeddings over linguistic units and harmful-text classifiers"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;
    std::uint64_t seed = 0;
    std::size_t workers = 0;
    std::string condition, out;
    app.add_option("--config", config_path, "JSON configuration file");
    auto* seed_opt = app.add_option("--seed", seed, "global seed");
    auto* workers_opt = app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--deterministic", ov.deterministic, "single worker, bit-reproducible");
    app.add_option("--scheme", ov.schemes, "feature scheme (repeatable): TOK LEM TOKPOS LEMPOS DEP DEPC");
    app.add_option("--model", ov.models, "classifier (repeatable): SVM MLP CNN LSTM");
    auto* cond_opt = app.add_option("--condition", condition, "pretrained or adhoc");
    auto* out_opt = app.add_option("--out", out, "output directory");

    const std::pair<const char*, Command> commands[] = {
        {"ingest-check", Command::IngestCheck},
        {"encode", Command::Encode},
        {"train-embeddings", Command::TrainEmbeddings},
        {"train-classifier", Command::TrainClassifier},
        {"experiment", Command::Experiment},
        {"report", Command::Report},
    };
    const char* help[] = {
        "parse the dataset and corpus and print counts",
        "write encoded unit streams for each scheme",
        "train SGNS vectors for each scheme",
        "train classifiers on the whole dataset and save checkpoints",
        "run the cross-validated scheme x model grid",
        "print a saved report JSON as TSV",
    };
    // Global flags may come after the subcommand too; subcommands inherit this.
    app.fallthrough();
    for (std::size_t i = 0; i < std::size(commands); ++i) app.add_subcommand(commands[i].first, help[i]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kValidationError;
    }

    Command command = Command::IngestCheck;
    for (const auto& [name, cmd] : commands) {
        if (app.got_subcommand(name)) command = cmd;
    }
    if (*seed_opt) ov.seed = seed;
    if (*workers_opt) ov.workers = workers;
    if (*cond_opt) ov.condition = condition;
    if (*out_opt) ov.out = out;

    PipelineConfig config;
    try {
        if (!config_path.empty()) config = load_config(config_path);
        apply_overrides(config, ov);
    } catch (const std::exception& e) {
        std::cerr << "lingemb: invalid configuration: " << e.what() << '\n';
        return kValidationError;
    }
    return run_command(command, config, std::cout, std::cerr);
}
