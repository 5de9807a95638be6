#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rgenima/config.hpp"
#include "rgenima/pipeline.hpp"

int main(int argc, char** argv) {
    CLI::App app{"rgenima: imaging-genetics pipeline over RVOL volumes and genotype tables"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    const std::map<std::string, std::string> about{
        {"synth", "write a seeded synthetic cohort (genotypes, panel, volumes, labels)"},
        {"qc", "filter SNPs by missingness, MAF and HWE; impute the rest"},
        {"dataset", "parcellate volumes and build train/test prompt records"},
        {"train", "two-stage training; writes the model checkpoint"},
        {"eval", "greedy-decode the test records; writes metrics and confusion"},
        {"attribute", "rollout-based ROI-gene attention per subject"},
        {"stability", "bootstrap stability ranks and stable genes and ROIs"},
        {"enrich", "Fisher enrichment of stable genes against a reference set"},
        {"plotdata", "Manhattan-style CSV for one stage"},
    };
    for (const auto& name : rgenima::subcommand_names()) {
        auto* sub = app.add_subcommand(name, about.at(name));
        sub->add_option("--config", config_path, "sectioned key=value config file")->required();
        sub->add_option("--seed", seed, "overrides [run] seed");
        sub->add_option("--out", out, "overrides [paths] out");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    rgenima::RunConfig cfg;
    try {
        cfg = rgenima::load_config(config_path);
    } catch (const rgenima::Error& e) {
        std::cerr << "error [" << rgenima::errc_name(e.code()) << "]: " << e.what() << "\n";
        return rgenima::exit_code_for(e.code());
    }
    if (seed) cfg.seed = *seed;
    if (out) cfg.paths.out = *out;

    const std::string name = app.get_subcommands().front()->get_name();
    return rgenima::run_subcommand(name, cfg, std::cout, std::cerr);
}
