#include "bpl/errors.hpp"
#include "bpl/harness.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"biharmonic phaseless laboratory"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config path")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "override config seed")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--jobs", jobs, "worker count for sweeps");
    };

    CLI::App* c_forward = app.add_subcommand("forward", "solve the scene, dump fields and far fields");
    CLI::App* c_synth = app.add_subcommand("synth", "synthesize phaseless samples along a ray");
    CLI::App* c_retrieve = app.add_subcommand("retrieve", "run a retrieval formula over the aperture");
    CLI::App* c_converge = app.add_subcommand("converge", "error sweep with slope fit");
    CLI::App* c_propagate = app.add_subcommand("propagate", "far field to near field reconstruction");
    CLI::App* c_pipeline = app.add_subcommand("pipeline", "full phaseless-to-near-field pipeline");
    for (CLI::App* s : {c_forward, c_synth, c_retrieve, c_converge, c_propagate, c_pipeline}) {
        add_common(s);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        bpl::harness::Config cfg = bpl::harness::Config::from_json_file(config_path);
        if (seed_set) cfg.seed = seed;
        bpl::harness::RunContext ctx{out_dir, jobs, &std::cout};
        if (c_forward->parsed()) return bpl::harness::cmd_forward(cfg, ctx);
        if (c_synth->parsed()) return bpl::harness::cmd_synth(cfg, ctx);
        if (c_retrieve->parsed()) return bpl::harness::cmd_retrieve(cfg, ctx);
        if (c_converge->parsed()) return bpl::harness::cmd_converge(cfg, ctx);
        if (c_propagate->parsed()) return bpl::harness::cmd_propagate(cfg, ctx);
        if (c_pipeline->parsed()) return bpl::harness::cmd_pipeline(cfg, ctx);
    } catch (const bpl::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
