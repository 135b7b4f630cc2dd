#include "mamesh/errors.hpp"
#include "mamesh/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>

int main(int argc, char** argv) {
    CLI::App app{"Optimally transported, equidistributed periodic quad meshes"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    CLI::App* run_cmd = app.add_subcommand("run", "run the experiments of a JSON config");
    run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    run_cmd->add_option("--out", out_dir, "output directory (overrides the config)");
    run_cmd->add_option("--jobs", jobs, "number of runs to execute in parallel")
        ->check(CLI::PositiveNumber);

    std::string mesh_a, mesh_b;
    CLI::App* cmp_cmd =
        app.add_subcommand("compare", "max corner distance between two mesh CSVs");
    cmp_cmd->add_option("mesh_a", mesh_a, "first corner CSV")->required();
    cmp_cmd->add_option("mesh_b", mesh_b, "second corner CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*run_cmd) {
            mamesh::ExperimentConfig cfg = mamesh::parse_experiment_file(config_path);
            if (!out_dir.empty()) cfg.output_dir = out_dir;
            return mamesh::run_experiment(cfg, jobs);
        }
        const double d = mamesh::compare_meshes(mesh_a, mesh_b);
        std::printf("%.17g\n", d);
        return 0;
    } catch (const mamesh::ConfigError& e) {
        std::fprintf(stderr, "ma-mesh: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "ma-mesh: %s\n", e.what());
        return 2;
    }
}
