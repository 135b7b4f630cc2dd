#pragma once

#include "mamesh/geometry.hpp"
#include "mamesh/monitor.hpp"
#include "mamesh/solvers.hpp"

#include <string>
#include <vector>

namespace mamesh {

enum class LogLevel { quiet = 0, info = 1, debug = 2 };

/// Level taken from MA_MESH_LOG (quiet|info|debug), default info.
LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

/// One solver invocation of a sweep, fully expanded.
struct RunSpec {
    std::string name;          // file prefix, e.g. fp_ring_N60_g1.00
    std::string params_label;  // e.g. g1.00 / g0.70_dt0.20 / none
    std::string monitor_name;
    MonitorSpec monitor;
    int n = 0;
    SolverConfig cfg;
};

struct ExperimentConfig {
    std::vector<RunSpec> runs;
    std::string output_dir = "out";
    bool write_csv = true;
    bool write_vtk = false;
};

/// Parses and validates a config document. Unknown keys and missing
/// algorithm parameters are errors; messages carry the JSON line number
/// where parsing itself fails.
ExperimentConfig parse_experiment_text(const std::string& text);
ExperimentConfig parse_experiment_file(const std::string& path);

/// Runs every entry (up to `jobs` in parallel), writes per-run convergence
/// and mesh files plus summary.csv. A failed run becomes a converged=false
/// row; only config/IO problems throw. Returns 0 if everything converged,
/// 1 otherwise.
int run_experiment(const ExperimentConfig& cfg, int jobs = 1);

/// Max over corners of the (minimum-image) distance between two mesh CSVs.
double compare_meshes(const std::string& file_a, const std::string& file_b);

void write_corners_csv(const Mesh& m, const std::string& path);
void write_vtk(const Mesh& m, const std::string& path);
void write_history_csv(const std::vector<ConvergenceRecord>& history,
                       const std::string& path);

} // namespace mamesh
