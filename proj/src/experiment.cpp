#include "mamesh/experiment.hpp"

#include "mamesh/errors.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace mamesh {

namespace {

using nlohmann::json;

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), format, v);
    return buf;
}

std::string g17(double v) { return fmt("%.17g", v); }

} // namespace

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("MA_MESH_LOG");
        if (!env) return LogLevel::info;
        const std::string s = env;
        if (s == "quiet") return LogLevel::quiet;
        if (s == "info") return LogLevel::info;
        if (s == "debug") return LogLevel::debug;
        std::fprintf(stderr, "ma-mesh: ignoring unknown MA_MESH_LOG value '%s'\n",
                     s.c_str());
        return LogLevel::info;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::info) std::fprintf(stderr, "ma-mesh: %s\n", msg.c_str());
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::debug)
        std::fprintf(stderr, "ma-mesh[debug]: %s\n", msg.c_str());
}

namespace {

const std::vector<std::string> kKnownKeys = {
    "monitor",        "algorithm",      "mesh_sizes",      "fp_gamma",
    "pma_gamma",      "pma_dt",         "newton_delta_scale",
    "newton_analytic_gradient",         "shift_epsilon",   "equi_tol",
    "max_outer",      "lin_abs_tol",    "lin_rel_tol",     "correctors",
    "max_inner",      "pin_cell",       "pin_value",       "output_dir",
    "output_formats", "name"};

int line_of_offset(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i)
        if (text[i] == '\n') ++line;
    return line;
}

std::vector<double> number_list(const json& j, const std::string& key) {
    const json& v = j.at(key);
    std::vector<double> out;
    if (v.is_number()) {
        out.push_back(v.get<double>());
    } else if (v.is_array() && !v.empty()) {
        for (const auto& e : v) {
            if (!e.is_number())
                throw ConfigError("config key '" + key + "' must hold numbers");
            out.push_back(e.get<double>());
        }
    } else {
        throw ConfigError("config key '" + key + "' must be a number or a non-empty array");
    }
    return out;
}

std::string trim_number(double v) {
    std::string s = fmt("%.6g", v);
    return s;
}

} // namespace

ExperimentConfig parse_experiment_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("config is not valid JSON (line " +
                          std::to_string(line_of_offset(text, e.byte)) +
                          "): " + e.what());
    }
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");

    for (const auto& [key, value] : doc.items()) {
        (void)value;
        if (std::find(kKnownKeys.begin(), kKnownKeys.end(), key) == kKnownKeys.end())
            throw ConfigError("unknown config key '" + key + "'");
    }

    ExperimentConfig out;

    if (!doc.contains("algorithm")) throw ConfigError("missing config key 'algorithm'");
    const Algorithm alg = algorithm_from_string(doc.at("algorithm").get<std::string>());

    if (!doc.contains("monitor")) throw ConfigError("missing config key 'monitor'");
    MonitorSpec monitor;
    std::string monitor_name;
    const json& mj = doc.at("monitor");
    if (mj.is_string()) {
        monitor_name = mj.get<std::string>();
        if (monitor_name == "ring") monitor = MonitorSpec::ring();
        else if (monitor_name == "bell") monitor = MonitorSpec::bell();
        else throw ConfigError("unknown monitor preset '" + monitor_name + "'");
    } else if (mj.is_object()) {
        for (const auto& [key, value] : mj.items()) {
            (void)value;
            if (key != "alpha1" && key != "alpha2" && key != "alpha3")
                throw ConfigError("unknown monitor key '" + key + "'");
        }
        monitor.alpha1 = mj.value("alpha1", 0.0);
        monitor.alpha2 = mj.value("alpha2", 1.0);
        monitor.alpha3 = mj.value("alpha3", 0.0);
        monitor_name = "custom";
    } else {
        throw ConfigError("'monitor' must be \"ring\", \"bell\" or an object of alphas");
    }
    monitor.validate();

    if (!doc.contains("mesh_sizes")) throw ConfigError("missing config key 'mesh_sizes'");
    std::vector<int> sizes;
    for (const auto& e : doc.at("mesh_sizes")) {
        if (!e.is_number_integer() || e.get<int>() < 3)
            throw ConfigError("'mesh_sizes' must hold integers >= 3");
        sizes.push_back(e.get<int>());
    }
    if (sizes.empty()) throw ConfigError("'mesh_sizes' must not be empty");

    SolverConfig base;
    base.algorithm = alg;
    base.newton_delta_scale = doc.value("newton_delta_scale", base.newton_delta_scale);
    base.newton_analytic_gradient =
        doc.value("newton_analytic_gradient", base.newton_analytic_gradient);
    base.shift_epsilon = doc.value("shift_epsilon", base.shift_epsilon);
    base.equi_tol = doc.value("equi_tol", base.equi_tol);
    base.max_outer = doc.value("max_outer", base.max_outer);
    base.lin.abs_tol = doc.value("lin_abs_tol", base.lin.abs_tol);
    base.lin.rel_tol = doc.value("lin_rel_tol", base.lin.rel_tol);
    base.lin.correctors = doc.value("correctors", base.lin.correctors);
    base.lin.max_inner = doc.value("max_inner", base.lin.max_inner);
    base.lin.pin_cell = doc.value("pin_cell", base.lin.pin_cell);
    base.lin.pin_value = doc.value("pin_value", base.lin.pin_value);

    out.output_dir = doc.value("output_dir", out.output_dir);
    if (doc.contains("output_formats")) {
        out.write_csv = false;
        out.write_vtk = false;
        for (const auto& e : doc.at("output_formats")) {
            const std::string f = e.get<std::string>();
            if (f == "csv") out.write_csv = true;
            else if (f == "vtk") out.write_vtk = true;
            else throw ConfigError("unknown output format '" + f + "'");
        }
    }
    const std::string prefix =
        doc.contains("name") ? doc.at("name").get<std::string>() + "_" : "";

    // Expand the parameter grid: one run per (parameter combination, N).
    struct ParamCombo {
        SolverConfig cfg;
        std::string label;
    };
    std::vector<ParamCombo> combos;
    switch (alg) {
        case Algorithm::fp: {
            if (!doc.contains("fp_gamma"))
                throw ConfigError("algorithm 'fp' requires config key 'fp_gamma'");
            for (double g : number_list(doc, "fp_gamma")) {
                SolverConfig c = base;
                c.fp_gamma = g;
                combos.push_back({c, "g" + trim_number(g)});
            }
            break;
        }
        case Algorithm::pma: {
            if (!doc.contains("pma_gamma"))
                throw ConfigError("algorithm 'pma' requires config key 'pma_gamma'");
            if (!doc.contains("pma_dt"))
                throw ConfigError("algorithm 'pma' requires config key 'pma_dt'");
            for (double g : number_list(doc, "pma_gamma")) {
                for (double dt : number_list(doc, "pma_dt")) {
                    SolverConfig c = base;
                    c.pma_gamma = g;
                    c.pma_dt = dt;
                    combos.push_back({c, "g" + trim_number(g) + "_dt" + trim_number(dt)});
                }
            }
            break;
        }
        case Algorithm::afp:
            combos.push_back({base, "none"});
            break;
        case Algorithm::newton:
            combos.push_back({base, "d" + trim_number(base.newton_delta_scale)});
            break;
    }

    for (const ParamCombo& combo : combos) {
        for (int n : sizes) {
            RunSpec spec;
            spec.cfg = combo.cfg;
            spec.monitor = monitor;
            spec.monitor_name = monitor_name;
            spec.n = n;
            spec.params_label = combo.label;
            spec.name = prefix + to_string(alg) + "_" + monitor_name + "_N" +
                        std::to_string(n);
            if (combo.label != "none") spec.name += "_" + combo.label;
            spec.cfg.validate();
            out.runs.push_back(std::move(spec));
        }
    }
    return out;
}

ExperimentConfig parse_experiment_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_experiment_text(ss.str());
}

void write_corners_csv(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "i,j,x,y\n";
    for (int j = 0; j < m.n; ++j)
        for (int i = 0; i < m.n; ++i) {
            const Vec2& p = m.corners[j * m.n + i];
            out << i << ',' << j << ',' << g17(p.x()) << ',' << g17(p.y()) << '\n';
        }
}

void write_vtk(const Mesh& m, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    const int n = m.n;
    const int np = (n + 1) * (n + 1);
    out << "# vtk DataFile Version 2.0\n";
    out << "periodic quad mesh\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << np << " double\n";
    // seam corners duplicated one period over so the quads render contiguously
    for (int j = 0; j <= n; ++j)
        for (int i = 0; i <= n; ++i) {
            Vec2 p = m.corners[(j % n) * n + (i % n)];
            if (i == n) p.x() += 1.0;
            if (j == n) p.y() += 1.0;
            out << g17(p.x()) << ' ' << g17(p.y()) << " 0\n";
        }
    out << "CELLS " << n * n << ' ' << 5 * n * n << '\n';
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            const auto pid = [n](int a, int b) { return b * (n + 1) + a; };
            out << "4 " << pid(i, j) << ' ' << pid(i + 1, j) << ' ' << pid(i + 1, j + 1)
                << ' ' << pid(i, j + 1) << '\n';
        }
    out << "CELL_TYPES " << n * n << '\n';
    for (int c = 0; c < n * n; ++c) out << "9\n";
}

void write_history_csv(const std::vector<ConvergenceRecord>& history,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << "iter,equi,max_residual,min_vol,min_eig,gamma_max,inner_iters\n";
    for (const ConvergenceRecord& r : history) {
        out << r.iteration << ',' << g17(r.equi) << ',' << g17(r.max_residual) << ','
            << g17(r.min_vol) << ',' << g17(r.min_eig) << ',' << g17(r.gamma_max) << ','
            << r.inner_iters << '\n';
    }
}

namespace {

struct RunOutcome {
    bool converged = false;
    int iterations = 0;
    double final_equi = std::numeric_limits<double>::quiet_NaN();
    double wall_seconds = 0.0;
    std::string status;
};

RunOutcome execute_one(const RunSpec& spec, const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    RunOutcome outcome;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const RunResult result = run(spec.cfg, spec.monitor, spec.n);
        outcome.converged = result.converged;
        outcome.iterations = result.iterations;
        outcome.status = to_string(result.status);
        if (!result.history.empty()) outcome.final_equi = result.history.back().equi;

        const fs::path dir(cfg.output_dir);
        write_history_csv(result.history, (dir / (spec.name + "_equi.csv")).string());
        if (cfg.write_csv)
            write_corners_csv(result.mesh.physical,
                              (dir / (spec.name + "_mesh.csv")).string());
        if (cfg.write_vtk)
            write_vtk(result.mesh.physical, (dir / (spec.name + "_mesh.vtk")).string());
    } catch (const ConfigError&) {
        throw;  // misconfiguration aborts the sweep; numeric failures never do
    } catch (const std::exception& e) {
        outcome.status = std::string("error: ") + e.what();
    }
    outcome.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return outcome;
}

} // namespace

int run_experiment(const ExperimentConfig& cfg, int jobs) {
    namespace fs = std::filesystem;
    if (cfg.runs.empty()) throw ConfigError("experiment has no runs");
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir))
        throw ConfigError("cannot create output directory '" + cfg.output_dir + "'");

    std::vector<RunOutcome> outcomes(cfg.runs.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        while (true) {
            const std::size_t idx = next.fetch_add(1);
            if (idx >= cfg.runs.size()) return;
            const RunSpec& spec = cfg.runs[idx];
            {
                std::lock_guard<std::mutex> lock(log_mutex);
                log_debug("starting " + spec.name);
            }
            outcomes[idx] = execute_one(spec, cfg);
            {
                std::lock_guard<std::mutex> lock(log_mutex);
                log_info(spec.name + ": " + outcomes[idx].status + " after " +
                         std::to_string(outcomes[idx].iterations) + " iterations (" +
                         fmt("%.2f", outcomes[idx].wall_seconds) + " s)");
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(jobs, cfg.runs.size()));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    const fs::path summary_path = fs::path(cfg.output_dir) / "summary.csv";
    std::ofstream summary(summary_path);
    if (!summary) throw ConfigError("cannot write '" + summary_path.string() + "'");
    summary << "algorithm,params,N,converged,iterations,final_equi,wall_seconds\n";
    bool all_converged = true;
    for (std::size_t i = 0; i < cfg.runs.size(); ++i) {
        const RunSpec& spec = cfg.runs[i];
        const RunOutcome& o = outcomes[i];
        all_converged = all_converged && o.converged;
        summary << to_string(spec.cfg.algorithm) << ',' << spec.params_label << ','
                << spec.n << ',' << (o.converged ? "true" : "false") << ','
                << o.iterations << ',' << g17(o.final_equi) << ','
                << fmt("%.3f", o.wall_seconds) << '\n';
    }
    return all_converged ? 0 : 1;
}

double compare_meshes(const std::string& file_a, const std::string& file_b) {
    auto read = [](const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open mesh file '" + path + "'");
        std::string line;
        if (!std::getline(in, line) || line.rfind("i,j,x,y", 0) != 0)
            throw ConfigError("'" + path + "' is not a corner CSV (missing i,j,x,y header)");
        std::vector<Vec2> pts;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            int i, j;
            double x, y;
            if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf", &i, &j, &x, &y) != 4)
                throw ConfigError("malformed row in '" + path + "': " + line);
            pts.emplace_back(x, y);
        }
        return pts;
    };
    const std::vector<Vec2> a = read(file_a);
    const std::vector<Vec2> b = read(file_b);
    if (a.size() != b.size())
        throw ConfigError("mesh shape mismatch: " + std::to_string(a.size()) + " vs " +
                          std::to_string(b.size()) + " corners");
    double max_dist = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        Vec2 d = a[k] - b[k];
        d.x() -= std::round(d.x());
        d.y() -= std::round(d.y());
        max_dist = std::max(max_dist, d.norm());
    }
    return max_dist;
}

} // namespace mamesh
