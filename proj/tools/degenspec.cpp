// degenspec: surface spectra, Birman-Schwinger solves and small-coupling
// sweeps for Schrodinger-type operators with a degenerate kinetic symbol.

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "degen/asymptotics.hpp"
#include "degen/config.hpp"
#include "degen/numerics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace degen;

namespace {

enum ExitCode : int {
    exit_ok = 0,
    exit_config = 2,
    exit_no_bound_state = 3,
    exit_gate_failure = 4,
    exit_resolution = 5,
};

struct OutputDir {
    fs::path dir;

    OutputDir(const std::string& path, bool force) : dir(path) {
        if (path.empty()) throw ConfigError("no output directory given (--out or output.directory)");
        if (fs::exists(dir / "manifest.json") && !force)
            throw ConfigError("output directory '" + path +
                              "' already holds a run (use --force to overwrite)");
        fs::create_directories(dir);
    }

    void write(const std::string& name, const std::string& content) const {
        atomic_write((dir / name).string(), content);
    }
};

std::string csv_row(const std::vector<std::string>& cells) {
    std::string line;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) line += ',';
        line += cells[i];
    }
    line += '\n';
    return line;
}

std::string spectrum_csv(const Vector& values) {
    std::string out = "i,eigenvalue\n";
    for (int i = 0; i < values.size(); ++i)
        out += csv_row({std::to_string(i + 1), format_double(values(i))});
    return out;
}

std::string matrix_csv(const Matrix& K) {
    std::string out = "i,j,re,im\n";
    for (int i = 0; i < K.rows(); ++i)
        for (int j = 0; j < K.cols(); ++j)
            out += csv_row({std::to_string(i), std::to_string(j), format_double(K(i, j)), "0"});
    return out;
}

std::string eigenvectors_csv(const Matrix& vecs, int count) {
    std::string out = "i,k,re,im\n";
    for (int i = 0; i < count && i < vecs.cols(); ++i)
        for (int k = 0; k < vecs.rows(); ++k)
            out += csv_row({std::to_string(i + 1), std::to_string(k), format_double(vecs(k, i)), "0"});
    return out;
}

json hypothesis_json(const HypothesisReport& h) {
    json j;
    j["l1_norm"] = h.l1_norm;
    j["extra_norm"] = h.extra_norm;
    j["extra_norm_name"] = h.extra_norm_name;
    j["epsilon_used"] = h.epsilon_used;
    j["kappa"] = h.kappa;
    j["moment_kappa"] = h.moment_kappa;
    j["passes"] = h.passes;
    if (!h.note.empty()) j["note"] = h.note;
    return j;
}

struct ManifestBuilder {
    json j;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    ManifestBuilder(const RunConfig& cfg, const std::string& command) {
        j["tool"] = "degenspec";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["config"] = cfg.echo();
        json defs = json::array();
        for (const auto& [k, v] : cfg.defaults_applied) defs.push_back({{"key", k}, {"value", v}});
        j["defaults_applied"] = defs;
    }

    void finish(const OutputDir& out) {
        auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      std::chrono::steady_clock::now() - start)
                      .count();
        j["wall_clock_ms"] = ms;
        out.write("manifest.json", j.dump(2) + "\n");
    }
};

int cmd_surface(const RunConfig& cfg, const OutputDir& out) {
    ManifestBuilder man(cfg, "surface");

    MomentumGrid ws_grid;
    const MomentumGrid* gp = nullptr;
    if (cfg.want_ws) {
        ws_grid = build_momentum_grid(cfg.sym, cfg.ws_e_sequence.back() * 0.9, cfg.grid_spec);
        gp = &ws_grid;
        man.j["grids"]["ws_grid"] = ws_grid.id();
    }
    SurfaceOperatorSet set =
        make_surface_set(cfg.sym, cfg.V, cfg.surface_resolution, cfg.ws_e_sequence, gp);

    out.write("vs_spectrum.csv", spectrum_csv(set.eigs_VS.values));
    int nvec = std::min<int>(cfg.eigen_count, set.eigs_VS.vectors.cols());
    out.write("vs_eigenvectors.csv", eigenvectors_csv(set.eigs_VS.vectors, nvec));
    out.write("vs_matrix.csv", matrix_csv(set.VS));
    if (set.WS) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(*set.WS, Eigen::EigenvaluesOnly);
        out.write("ws_spectrum.csv", spectrum_csv(es.eigenvalues()));
        out.write("ws_matrix.csv", matrix_csv(*set.WS));
        std::string conv = "j,e,cauchy_residual\n";
        for (std::size_t k = 0; k < set.ws_cauchy.size(); ++k)
            conv += csv_row({std::to_string(k), format_double(cfg.ws_e_sequence[k + 1]),
                             format_double(set.ws_cauchy[k])});
        out.write("ws_convergence.csv", conv);
        json diag;
        diag["cauchy_residuals"] = set.ws_cauchy;
        bool dec = true;
        for (std::size_t k = 0; k + 1 < set.ws_cauchy.size(); ++k)
            if (set.ws_cauchy[k + 1] >= set.ws_cauchy[k]) dec = false;
        diag["residuals_decreasing"] = dec;
        man.j["ws_diagnostics"] = diag;
        if (!dec) std::cerr << "warning: W_S Cauchy residuals are not decreasing\n";
    }
    man.j["surface_nodes"] = set.quad.size();
    man.j["hypotheses"] = hypothesis_json(hypothesis_report(cfg.V, cfg.sym));
    man.finish(out);
    return exit_ok;
}

int cmd_solve(const RunConfig& cfg, const OutputDir& out, double lambda, int index,
              bool cross_check) {
    ManifestBuilder man(cfg, "solve");
    if (lambda <= 0.0) throw ConfigError("--lambda must be positive");

    SurfaceOperatorSet set = make_surface_set(cfg.sym, cfg.V, cfg.surface_resolution);
    if (index > set.eigs_VS.values.size() || set.eigs_VS.values(index - 1) >= 0.0)
        throw NoBoundState("a_S^" + std::to_string(index) + " is not negative at this resolution");
    double a_i = set.eigs_VS.values(index - 1);
    double r = cfg.sym.exponent();
    double e_pred = f_inverse(1.0 / (lambda * std::abs(a_i)), r);

    GridSpec spec = cfg.grid_spec;
    spec.shells = cfg.grid_spec.shells;
    auto grid = std::make_shared<MomentumGrid>(
        build_momentum_grid(cfg.sym, e_pred / 10.0, spec));
    BSContext ctx{cfg.sym, cfg.V, grid, lambda, SignMode::attractive};
    BSOperator op(ctx);
    auto [lo, hi] = default_bracket(lambda, a_i, r);
    SolveRecord rec = solve_e(op, index, lo, hi, cfg.bisection_tol);

    std::string csv = "lambda,index,e,f_of_e,residual,grid_id";
    if (cross_check) csv += ",direct_e,delta_direct";
    csv += "\n";
    std::vector<std::string> cells{format_double(rec.lambda), std::to_string(rec.index),
                                   format_double(rec.e), format_double(rec.f_e),
                                   format_double(rec.bs_residual), rec.grid_id};
    if (cross_check) {
        Vector lows = direct_spectrum(ctx, index + 4);
        double direct_e = -lows(index - 1);
        cells.push_back(format_double(direct_e));
        cells.push_back(format_double(std::abs(direct_e - rec.e) / rec.e));
        man.j["direct_e"] = direct_e;
    }
    csv += csv_row(cells);
    out.write("solve.csv", csv);
    man.j["grid"] = grid->id();
    man.j["e"] = rec.e;
    man.j["reported_energy"] = cfg.sym.offset() - rec.e;
    man.j["bs_residual"] = rec.bs_residual;
    man.finish(out);
    return exit_ok;
}

int cmd_sweep(const RunConfig& cfg, const OutputDir& out, int threads) {
    ManifestBuilder man(cfg, "sweep");
    if (cfg.lambda_list.empty()) throw ConfigError("solve: lambda list is empty");

    SweepTemplate tmpl = cfg.sweep_template(threads);
    SweepReport rep = run_sweep(tmpl, cfg.lambda_list, cfg.eigen_count);

    std::string csv =
        "lambda,index,e,lambda_f_e,target,first_order_residual,b_lambda,"
        "second_order_residual,eigenvector_distance,status\n";
    for (const auto& row : rep.rows)
        csv += csv_row({format_double(row.lambda), std::to_string(row.index), format_double(row.e),
                        format_double(row.lambda_f_e), format_double(row.target),
                        format_double(row.first_order_residual), format_double(row.b_lambda),
                        format_double(row.second_order_residual),
                        format_double(row.eigenvector_distance), row.status});
    out.write("sweep.csv", csv);

    std::string plot = "lambda,lambda_f_e,target\n";
    for (const auto& row : rep.rows)
        if (row.status == "ok")
            plot += csv_row({format_double(row.lambda), format_double(row.lambda_f_e),
                             format_double(row.target)});
    out.write("plot.csv", plot);

    json jr;
    jr["index"] = rep.index;
    jr["a_i"] = rep.a_i;
    jr["u_W_u"] = rep.u_W_u;
    jr["extrapolated_lambda_f"] = rep.extrapolated_lambda_f;
    jr["fit_slope"] = rep.fit_slope;
    jr["extrapolation_error"] = rep.extrapolation_error;
    jr["first_order_pass"] = rep.first_order_pass;
    jr["residuals_monotone"] = rep.residuals_monotone;
    jr["second_order_available"] = rep.second_order_available;
    if (rep.second_order_available) {
        jr["second_vs_first_ratio"] = rep.second_vs_first_ratio;
        jr["second_order_ratio_pass"] = rep.second_order_ratio_pass;
        jr["second_order_decreasing"] = rep.second_order_decreasing;
        jr["perturbation_consistency"] = rep.perturbation_consistency;
        jr["ws_cauchy"] = rep.ws_cauchy;
    }
    jr["vector_distances_monotone"] = rep.vector_distances_monotone;
    json rows = json::array();
    for (const auto& row : rep.rows) {
        json x;
        x["lambda"] = row.lambda;
        x["e"] = row.e;
        x["lambda_f_e"] = row.lambda_f_e;
        x["status"] = row.status;
        x["grid_id"] = row.grid_id;
        x["bs_residual"] = row.bs_residual;
        x["certificate_delta"] = row.certificate_delta;
        rows.push_back(x);
    }
    jr["rows"] = rows;
    out.write("sweep.json", jr.dump(2) + "\n");

    man.j["hypotheses"] = hypothesis_json(hypothesis_report(cfg.V, cfg.sym));
    man.finish(out);

    bool partial = !rep.all_rows_ok();
    bool gates = rep.first_order_pass && rep.residuals_monotone &&
                 (!rep.second_order_available ||
                  (rep.second_order_ratio_pass && rep.second_order_decreasing));
    if (partial) {
        for (const auto& row : rep.rows)
            if (row.status == "no-bound-state") return exit_no_bound_state;
        return exit_resolution;
    }
    return gates ? exit_ok : exit_gate_failure;
}

int cmd_check_hypotheses(const RunConfig& cfg, const OutputDir& out) {
    ManifestBuilder man(cfg, "check-hypotheses");
    HypothesisReport h = hypothesis_report(cfg.V, cfg.sym);
    std::string csv = "l1_norm,extra_norm,extra_norm_name,epsilon_used,kappa,moment_kappa,passes\n";
    csv += csv_row({format_double(h.l1_norm), format_double(h.extra_norm), h.extra_norm_name,
                    format_double(h.epsilon_used), std::to_string(h.kappa),
                    format_double(h.moment_kappa), h.passes ? "true" : "false"});
    out.write("hypotheses.csv", csv);
    man.j["hypotheses"] = hypothesis_json(h);
    man.finish(out);
    std::cout << (h.passes ? "hypotheses: pass" : "hypotheses: FAIL") << "\n";
    return h.passes ? exit_ok : exit_gate_failure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"degenerate-symbol spectral toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    bool force = false;
    double lambda = 0.0;
    int index = 1;
    bool cross_check = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config path")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_flag("--force", force, "allow writing into an existing run directory");
    };
    CLI::App* surface = app.add_subcommand("surface", "assemble V_S (and W_S), write spectra");
    add_common(surface);
    CLI::App* solve = app.add_subcommand("solve", "solve one bound state e_i(lambda)");
    add_common(solve);
    solve->add_option("--lambda", lambda, "coupling")->required();
    solve->add_option("--index", index, "eigenvalue index i (1-based)");
    solve->add_flag("--cross-check", cross_check, "add a direct-spectrum comparison column");
    CLI::App* sweep = app.add_subcommand("sweep", "asymptotic sweep over the configured lambdas");
    add_common(sweep);
    CLI::App* hypo = app.add_subcommand("check-hypotheses", "integrability diagnostics for V");
    add_common(hypo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        RunConfig cfg = RunConfig::from_json_file(config_path);
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        OutputDir out(cfg.out_dir, force);
        int threads = thread_cap_from_env();
        if (surface->parsed()) return cmd_surface(cfg, out);
        if (solve->parsed()) return cmd_solve(cfg, out, lambda, index, cross_check);
        if (sweep->parsed()) return cmd_sweep(cfg, out, threads);
        if (hypo->parsed()) return cmd_check_hypotheses(cfg, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const NoBoundState& e) {
        std::cerr << "no bound state: " << e.what() << "\n";
        return exit_no_bound_state;
    } catch (const ResolutionError& e) {
        std::cerr << "resolution failure: " << e.what() << "\n";
        return exit_resolution;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_config;
    }
    return exit_ok;
}
