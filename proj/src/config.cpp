#include "degen/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>

namespace degen {

using nlohmann::json;
namespace fs = std::filesystem;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

int thread_cap_from_env() {
    const char* env = std::getenv("DEGENSPEC_THREADS");
    if (!env) return 1;
    int v = std::atoi(env);
    return v >= 1 ? v : 1;
}

void atomic_write(const std::string& path, const std::string& content) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    fs::path tmp = p;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, p);
}

namespace {

void require_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
}

template <typename T>
T get_required(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key)) throw ConfigError(where + ": missing required key '" + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw ConfigError(where + "." + key + ": " + ex.what());
    }
}

template <typename T>
T get_default(const json& j, const std::string& where, const std::string& key, T def,
              std::vector<std::pair<std::string, std::string>>& defaults) {
    if (!j.contains(key)) {
        if constexpr (std::is_same_v<T, double>)
            defaults.emplace_back(where + "." + key, format_double(def));
        else if constexpr (std::is_same_v<T, int>)
            defaults.emplace_back(where + "." + key, std::to_string(def));
        else if constexpr (std::is_same_v<T, bool>)
            defaults.emplace_back(where + "." + key, def ? "true" : "false");
        else
            defaults.emplace_back(where + "." + key, std::string(def));
        return def;
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& ex) {
        throw ConfigError(where + "." + key + ": " + ex.what());
    }
}

} // namespace

RunConfig RunConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& ex) {
        throw ConfigError(std::string("config parse error: ") + ex.what());
    }
    return from_json(j);
}

RunConfig RunConfig::from_json(const json& j) {
    RunConfig cfg;
    auto& defs = cfg.defaults_applied;
    require_keys(j, "config", {"symbol", "potential", "grids", "solve", "output"});

    // symbol
    if (!j.contains("symbol")) throw ConfigError("config: missing 'symbol' block");
    const json& js = j.at("symbol");
    require_keys(js, "symbol", {"kind", "n", "r", "mu", "p0", "mtilde", "delta", "tau", "s", "c1", "c2"});
    std::string kind = get_required<std::string>(js, "symbol", "kind");
    int n = get_required<int>(js, "symbol", "n");
    double r = get_required<double>(js, "symbol", "r");
    std::optional<double> tau;
    if (js.contains("tau")) tau = js.at("tau").get<double>();
    else defs.emplace_back("symbol.tau", "auto (min(1, half |P|-distance to the singular set))");
    if (kind == "bcs") {
        double mu = get_required<double>(js, "symbol", "mu");
        cfg.sym = KineticSymbol::bcs(n, mu, r, tau);
        if (js.contains("delta") && js.at("delta").get<double>() != 0.0)
            throw ConfigError("symbol.delta: bcs symbol has no offset");
    } else if (kind == "roton") {
        double p0 = get_required<double>(js, "symbol", "p0");
        double mtilde = get_required<double>(js, "symbol", "mtilde");
        double delta = get_default<double>(js, "symbol", "delta", 0.0, defs);
        cfg.sym = KineticSymbol::roton(n, p0, mtilde, delta, r, tau);
    } else {
        throw ConfigError("symbol.kind: expected 'bcs' or 'roton', got '" + kind + "'");
    }

    // potential
    if (!j.contains("potential")) throw ConfigError("config: missing 'potential' block");
    const json& jp = j.at("potential");
    require_keys(jp, "potential", {"kind", "A", "w", "table", "sign_definite", "attractive"});
    std::string pkind = get_required<std::string>(jp, "potential", "kind");
    if (pkind == "gaussian") {
        double A = get_required<double>(jp, "potential", "A");
        double w = get_required<double>(jp, "potential", "w");
        cfg.V = Potential::gaussian(n, A, w);
    } else if (pkind == "tabulated") {
        std::string table = get_required<std::string>(jp, "potential", "table");
        bool sdef = get_default<bool>(jp, "potential", "sign_definite", false, defs);
        bool attr = get_default<bool>(jp, "potential", "attractive", false, defs);
        cfg.V = Potential::tabulated_csv(n, table, sdef, attr);
    } else {
        throw ConfigError("potential.kind: expected 'gaussian' or 'tabulated', got '" + pkind + "'");
    }

    // grids
    const json jg = j.contains("grids") ? j.at("grids") : json::object();
    require_keys(jg, "grids",
                 {"surface_resolution", "shells", "angular", "cutoff", "grading_ratio",
                  "points_per_shell", "outer_panel"});
    cfg.surface_resolution = get_default<int>(jg, "grids", "surface_resolution", 64, defs);
    if (cfg.surface_resolution < 4) throw ConfigError("grids.surface_resolution: must be >= 4");
    cfg.grid_spec.shells = get_default<int>(jg, "grids", "shells", 0, defs);
    cfg.grid_spec.angular = get_default<int>(jg, "grids", "angular", 32, defs);
    cfg.grid_spec.grading_ratio = get_default<double>(jg, "grids", "grading_ratio", 0.75, defs);
    cfg.grid_spec.points_per_shell = get_default<int>(jg, "grids", "points_per_shell", 3, defs);
    cfg.grid_spec.outer_panel = get_default<double>(jg, "grids", "outer_panel", 0.35, defs);
    if (jg.contains("cutoff")) {
        cfg.cutoff = jg.at("cutoff").get<double>();
        cfg.grid_spec.cutoff = *cfg.cutoff;
    } else {
        defs.emplace_back("grids.cutoff", "auto (outer radius of Omega_tau + 8)");
    }

    // solve
    const json jv = j.contains("solve") ? j.at("solve") : json::object();
    require_keys(jv, "solve",
                 {"lambda_list", "lambda_geometric", "eigen_count", "bisection_tol", "e_sequence",
                  "ws", "certify", "track_vectors"});
    if (jv.contains("lambda_list") && jv.contains("lambda_geometric"))
        throw ConfigError("solve: give either lambda_list or lambda_geometric, not both");
    if (jv.contains("lambda_list")) {
        cfg.lambda_list = jv.at("lambda_list").get<std::vector<double>>();
    } else if (jv.contains("lambda_geometric")) {
        const json& lg = jv.at("lambda_geometric");
        require_keys(lg, "solve.lambda_geometric", {"first", "ratio", "count"});
        cfg.lambda_list = geometric_lambdas(get_required<double>(lg, "solve.lambda_geometric", "first"),
                                            get_required<double>(lg, "solve.lambda_geometric", "ratio"),
                                            get_required<int>(lg, "solve.lambda_geometric", "count"));
    }
    for (double l : cfg.lambda_list)
        if (l <= 0.0) throw ConfigError("solve: lambda values must be positive");
    for (std::size_t i = 1; i < cfg.lambda_list.size(); ++i)
        if (cfg.lambda_list[i] >= cfg.lambda_list[i - 1])
            throw ConfigError("solve: lambda list must be strictly decreasing");
    cfg.eigen_count = get_default<int>(jv, "solve", "eigen_count", 1, defs);
    cfg.bisection_tol = get_default<double>(jv, "solve", "bisection_tol", 1e-8, defs);
    cfg.want_ws = get_default<bool>(jv, "solve", "ws", cfg.sym.exponent() < 2.0, defs);
    cfg.certify = get_default<bool>(jv, "solve", "certify", true, defs);
    cfg.track_vectors = get_default<bool>(jv, "solve", "track_vectors", true, defs);
    if (jv.contains("e_sequence")) {
        cfg.ws_e_sequence = jv.at("e_sequence").get<std::vector<double>>();
    } else {
        cfg.ws_e_sequence = default_ws_e_sequence();
        defs.emplace_back("solve.e_sequence", "1e-2 * 4^-j, j=0..3");
    }
    if (cfg.want_ws && cfg.sym.exponent() >= 2.0)
        throw ConfigError("solve.ws: W_S requires r < 2");
    if (!cfg.want_ws) cfg.ws_e_sequence.clear();

    // output
    const json jo = j.contains("output") ? j.at("output") : json::object();
    require_keys(jo, "output", {"directory", "formats"});
    if (jo.contains("directory")) cfg.out_dir = jo.at("directory").get<std::string>();
    if (jo.contains("formats")) cfg.formats = jo.at("formats").get<std::vector<std::string>>();
    else defs.emplace_back("output.formats", "csv,json");
    for (const auto& f : cfg.formats)
        if (f != "csv" && f != "json") throw ConfigError("output.formats: unknown format '" + f + "'");

    return cfg;
}

SweepTemplate RunConfig::sweep_template(int threads) const {
    SweepTemplate t{sym, V, surface_resolution, grid_spec, ws_e_sequence, eigen_count,
                    certify, track_vectors, threads, bisection_tol};
    return t;
}

json RunConfig::echo() const {
    json j;
    j["symbol"]["kind"] = sym.kind() == SymbolKind::bcs ? "bcs"
                          : sym.kind() == SymbolKind::roton ? "roton" : "custom";
    j["symbol"]["n"] = sym.dim();
    j["symbol"]["r"] = sym.exponent();
    if (sym.kind() == SymbolKind::bcs) j["symbol"]["mu"] = sym.mu();
    if (sym.kind() == SymbolKind::roton) {
        j["symbol"]["p0"] = sym.p0();
        j["symbol"]["mtilde"] = sym.mtilde();
        j["symbol"]["delta"] = sym.offset();
    }
    j["symbol"]["tau"] = sym.tau();
    j["symbol"]["s"] = sym.growth_s();
    j["symbol"]["c1"] = sym.growth_c1();
    j["symbol"]["c2"] = sym.growth_c2();
    j["potential"]["kind"] = V.kind() == PotentialKind::gaussian ? "gaussian" : "tabulated";
    if (V.kind() == PotentialKind::gaussian) {
        j["potential"]["A"] = V.amplitude();
        j["potential"]["w"] = V.width();
    }
    j["potential"]["sign_definite"] = V.sign_definite();
    j["potential"]["attractive"] = V.attractive();
    j["grids"]["surface_resolution"] = surface_resolution;
    j["grids"]["angular"] = grid_spec.angular;
    j["grids"]["grading_ratio"] = grid_spec.grading_ratio;
    j["grids"]["points_per_shell"] = grid_spec.points_per_shell;
    j["grids"]["outer_panel"] = grid_spec.outer_panel;
    if (cutoff) j["grids"]["cutoff"] = *cutoff;
    j["solve"]["lambda_list"] = lambda_list;
    j["solve"]["eigen_count"] = eigen_count;
    j["solve"]["bisection_tol"] = bisection_tol;
    j["solve"]["ws"] = want_ws;
    j["solve"]["certify"] = certify;
    j["solve"]["track_vectors"] = track_vectors;
    if (want_ws) j["solve"]["e_sequence"] = ws_e_sequence;
    j["output"]["directory"] = out_dir;
    j["output"]["formats"] = formats;
    return j;
}

} // namespace degen
