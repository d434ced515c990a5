#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "degen/asymptotics.hpp"

namespace degen {

inline constexpr const char* kToolVersion = "0.1.0";

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Declarative run configuration. Parsing is strict: unknown keys are
// rejected, every applied default is recorded for the manifest.
struct RunConfig {
    KineticSymbol sym = KineticSymbol::bcs(2, 1.0, 1.0);
    Potential V = Potential::gaussian(2, 1.0, 1.0);

    int surface_resolution = 64;
    GridSpec grid_spec;
    std::optional<double> cutoff;  // echoed; grid_spec.cutoff carries it

    std::vector<double> lambda_list;  // decreasing
    int eigen_count = 1;
    double bisection_tol = 1e-8;
    std::vector<double> ws_e_sequence;
    bool want_ws = true;
    bool certify = true;
    bool track_vectors = true;

    std::string out_dir;
    std::vector<std::string> formats{"csv", "json"};

    std::vector<std::pair<std::string, std::string>> defaults_applied;

    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json(const nlohmann::json& j);

    SweepTemplate sweep_template(int threads) const;
    nlohmann::json echo() const;
};

int thread_cap_from_env();

// write-temp-rename; creates parent directories.
void atomic_write(const std::string& path, const std::string& content);

std::string format_double(double v);  // shortest round-trip decimal, C locale

} // namespace degen
