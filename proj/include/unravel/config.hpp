#pragma once

#include "unravel/csl.hpp"
#include "unravel/ensemble.hpp"
#include "unravel/grw.hpp"
#include "unravel/kick.hpp"
#include "unravel/master.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <iomanip>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace unravel {

using json = nlohmann::json;

struct GridSpec {
    double x_min = -8.0;
    double x_max = 8.0;
    int n_points = 64;
    bool operator==(const GridSpec&) const = default;
};

struct StateSpec {
    std::string type = "cat"; ///< "packet" | "cat"
    double center = 0.0;      ///< packet only
    double width = 0.5;
    double momentum = 0.0; ///< packet only
    double separation = 4.0; ///< cat only
    bool operator==(const StateSpec&) const = default;
};

struct HamiltonianSpec {
    std::string kind = "zero"; ///< "zero" | "free" | "harmonic"
    double mass = 1.0;
    double frequency = 1.0; ///< harmonic only
    bool operator==(const HamiltonianSpec&) const = default;
};

struct ModelSpec {
    std::string type = "grw"; ///< grw | kick | csl | master-grw | master-csl | com
    double lambda = 1.0;      ///< grw / kick / master-grw / com
    double sigma = 0.5;       ///< grw / kick / master-grw / com
    std::string kick_variance_mode = "matched"; ///< kick only
    double gamma = 1.0;       ///< csl / master-csl
    double r_C = 1.0;         ///< csl / master-csl
    int n_cells = 16;         ///< csl only
    std::vector<double> weights{1.0};        ///< csl only
    int dimension = 1;        ///< master-csl only
    std::vector<double> amplification_factors{1.0, 10.0, 100.0}; ///< com only
    bool operator==(const ModelSpec&) const = default;
};

struct ExperimentConfig {
    int version = 1;
    GridSpec grid;
    StateSpec initial_state;
    HamiltonianSpec hamiltonian;
    ModelSpec model;
    int M = 2000;
    double t_final = 1.0;
    double dt = 0.01;
    std::vector<double> snapshot_times;
    std::uint64_t base_seed = 1;
    std::string out_dir = "out";
    double tolerance = 0.05;
    int n_bootstrap = 200;
    bool operator==(const ExperimentConfig&) const = default;
};

struct Diagnostic {
    enum class Severity { error, warning };
    Severity severity = Severity::error;
    std::string field;
    std::string message;
};

namespace detail {

inline std::string join_path(const std::string& path, const char* key) {
    return path.empty() ? key : path + "." + key;
}

inline void check_keys(const json& obj, const std::string& path,
                       std::initializer_list<const char*> allowed) {
    if (!obj.is_object())
        throw std::invalid_argument("config: " + (path.empty() ? "document" : path) +
                                    " must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* a : allowed)
            if (it.key() == a) {
                known = true;
                break;
            }
        if (!known)
            throw std::invalid_argument("config: unknown field " +
                                        join_path(path, it.key().c_str()));
    }
}

template <typename T>
T get_field(const json& obj, const std::string& path, const char* key) {
    if (!obj.contains(key))
        throw std::invalid_argument("config: missing field " + join_path(path, key));
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: field " + join_path(path, key) + ": " +
                                    e.what());
    }
}

template <typename T>
T get_field_or(const json& obj, const std::string& path, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    return get_field<T>(obj, path, key);
}

} // namespace detail

inline ExperimentConfig parse_config(const json& doc) {
    using detail::check_keys;
    using detail::get_field;
    using detail::get_field_or;

    check_keys(doc, "",
               {"version", "grid", "initial_state", "hamiltonian", "model", "M",
                "t_final", "dt", "snapshot_times", "base_seed", "out_dir", "tolerance",
                "n_bootstrap"});
    ExperimentConfig cfg;
    cfg.version = get_field_or<int>(doc, "", "version", 1);
    if (cfg.version != 1)
        throw std::invalid_argument("config: version: only version 1 is supported");

    const json& grid = doc.contains("grid") ? doc.at("grid") : json::object();
    if (!doc.contains("grid"))
        throw std::invalid_argument("config: missing field grid");
    check_keys(grid, "grid", {"x_min", "x_max", "n_points"});
    cfg.grid.x_min = get_field<double>(grid, "grid", "x_min");
    cfg.grid.x_max = get_field<double>(grid, "grid", "x_max");
    cfg.grid.n_points = get_field<int>(grid, "grid", "n_points");

    if (!doc.contains("initial_state"))
        throw std::invalid_argument("config: missing field initial_state");
    const json& state = doc.at("initial_state");
    cfg.initial_state.type = get_field<std::string>(state, "initial_state", "type");
    if (cfg.initial_state.type == "packet") {
        check_keys(state, "initial_state", {"type", "center", "width", "momentum"});
        cfg.initial_state.width = get_field<double>(state, "initial_state", "width");
        cfg.initial_state.center =
            get_field_or<double>(state, "initial_state", "center", 0.0);
        cfg.initial_state.momentum =
            get_field_or<double>(state, "initial_state", "momentum", 0.0);
        cfg.initial_state.separation = 0.0;
    } else if (cfg.initial_state.type == "cat") {
        check_keys(state, "initial_state", {"type", "separation", "width"});
        cfg.initial_state.width = get_field<double>(state, "initial_state", "width");
        cfg.initial_state.separation =
            get_field<double>(state, "initial_state", "separation");
        cfg.initial_state.center = 0.0;
        cfg.initial_state.momentum = 0.0;
    } else {
        throw std::invalid_argument(
            "config: initial_state.type must be \"packet\" or \"cat\"");
    }

    if (doc.contains("hamiltonian")) {
        const json& h = doc.at("hamiltonian");
        cfg.hamiltonian.kind = get_field<std::string>(h, "hamiltonian", "kind");
        if (cfg.hamiltonian.kind == "zero") {
            check_keys(h, "hamiltonian", {"kind"});
        } else if (cfg.hamiltonian.kind == "free") {
            check_keys(h, "hamiltonian", {"kind", "mass"});
            cfg.hamiltonian.mass = get_field_or<double>(h, "hamiltonian", "mass", 1.0);
        } else if (cfg.hamiltonian.kind == "harmonic") {
            check_keys(h, "hamiltonian", {"kind", "mass", "frequency"});
            cfg.hamiltonian.mass = get_field_or<double>(h, "hamiltonian", "mass", 1.0);
            cfg.hamiltonian.frequency =
                get_field<double>(h, "hamiltonian", "frequency");
        } else {
            throw std::invalid_argument(
                "config: hamiltonian.kind must be \"zero\", \"free\" or \"harmonic\"");
        }
    }

    if (!doc.contains("model"))
        throw std::invalid_argument("config: missing field model");
    const json& model = doc.at("model");
    cfg.model.type = get_field<std::string>(model, "model", "type");
    if (cfg.model.type == "grw" || cfg.model.type == "master-grw") {
        check_keys(model, "model", {"type", "lambda", "sigma"});
        cfg.model.lambda = get_field<double>(model, "model", "lambda");
        cfg.model.sigma = get_field<double>(model, "model", "sigma");
    } else if (cfg.model.type == "kick") {
        check_keys(model, "model", {"type", "lambda", "sigma", "kick_variance_mode"});
        cfg.model.lambda = get_field<double>(model, "model", "lambda");
        cfg.model.sigma = get_field<double>(model, "model", "sigma");
        cfg.model.kick_variance_mode = get_field_or<std::string>(
            model, "model", "kick_variance_mode", "matched");
        if (cfg.model.kick_variance_mode != "matched" &&
            cfg.model.kick_variance_mode != "as_printed")
            throw std::invalid_argument("config: model.kick_variance_mode must be "
                                        "\"matched\" or \"as_printed\"");
    } else if (cfg.model.type == "csl") {
        check_keys(model, "model", {"type", "gamma", "r_C", "n_cells", "weights"});
        cfg.model.gamma = get_field<double>(model, "model", "gamma");
        cfg.model.r_C = get_field<double>(model, "model", "r_C");
        cfg.model.n_cells = get_field_or<int>(model, "model", "n_cells", 16);
        cfg.model.weights = get_field_or<std::vector<double>>(
            model, "model", "weights", std::vector<double>{1.0});
    } else if (cfg.model.type == "master-csl") {
        check_keys(model, "model", {"type", "gamma", "r_C", "dimension"});
        cfg.model.gamma = get_field<double>(model, "model", "gamma");
        cfg.model.r_C = get_field<double>(model, "model", "r_C");
        cfg.model.dimension = get_field_or<int>(model, "model", "dimension", 1);
    } else if (cfg.model.type == "com") {
        check_keys(model, "model", {"type", "lambda", "sigma", "amplification_factors"});
        cfg.model.lambda = get_field<double>(model, "model", "lambda");
        cfg.model.sigma = get_field<double>(model, "model", "sigma");
        cfg.model.amplification_factors = get_field_or<std::vector<double>>(
            model, "model", "amplification_factors",
            std::vector<double>{1.0, 10.0, 100.0});
    } else {
        throw std::invalid_argument(
            "config: model.type must be one of \"grw\", \"kick\", \"csl\", "
            "\"master-grw\", \"master-csl\", \"com\"");
    }

    cfg.M = get_field_or<int>(doc, "", "M", 2000);
    cfg.t_final = get_field<double>(doc, "", "t_final");
    cfg.dt = get_field<double>(doc, "", "dt");
    cfg.snapshot_times = get_field<std::vector<double>>(doc, "", "snapshot_times");
    cfg.base_seed = get_field_or<std::uint64_t>(doc, "", "base_seed", 1);
    cfg.out_dir = get_field_or<std::string>(doc, "", "out_dir", "out");
    cfg.tolerance = get_field_or<double>(doc, "", "tolerance", 0.05);
    cfg.n_bootstrap = get_field_or<int>(doc, "", "n_bootstrap", 200);
    return cfg;
}

inline json to_json(const ExperimentConfig& cfg) {
    json doc;
    doc["version"] = cfg.version;
    doc["grid"] = {{"x_min", cfg.grid.x_min},
                   {"x_max", cfg.grid.x_max},
                   {"n_points", cfg.grid.n_points}};
    if (cfg.initial_state.type == "packet")
        doc["initial_state"] = {{"type", "packet"},
                                {"center", cfg.initial_state.center},
                                {"width", cfg.initial_state.width},
                                {"momentum", cfg.initial_state.momentum}};
    else
        doc["initial_state"] = {{"type", "cat"},
                                {"separation", cfg.initial_state.separation},
                                {"width", cfg.initial_state.width}};
    if (cfg.hamiltonian.kind == "zero")
        doc["hamiltonian"] = {{"kind", "zero"}};
    else if (cfg.hamiltonian.kind == "free")
        doc["hamiltonian"] = {{"kind", "free"}, {"mass", cfg.hamiltonian.mass}};
    else
        doc["hamiltonian"] = {{"kind", "harmonic"},
                              {"mass", cfg.hamiltonian.mass},
                              {"frequency", cfg.hamiltonian.frequency}};
    json model;
    model["type"] = cfg.model.type;
    if (cfg.model.type == "grw" || cfg.model.type == "master-grw" ||
        cfg.model.type == "kick" || cfg.model.type == "com") {
        model["lambda"] = cfg.model.lambda;
        model["sigma"] = cfg.model.sigma;
    }
    if (cfg.model.type == "kick")
        model["kick_variance_mode"] = cfg.model.kick_variance_mode;
    if (cfg.model.type == "csl" || cfg.model.type == "master-csl") {
        model["gamma"] = cfg.model.gamma;
        model["r_C"] = cfg.model.r_C;
    }
    if (cfg.model.type == "csl") {
        model["n_cells"] = cfg.model.n_cells;
        model["weights"] = cfg.model.weights;
    }
    if (cfg.model.type == "master-csl") model["dimension"] = cfg.model.dimension;
    if (cfg.model.type == "com")
        model["amplification_factors"] = cfg.model.amplification_factors;
    doc["model"] = std::move(model);
    doc["M"] = cfg.M;
    doc["t_final"] = cfg.t_final;
    doc["dt"] = cfg.dt;
    doc["snapshot_times"] = cfg.snapshot_times;
    doc["base_seed"] = cfg.base_seed;
    doc["out_dir"] = cfg.out_dir;
    doc["tolerance"] = cfg.tolerance;
    doc["n_bootstrap"] = cfg.n_bootstrap;
    return doc;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw std::invalid_argument("config: " + path + ": " + e.what());
    }
    return parse_config(doc);
}

/// FNV-1a 64-bit hash of the canonical serialization; reports carry it so
/// a run can be replayed from the exact same inputs.
inline std::string config_hash(const ExperimentConfig& cfg) {
    // The hash identifies the physical run for replay comparisons; where the
    // artifacts land is an execution detail, so out_dir stays out of it.
    json doc = to_json(cfg);
    doc.erase("out_dir");
    const std::string dump = doc.dump();
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << h;
    return hex.str();
}

/// Materializers. Each throws std::invalid_argument on inconsistent specs.
inline SpatialGrid make_grid(const ExperimentConfig& cfg) {
    return SpatialGrid(cfg.grid.x_min, cfg.grid.x_max, cfg.grid.n_points);
}

inline Hamiltonian make_hamiltonian(const ExperimentConfig& cfg) {
    if (cfg.hamiltonian.kind == "zero") return Hamiltonian::zero();
    if (cfg.hamiltonian.kind == "free") return Hamiltonian::free(cfg.hamiltonian.mass);
    return Hamiltonian::harmonic(cfg.hamiltonian.frequency, cfg.hamiltonian.mass);
}

inline WaveFunction make_initial_state(const ExperimentConfig& cfg) {
    const SpatialGrid grid = make_grid(cfg);
    if (cfg.initial_state.type == "packet")
        return gaussian_packet(grid, cfg.initial_state.center, cfg.initial_state.width,
                               cfg.initial_state.momentum);
    return cat_state(grid, cfg.initial_state.separation, cfg.initial_state.width);
}

inline GrwParams make_grw_params(const ExperimentConfig& cfg) {
    GrwParams p;
    p.lambda_rate = cfg.model.lambda;
    p.sigma = cfg.model.sigma;
    p.n_particles = 1;
    return p;
}

inline KickParams make_kick_params(const ExperimentConfig& cfg) {
    KickParams p;
    p.lambda_rate = cfg.model.lambda;
    p.sigma = cfg.model.sigma;
    p.mode = cfg.model.kick_variance_mode == "as_printed" ? KickVarianceMode::as_printed
                                                          : KickVarianceMode::matched;
    p.n_particles = 1;
    return p;
}

inline CslParams make_csl_params(const ExperimentConfig& cfg) {
    return CslParams::for_grid(make_grid(cfg), cfg.model.gamma, cfg.model.r_C,
                               cfg.model.n_cells, cfg.model.weights);
}

inline DecoherenceKernel make_kernel(const ExperimentConfig& cfg) {
    if (cfg.model.type == "master-csl")
        return DecoherenceKernel::csl(cfg.model.gamma, cfg.model.r_C,
                                      cfg.model.dimension);
    // grw / master-grw / kick / com all dephase with the localization kernel
    return DecoherenceKernel::grw(cfg.model.lambda, cfg.model.sigma);
}

/// Evaluate every downstream precondition without running dynamics.
/// Errors make the config unusable; warnings flag statistical or numerical
/// risks (degenerate M, initial mass near the boundary).
inline std::vector<Diagnostic> validate_config(const ExperimentConfig& cfg) {
    std::vector<Diagnostic> diags;
    auto error = [&](const std::string& field, const std::string& msg) {
        diags.push_back({Diagnostic::Severity::error, field, msg});
    };
    auto warn = [&](const std::string& field, const std::string& msg) {
        diags.push_back({Diagnostic::Severity::warning, field, msg});
    };

    std::optional<SpatialGrid> grid;
    try {
        grid.emplace(make_grid(cfg));
    } catch (const std::exception& e) {
        error("grid", e.what());
    }

    std::optional<Hamiltonian> h;
    try {
        h.emplace(make_hamiltonian(cfg));
        h->validate();
    } catch (const std::exception& e) {
        error("hamiltonian", e.what());
    }

    if (grid) {
        try {
            const WaveFunction psi = make_initial_state(cfg);
            const double boundary = boundary_probability(psi);
            if (boundary > 1e-6) {
                std::ostringstream msg;
                msg << "initial state puts probability " << boundary
                    << " in the outermost grid cells; dynamics may wrap around "
                    << "the periodic boundary";
                warn("initial_state", msg.str());
            }
        } catch (const std::exception& e) {
            error("initial_state", e.what());
        }
    }

    if (!(cfg.dt > 0.0)) error("dt", "dt must be > 0");
    if (!(cfg.t_final >= 0.0)) error("t_final", "t_final must be >= 0");

    if (cfg.snapshot_times.empty())
        error("snapshot_times", "need at least one snapshot time");
    for (std::size_t i = 0; i < cfg.snapshot_times.size(); ++i) {
        const double t = cfg.snapshot_times[i];
        if (t < 0.0 || t > cfg.t_final) {
            error("snapshot_times", "snapshot times must lie in [0, t_final]");
            break;
        }
        if (i > 0 && t < cfg.snapshot_times[i - 1]) {
            error("snapshot_times", "snapshot times must be non-decreasing");
            break;
        }
    }

    // Unitary step bound applies to every model that propagates.
    if (grid && h && cfg.dt > 0.0) {
        const double e_max = h->max_kinetic_energy(*grid);
        if (cfg.dt * e_max > 0.5) {
            std::ostringstream msg;
            msg << "dt * max kinetic energy = " << cfg.dt * e_max
                << " exceeds 0.5; use dt <= " << 0.5 / e_max;
            error("dt", msg.str());
        }
    }

    const bool is_trajectory_model = cfg.model.type == "grw" ||
                                     cfg.model.type == "kick" ||
                                     cfg.model.type == "csl" ||
                                     cfg.model.type == "com";
    if (is_trajectory_model) {
        if (cfg.M < 1) error("M", "M must be >= 1");
        else if (cfg.M == 1)
            warn("M", "M = 1 gives degenerate statistics (debugging only)");
        if (cfg.n_bootstrap < 100) error("n_bootstrap", "need >= 100 resamples");
    }
    if (!(cfg.tolerance >= 0.0)) error("tolerance", "tolerance must be >= 0");

    if (grid) {
        if (cfg.model.type == "grw" || cfg.model.type == "com") {
            if (!(cfg.model.lambda >= 0.0)) error("model.lambda", "must be >= 0");
            if (!(cfg.model.sigma > 0.0)) {
                error("model.sigma", "must be > 0");
            } else if (cfg.model.sigma < 2.0 * grid->dx()) {
                std::ostringstream msg;
                msg << "model.sigma = " << cfg.model.sigma
                    << " is below the resolution bound 2 * dx = " << 2.0 * grid->dx();
                error("model.sigma", msg.str());
            }
            if (cfg.model.type == "com")
                for (double f : cfg.model.amplification_factors)
                    if (!(f >= 1.0)) {
                        error("model.amplification_factors", "factors must be >= 1");
                        break;
                    }
        }
        if (cfg.model.type == "kick") {
            if (!(cfg.model.lambda >= 0.0)) error("model.lambda", "must be >= 0");
            if (!(cfg.model.sigma > 0.0)) error("model.sigma", "must be > 0");
        }
        if (cfg.model.type == "master-grw") {
            if (!(cfg.model.lambda >= 0.0)) error("model.lambda", "must be >= 0");
            if (!(cfg.model.sigma > 0.0)) error("model.sigma", "must be > 0");
        }
        if (cfg.model.type == "master-grw" || cfg.model.type == "master-csl" ||
            cfg.model.type == "com") {
            try {
                DecoherenceKernel kernel = make_kernel(cfg);
                double max_rate = kernel.rate(grid->x_max() - grid->x_min());
                if (cfg.model.type == "com") {
                    double max_factor = 1.0;
                    for (double f : cfg.model.amplification_factors)
                        max_factor = std::max(max_factor, f);
                    max_rate *= max_factor;
                }
                if (cfg.dt > 0.0 && cfg.dt * max_rate > 0.1) {
                    std::ostringstream msg;
                    msg << "dt * max decoherence rate = " << cfg.dt * max_rate
                        << " exceeds 0.1; use dt <= " << 0.1 / max_rate;
                    error("dt", msg.str());
                }
            } catch (const std::exception& e) {
                error("model", e.what());
            }
        }
        if (cfg.model.type == "csl") {
            try {
                const CslParams params = make_csl_params(cfg);
                const detail::CslContext ctx(*grid, params);
                const double bound = ctx.static_drift_bound();
                if (cfg.dt > 0.0 && cfg.dt * params.gamma * bound > 0.1) {
                    std::ostringstream msg;
                    msg << "dt * gamma * worst-case drift = "
                        << cfg.dt * params.gamma * bound
                        << " exceeds 0.1; use dt <= " << 0.1 / (params.gamma * bound);
                    error("dt", msg.str());
                }
                auto on_step_grid = [&](double t) {
                    const double r = t / cfg.dt;
                    return std::abs(r - std::round(r)) <= 1e-6;
                };
                if (cfg.dt > 0.0) {
                    if (!on_step_grid(cfg.t_final))
                        error("t_final",
                              "must be an integer multiple of dt for monitoring runs");
                    for (double t : cfg.snapshot_times)
                        if (!on_step_grid(t)) {
                            error("snapshot_times", "monitoring snapshots must sit on "
                                                    "integer multiples of dt");
                            break;
                        }
                }
            } catch (const std::exception& e) {
                const std::string what = e.what();
                error(what.find("r_C") != std::string::npos ? "model.r_C" : "model",
                      what);
            }
        }
    }
    return diags;
}

} // namespace unravel
