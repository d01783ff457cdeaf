#include "config.hpp"

#include "csv.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ekb {

bool ScenarioOverrides::any() const {
    return nx || ny || n_steps || obs_interval || n_obs_times || linear_max_iter || dx ||
           dy || sim_time_days || noise_sigma || noise_scale || diffusion || porosity ||
           specific_storage || rho_f || mu_f || gravity || initial_head || initial_conc ||
           ref_mean || ref_stddev || ref_corr_length || ens_mean || ens_stddev ||
           ens_corr_length || picard_rel_tol || linear_rel_tol || obs_cells || obs_kind ||
           correlation_model || bc_head_south || bc_head_north || bc_head_west ||
           bc_head_east || bc_conc_south || bc_conc_north || bc_conc_west ||
           bc_conc_east || well_head;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& v, int line) {
    try {
        return parse_double(v);
    } catch (const Error&) {
        throw ConfigError("expected a number, got '" + v + "'", line);
    }
}

long long to_int(const std::string& v, int line) {
    try {
        return parse_int(v);
    } catch (const Error&) {
        throw ConfigError("expected an integer, got '" + v + "'", line);
    }
}

std::uint64_t to_u64(const std::string& v, int line) {
    const long long x = to_int(v, line);
    if (x < 0) throw ConfigError("expected a non-negative seed", line);
    return std::uint64_t(x);
}

bool to_bool(const std::string& v, int line) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("expected true/false, got '" + v + "'", line);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<int> to_int_list(const std::string& v, int line) {
    std::vector<int> out;
    for (const auto& item : split_list(v)) out.push_back(int(to_int(item, line)));
    if (out.empty()) throw ConfigError("expected a non-empty list", line);
    return out;
}

std::vector<double> to_double_list(const std::string& v, int line) {
    std::vector<double> out;
    for (const auto& item : split_list(v)) out.push_back(to_double(item, line));
    if (out.empty()) throw ConfigError("expected a non-empty list", line);
    return out;
}

/// Short suffix-friendly number format for generated variant ids.
std::string id_number(double v) {
    std::string s = format_double(v);
    for (char& c : s)
        if (c == '+' || c == '-') c = 'm';
    return s;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string raw;
    std::string section = "plan";
    int line_no = 0;
    bool saw_plan_variants = false;

    while (std::getline(in, raw)) {
        ++line_no;
        const std::string line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;

        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("unterminated section header", line_no);
            section = trim(line.substr(1, line.size() - 2));
            if (section != "plan" && section != "scenario" && section != "sweep" &&
                section != "output" && section != "run" &&
                section != "variant.damped" && section != "variant.local" &&
                section != "variant.hybrid" && section != "variant.normal_score")
                throw ConfigError("unknown section [" + section + "]", line_no);
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value'", line_no);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", line_no);

        auto unknown = [&]() -> ConfigError {
            return ConfigError("unknown key '" + key + "' in section [" + section + "]",
                               line_no);
        };

        if (section == "plan") {
            if (key == "scenario") cfg.scenario = value;
            else if (key == "variants") {
                cfg.variants = split_list(value);
                saw_plan_variants = true;
                if (cfg.variants.empty()) throw ConfigError("empty variant list", line_no);
                for (const auto& v : cfg.variants) variant_kind_from_name(v);
            } else if (key == "ensemble_sizes") cfg.ensemble_sizes = to_int_list(value, line_no);
            else if (key == "n_experiments") cfg.n_experiments = int(to_int(value, line_no));
            else if (key == "truth_seed") cfg.truth_seed = to_u64(value, line_no);
            else if (key == "base_experiment_seed") cfg.base_experiment_seed = to_u64(value, line_no);
            else if (key == "paired") cfg.paired = to_bool(value, line_no);
            else throw unknown();
        } else if (section == "scenario") {
            ScenarioOverrides& o = cfg.overrides;
            if (key == "nx") o.nx = int(to_int(value, line_no));
            else if (key == "ny") o.ny = int(to_int(value, line_no));
            else if (key == "dx") o.dx = to_double(value, line_no);
            else if (key == "dy") o.dy = to_double(value, line_no);
            else if (key == "sim_time_days") o.sim_time_days = to_double(value, line_no);
            else if (key == "n_steps") o.n_steps = int(to_int(value, line_no));
            else if (key == "obs_interval") o.obs_interval = int(to_int(value, line_no));
            else if (key == "n_obs_times") o.n_obs_times = int(to_int(value, line_no));
            else if (key == "noise_sigma") o.noise_sigma = to_double(value, line_no);
            else if (key == "noise_scale") o.noise_scale = to_double(value, line_no);
            else if (key == "diffusion") o.diffusion = to_double(value, line_no);
            else if (key == "porosity") o.porosity = to_double(value, line_no);
            else if (key == "specific_storage") o.specific_storage = to_double(value, line_no);
            else if (key == "rho_f") o.rho_f = to_double(value, line_no);
            else if (key == "mu_f") o.mu_f = to_double(value, line_no);
            else if (key == "gravity") o.gravity = to_double(value, line_no);
            else if (key == "initial_head") o.initial_head = to_double(value, line_no);
            else if (key == "initial_conc") o.initial_conc = to_double(value, line_no);
            else if (key == "ref_mean") o.ref_mean = to_double(value, line_no);
            else if (key == "ref_stddev") o.ref_stddev = to_double(value, line_no);
            else if (key == "ref_corr_length") o.ref_corr_length = to_double(value, line_no);
            else if (key == "ens_mean") o.ens_mean = to_double(value, line_no);
            else if (key == "ens_stddev") o.ens_stddev = to_double(value, line_no);
            else if (key == "ens_corr_length") o.ens_corr_length = to_double(value, line_no);
            else if (key == "picard_rel_tol") o.picard_rel_tol = to_double(value, line_no);
            else if (key == "linear_rel_tol") o.linear_rel_tol = to_double(value, line_no);
            else if (key == "linear_max_iter") o.linear_max_iter = int(to_int(value, line_no));
            else if (key == "obs_cells") o.obs_cells = value;
            else if (key == "obs_kind") o.obs_kind = value;
            else if (key == "correlation_model") o.correlation_model = value;
            else if (key == "bc_head_south") o.bc_head_south = value;
            else if (key == "bc_head_north") o.bc_head_north = value;
            else if (key == "bc_head_west") o.bc_head_west = value;
            else if (key == "bc_head_east") o.bc_head_east = value;
            else if (key == "bc_conc_south") o.bc_conc_south = value;
            else if (key == "bc_conc_north") o.bc_conc_north = value;
            else if (key == "bc_conc_west") o.bc_conc_west = value;
            else if (key == "bc_conc_east") o.bc_conc_east = value;
            else if (key == "well_head") o.well_head = to_double(value, line_no);
            else throw unknown();
        } else if (section == "variant.damped") {
            if (key == "alpha") cfg.alpha = to_double(value, line_no);
            else throw unknown();
        } else if (section == "variant.local") {
            if (key == "lambda") cfg.lambda = to_double(value, line_no);
            else throw unknown();
        } else if (section == "variant.hybrid") {
            if (key == "beta") cfg.beta = to_double(value, line_no);
            else if (key == "static_var_param") cfg.static_diag.param = to_double(value, line_no);
            else if (key == "static_var_head") cfg.static_diag.head = to_double(value, line_no);
            else if (key == "static_var_conc") cfg.static_diag.conc = to_double(value, line_no);
            else throw unknown();
        } else if (section == "variant.normal_score") {
            try {
                if (key == "spread") cfg.ns_spread = ns_spread_from_name(value);
                else if (key == "noise") cfg.ns_obs = ns_obs_policy_from_name(value);
                else throw unknown();
            } catch (const InvalidArgument& e) {
                throw ConfigError(e.what(), line_no);
            }
        } else if (section == "sweep") {
            if (key == "lambda") cfg.sweep_lambda = to_double_list(value, line_no);
            else if (key == "beta") cfg.sweep_beta = to_double_list(value, line_no);
            else if (key == "noise_scale") cfg.sweep_noise_scale = to_double_list(value, line_no);
            else throw unknown();
        } else if (section == "output") {
            if (key == "dir") cfg.output_dir = value;
            else throw unknown();
        } else {  // [run]
            if (key == "workers") cfg.workers = int(to_int(value, line_no));
            else throw unknown();
        }
    }

    (void)saw_plan_variants;
    if (cfg.scenario != "tracer" && cfg.scenario != "well")
        throw ConfigError("scenario must be 'tracer' or 'well', got '" + cfg.scenario + "'");
    if (cfg.n_experiments < 1) throw ConfigError("n_experiments must be >= 1");
    if (cfg.workers < 1) throw ConfigError("workers must be >= 1");
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
    std::ostringstream out;
    out << "[plan]\n";
    out << "scenario = " << c.scenario << "\n";
    out << "variants = ";
    for (std::size_t i = 0; i < c.variants.size(); ++i)
        out << (i ? "," : "") << c.variants[i];
    out << "\n";
    out << "ensemble_sizes = ";
    for (std::size_t i = 0; i < c.ensemble_sizes.size(); ++i)
        out << (i ? "," : "") << c.ensemble_sizes[i];
    out << "\n";
    out << "n_experiments = " << c.n_experiments << "\n";
    if (c.truth_seed) out << "truth_seed = " << *c.truth_seed << "\n";
    out << "base_experiment_seed = " << c.base_experiment_seed << "\n";
    out << "paired = " << (c.paired ? "true" : "false") << "\n";

    if (c.overrides.any()) {
        out << "\n[scenario]\n";
        const ScenarioOverrides& o = c.overrides;
        auto emit_i = [&](const char* k, const std::optional<int>& v) {
            if (v) out << k << " = " << *v << "\n";
        };
        auto emit_d = [&](const char* k, const std::optional<double>& v) {
            if (v) out << k << " = " << format_double(*v) << "\n";
        };
        auto emit_s = [&](const char* k, const std::optional<std::string>& v) {
            if (v) out << k << " = " << *v << "\n";
        };
        emit_i("nx", o.nx);
        emit_i("ny", o.ny);
        emit_d("dx", o.dx);
        emit_d("dy", o.dy);
        emit_d("sim_time_days", o.sim_time_days);
        emit_i("n_steps", o.n_steps);
        emit_i("obs_interval", o.obs_interval);
        emit_i("n_obs_times", o.n_obs_times);
        emit_d("noise_sigma", o.noise_sigma);
        emit_d("noise_scale", o.noise_scale);
        emit_d("diffusion", o.diffusion);
        emit_d("porosity", o.porosity);
        emit_d("specific_storage", o.specific_storage);
        emit_d("rho_f", o.rho_f);
        emit_d("mu_f", o.mu_f);
        emit_d("gravity", o.gravity);
        emit_d("initial_head", o.initial_head);
        emit_d("initial_conc", o.initial_conc);
        emit_d("ref_mean", o.ref_mean);
        emit_d("ref_stddev", o.ref_stddev);
        emit_d("ref_corr_length", o.ref_corr_length);
        emit_d("ens_mean", o.ens_mean);
        emit_d("ens_stddev", o.ens_stddev);
        emit_d("ens_corr_length", o.ens_corr_length);
        emit_d("picard_rel_tol", o.picard_rel_tol);
        emit_d("linear_rel_tol", o.linear_rel_tol);
        emit_i("linear_max_iter", o.linear_max_iter);
        emit_s("obs_cells", o.obs_cells);
        emit_s("obs_kind", o.obs_kind);
        emit_s("correlation_model", o.correlation_model);
        emit_s("bc_head_south", o.bc_head_south);
        emit_s("bc_head_north", o.bc_head_north);
        emit_s("bc_head_west", o.bc_head_west);
        emit_s("bc_head_east", o.bc_head_east);
        emit_s("bc_conc_south", o.bc_conc_south);
        emit_s("bc_conc_north", o.bc_conc_north);
        emit_s("bc_conc_west", o.bc_conc_west);
        emit_s("bc_conc_east", o.bc_conc_east);
        emit_d("well_head", o.well_head);
    }

    out << "\n[variant.damped]\nalpha = " << format_double(c.alpha) << "\n";
    out << "\n[variant.local]\nlambda = " << format_double(c.lambda) << "\n";
    out << "\n[variant.hybrid]\nbeta = " << format_double(c.beta) << "\n"
        << "static_var_param = " << format_double(c.static_diag.param) << "\n"
        << "static_var_head = " << format_double(c.static_diag.head) << "\n"
        << "static_var_conc = " << format_double(c.static_diag.conc) << "\n";
    out << "\n[variant.normal_score]\nspread = " << ns_spread_name(c.ns_spread) << "\n"
        << "noise = " << ns_obs_policy_name(c.ns_obs) << "\n";

    if (!c.sweep_lambda.empty() || !c.sweep_beta.empty() || !c.sweep_noise_scale.empty()) {
        out << "\n[sweep]\n";
        auto emit_list = [&](const char* k, const std::vector<double>& v) {
            if (v.empty()) return;
            out << k << " = ";
            for (std::size_t i = 0; i < v.size(); ++i)
                out << (i ? "," : "") << format_double(v[i]);
            out << "\n";
        };
        emit_list("lambda", c.sweep_lambda);
        emit_list("beta", c.sweep_beta);
        emit_list("noise_scale", c.sweep_noise_scale);
    }

    if (!c.output_dir.empty()) out << "\n[output]\ndir = " << c.output_dir << "\n";
    out << "\n[run]\nworkers = " << c.workers << "\n";
    return out.str();
}

namespace {

EdgeBC parse_edge(const std::string& v) {
    if (v == "no_flow") return EdgeBC::no_flow();
    try {
        return EdgeBC::dirichlet(parse_double(v));
    } catch (const Error&) {
        throw ConfigError("edge condition must be a number or 'no_flow', got '" + v + "'");
    }
}

std::vector<int> parse_obs_cells(const std::string& v, const Grid2D& grid) {
    std::vector<int> cells;
    for (const auto& item : split_list(v)) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError("obs_cells entries must look like i:j, got '" + item + "'");
        const int i = int(parse_int(trim(item.substr(0, colon))));
        const int j = int(parse_int(trim(item.substr(colon + 1))));
        if (i < 0 || i >= grid.nx || j < 0 || j >= grid.ny)
            throw ConfigError("obs cell " + item + " outside the grid");
        cells.push_back(grid.cell_index(i, j));
    }
    if (cells.empty()) throw ConfigError("obs_cells is empty");
    return cells;
}

} // namespace

ScenarioSpec resolve_scenario(const RunConfig& c) {
    ScenarioSpec s = build_scenario(c.scenario);
    const ScenarioOverrides& o = c.overrides;

    if (o.nx || o.ny || o.dx || o.dy)
        s.grid = Grid2D(o.nx.value_or(s.grid.nx), o.ny.value_or(s.grid.ny),
                        o.dx.value_or(s.grid.dx), o.dy.value_or(s.grid.dy));
    if (o.sim_time_days) s.sim_time = *o.sim_time_days * 86400.0;
    if (o.n_steps) s.n_steps = *o.n_steps;
    if (o.obs_interval) s.obs_interval = *o.obs_interval;
    if (o.n_obs_times) s.n_obs_times = *o.n_obs_times;
    if (o.noise_sigma) s.noise_sigma = *o.noise_sigma;
    if (o.noise_scale) s.noise_sigma *= *o.noise_scale;
    if (o.diffusion) s.diffusion = *o.diffusion;
    if (o.porosity) s.rock.porosity = *o.porosity;
    if (o.specific_storage) s.rock.specific_storage = *o.specific_storage;
    if (o.rho_f) s.fluid.rho_f = *o.rho_f;
    if (o.mu_f) s.fluid.mu_f = *o.mu_f;
    if (o.gravity) s.fluid.g = *o.gravity;
    if (o.initial_head) s.initial_head = *o.initial_head;
    if (o.initial_conc) s.initial_conc = *o.initial_conc;
    if (o.ref_mean) s.reference_stats.mean = *o.ref_mean;
    if (o.ref_stddev) s.reference_stats.stddev = *o.ref_stddev;
    if (o.ref_corr_length) s.reference_stats.corr_length = *o.ref_corr_length;
    if (o.ens_mean) s.ensemble_stats.mean = *o.ens_mean;
    if (o.ens_stddev) s.ensemble_stats.stddev = *o.ens_stddev;
    if (o.ens_corr_length) s.ensemble_stats.corr_length = *o.ens_corr_length;
    if (o.picard_rel_tol) s.solver.picard_rel_tol = *o.picard_rel_tol;
    if (o.linear_rel_tol) s.solver.linear_rel_tol = *o.linear_rel_tol;
    if (o.linear_max_iter) s.solver.linear_max_iter = *o.linear_max_iter;
    if (o.correlation_model) {
        const CorrelationModel model = correlation_model_from_name(*o.correlation_model);
        s.reference_stats.model = model;
        s.ensemble_stats.model = model;
    }
    if (o.obs_kind) {
        if (*o.obs_kind == "head") s.obs_kind = ObsKind::Head;
        else if (*o.obs_kind == "concentration") s.obs_kind = ObsKind::Concentration;
        else throw ConfigError("obs_kind must be head or concentration");
    }
    if (o.obs_cells) s.obs_cells = parse_obs_cells(*o.obs_cells, s.grid);

    if (o.bc_head_south) s.head_bc.south = parse_edge(*o.bc_head_south);
    if (o.bc_head_north) s.head_bc.north = parse_edge(*o.bc_head_north);
    if (o.bc_head_west) s.head_bc.west = parse_edge(*o.bc_head_west);
    if (o.bc_head_east) s.head_bc.east = parse_edge(*o.bc_head_east);
    const bool conc_bc_given =
        o.bc_conc_south || o.bc_conc_north || o.bc_conc_west || o.bc_conc_east;
    if (conc_bc_given && !s.with_transport)
        throw ConfigError("concentration boundary overrides need the tracer scenario");
    if (o.bc_conc_south) s.conc_bc.south = parse_edge(*o.bc_conc_south);
    if (o.bc_conc_north) s.conc_bc.north = parse_edge(*o.bc_conc_north);
    if (o.bc_conc_west) s.conc_bc.west = parse_edge(*o.bc_conc_west);
    if (o.bc_conc_east) s.conc_bc.east = parse_edge(*o.bc_conc_east);
    if (o.well_head) {
        if (s.head_bc.fixed_cells.empty())
            throw ConfigError("well_head override needs the well scenario");
        for (auto& [cell, value] : s.head_bc.fixed_cells) value = *o.well_head;
    }

    try {
        s.validate();
    } catch (const Error& e) {
        throw ConfigError(std::string("invalid scenario after overrides: ") + e.what());
    }
    return s;
}

ExperimentPlan build_plan(const RunConfig& c) {
    ExperimentPlan plan;
    plan.spec = resolve_scenario(c);
    plan.truth_seed = c.truth_seed.value_or(plan.spec.default_truth_seed);
    plan.base_experiment_seed = c.base_experiment_seed;
    plan.paired = c.paired;
    plan.n_experiments = c.n_experiments;
    plan.ensemble_sizes = c.ensemble_sizes;

    std::vector<VariantConfig> base;
    for (const auto& name : c.variants) {
        VariantConfig v;
        v.kind = variant_kind_from_name(name);
        v.id = name;
        v.alpha = c.alpha;
        v.lambda = c.lambda;
        v.beta = c.beta;
        v.static_diag = c.static_diag;
        v.ns_spread = c.ns_spread;
        v.ns_obs = c.ns_obs;
        base.push_back(std::move(v));
    }

    // Sweeps expand the affected variants into one entry per parameter value.
    std::vector<VariantConfig> expanded;
    for (const auto& v : base) {
        if (v.kind == VariantKind::Local && !c.sweep_lambda.empty()) {
            for (double lambda : c.sweep_lambda) {
                VariantConfig sv = v;
                sv.lambda = lambda;
                sv.id = v.id + "_lambda" + id_number(lambda);
                expanded.push_back(std::move(sv));
            }
        } else if (v.kind == VariantKind::Hybrid && !c.sweep_beta.empty()) {
            for (double beta : c.sweep_beta) {
                VariantConfig sv = v;
                sv.beta = beta;
                sv.id = v.id + "_beta" + id_number(beta);
                expanded.push_back(std::move(sv));
            }
        } else {
            expanded.push_back(v);
        }
    }
    if (!c.sweep_noise_scale.empty()) {
        std::vector<VariantConfig> noise_expanded;
        for (const auto& v : expanded)
            for (double scale : c.sweep_noise_scale) {
                VariantConfig sv = v;
                sv.noise_scale = scale;
                sv.id = v.id + "_ns" + id_number(scale);
                noise_expanded.push_back(std::move(sv));
            }
        expanded = std::move(noise_expanded);
    }
    plan.variants = std::move(expanded);
    plan.validate();
    return plan;
}

std::string resolve_output_dir(const RunConfig& c) {
    if (!c.output_dir.empty()) return c.output_dir;
    if (const char* env = std::getenv("ENKFBENCH_OUT"); env && *env)
        return std::string(env);
    return "enkfbench_out";
}

} // namespace ekb
