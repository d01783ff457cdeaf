#include "harness.hpp"

#include "csv.hpp"
#include "normal_score.hpp"
#include "version.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

namespace fs = std::filesystem;

namespace ekb {

double compute_rmse(const Eigen::VectorXd& mean_field, const Eigen::VectorXd& truth) {
    if (mean_field.size() != truth.size() || mean_field.size() == 0)
        throw InvalidArgument("compute_rmse: field sizes disagree");
    return std::sqrt((mean_field - truth).squaredNorm() / double(mean_field.size()));
}

namespace {

/// Forward-propagate every member over n_steps; the step counter counts
/// model steps once, independent of the member count.
void propagate(const ScenarioSpec& spec, ForwardModel& model, Ensemble& ens,
               int n_steps, long& step_counter) {
    const StateLayout& layout = ens.layout;
    const int n_g = layout.n_cells;
    LogPermField perm{spec.grid, Eigen::VectorXd(n_g)};
    DynamicState state;
    for (int i = 0; i < ens.n_members(); ++i) {
        auto col = ens.members.col(i);
        perm.values = col.head(n_g);
        state.head = col.segment(layout.head_offset(), n_g);
        if (layout.with_concentration)
            state.concentration = col.segment(layout.conc_offset(), n_g);
        else
            state.concentration.resize(0);
        try {
            model.advance(perm, state, n_steps);
        } catch (const SolverDivergence& e) {
            throw SolverDivergence(
                "realization " + std::to_string(i) + ": " + e.what(), e.residual_norm);
        }
        col.segment(layout.head_offset(), n_g) = state.head;
        if (layout.with_concentration)
            col.segment(layout.conc_offset(), n_g) = state.concentration;
    }
    step_counter += n_steps;
}

void reset_dynamic_states(Ensemble& ens, const DynamicState& init) {
    const StateLayout& layout = ens.layout;
    ens.members.middleRows(layout.head_offset(), layout.n_cells).colwise() = init.head;
    if (layout.with_concentration)
        ens.members.middleRows(layout.conc_offset(), layout.n_cells).colwise() =
            init.concentration;
}

/// Normal-score analysis: every state-vector marginal and the observation
/// ensemble are mapped to normal scores, a classical update runs in score
/// space, and the result is back-transformed. The measurement noise either
/// rides through the table with the perturbed values (R = sample variance of
/// the transformed results) or enters score space as normalized unit-variance
/// perturbations, per the variant configuration.
Ensemble normal_score_update(const Ensemble& ens, const MeasurementBatch& batch,
                             const Eigen::MatrixXd& perturbed,
                             const VariantConfig& variant) {
    const StateLayout& layout = ens.layout;
    const int n_s = layout.n_state();
    const int n_e = ens.n_members();
    const int n_m = batch.n_obs();

    std::vector<NormalScoreTable> tables;
    tables.reserve(n_s);
    Eigen::MatrixXd z(n_s, n_e);
    for (int s = 0; s < n_s; ++s) {
        auto [scores, table] =
            normal_score_transform(ens.members.row(s).transpose(), variant.ns_spread);
        z.row(s) = scores.transpose();
        tables.push_back(std::move(table));
    }

    const auto rows = observation_rows(batch, layout);
    MeasurementBatch tbatch = batch;
    Eigen::MatrixXd td(n_m, n_e);
    for (int m = 0; m < n_m; ++m) {
        const NormalScoreTable& table = tables[rows[m]];
        tbatch.values[m] = table.forward(batch.values[m]);
        if (variant.ns_obs == NsObsPolicy::JointTable) {
            for (int i = 0; i < n_e; ++i) td(m, i) = table.forward(perturbed(m, i));
        } else {
            const double sigma = std::sqrt(batch.noise_var[m]);
            for (int i = 0; i < n_e; ++i) {
                const double eps =
                    sigma > 0.0 ? (perturbed(m, i) - batch.values[m]) / sigma : 0.0;
                td(m, i) = tbatch.values[m] + eps;
            }
        }
        const double mean = td.row(m).mean();
        tbatch.noise_var[m] = (td.row(m).array() - mean).square().sum() / (n_e - 1);
    }

    Ensemble zen{layout, std::move(z)};
    const GainRep gain = kalman_gain(zen, tbatch);
    zen = analysis_update(zen, tbatch, td, gain);

    Ensemble out = ens;
    for (int s = 0; s < n_s; ++s)
        out.members.row(s) =
            normal_score_back(zen.members.row(s).transpose(), tables[s]).transpose();
    return out;
}

void check_finite(const Ensemble& ens) {
    if (!ens.members.allFinite())
        throw SolverDivergence("ensemble lost finiteness after analysis",
                               std::numeric_limits<double>::infinity());
}

} // namespace

RmseRecord run_experiment(const ExperimentContext& ctx, const VariantConfig& variant,
                          int n_e, int experiment_index,
                          std::uint64_t experiment_seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const ScenarioSpec& spec = ctx.spec;
    variant.validate();
    if (int(ctx.truth.batches.size()) != spec.n_obs_times)
        throw InvalidArgument("run_experiment: truth does not match the schedule");

    RmseRecord rec;
    rec.scenario = spec.name;
    rec.variant = variant.id;
    rec.n_e = n_e;
    rec.experiment = experiment_index;

    Ensemble ens = initial_ensemble(spec, ctx.init_sampler, n_e, experiment_seed);
    const StateLayout layout = ens.layout;
    ForwardModel model(spec.forward_config());
    long steps = 0;
    Eigen::MatrixXd last_params = ens.params();

    Eigen::MatrixXd taper;
    if (variant.kind == VariantKind::Local)
        taper = build_taper(spec.grid, layout, spec.batch_template(), variant.lambda);

    auto draw_perturbations = [&](const MeasurementBatch& batch) {
        RngStream stream(experiment_seed, StreamPurpose::ObsPerturb,
                         std::uint64_t(batch.time_index));
        return perturb_observations(batch, n_e, stream);
    };
    auto scheduled_batch = [&](int j) {
        MeasurementBatch batch = ctx.truth.batches[j - 1];
        if (variant.noise_scale != 1.0)
            batch.noise_var *= variant.noise_scale * variant.noise_scale;
        return batch;
    };

    try {
        switch (variant.kind) {
            case VariantKind::Classical:
            case VariantKind::Damped:
            case VariantKind::Local:
            case VariantKind::Hybrid:
            case VariantKind::NormalScore: {
                for (int j = 1; j <= spec.n_obs_times; ++j) {
                    propagate(spec, model, ens, spec.obs_interval, steps);
                    const MeasurementBatch batch = scheduled_batch(j);
                    const Eigen::MatrixXd d = draw_perturbations(batch);
                    switch (variant.kind) {
                        case VariantKind::Classical:
                            ens = analysis_update(ens, batch, d, kalman_gain(ens, batch));
                            break;
                        case VariantKind::Damped:
                            ens = damped_update(ens, batch, d, kalman_gain(ens, batch),
                                                variant.alpha);
                            break;
                        case VariantKind::Local:
                            ens = analysis_update(ens, batch, d,
                                                  localized_gain(ens, batch, taper));
                            break;
                        case VariantKind::Hybrid:
                            ens = analysis_update(ens, batch, d,
                                                  hybrid_gain(ens, batch, variant.beta,
                                                              variant.static_diag));
                            break;
                        default:
                            ens = normal_score_update(ens, batch, d, variant);
                            break;
                    }
                    check_finite(ens);
                    last_params = ens.params();
                }
                break;
            }

            case VariantKind::Dual: {
                const int dyn_rows = layout.n_dynamic();
                for (int j = 1; j <= spec.n_obs_times; ++j) {
                    const Eigen::MatrixXd prev_states = ens.members.bottomRows(dyn_rows);
                    propagate(spec, model, ens, spec.obs_interval, steps);
                    const MeasurementBatch batch = scheduled_batch(j);
                    const Eigen::MatrixXd d = draw_perturbations(batch);

                    // Stage one: parameters only, gain from the first forecast.
                    Ensemble stage1 =
                        parameter_only_update(ens, batch, d, kalman_gain(ens, batch));

                    // Re-simulate the interval with the updated parameters,
                    // then update only the states with the same measurements.
                    stage1.members.bottomRows(dyn_rows) = prev_states;
                    propagate(spec, model, stage1, spec.obs_interval, steps);
                    ens = state_only_update(stage1, batch, d, kalman_gain(stage1, batch));
                    check_finite(ens);
                    last_params = ens.params();
                }
                break;
            }

            case VariantKind::Iterative: {
                const DynamicState init = model.initial_state();
                Eigen::MatrixXd params = ens.params();
                for (int j = 1; j <= spec.n_obs_times; ++j) {
                    ens.members.topRows(layout.n_param()) = params;
                    reset_dynamic_states(ens, init);
                    propagate(spec, model, ens, j * spec.obs_interval, steps);
                    const MeasurementBatch batch = scheduled_batch(j);
                    const Eigen::MatrixXd d = draw_perturbations(batch);
                    ens = analysis_update(ens, batch, d, kalman_gain(ens, batch));
                    check_finite(ens);
                    params = ens.params();
                    last_params = params;
                }
                break;
            }
        }
    } catch (const SolverDivergence&) {
        rec.diverged = true;
    } catch (const DegenerateCovariance&) {
        rec.diverged = true;
    }

    rec.rmse = compute_rmse(last_params.rowwise().mean(), ctx.truth.field.values);
    rec.steps = steps;
    rec.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

void ExperimentPlan::validate() const {
    spec.validate();
    if (variants.empty()) throw InvalidArgument("plan: no variants");
    if (ensemble_sizes.empty()) throw InvalidArgument("plan: no ensemble sizes");
    std::set<std::string> ids;
    for (const auto& v : variants) {
        v.validate();
        if (!ids.insert(v.id).second)
            throw InvalidArgument("plan: duplicate variant id '" + v.id + "'");
    }
    for (int n : ensemble_sizes)
        if (n < 2) throw InvalidArgument("plan: ensemble sizes must be >= 2");
    if (n_experiments < 1) throw InvalidArgument("plan: need n_experiments >= 1");
}

std::uint64_t ExperimentPlan::experiment_seed(const VariantConfig& variant, int n_e,
                                              int index) const {
    const std::uint64_t paired_seed = mix_seed(base_experiment_seed, std::uint64_t(index));
    if (paired) return paired_seed;
    return mix_seed(paired_seed, mix_seed(fnv1a(variant.id), std::uint64_t(n_e)));
}

namespace {

void describe_bc(std::string& s, const BoundarySpec& bc) {
    for (const EdgeBC* e : {&bc.west, &bc.east, &bc.south, &bc.north}) {
        s += e->kind == EdgeKind::Dirichlet ? "d:" + format_double(e->value) : "n";
        s += ';';
    }
    for (const auto& [cell, value] : bc.fixed_cells)
        s += std::to_string(cell) + "=" + format_double(value) + ";";
}

std::string describe_plan(const ExperimentPlan& plan) {
    const ScenarioSpec& sp = plan.spec;
    std::string s = "scenario=" + sp.name + ";grid=" + std::to_string(sp.grid.nx) + "x" +
                    std::to_string(sp.grid.ny) + "x" + format_double(sp.grid.dx) + "x" +
                    format_double(sp.grid.dy) + ";t=" + format_double(sp.sim_time) + "/" +
                    std::to_string(sp.n_steps) + ";fluid=" + format_double(sp.fluid.rho_f) +
                    "," + format_double(sp.fluid.mu_f) + "," + format_double(sp.fluid.g) +
                    ";rock=" + format_double(sp.rock.porosity) + "," +
                    format_double(sp.rock.specific_storage) + ";hbc=";
    describe_bc(s, sp.head_bc);
    s += "h0=" + format_double(sp.initial_head) + ";";
    if (sp.with_transport) {
        s += "cbc=";
        describe_bc(s, sp.conc_bc);
        s += "c0=" + format_double(sp.initial_conc) + ";D=" + format_double(sp.diffusion) + ";";
    }
    s += "obs=";
    for (int c : sp.obs_cells) s += std::to_string(c) + ",";
    s += sp.obs_kind == ObsKind::Head ? ";head" : ";conc";
    s += ";sched=" + std::to_string(sp.obs_interval) + "x" + std::to_string(sp.n_obs_times);
    s += ";sigma=" + format_double(sp.noise_sigma);
    for (const FieldStats* f : {&sp.reference_stats, &sp.ensemble_stats})
        s += ";stats=" + format_double(f->mean) + "," + format_double(f->stddev) + "," +
             format_double(f->corr_length) + "," + correlation_model_name(f->model);
    s += ";solver=" + format_double(sp.solver.picard_rel_tol) + "," +
         format_double(sp.solver.linear_rel_tol) + "," +
         std::to_string(sp.solver.linear_max_iter);
    s += ";variants=";
    for (const auto& v : plan.variants) {
        s += v.id + ":" + variant_kind_name(v.kind) + ":" + format_double(v.alpha) + "," +
             format_double(v.lambda) + "," + format_double(v.beta) + "," +
             format_double(v.static_diag.param) + "," + format_double(v.static_diag.head) +
             "," + format_double(v.static_diag.conc) + "," +
             format_double(v.noise_scale) + "," + ns_spread_name(v.ns_spread) + "," +
             ns_obs_policy_name(v.ns_obs) + "|";
    }
    s += ";sizes=";
    for (int n : plan.ensemble_sizes) s += std::to_string(n) + ",";
    s += ";n_exp=" + std::to_string(plan.n_experiments);
    s += ";truth_seed=" + std::to_string(plan.truth_seed);
    s += ";base_seed=" + std::to_string(plan.base_experiment_seed);
    s += ";paired=" + std::string(plan.paired ? "1" : "0");
    return s;
}

} // namespace

std::string ExperimentPlan::hash() const {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(describe_plan(*this))));
    return std::string(buf);
}

namespace {

void write_record(std::ostream& out, const RmseRecord& r) {
    out << r.scenario << ',' << r.variant << ',' << r.n_e << ',' << r.experiment << ','
        << format_double(r.rmse) << ',' << r.steps << ',' << format_double(r.wall_s)
        << ',' << (r.diverged ? 1 : 0) << '\n';
}

} // namespace

std::vector<RmseRecord> read_rmse_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != kRmseCsvHeader)
        throw IoError("'" + path + "' does not start with the rmse table header");
    std::vector<RmseRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 8) throw IoError("malformed rmse row: '" + line + "'");
        RmseRecord r;
        r.scenario = f[0];
        r.variant = f[1];
        r.n_e = int(parse_int(f[2]));
        r.experiment = int(parse_int(f[3]));
        r.rmse = parse_double(f[4]);
        r.steps = long(parse_int(f[5]));
        r.wall_s = parse_double(f[6]);
        r.diverged = parse_int(f[7]) != 0;
        records.push_back(std::move(r));
    }
    return records;
}

void write_manifest(const ExperimentPlan& plan, const std::string& path) {
    nlohmann::json j;
    j["format"] = "enkfbench-manifest-v1";
    j["software_version"] = kVersion;
    j["plan_hash"] = plan.hash();
    j["scenario"] = plan.spec.name;
    j["truth_seed"] = plan.truth_seed;
    j["base_experiment_seed"] = plan.base_experiment_seed;
    j["paired"] = plan.paired;
    j["n_experiments"] = plan.n_experiments;
    j["ensemble_sizes"] = plan.ensemble_sizes;
    std::vector<std::string> ids;
    for (const auto& v : plan.variants) ids.push_back(v.id);
    j["variants"] = ids;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << '\n';
}

std::string read_manifest_hash(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    nlohmann::json j;
    in >> j;
    return j.at("plan_hash").get<std::string>();
}

std::vector<RmseRecord> run_plan(const ExperimentPlan& plan, const std::string& out_dir,
                                 const RunOptions& options) {
    plan.validate();
    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / "rmse.csv").string();
    const std::string manifest_path = (fs::path(out_dir) / "manifest.json").string();

    const bool have_output = fs::exists(csv_path) && fs::file_size(csv_path) > 0;
    std::vector<RmseRecord> existing;
    if (have_output) {
        if (!options.resume)
            throw IoError("'" + csv_path + "' already exists; use resume to continue");
        if (!fs::exists(manifest_path))
            throw IoError("cannot resume: '" + manifest_path + "' is missing");
        if (read_manifest_hash(manifest_path) != plan.hash())
            throw IoError("cannot resume: existing output came from a different plan");
        existing = read_rmse_csv(csv_path);
    }
    write_manifest(plan, manifest_path);

    struct Task {
        const VariantConfig* variant;
        int n_e;
        int experiment;
    };
    std::vector<Task> tasks;
    tasks.reserve(plan.n_tasks());
    for (const auto& v : plan.variants)
        for (int n_e : plan.ensemble_sizes)
            for (int i = 0; i < plan.n_experiments; ++i)
                tasks.push_back({&v, n_e, i});

    std::map<std::tuple<std::string, int, int>, RmseRecord> done;
    for (auto& r : existing)
        done.emplace(std::make_tuple(r.variant, r.n_e, r.experiment), r);

    const std::size_t n_tasks = tasks.size();
    std::vector<std::optional<RmseRecord>> slots(n_tasks);
    std::vector<char> skip(n_tasks, 0);
    for (std::size_t t = 0; t < n_tasks; ++t)
        skip[t] = done.count({tasks[t].variant->id, tasks[t].n_e, tasks[t].experiment}) ? 1 : 0;

    const SyntheticTruth truth = generate_truth(plan.spec, plan.truth_seed);
    const FieldSampler sampler(plan.spec.grid, plan.spec.ensemble_stats);
    const ExperimentContext ctx{plan.spec, truth, sampler};

    std::ofstream out(csv_path, std::ios::app);
    if (!out) throw IoError("cannot open '" + csv_path + "' for writing");
    if (!have_output) {
        out << kRmseCsvHeader << '\n';
        out.flush();
    }

    std::mutex mutex;
    std::size_t next_commit = 0;
    std::size_t completed = 0;
    auto commit_locked = [&] {
        while (next_commit < n_tasks &&
               (skip[next_commit] || slots[next_commit].has_value())) {
            if (!skip[next_commit]) {
                write_record(out, *slots[next_commit]);
                out.flush();
            }
            ++next_commit;
        }
    };

    std::atomic<std::size_t> next_task{0};
    std::atomic<bool> failed{false};
    std::exception_ptr first_error;

    auto worker = [&] {
        while (!failed.load()) {
            const std::size_t t = next_task.fetch_add(1);
            if (t >= n_tasks) break;
            if (skip[t]) {
                std::lock_guard<std::mutex> lock(mutex);
                ++completed;
                commit_locked();
                if (options.progress) options.progress(completed, n_tasks);
                continue;
            }
            try {
                RmseRecord rec = run_experiment(
                    ctx, *tasks[t].variant, tasks[t].n_e, tasks[t].experiment,
                    plan.experiment_seed(*tasks[t].variant, tasks[t].n_e,
                                         tasks[t].experiment));
                std::lock_guard<std::mutex> lock(mutex);
                slots[t] = std::move(rec);
                ++completed;
                commit_locked();
                if (options.progress) options.progress(completed, n_tasks);
            } catch (...) {
                std::lock_guard<std::mutex> lock(mutex);
                if (!first_error) first_error = std::current_exception();
                failed.store(true);
            }
        }
    };

    const int n_workers = std::max(1, options.workers);
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);

    std::vector<RmseRecord> result;
    result.reserve(n_tasks);
    for (std::size_t t = 0; t < n_tasks; ++t) {
        if (skip[t])
            result.push_back(
                done.at({tasks[t].variant->id, tasks[t].n_e, tasks[t].experiment}));
        else
            result.push_back(*slots[t]);
    }
    return result;
}

} // namespace ekb
