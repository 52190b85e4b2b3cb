#include "plirl/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace plirl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(ProblemKind k) {
    switch (k) {
        case ProblemKind::quadratic: return "quadratic";
        case ProblemKind::mixture: return "mixture";
        case ProblemKind::logistic: return "logistic";
        case ProblemKind::cmdp: return "cmdp";
    }
    return "unknown";
}

namespace {

ProblemKind problem_from_string(const std::string& s, const std::string& field) {
    if (s == "quadratic") return ProblemKind::quadratic;
    if (s == "mixture") return ProblemKind::mixture;
    if (s == "logistic") return ProblemKind::logistic;
    if (s == "cmdp") return ProblemKind::cmdp;
    throw ConfigError(field + ": unknown problem kind '" + s + "'");
}

// Typed access to one JSON object. Every key read is remembered so that
// finish() can reject typos.
class Fields {
public:
    Fields(const json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
        if (!j_.is_object()) throw ConfigError(label() + ": expected an object");
    }

    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    bool has(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) && !j_.at(key).is_null();
    }

    template <class T>
    T get(const std::string& key) {
        if (!has(key)) throw ConfigError(path(key) + ": required field is missing");
        return convert<T>(key);
    }

    template <class T>
    T get(const std::string& key, T fallback) {
        return has(key) ? convert<T>(key) : fallback;
    }

    ParamVector vec(const std::string& key) {
        auto v = get<std::vector<double>>(key);
        return Eigen::Map<ParamVector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }

    Fields sub(const std::string& key) {
        if (!has(key)) throw ConfigError(path(key) + ": required section is missing");
        return Fields(j_.at(key), path(key));
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(path(it.key()) + ": unknown field");
    }

private:
    std::string label() const { return prefix_.empty() ? "config" : prefix_; }

    template <class T>
    T convert(const std::string& key) {
        try {
            return j_.at(key).get<T>();
        } catch (const json::exception&) {
            throw ConfigError(path(key) + ": wrong type");
        }
    }

    const json& j_;
    std::string prefix_;
    std::set<std::string> seen_;
};

std::string resolve(const std::string& p, const fs::path& base) {
    fs::path path(p);
    if (path.is_relative()) path = base / path;
    return fs::weakly_canonical(path).string();
}

// The field that fixes the parameter dimension of each problem.
std::string dimension_field(ProblemKind k) {
    switch (k) {
        case ProblemKind::quadratic: return "problem.dim";
        case ProblemKind::mixture: return "problem.kind (mixture, dimension)";
        case ProblemKind::logistic: return "problem.features";
        case ProblemKind::cmdp: return "problem.model";
    }
    return "problem";
}

void require_positive(double v, const std::string& field) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(field + " must be positive");
}

void require_length(Eigen::Index got, const std::string& field, int dim, const std::string& dim_field) {
    if (got != dim)
        throw ConfigError(field + " has length " + std::to_string(got) + " but " + dim_field + " is " +
                          std::to_string(dim));
}

InitDensity density_from(Fields f, int dim, const std::string& dim_field) {
    ParamVector mean = f.vec("mean");
    ParamVector var = f.has("variances") ? f.vec("variances") : ParamVector(ParamVector::Ones(mean.size()));
    f.finish();
    require_length(mean.size(), f.path("mean"), dim, dim_field);
    require_length(var.size(), f.path("variances"), dim, dim_field);
    return InitDensity(mean, var);
}

void parse_problem(ExperimentConfig& c, Fields f, const fs::path& base, const RunOverrides& o) {
    c.problem = problem_from_string(f.get<std::string>("kind"), f.path("kind"));
    switch (c.problem) {
        case ProblemKind::quadratic:
            c.curvature = f.get<double>("curvature", 1.0);
            c.noise_std = f.get<double>("noise_std", 0.0);
            c.dim = f.get<int>("dim", 1);
            require_positive(c.curvature, f.path("curvature"));
            if (c.noise_std < 0.0) throw ConfigError(f.path("noise_std") + " must be >= 0");
            if (c.dim < 1) throw ConfigError(f.path("dim") + " must be >= 1");
            break;
        case ProblemKind::mixture:
            if (f.has("truth")) c.mixture.truth = f.vec("truth");
            if (f.has("prior_variances")) c.mixture.prior_variances = f.vec("prior_variances");
            c.mixture.component_variance = f.get<double>("component_variance", c.mixture.component_variance);
            c.mixture.obs_weight = f.get<double>("obs_weight", c.mixture.obs_weight);
            try {
                c.mixture.validate();
            } catch (const ConfigError& e) {
                throw ConfigError(f.path("") + " " + e.what());
            }
            c.dim = 2;
            break;
        case ProblemKind::logistic: {
            std::string data = o.data ? resolve(*o.data, fs::current_path()) : resolve(f.get<std::string>("data"), base);
            f.has("data");
            long long rows = f.get<long long>("rows", 0);
            int features = f.get<int>("features", 0);
            double weight = f.get<double>("obs_weight", 10.0);
            require_positive(weight, f.path("obs_weight"));
            LogisticModel full = load_libsvm(data);
            if (full.rows() == 0) throw ConfigError(f.path("data") + ": no rows in '" + data + "'");
            c.logistic = (rows > 0 || features > 0)
                             ? subsample(full, rows > 0 ? rows : full.rows(), features > 0 ? features : 123)
                             : full;
            c.logistic.obs_weight = weight;
            c.dim = static_cast<int>(c.logistic.dim());
            c.echo["problem"]["data"] = data;
            break;
        }
        case ProblemKind::cmdp:
            if (f.has("model")) {
                std::string model = resolve(f.get<std::string>("model"), base);
                c.cmdp = CmdpModel::from_json_file(model);
                c.echo["problem"]["model"] = model;
            } else {
                c.cmdp = CmdpModel::reference();
            }
            c.cmdp_horizon = f.get<long long>("horizon", c.cmdp_horizon);
            c.cmdp_perturbation = f.get<double>("perturbation", c.cmdp_perturbation);
            c.constraint_tolerance = f.get<double>("constraint_tolerance", c.constraint_tolerance);
            if (c.cmdp_horizon < 1) throw ConfigError(f.path("horizon") + " must be >= 1");
            require_positive(c.cmdp_perturbation, f.path("perturbation"));
            c.dim = c.cmdp.states * (c.cmdp.actions - 1);
            if (c.dim < 1) throw ConfigError(f.path("model") + ": needs at least two actions");
            break;
    }
    f.finish();
}

void parse_agents(ExperimentConfig& c, Fields f) {
    const std::string dim_field = dimension_field(c.problem);
    if (c.problem == ProblemKind::cmdp) {
        c.policy_samples = f.get<long long>("policy_samples");
        if (c.policy_samples < 1) throw ConfigError(f.path("policy_samples") + " must be >= 1");
        f.finish();
        return;
    }
    c.agents.step = f.get<double>("step", c.agents.step);
    c.agents.num_agents = f.get<int>("num_agents", c.agents.num_agents);
    c.agents.run_length = f.get<int>("run_length", c.agents.run_length);
    c.agents.workers = f.get<int>("workers", 1);
    if (f.has("random_run_length")) {
        auto r = f.get<std::vector<int>>("random_run_length");
        if (r.size() != 2) throw ConfigError(f.path("random_run_length") + " must be [min, max]");
        c.agents.random_run_length = std::make_pair(r[0], r[1]);
    }
    c.agents.dim = f.get<int>("dim", c.dim);
    if (c.agents.dim != c.dim)
        throw ConfigError(f.path("dim") + " is " + std::to_string(c.agents.dim) + " but " + dimension_field(c.problem) + " is " +
                          std::to_string(c.dim));
    c.agent_init = f.has("init") ? density_from(f.sub("init"), c.dim, dim_field) : InitDensity::standard(c.dim);
    c.shuffle_stream = f.get<bool>("shuffle", true);
    f.finish();
    try {
        c.agents.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()));
    }
}

void parse_sampler(ExperimentConfig& c, Fields f) {
    const std::string dim_field = dimension_field(c.problem);
    c.variant = variant_from_string(f.get<std::string>("variant"));
    c.num_steps = f.get<long long>("num_steps");
    if (c.num_steps < 0) throw ConfigError(f.path("num_steps") + " must be >= 0");
    SamplerConfig& s = c.sampler;
    s.step = f.get<double>("step", s.step);
    s.beta = f.get<double>("beta", s.beta);
    s.pool_size = f.get<int>("pool_size", s.pool_size);
    s.cond_std = f.get<double>("cond_std", s.cond_std);
    s.burn_in_fraction = f.get<double>("burn_in_fraction", s.burn_in_fraction);
    s.thin = f.get<long long>("thin", s.thin);
    s.init = f.has("init") ? f.vec("init") : ParamVector(ParamVector::Zero(c.dim));
    require_length(s.init.size(), f.path("init"), c.dim, dim_field);
    if (f.has("kernel")) {
        Fields k = f.sub("kernel");
        auto fam = kernel_family_from_string(k.get<std::string>("family", std::string("gaussian")));
        double bw = k.get<double>("bandwidth");
        k.finish();
        s.kernel = Kernel(fam, bw, c.dim);
    }
    if (f.has("init_density")) s.init_density = density_from(f.sub("init_density"), c.dim, dim_field);
    else if (c.agent_init) s.init_density = c.agent_init;
    if (f.has("skew")) {
        auto rows = f.get<std::vector<std::vector<double>>>("skew");
        if (static_cast<int>(rows.size()) != c.dim)
            throw ConfigError(f.path("skew") + " has " + std::to_string(rows.size()) + " rows but " + dimension_field(c.problem) + " is " +
                              std::to_string(c.dim));
        s.skew.resize(c.dim, c.dim);
        for (int i = 0; i < c.dim; ++i) {
            require_length(static_cast<Eigen::Index>(rows[i].size()), f.path("skew") + " row " + std::to_string(i),
                           c.dim, dim_field);
            for (int j = 0; j < c.dim; ++j) s.skew(i, j) = rows[i][j];
        }
    }
    if (f.has("reflect_low") || f.has("reflect_high")) {
        s.reflect_low = f.vec("reflect_low");
        s.reflect_high = f.vec("reflect_high");
        require_length(s.reflect_low.size(), f.path("reflect_low"), c.dim, dim_field);
        require_length(s.reflect_high.size(), f.path("reflect_high"), c.dim, dim_field);
    }
    c.pool_mode = pool_mode_from_string(f.get<std::string>("pool_mode", std::string("resample")));
    if (f.has("passes")) {
        const json& p = f.raw("passes");
        if (p.is_string() && p.get<std::string>() == "auto") c.passes = 0;
        else if (p.is_number_integer() && p.get<long long>() >= 1) c.passes = p.get<long long>();
        else throw ConfigError(f.path("passes") + " must be a positive integer or \"auto\"");
    }
    if (f.has("baseline")) c.baseline = variant_from_string(f.get<std::string>("baseline"));
    f.finish();
    try {
        s.validate(c.variant);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string(e.what()));
    }
    if (c.baseline && required_source(*c.baseline) != SourceKind::oracle)
        throw ConfigError(f.path("baseline") + " must be an oracle variant (classical_langevin or active)");
    if (c.baseline && c.problem == ProblemKind::cmdp)
        throw ConfigError(f.path("baseline") + ": the cmdp problem has no exact gradient oracle");
    if (required_source(c.variant) == SourceKind::oracle && c.problem == ProblemKind::cmdp)
        throw ConfigError(f.path("variant") + ": the cmdp problem only provides recorded gradient samples");
}

void parse_analysis(ExperimentConfig& c, Fields f) {
    if (f.has("grid")) {
        GridSpec g;
        const json& axes = f.raw("grid");
        if (!axes.is_array()) throw ConfigError(f.path("grid") + ": expected an array of axes");
        for (std::size_t i = 0; i < axes.size(); ++i) {
            Fields a(axes[i], f.path("grid") + "[" + std::to_string(i) + "]");
            g.axes.push_back(Axis{a.get<double>("low"), a.get<double>("high"), a.get<int>("bins")});
            a.finish();
        }
        if (g.dim() != c.dim)
            throw ConfigError(f.path("grid") + " has " + std::to_string(g.dim()) + " axes but " + dimension_field(c.problem) + " is " +
                              std::to_string(c.dim));
        g.validate();
        c.grid = g;
    }
    c.mode_threshold = f.get<double>("mode_threshold", c.mode_threshold);
    f.finish();
}

json marginal_stats(const Trajectory& t) {
    json out = json::array();
    for (Eigen::Index d = 0; d < t.dim(); ++d) {
        auto x = t.coordinate(d);
        json m;
        m["mean"] = x.empty() ? 0.0 : mean(x);
        m["variance"] = x.size() > 1 ? variance(x) : 0.0;
        try {
            m["autocorr_time"] = autocorr_time(x);
        } catch (const std::exception&) {
            m["autocorr_time"] = nullptr;
        }
        out.push_back(m);
    }
    return out;
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream os(p);
    if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
    os << s;
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

GradientOracle problem_oracle(const ExperimentConfig& c) {
    switch (c.problem) {
        case ProblemKind::quadratic: return quadratic_oracle(c.curvature, c.noise_std);
        case ProblemKind::mixture: return mixture_oracle(c.mixture);
        case ProblemKind::logistic: return logistic_oracle(c.logistic);
        case ProblemKind::cmdp: break;
    }
    throw ConfigError("problem has no gradient oracle");
}

GradientStream forward_samples(const ExperimentConfig& c, const RngStream& root) {
    if (c.problem == ProblemKind::cmdp) {
        GradientStream s(c.dim);
        RngStream fwd = root.child(1);
        ParamVector a(c.dim);
        for (long long i = 0; i < c.policy_samples; ++i) {
            // policies uniform on the simplex coordinates, mapped to angles
            for (int d = 0; d < c.dim; ++d) a[d] = std::acos(std::sqrt(fwd.uniform()));
            s.push_back(a, spsa_gradient(c.cmdp, a, c.cmdp_horizon, c.cmdp_perturbation, c.cmdp.penalty, fwd));
        }
        return s;
    }
    GradientStream s = run_agent_pool(problem_oracle(c), *c.agent_init, c.agents, root.child(1));
    if (c.shuffle_stream) {
        RngStream r = root.child(2);
        s = s.shuffled(r);
    }
    return s;
}

void write_chain(const fs::path& dir, const std::string& stem, Variant v, const SamplerConfig& s, const Trajectory& t,
                 std::uint64_t seed, long long steps) {
    std::ofstream os(dir / (stem + ".csv"));
    t.write_csv(os);
    write_json(dir / (stem + ".json"), trajectory_metadata(v, s, t, seed, steps));
}

void write_density(const fs::path& p, const EmpiricalDensity& d) {
    std::ofstream os(p);
    d.write_csv(os);
}

}  // namespace

ExperimentConfig parse_experiment(json j, const fs::path& base_dir, const RunOverrides& o) {
    if (!j.is_object()) throw ConfigError("config: expected a JSON object");
    if (!j.contains("schema") || j["schema"] != experiment_schema)
        throw ConfigError(std::string("schema: expected \"") + experiment_schema + "\"");
    if (j.contains("scales")) {
        const json& scales = j["scales"];
        if (o.scale != "desk") {
            if (!scales.contains(o.scale)) throw ConfigError("scales." + o.scale + ": not defined by this config");
            j.merge_patch(scales[o.scale]);
        }
        j.erase("scales");
    } else if (o.scale != "desk") {
        throw ConfigError("scales." + o.scale + ": not defined by this config");
    }
    if (o.seed) j["seed"] = *o.seed;
    if (o.output) j["output"] = *o.output;

    ExperimentConfig c;
    c.echo = j;
    Fields f(j, "");
    f.get<std::string>("schema");
    c.name = f.get<std::string>("name");
    c.seed = f.get<std::uint64_t>("seed", 1);
    c.output = f.get<std::string>("output", "runs/" + c.name);
    parse_problem(c, f.sub("problem"), base_dir, o);
    if (f.has("agents")) parse_agents(c, f.sub("agents"));
    else if (c.problem == ProblemKind::cmdp) throw ConfigError("agents.policy_samples: required field is missing");
    else c.agent_init = InitDensity::standard(c.dim), c.agents.dim = c.dim;
    parse_sampler(c, f.sub("sampler"));
    if (f.has("analysis")) parse_analysis(c, f.sub("analysis"));
    f.finish();
    return c;
}

ExperimentConfig load_experiment(const fs::path& path, const RunOverrides& o, int* chains) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    fs::path base = fs::absolute(path).parent_path();
    if (j.contains("config") && j.contains("library_version")) {
        // a run manifest: the echoed config is already scaled and resolved
        if (chains && j.contains("chains")) *chains = j["chains"].get<int>();
        RunOverrides plain = o;
        plain.scale = "desk";
        return parse_experiment(j["config"], base, plain);
    }
    return parse_experiment(j, base, o);
}

Trajectory load_run_samples(const fs::path& dir, const std::string& prefix) {
    std::vector<Trajectory> parts;
    for (int k = 0;; ++k) {
        fs::path csv = dir / (prefix + "_" + std::to_string(k) + ".csv");
        if (!fs::exists(csv)) break;
        std::ifstream meta_in(dir / (prefix + "_" + std::to_string(k) + ".json"));
        if (!meta_in) throw ConfigError("missing metadata for '" + csv.string() + "'");
        json meta = json::parse(meta_in);
        std::ifstream in(csv);
        std::string line;
        std::getline(in, line);
        const long dim = std::count(line.begin(), line.end(), ',');
        if (dim < 1) throw ConfigError("'" + csv.string() + "' has no coordinate columns");
        Trajectory t(dim);
        ParamVector x(dim);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::replace(line.begin(), line.end(), ',', ' ');
            std::istringstream ls(line);
            long long step;
            ls >> step;
            for (long d = 0; d < dim; ++d) ls >> x[d];
            if (!ls) throw ConfigError("malformed row in '" + csv.string() + "'");
            t.push_back(x);
        }
        t.set_burn_in(meta.at("burn_in").get<std::size_t>());
        parts.push_back(std::move(t));
    }
    if (parts.empty()) throw ConfigError("no " + prefix + "_*.csv files in '" + dir.string() + "'");
    return Trajectory::pool(parts);
}

json run_experiment(const ExperimentConfig& c, const fs::path& out, int chains) {
    if (chains < 1) throw ConfigError("chains must be >= 1");
    fs::create_directories(out);
    fs::remove(out / "FAILED");

    json manifest;
    manifest["schema"] = experiment_schema;
    manifest["library_version"] = library_version;
    manifest["rng_algorithm"] = RngStream::algorithm;
    manifest["seed"] = c.seed;
    manifest["chains"] = chains;
    manifest["config"] = c.echo;
    write_json(out / "manifest.json", manifest);

    try {
        const RngStream root(c.seed);
        json metrics;
        metrics["experiment"] = c.name;
        metrics["problem"] = to_string(c.problem);
        metrics["variant"] = to_string(c.variant);
        metrics["chains"] = chains;
        json warnings = json::array();

        GradientStream stream(c.dim);
        SampleSource source;
        if (required_source(c.variant) == SourceKind::oracle) {
            source = SampleSource::from_oracle(problem_oracle(c));
        } else {
            stream = forward_samples(c, root);
            metrics["forward_samples"] = stream.size();
            long long needed = c.variant == Variant::multikernel && c.pool_mode == PoolMode::sequential
                                   ? c.num_steps * c.sampler.pool_size
                                   : c.num_steps;
            long long passes = c.passes > 0 ? c.passes
                                            : std::max<long long>(1, (needed + static_cast<long long>(stream.size()) - 1) /
                                                                         static_cast<long long>(stream.size()));
            source = c.variant == Variant::multikernel ? SampleSource::pools(stream, c.pool_mode, passes)
                                                       : SampleSource::from_stream(stream, passes);
        }

        std::vector<Trajectory> runs = run_chains(c.variant, source, c.sampler, c.num_steps, root.child(3), chains);
        for (int k = 0; k < chains; ++k)
            write_chain(out, "trajectory_" + std::to_string(k), c.variant, c.sampler, runs[k], c.seed, c.num_steps);
        Trajectory pooled = Trajectory::pool(runs);
        metrics["samples"] = pooled.size();
        metrics["underflow_resets"] = pooled.stats.underflow_resets;
        metrics["marginals"] = marginal_stats(pooled);

        if (c.problem == ProblemKind::quadratic) {
            double target = 1.0 / (c.curvature * c.sampler.beta);
            metrics["target_variance"] = target;
            json rel = json::array();
            for (auto& m : metrics["marginals"]) rel.push_back(m["variance"].get<double>() / target - 1.0);
            metrics["variance_relative_error"] = rel;
        }
        if (c.problem == ProblemKind::cmdp) {
            std::size_t near = 0;
            double cost_sum = 0.0;
            for (std::size_t i = 0; i < pooled.size(); ++i) {
                double b = stationary_joint(c.cmdp, spherical_to_policy(pooled.sample(i), c.cmdp.states, c.cmdp.actions))
                               .cost;
                cost_sum += b;
                near += std::abs(b - c.cmdp.bound) < c.constraint_tolerance;
            }
            const double n = static_cast<double>(std::max<std::size_t>(pooled.size(), 1));
            metrics["near_constraint_fraction"] = static_cast<double>(near) / n;
            metrics["constraint_tolerance"] = c.constraint_tolerance;
            metrics["mean_constraint_cost"] = cost_sum / n;
        }

        std::optional<EmpiricalDensity> density;
        if (c.grid) {
            density = build_density(pooled, *c.grid);
            write_density(out / "density.csv", *density);
            metrics["out_of_range_fraction"] = density->out_of_range_fraction;
            if (density->out_of_range_fraction >= 1.0) warnings.push_back("every sample fell outside the analysis grid");
            json modes = json::array();
            for (auto& m : local_modes(*density, c.mode_threshold)) {
                json p = json::array();
                for (int d = 0; d < c.grid->dim(); ++d) p.push_back(c.grid->axes[d].center(m[d]));
                modes.push_back(p);
            }
            metrics["modes"] = modes;
        }

        if (c.baseline) {
            std::vector<Trajectory> base = run_chains(*c.baseline, SampleSource::from_oracle(problem_oracle(c)),
                                                      c.sampler, c.num_steps, root.child(4), chains);
            for (int k = 0; k < chains; ++k)
                write_chain(out, "baseline_" + std::to_string(k), *c.baseline, c.sampler, base[k], c.seed, c.num_steps);
            Trajectory bp = Trajectory::pool(base);
            json b;
            b["variant"] = to_string(*c.baseline);
            b["marginals"] = marginal_stats(bp);
            json w1 = json::array();
            for (Eigen::Index d = 0; d < c.dim; ++d) w1.push_back(wasserstein1(Ecdf(pooled.coordinate(d)), Ecdf(bp.coordinate(d))));
            b["w1"] = w1;
            if (density) {
                EmpiricalDensity bd = build_density(bp, *c.grid);
                write_density(out / "baseline_density.csv", bd);
                json vd = json::object();
                for (int d = 0; d < c.grid->dim(); ++d)
                    vd["d(" + std::to_string(d + 1) + ")"] = variational_distance(density->marginal(d), bd.marginal(d));
                b["variational_distance"] = vd;
            }
            metrics["baseline"] = b;
        }
        metrics["warnings"] = warnings;
        write_json(out / "metrics.json", metrics);
        return metrics;
    } catch (const std::exception& e) {
        write_text(out / "FAILED", std::string(e.what()) + "\n");
        throw;
    }
}

json compare_runs(const fs::path& a, const fs::path& b) {
    Trajectory ta = load_run_samples(a), tb = load_run_samples(b);
    if (ta.dim() != tb.dim())
        throw ConfigError("dimension mismatch: '" + a.string() + "' has " + std::to_string(ta.dim()) + ", '" +
                          b.string() + "' has " + std::to_string(tb.dim()));
    json out;
    out["runs"] = {a.string(), b.string()};
    out["dimension"] = ta.dim();
    std::vector<double> w1, vd;
    for (Eigen::Index d = 0; d < ta.dim(); ++d) {
        auto xa = ta.coordinate(d), xb = tb.coordinate(d);
        if (xa.empty() || xb.empty()) throw ConfigError("run without post-burn-in samples");
        w1.push_back(wasserstein1(Ecdf(xa), Ecdf(xb)));
        auto [lo_a, hi_a] = std::minmax_element(xa.begin(), xa.end());
        auto [lo_b, hi_b] = std::minmax_element(xb.begin(), xb.end());
        double lo = std::min(*lo_a, *lo_b), hi = std::max(*hi_a, *hi_b);
        if (!(hi > lo)) hi = lo + 1.0;
        Axis ax{lo, hi, 50};
        vd.push_back(variational_distance(build_density(xa, ax), build_density(xb, ax)));
    }
    auto summary = [](std::vector<double> v) {
        json s;
        s["mean"] = mean(v);
        s["max"] = *std::max_element(v.begin(), v.end());
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        s["median"] = n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
        return s;
    };
    out["w1"] = w1;
    out["w1_summary"] = summary(w1);
    out["variational_distance"] = vd;
    out["variational_distance_summary"] = summary(vd);
    out["histogram_bins"] = 50;
    return out;
}

}  // namespace plirl
