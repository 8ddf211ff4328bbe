// Command-line front end: compute metrics between JSON documents, simulate
// scenarios and aggregate per-step curves.

#include <trajmetric/io.hpp>
#include <trajmetric/metric.hpp>
#include <trajmetric/scenario.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace trajmetric;

namespace {

enum Exit { ok = 0, failure = 1, parse_failure = 2, invalid = 3, capacity = 4 };

struct MetricFlags {
    std::string metric = "ptgospa";
    std::string solver = "lp";
    double c = 10.0;
    double p = 2.0;
    double gamma = 2.0;
    std::string base = "wasserstein2";
    bool emit_weights = false;
    double threshold = 0.5;
    std::size_t max_states = ExactSolverOptions{}.max_states;

    void add_to(CLI::App& app, bool with_metric) {
        if (with_metric) {
            app.add_option("--metric", metric, "ptgospa | tgospa | gospa | pgospa")
                ->check(CLI::IsMember({"ptgospa", "tgospa", "gospa", "pgospa"}))
                ->capture_default_str();
        }
        app.add_option("--solver", solver, "exact | lp")->check(CLI::IsMember({"exact", "lp"}))->capture_default_str();
        app.add_option("--c", c, "cut-off")->capture_default_str();
        app.add_option("--p", p, "order")->capture_default_str();
        app.add_option("--gamma", gamma, "switching cost")->capture_default_str();
        app.add_option("--base", base, "wasserstein2 | euclidean")
            ->check(CLI::IsMember({"wasserstein2", "euclidean"}))
            ->capture_default_str();
        app.add_flag("--emit-weights", emit_weights, "include optimal assignment weights in reports");
        app.add_option("--threshold", threshold, "existence threshold for point estimates (tgospa)")
            ->capture_default_str();
        app.add_option("--max-states", max_states, "state cap of the exact solver")->capture_default_str();
    }

    MetricParams params() const {
        MetricParams m{c, p, gamma};
        m.validate();
        return m;
    }
    BaseMetricKind kind() const {
        return base == "euclidean" ? BaseMetricKind::euclidean_means : BaseMetricKind::wasserstein2;
    }
    PtgospaOptions options() const {
        PtgospaOptions o;
        o.solver = solver == "exact" ? SolverKind::exact : SolverKind::lp;
        o.exact.max_states = max_states;
        return o;
    }
};

io::InputDocument load_input(const std::string& path) {
    const auto text = io::read_file(path);
    try {
        return io::input_from_text(text);
    } catch (const io::ParseError& e) {
        throw io::ParseError(e.line(), e.column(), e.message() + " (" + path + ")");
    } catch (const io::ValidationError& e) {
        throw io::ValidationError(path + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
    }
}

io::ReportDocument evaluate(const SequenceSet& truth, const SequenceSet& estimate, const MetricFlags& f) {
    io::ReportDocument doc;
    doc.metric = f.metric;
    doc.params = f.params();
    doc.base = f.kind();
    doc.include_weights = f.emit_weights;
    if (f.metric == "ptgospa") {
        doc.report = ptgospa(truth, estimate, doc.params, doc.base, f.options());
    } else if (f.metric == "tgospa") {
        doc.report = ptgospa(point_estimates(truth, f.threshold), point_estimates(estimate, f.threshold), doc.params,
                             doc.base, f.options());
    } else {
        doc.report = stepwise_set_metric(truth, estimate, doc.params, doc.base, f.metric == "gospa");
    }
    return doc;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
    } else {
        io::write_file_atomic(path, content);
    }
}

int cmd_compute(const std::string& truth_path, const std::string& estimate_path, const MetricFlags& f,
                const std::string& output) {
    const auto truth = load_input(truth_path);
    const auto estimate = load_input(estimate_path);
    if (truth.window_length != estimate.window_length) {
        throw io::ValidationError(estimate_path + ":$.window_length",
                                  "differs from the truth window (" + std::to_string(truth.window_length) + ")");
    }
    auto doc = evaluate(truth.sequences, estimate.sequences, f);
    if (!estimate.hypotheses.empty()) {
        double weighted = 0.0;
        try {
            HypothesisMixture mix(estimate.hypotheses);
            for (const auto& [w, est] : mix.hypotheses()) weighted += w * evaluate(truth.sequences, est, f).report.total;
        } catch (const DomainError& e) {
            throw io::ValidationError(estimate_path + ":$.hypotheses", e.what());
        }
        doc.weighted_total = weighted;
    }
    write_output(output, io::report_to_json(doc).dump(2) + "\n");
    return ok;
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir, int runs, bool runs_given, int jobs,
                 bool with_tgospa, const MetricFlags& f) {
    if (runs_given && runs < 1) throw io::ValidationError("--runs", "must be >= 1");
    if (jobs < 1) throw io::ValidationError("--jobs", "must be >= 1");
    ScenarioConfig cfg;
    try {
        cfg = io::config_from_json(io::parse_json(io::read_file(config_path)));
    } catch (const io::ValidationError& e) {
        throw io::ValidationError(config_path + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
    }
    if (const char* env = std::getenv("TRAJMETRIC_SEED")) {
        try {
            std::size_t used = 0;
            const auto s = std::stoull(env, &used);
            if (used != std::string(env).size()) throw std::invalid_argument(env);
            cfg.seed = s;
        } catch (const std::exception&) {
            throw io::ValidationError("TRAJMETRIC_SEED", "expected a non-negative integer");
        }
    }

    fs::create_directories(out_dir);
    const auto truth = generate_truth(cfg);
    const auto estimate = generate_estimates(truth, cfg);
    io::write_file_atomic(fs::path(out_dir) / "truth.json", io::input_to_json(io::make_input(truth)).dump(2) + "\n");
    io::write_file_atomic(fs::path(out_dir) / "estimate.json",
                          io::input_to_json(io::make_input(estimate)).dump(2) + "\n");
    if (!runs_given) return ok;

    MonteCarloOptions opt;
    opt.runs = runs;
    opt.jobs = jobs;
    opt.with_tgospa = with_tgospa;
    opt.params = f.params();
    opt.kind = f.kind();
    opt.metric = f.options();
    const auto results = run_monte_carlo(cfg, opt);

    const fs::path pt_dir = fs::path(out_dir) / "runs" / "ptgospa";
    const fs::path tg_dir = fs::path(out_dir) / "runs" / "tgospa";
    fs::create_directories(pt_dir);
    if (with_tgospa) fs::create_directories(tg_dir);
    std::vector<RunSeries> pt_series, tg_series;
    for (std::size_t r = 0; r < results.size(); ++r) {
        char name[32];
        std::snprintf(name, sizeof name, "run_%04zu.json", r);
        io::ReportDocument doc;
        doc.params = opt.params;
        doc.base = opt.kind;
        doc.include_weights = f.emit_weights;
        doc.metric = "ptgospa";
        doc.report = results[r].ptgospa;
        io::write_file_atomic(pt_dir / name, io::report_to_json(doc).dump(2) + "\n");
        pt_series.push_back(series_from_report(results[r].ptgospa));
        if (with_tgospa) {
            doc.metric = "tgospa";
            doc.report = *results[r].tgospa;
            io::write_file_atomic(tg_dir / name, io::report_to_json(doc).dump(2) + "\n");
            tg_series.push_back(series_from_report(*results[r].tgospa));
        }
    }
    io::write_file_atomic(fs::path(out_dir) / "ptgospa_curves.csv", io::curves_csv(aggregate_rms(pt_series)));
    if (with_tgospa) {
        io::write_file_atomic(fs::path(out_dir) / "tgospa_curves.csv", io::curves_csv(aggregate_rms(tg_series)));
    }
    return ok;
}

int cmd_curves(const std::vector<std::string>& inputs, const std::string& output) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::directory_iterator(in)) {
                if (e.is_regular_file() && e.path().extension() == ".json") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.emplace_back(in);
        }
    }
    if (files.empty()) throw io::ValidationError("inputs", "no report files found");

    std::vector<RunSeries> series;
    std::size_t window = 0;
    for (const auto& file : files) {
        io::ReportDocument doc;
        try {
            doc = io::report_from_json(io::parse_json(io::read_file(file)));
        } catch (const io::ValidationError& e) {
            throw io::ValidationError(file.string() + ":" + e.path(), std::string(e.what()).substr(e.path().size() + 2));
        }
        const std::size_t k = doc.report.per_step.size();
        if (series.empty()) {
            window = k;
        } else if (k != window) {
            throw io::ValidationError(file.string() + ":$.per_step", "window length " + std::to_string(k) +
                                                                       " differs from " + std::to_string(window));
        }
        series.push_back(series_from_report(doc.report));
    }
    write_output(output, io::curves_csv(aggregate_rms(series)));
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trajectory metrics for Bernoulli-sequence estimates (PTGOSPA, TGOSPA, GOSPA, PGOSPA)"};
    app.require_subcommand(1);

    MetricFlags compute_flags;
    std::string truth_path, estimate_path, compute_out;
    auto* compute = app.add_subcommand("compute", "evaluate a metric between a truth and an estimate file");
    compute->add_option("truth", truth_path, "truth document (JSON)")->required();
    compute->add_option("estimate", estimate_path, "estimate document (JSON)")->required();
    compute->add_option("-o,--output", compute_out, "report path (default: stdout)");
    compute_flags.add_to(*compute, true);

    MetricFlags sim_flags;
    std::string config_path, out_dir;
    int runs = 0, jobs = 1;
    bool with_tgospa = false;
    auto* simulate = app.add_subcommand("simulate", "generate truth/estimate documents and Monte Carlo reports");
    simulate->add_option("config", config_path, "scenario config (JSON)")->required();
    simulate->add_option("-o,--out", out_dir, "output directory")->required();
    auto* runs_opt = simulate->add_option("--runs", runs, "Monte Carlo runs (seeds seed, seed+1, ...)");
    simulate->add_option("--jobs", jobs, "concurrent runs")->capture_default_str();
    simulate->add_flag("--tgospa", with_tgospa, "also report TGOSPA on estimates thresholded at existence 0.5");
    sim_flags.add_to(*simulate, false);

    std::vector<std::string> curve_inputs;
    std::string curves_out;
    auto* curves = app.add_subcommand("curves", "per-step CSV from reports (RMS over several)");
    curves->add_option("inputs", curve_inputs, "report files or directories of reports")->required();
    curves->add_option("-o,--output", curves_out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return invalid;
    }

    try {
        if (*compute) return cmd_compute(truth_path, estimate_path, compute_flags, compute_out);
        if (*simulate) {
            return cmd_simulate(config_path, out_dir, runs, runs_opt->count() > 0, jobs, with_tgospa, sim_flags);
        }
        if (*curves) return cmd_curves(curve_inputs, curves_out);
    } catch (const io::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return parse_failure;
    } catch (const io::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    } catch (const DomainError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return invalid;
    } catch (const CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return capacity;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return failure;
    }
    return failure;
}
