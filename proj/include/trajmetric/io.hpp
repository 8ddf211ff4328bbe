#pragma once

#include <trajmetric/core.hpp>
#include <trajmetric/metric.hpp>
#include <trajmetric/scenario.hpp>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace trajmetric::io {

using Json = nlohmann::json;

/// Malformed JSON text; line and column are 1-based.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : std::runtime_error("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
                             ": " + what),
          line_(line), column_(column), message_(what) {}

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }
    /// Description without the position prefix.
    const std::string& message() const noexcept { return message_; }

private:
    std::size_t line_;
    std::size_t column_;
    std::string message_;
};

/// Well-formed JSON that violates the document schema or a domain constraint.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string path, const std::string& what)
        : std::runtime_error(path + ": " + what), path_(std::move(path)) {}

    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

inline Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte is the 1-based offset of the offending character.
        const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        std::string what = e.what();
        if (const auto pos = what.find(": "); pos != std::string::npos) what = what.substr(pos + 2);
        throw ParseError(line, column, what);
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes through a temporary file and a rename, so readers never see a
/// partially written file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out.flush()) throw std::runtime_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

inline const Json& field(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) throw ValidationError(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw ValidationError(path + "." + key, "missing required field");
    return *it;
}

inline double number(const Json& v, const std::string& path) {
    if (!v.is_number()) throw ValidationError(path, "expected a number");
    return v.get<double>();
}

inline int integer(const Json& v, const std::string& path) {
    if (!v.is_number_integer()) throw ValidationError(path, "expected an integer");
    const auto x = v.get<long long>();
    if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) {
        throw ValidationError(path, "integer out of range");
    }
    return static_cast<int>(x);
}

inline const Json& array(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ValidationError(path, "expected an array");
    return v;
}

inline StateVector vector(const Json& v, const std::string& path) {
    array(v, path);
    StateVector out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        out(static_cast<Eigen::Index>(i)) = number(v[i], path + "[" + std::to_string(i) + "]");
    }
    return out;
}

inline Matrix matrix(const Json& v, const std::string& path) {
    array(v, path);
    const auto rows = static_cast<Eigen::Index>(v.size());
    Matrix out(rows, rows == 0 ? 0 : static_cast<Eigen::Index>(array(v[0], path + "[0]").size()));
    for (Eigen::Index r = 0; r < rows; ++r) {
        const std::string rp = path + "[" + std::to_string(r) + "]";
        const auto& row = array(v[static_cast<std::size_t>(r)], rp);
        if (static_cast<Eigen::Index>(row.size()) != out.cols()) throw ValidationError(rp, "ragged matrix row");
        for (Eigen::Index c = 0; c < out.cols(); ++c) {
            out(r, c) = number(row[static_cast<std::size_t>(c)], rp + "[" + std::to_string(c) + "]");
        }
    }
    return out;
}

template <class F>
auto guarded(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const DomainError& e) {
        throw ValidationError(path, e.what());
    }
}

inline Json vector_json(const StateVector& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

inline Json matrix_json(const Matrix& m) {
    Json out = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

inline BernoulliDensity step_from_json(const Json& v, const std::string& path, std::optional<Eigen::Index> dim) {
    double r = 1.0;
    if (v.is_object() && v.contains("existence")) r = number(v["existence"], path + ".existence");
    StateVector mean = vector(field(v, "mean", path), path + ".mean");
    if (dim && mean.size() != *dim) {
        throw ValidationError(path + ".mean", "expected " + std::to_string(*dim) + " coordinates, got " +
                                                  std::to_string(mean.size()));
    }
    if (v.contains("covariance") && !v["covariance"].is_null()) {
        Matrix cov = matrix(v["covariance"], path + ".covariance");
        return guarded(path, [&] { return BernoulliDensity(r, GaussianDensity(std::move(mean), std::move(cov))); });
    }
    return guarded(path, [&] { return BernoulliDensity(r, DiracDensity(std::move(mean))); });
}

inline SequenceSet sequences_from_json(const Json& v, const std::string& path, int window,
                                       std::optional<Eigen::Index> dim) {
    array(v, path);
    std::vector<BernoulliSequence> seqs;
    for (std::size_t s = 0; s < v.size(); ++s) {
        const std::string sp = path + "[" + std::to_string(s) + "]";
        const int start = integer(field(v[s], "start_time", sp), sp + ".start_time");
        const auto& steps = array(field(v[s], "steps", sp), sp + ".steps");
        std::vector<BernoulliDensity> dens;
        for (std::size_t k = 0; k < steps.size(); ++k) {
            dens.push_back(step_from_json(steps[k], sp + ".steps[" + std::to_string(k) + "]", dim));
        }
        seqs.push_back(guarded(sp, [&] { return BernoulliSequence(start, std::move(dens)); }));
        if (seqs.back().end_time() > window) {
            throw ValidationError(sp, "sequence ends at step " + std::to_string(seqs.back().end_time()) +
                                          ", after window_length " + std::to_string(window));
        }
    }
    return guarded(path, [&] { return SequenceSet(window, std::move(seqs)); });
}

inline Json sequences_json(const SequenceSet& set) {
    Json out = Json::array();
    for (const auto& s : set.sequences()) {
        Json steps = Json::array();
        for (const auto& b : s.densities()) {
            Json step;
            step["existence"] = b.existence();
            step["mean"] = vector_json(mean_of(b.density()));
            if (const auto* g = std::get_if<GaussianDensity>(&b.density())) step["covariance"] = matrix_json(g->covariance());
            steps.push_back(std::move(step));
        }
        out.push_back(Json{{"start_time", s.start_time()}, {"steps", std::move(steps)}});
    }
    return out;
}

} // namespace detail

/// Truth or estimate file: sequences over a window plus optional weighted
/// global hypotheses. Omitted covariance means a Dirac, omitted existence 1.
struct InputDocument {
    int window_length = 1;
    std::optional<Eigen::Index> state_dimension;
    SequenceSet sequences{1};
    std::vector<std::pair<double, SequenceSet>> hypotheses;
};

inline InputDocument input_from_json(const Json& root) {
    const std::string path = "$";
    InputDocument doc;
    doc.window_length = detail::integer(detail::field(root, "window_length", path), "$.window_length");
    if (doc.window_length < 1) throw ValidationError("$.window_length", "must be >= 1");
    if (root.contains("state_dimension")) {
        const int d = detail::integer(root["state_dimension"], "$.state_dimension");
        if (d < 1) throw ValidationError("$.state_dimension", "must be >= 1");
        doc.state_dimension = d;
    }
    doc.sequences = detail::sequences_from_json(detail::field(root, "sequences", path), "$.sequences",
                                                doc.window_length, doc.state_dimension);
    if (root.contains("hypotheses")) {
        const auto& hs = detail::array(root["hypotheses"], "$.hypotheses");
        for (std::size_t h = 0; h < hs.size(); ++h) {
            const std::string hp = "$.hypotheses[" + std::to_string(h) + "]";
            const double w = detail::number(detail::field(hs[h], "weight", hp), hp + ".weight");
            doc.hypotheses.emplace_back(w, detail::sequences_from_json(detail::field(hs[h], "sequences", hp),
                                                                       hp + ".sequences", doc.window_length,
                                                                       doc.state_dimension));
        }
    }
    return doc;
}

inline InputDocument input_from_text(const std::string& text) { return input_from_json(parse_json(text)); }

inline Json input_to_json(const InputDocument& doc) {
    Json out;
    out["window_length"] = doc.window_length;
    if (doc.state_dimension) out["state_dimension"] = *doc.state_dimension;
    out["sequences"] = detail::sequences_json(doc.sequences);
    if (!doc.hypotheses.empty()) {
        Json hs = Json::array();
        for (const auto& [w, s] : doc.hypotheses) hs.push_back(Json{{"weight", w}, {"sequences", detail::sequences_json(s)}});
        out["hypotheses"] = std::move(hs);
    }
    return out;
}

inline InputDocument make_input(const SequenceSet& set) {
    InputDocument doc;
    doc.window_length = set.window_length();
    doc.state_dimension = set.dimension();
    doc.sequences = set;
    return doc;
}

/// Metric result as written by the CLI. Numbers round-trip exactly.
struct ReportDocument {
    std::string metric = "ptgospa";
    MetricParams params{};
    BaseMetricKind base = BaseMetricKind::wasserstein2;
    MetricReport report;
    /// Weighted sum over the estimate's hypotheses, when it has any.
    std::optional<double> weighted_total;
    bool include_weights = false;
};

inline Json report_to_json(const ReportDocument& doc) {
    Json out;
    out["metric"] = doc.metric;
    out["params"] = Json{{"cutoff", doc.params.cutoff}, {"order", doc.params.order},
                         {"switch_cost", doc.params.switch_cost}};
    out["base"] = std::string(to_string(doc.base));
    out["solver"] = std::string(to_string(doc.report.solver));
    out["total"] = doc.report.total;
    if (doc.weighted_total) out["weighted_total"] = *doc.weighted_total;
    Json steps = Json::array();
    for (std::size_t k = 0; k < doc.report.per_step.size(); ++k) {
        const auto& s = doc.report.per_step[k];
        steps.push_back(Json{{"time_step", k + 1},
                             {"localization", s.expected_localization},
                             {"existence_mismatch", s.existence_mismatch},
                             {"missed", s.expected_missed},
                             {"false", s.expected_false},
                             {"switch", s.switch_to_next ? Json(*s.switch_to_next) : Json(nullptr)}});
    }
    out["per_step"] = std::move(steps);
    if (doc.include_weights) {
        Json ws = Json::array();
        for (const auto& w : doc.report.weights) ws.push_back(detail::matrix_json(w.entries));
        out["weights"] = std::move(ws);
    }
    return out;
}

inline ReportDocument report_from_json(const Json& root) {
    ReportDocument doc;
    const auto str = [&](const char* key) {
        const auto& v = detail::field(root, key, "$");
        if (!v.is_string()) throw ValidationError(std::string("$.") + key, "expected a string");
        return v.get<std::string>();
    };
    doc.metric = str("metric");
    const auto& params = detail::field(root, "params", "$");
    doc.params.cutoff = detail::number(detail::field(params, "cutoff", "$.params"), "$.params.cutoff");
    doc.params.order = detail::number(detail::field(params, "order", "$.params"), "$.params.order");
    doc.params.switch_cost = detail::number(detail::field(params, "switch_cost", "$.params"), "$.params.switch_cost");
    detail::guarded("$.params", [&] { doc.params.validate(); });
    const std::string base = str("base");
    if (base == "wasserstein2") {
        doc.base = BaseMetricKind::wasserstein2;
    } else if (base == "euclidean") {
        doc.base = BaseMetricKind::euclidean_means;
    } else {
        throw ValidationError("$.base", "unknown base metric '" + base + "'");
    }
    const std::string solver = str("solver");
    if (solver != "exact" && solver != "lp") throw ValidationError("$.solver", "unknown solver '" + solver + "'");
    doc.report.solver = solver == "exact" ? SolverKind::exact : SolverKind::lp;
    doc.report.order = doc.params.order;
    doc.report.total = detail::number(detail::field(root, "total", "$"), "$.total");
    if (root.contains("weighted_total")) doc.weighted_total = detail::number(root["weighted_total"], "$.weighted_total");
    const auto& steps = detail::array(detail::field(root, "per_step", "$"), "$.per_step");
    for (std::size_t k = 0; k < steps.size(); ++k) {
        const std::string sp = "$.per_step[" + std::to_string(k) + "]";
        StepDecomposition s;
        const int t = detail::integer(detail::field(steps[k], "time_step", sp), sp + ".time_step");
        if (t != static_cast<int>(k) + 1) throw ValidationError(sp + ".time_step", "expected " + std::to_string(k + 1));
        s.expected_localization = detail::number(detail::field(steps[k], "localization", sp), sp + ".localization");
        s.existence_mismatch =
            detail::number(detail::field(steps[k], "existence_mismatch", sp), sp + ".existence_mismatch");
        s.expected_missed = detail::number(detail::field(steps[k], "missed", sp), sp + ".missed");
        s.expected_false = detail::number(detail::field(steps[k], "false", sp), sp + ".false");
        const auto& sw = detail::field(steps[k], "switch", sp);
        if (!sw.is_null()) s.switch_to_next = detail::number(sw, sp + ".switch");
        doc.report.per_step.push_back(s);
    }
    if (root.contains("weights")) {
        doc.include_weights = true;
        const auto& ws = detail::array(root["weights"], "$.weights");
        for (std::size_t k = 0; k < ws.size(); ++k) {
            doc.report.weights.push_back(WeightMatrix{detail::matrix(ws[k], "$.weights[" + std::to_string(k) + "]")});
        }
    }
    return doc;
}

inline ScenarioConfig config_from_json(const Json& root) {
    ScenarioConfig cfg;
    cfg.window_length = detail::integer(detail::field(root, "window_length", "$"), "$.window_length");
    if (root.contains("sampling_period")) cfg.sampling_period = detail::number(root["sampling_period"], "$.sampling_period");
    const auto ints = [&](const char* key) {
        const std::string p = std::string("$.") + key;
        const auto& a = detail::array(detail::field(root, key, "$"), p);
        std::vector<int> out;
        for (std::size_t i = 0; i < a.size(); ++i) out.push_back(detail::integer(a[i], p + "[" + std::to_string(i) + "]"));
        return out;
    };
    cfg.birth_times = ints("birth_times");
    cfg.death_times = ints("death_times");
    const auto& init = detail::array(detail::field(root, "initial_states", "$"), "$.initial_states");
    for (std::size_t i = 0; i < init.size(); ++i) {
        cfg.initial_states.push_back(detail::vector(init[i], "$.initial_states[" + std::to_string(i) + "]"));
    }
    if (root.contains("process_noise_std")) cfg.process_noise_std = detail::number(root["process_noise_std"], "$.process_noise_std");
    if (root.contains("detection_prob")) cfg.detection_prob = detail::number(root["detection_prob"], "$.detection_prob");
    if (root.contains("perturbation_std")) cfg.perturbation_std = detail::number(root["perturbation_std"], "$.perturbation_std");
    if (root.contains("existence")) {
        const auto& ex = root["existence"];
        const auto& model = detail::field(ex, "model", "$.existence");
        if (model == "hold_high") {
            cfg.existence_model = ExistenceModel::hold_high;
        } else if (model == "decay_after_death") {
            cfg.existence_model = ExistenceModel::decay_after_death;
        } else {
            throw ValidationError("$.existence.model", "expected \"hold_high\" or \"decay_after_death\"");
        }
        if (ex.contains("level")) cfg.existence_level = detail::number(ex["level"], "$.existence.level");
        if (ex.contains("rate")) cfg.decay_rate = detail::number(ex["rate"], "$.existence.rate");
        if (ex.contains("floor")) cfg.existence_floor = detail::number(ex["floor"], "$.existence.floor");
    }
    if (root.contains("swap_injections")) {
        const auto& sw = detail::array(root["swap_injections"], "$.swap_injections");
        for (std::size_t s = 0; s < sw.size(); ++s) {
            const std::string sp = "$.swap_injections[" + std::to_string(s) + "]";
            SwapInjection w;
            w.time = detail::integer(detail::field(sw[s], "time", sp), sp + ".time");
            const auto& objs = detail::array(detail::field(sw[s], "objects", sp), sp + ".objects");
            if (objs.size() != 2) throw ValidationError(sp + ".objects", "expected two object indices");
            w.first = detail::integer(objs[0], sp + ".objects[0]");
            w.second = detail::integer(objs[1], sp + ".objects[1]");
            cfg.swap_injections.push_back(w);
        }
    }
    if (root.contains("seed")) {
        const auto& s = root["seed"];
        if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
            throw ValidationError("$.seed", "expected a non-negative integer");
        }
        cfg.seed = s.get<std::uint64_t>();
    }
    // Map constraint violations to the field named at the start of the message.
    try {
        cfg.validate();
    } catch (const DomainError& e) {
        const std::string what = e.what();
        const auto colon = what.find(':');
        throw ValidationError(colon == std::string::npos ? "$" : "$." + what.substr(0, colon),
                              colon == std::string::npos ? what : what.substr(colon + 2));
    }
    return cfg;
}

inline Json config_to_json(const ScenarioConfig& cfg) {
    Json out;
    out["window_length"] = cfg.window_length;
    out["sampling_period"] = cfg.sampling_period;
    out["birth_times"] = cfg.birth_times;
    out["death_times"] = cfg.death_times;
    Json init = Json::array();
    for (const auto& x : cfg.initial_states) init.push_back(detail::vector_json(x));
    out["initial_states"] = std::move(init);
    out["process_noise_std"] = cfg.process_noise_std;
    out["detection_prob"] = cfg.detection_prob;
    Json ex{{"model", std::string(to_string(cfg.existence_model))}, {"level", cfg.existence_level}};
    if (cfg.existence_model == ExistenceModel::decay_after_death) {
        ex["rate"] = cfg.decay_rate;
        ex["floor"] = cfg.existence_floor;
    }
    out["existence"] = std::move(ex);
    out["perturbation_std"] = cfg.perturbation_std;
    Json sw = Json::array();
    for (const auto& w : cfg.swap_injections) sw.push_back(Json{{"time", w.time}, {"objects", {w.first, w.second}}});
    out["swap_injections"] = std::move(sw);
    out["seed"] = cfg.seed;
    return out;
}

inline constexpr const char* kCurvesHeader = "time_step,total,localization,existence_mismatch,missed,false,switch";

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Plot-ready CSV: one row per time step, LF line endings, 17 significant
/// digits. The switch column of the last step is 0.
inline std::string curves_csv(const AggregateSeries& s) {
    std::string out = std::string(kCurvesHeader) + "\n";
    for (std::size_t k = 0; k < s.total.size(); ++k) {
        out += std::to_string(k + 1);
        for (double v : {s.total[k], s.localization[k], s.existence_mismatch[k], s.missed[k], s.false_det[k],
                         k < s.switch_cost.size() ? s.switch_cost[k] : 0.0}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

} // namespace trajmetric::io
