#pragma once

#include <trajmetric/core.hpp>
#include <trajmetric/error.hpp>
#include <trajmetric/metric.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

namespace trajmetric {

/// Random streams. Every (purpose, object, step) triple owns an independent
/// std::mt19937_64 whose seed is a splitmix64 chain over
/// (seed, purpose, object, step). Normals use Box-Muller on 53-bit uniforms,
/// so traces are reproducible across standard libraries.
namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

enum class Purpose : std::uint64_t { truth_noise = 1, detection = 2, estimate_noise = 3 };

class Stream {
public:
    Stream(std::uint64_t seed, Purpose purpose, std::uint64_t object, std::uint64_t step) {
        std::uint64_t s = splitmix64(seed);
        s = splitmix64(s ^ static_cast<std::uint64_t>(purpose));
        s = splitmix64(s ^ object);
        s = splitmix64(s ^ step);
        engine_.seed(s);
    }

    /// Uniform on [0, 1).
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double normal() {
        if (spare_) {
            const double z = *spare_;
            spare_.reset();
            return z;
        }
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        return r * std::cos(a);
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

} // namespace rng

enum class ExistenceModel { hold_high, decay_after_death };

inline std::string_view to_string(ExistenceModel m) {
    return m == ExistenceModel::hold_high ? "hold_high" : "decay_after_death";
}

struct SwapInjection {
    int time = 1;
    int first = 0;
    int second = 1;
};

/// Synthetic scenario: constant-velocity objects in 2-D with state
/// [px, py, vx, vy], plus a parametric surrogate for a tracker's output.
struct ScenarioConfig {
    int window_length = 81;
    double sampling_period = 1.0;
    std::vector<int> birth_times;
    /// Last time step at which each object exists.
    std::vector<int> death_times;
    std::vector<StateVector> initial_states;
    double process_noise_std = 0.3;
    double detection_prob = 0.7;
    ExistenceModel existence_model = ExistenceModel::hold_high;
    /// Existence probability of estimates at detected steps.
    double existence_level = 0.95;
    /// Geometric decay per step without detection (decay model only).
    double decay_rate = 0.6;
    /// Coasting stops once the decayed existence reaches this floor.
    double existence_floor = 0.01;
    double perturbation_std = 1.0;
    std::vector<SwapInjection> swap_injections;
    std::uint64_t seed = 1;

    std::size_t num_objects() const { return birth_times.size(); }

    void validate() const {
        detail::require(window_length >= 1, "window_length: must be >= 1");
        detail::require(std::isfinite(sampling_period) && sampling_period > 0.0, "sampling_period: must be > 0");
        detail::require(death_times.size() == birth_times.size() && initial_states.size() == birth_times.size(),
                        "birth_times, death_times and initial_states must have equal length");
        for (std::size_t i = 0; i < birth_times.size(); ++i) {
            const std::string at = "[" + std::to_string(i) + "]";
            detail::require(birth_times[i] >= 1 && birth_times[i] <= death_times[i] &&
                                death_times[i] <= window_length,
                            "birth_times" + at + "/death_times" + at + ": need 1 <= birth <= death <= window_length");
            detail::require(initial_states[i].size() == 4 && initial_states[i].allFinite(),
                            "initial_states" + at + ": expected 4 finite values [px, py, vx, vy]");
        }
        detail::require(std::isfinite(process_noise_std) && process_noise_std >= 0.0,
                        "process_noise_std: must be >= 0");
        detail::require(detection_prob >= 0.0 && detection_prob <= 1.0, "detection_prob: must be in [0, 1]");
        detail::require(existence_level > 0.0 && existence_level <= 1.0, "existence.level: must be in (0, 1]");
        detail::require(decay_rate > 0.0 && decay_rate < 1.0, "existence.rate: must be in (0, 1)");
        detail::require(existence_floor > 0.0 && existence_floor < 1.0, "existence.floor: must be in (0, 1)");
        detail::require(std::isfinite(perturbation_std) && perturbation_std >= 0.0,
                        "perturbation_std: must be >= 0");
        for (std::size_t s = 0; s < swap_injections.size(); ++s) {
            const auto& w = swap_injections[s];
            const std::string at = "swap_injections[" + std::to_string(s) + "]";
            detail::require(w.time >= 1 && w.time <= window_length, at + ".time: outside the window");
            const auto n = static_cast<int>(num_objects());
            detail::require(w.first >= 0 && w.first < n && w.second >= 0 && w.second < n && w.first != w.second,
                            at + ".objects: need two distinct object indices");
        }
    }
};

/// Six objects born at 1, 1, 11, 11, 21, 21 and existing through 61, 61, 71,
/// 71, 81, 81. They start on a circle of radius 60 and head for a common
/// neighbourhood reached at step 41, which makes association hard mid-window.
inline ScenarioConfig six_object_scenario(std::uint64_t seed = 1) {
    ScenarioConfig cfg;
    cfg.seed = seed;
    cfg.birth_times = {1, 1, 11, 11, 21, 21};
    cfg.death_times = {61, 61, 71, 71, 81, 81};
    constexpr double radius = 60.0;
    constexpr int meet = 41;
    for (int i = 0; i < 6; ++i) {
        const double angle = std::numbers::pi / 3.0 * i;
        const Eigen::Vector2d start(radius * std::cos(angle), radius * std::sin(angle));
        const Eigen::Vector2d target(3.0 * std::cos(angle + 1.0), 3.0 * std::sin(angle + 1.0));
        const Eigen::Vector2d vel = (target - start) / static_cast<double>(meet - cfg.birth_times[i]);
        StateVector x(4);
        x << start, vel;
        cfg.initial_states.push_back(x);
    }
    return cfg;
}

namespace detail {

inline Matrix cv_transition(double t) {
    Matrix f = Matrix::Identity(4, 4);
    f(0, 2) = t;
    f(1, 3) = t;
    return f;
}

inline Matrix cv_process_covariance(double t, double sigma) {
    Matrix q = Matrix::Zero(4, 4);
    const double s2 = sigma * sigma;
    for (int a = 0; a < 2; ++a) {
        q(a, a) = s2 * t * t * t * t / 4.0;
        q(a, a + 2) = q(a + 2, a) = s2 * t * t * t / 2.0;
        q(a + 2, a + 2) = s2 * t * t;
    }
    return q;
}

/// Noisy constant-velocity trajectory of object `obj`, birth through death.
inline std::vector<StateVector> object_path(const ScenarioConfig& cfg, std::size_t obj) {
    const Matrix f = cv_transition(cfg.sampling_period);
    const double t = cfg.sampling_period;
    std::vector<StateVector> path{cfg.initial_states[obj]};
    const int birth = cfg.birth_times[obj];
    for (int k = birth + 1; k <= cfg.death_times[obj]; ++k) {
        rng::Stream s(cfg.seed, rng::Purpose::truth_noise, obj, static_cast<std::uint64_t>(k));
        const double ax = cfg.process_noise_std * s.normal();
        const double ay = cfg.process_noise_std * s.normal();
        StateVector x = f * path.back();
        x(0) += 0.5 * t * t * ax;
        x(1) += 0.5 * t * t * ay;
        x(2) += t * ax;
        x(3) += t * ay;
        path.push_back(std::move(x));
    }
    return path;
}

} // namespace detail

/// Ground truth as sequences with existence one and Dirac densities.
inline SequenceSet generate_truth(const ScenarioConfig& cfg) {
    cfg.validate();
    std::vector<PointTrajectory> tracks;
    for (std::size_t i = 0; i < cfg.num_objects(); ++i) {
        tracks.push_back({cfg.birth_times[i], detail::object_path(cfg, i)});
    }
    return lift_ground_truth(tracks, cfg.window_length);
}

/// Surrogate tracker output. Per object and alive step, a detection occurs
/// with probability detection_prob and yields a Gaussian centred at the true
/// state plus N(0, perturbation_std^2 I) noise with covariance
/// perturbation_std^2 I and existence existence_level.
///
/// hold_high: steps without detection emit nothing, breaking the sequence.
/// decay_after_death: the estimate coasts with the constant-velocity
/// prediction and existence max(floor, r_last * rate^n), n steps after the
/// last detection, both on missed detections and after the object's death,
/// until the floor is reached.
///
/// A swap injection at time t exchanges the remainders (steps >= t) of the
/// estimate tracks of its two objects, which must both exist at t - 1 and t.
inline SequenceSet generate_estimates(const SequenceSet& truth, const ScenarioConfig& cfg) {
    cfg.validate();
    detail::require(truth.size() == cfg.num_objects(), "generate_estimates: truth does not match the config");
    const int window = cfg.window_length;
    const std::size_t n = cfg.num_objects();
    const double sd = cfg.perturbation_std;
    const Matrix cov = sd * sd * Matrix::Identity(4, 4);
    const Matrix f = detail::cv_transition(cfg.sampling_period);
    const Matrix q = detail::cv_process_covariance(cfg.sampling_period, std::max(cfg.process_noise_std, 1e-3));

    // tracks[i][k-1]: emission of object i's track at step k.
    std::vector<std::vector<std::optional<BernoulliDensity>>> tracks(
        n, std::vector<std::optional<BernoulliDensity>>(static_cast<std::size_t>(window)));
    for (std::size_t i = 0; i < n; ++i) {
        const auto& seq = truth[i];
        std::optional<GaussianDensity> last;
        double last_r = 0.0;
        int since = 0;
        for (int k = seq.start_time(); k <= window; ++k) {
            const bool alive = seq.alive_at(k);
            bool detected = false;
            if (alive) {
                rng::Stream det(cfg.seed, rng::Purpose::detection, i, static_cast<std::uint64_t>(k));
                detected = det.uniform() < cfg.detection_prob;
            }
            auto& slot = tracks[i][static_cast<std::size_t>(k - 1)];
            if (detected) {
                const auto* b = tau(seq, k, window);
                const StateVector& x = std::get<DiracDensity>(b->density()).point();
                rng::Stream noise(cfg.seed, rng::Purpose::estimate_noise, i, static_cast<std::uint64_t>(k));
                StateVector mean = x;
                for (Eigen::Index d = 0; d < mean.size(); ++d) mean(d) += sd * noise.normal();
                last.emplace(mean, cov);
                last_r = cfg.existence_level;
                since = 0;
                slot.emplace(last_r, *last);
                continue;
            }
            if (cfg.existence_model == ExistenceModel::hold_high || !last) {
                if (!alive) break;
                continue;
            }
            ++since;
            const double r = std::max(cfg.existence_floor, last_r * std::pow(cfg.decay_rate, since));
            Matrix pc = f * last->covariance() * f.transpose() + q;
            pc = 0.5 * (pc + pc.transpose()).eval();
            StateVector pm = f * last->mean();
            last.emplace(std::move(pm), std::move(pc));
            slot.emplace(r, *last);
            if (r <= cfg.existence_floor) {
                if (!alive) break;
                last.reset();
            }
        }
    }

    for (const auto& w : cfg.swap_injections) {
        const auto& a = truth[static_cast<std::size_t>(w.first)];
        const auto& b = truth[static_cast<std::size_t>(w.second)];
        detail::require(w.time >= 2 && a.alive_at(w.time) && a.alive_at(w.time - 1) && b.alive_at(w.time) &&
                            b.alive_at(w.time - 1),
                        "swap_injections: objects " + std::to_string(w.first) + " and " + std::to_string(w.second) +
                            " do not both exist at steps " + std::to_string(w.time - 1) + " and " +
                            std::to_string(w.time));
        auto& ta = tracks[static_cast<std::size_t>(w.first)];
        auto& tb = tracks[static_cast<std::size_t>(w.second)];
        std::swap_ranges(ta.begin() + (w.time - 1), ta.end(), tb.begin() + (w.time - 1));
    }

    std::vector<BernoulliSequence> out;
    for (const auto& track : tracks) {
        std::vector<BernoulliDensity> run;
        int start = 0;
        for (int k = 1; k <= window; ++k) {
            const auto& slot = track[static_cast<std::size_t>(k - 1)];
            if (slot) {
                if (run.empty()) start = k;
                run.push_back(*slot);
            } else if (!run.empty()) {
                out.emplace_back(start, std::move(run));
                run.clear();
            }
        }
        if (!run.empty()) out.emplace_back(start, std::move(run));
    }
    return SequenceSet(window, std::move(out));
}

/// Per-step error series of one run in root form: each component c becomes
/// c^(1/p) and total is the step error (l + e + m + f + s)^(1/p). The switch
/// series has K - 1 entries.
struct RunSeries {
    std::vector<double> total;
    std::vector<double> localization;
    std::vector<double> existence_mismatch;
    std::vector<double> missed;
    std::vector<double> false_det;
    std::vector<double> switch_cost;

    std::size_t length() const { return total.size(); }

    friend bool operator==(const RunSeries&, const RunSeries&) = default;
};

/// Per-step root-mean-square over runs, same layout as RunSeries.
using AggregateSeries = RunSeries;

inline RunSeries series_from_report(const MetricReport& rep) {
    RunSeries s;
    const double inv = 1.0 / rep.order;
    for (std::size_t k = 0; k < rep.per_step.size(); ++k) {
        const auto& st = rep.per_step[k];
        s.total.push_back(rep.step_error(k));
        s.localization.push_back(std::pow(st.expected_localization, inv));
        s.existence_mismatch.push_back(std::pow(st.existence_mismatch, inv));
        s.missed.push_back(std::pow(st.expected_missed, inv));
        s.false_det.push_back(std::pow(st.expected_false, inv));
        if (st.switch_to_next) s.switch_cost.push_back(std::pow(*st.switch_to_next, inv));
    }
    return s;
}

inline AggregateSeries aggregate_rms(const std::vector<RunSeries>& runs) {
    detail::require(!runs.empty(), "aggregate_rms: at least one run required");
    const auto& first = runs.front();
    for (const auto& r : runs) {
        detail::require(r.total.size() == first.total.size() && r.switch_cost.size() == first.switch_cost.size() &&
                            r.localization.size() == first.total.size() &&
                            r.existence_mismatch.size() == first.total.size() &&
                            r.missed.size() == first.total.size() && r.false_det.size() == first.total.size(),
                        "aggregate_rms: runs differ in length");
    }
    auto rms = [&](std::vector<double> RunSeries::*field) {
        std::vector<double> out((first.*field).size(), 0.0);
        for (std::size_t k = 0; k < out.size(); ++k) {
            double acc = 0.0;
            for (const auto& r : runs) acc += (r.*field)[k] * (r.*field)[k];
            out[k] = std::sqrt(acc / static_cast<double>(runs.size()));
        }
        return out;
    };
    AggregateSeries a;
    a.total = rms(&RunSeries::total);
    a.localization = rms(&RunSeries::localization);
    a.existence_mismatch = rms(&RunSeries::existence_mismatch);
    a.missed = rms(&RunSeries::missed);
    a.false_det = rms(&RunSeries::false_det);
    a.switch_cost = rms(&RunSeries::switch_cost);
    return a;
}

/// One simulated run: truth, estimates and the metric reports.
struct RunResult {
    std::uint64_t seed = 0;
    SequenceSet truth{1};
    SequenceSet estimate{1};
    MetricReport ptgospa;
    /// Trajectory GOSPA against estimates thresholded at existence 0.5.
    std::optional<MetricReport> tgospa;
};

struct MonteCarloOptions {
    int runs = 1;
    int jobs = 1;
    bool with_tgospa = false;
    MetricParams params{};
    BaseMetricKind kind = BaseMetricKind::wasserstein2;
    PtgospaOptions metric{};
};

inline RunResult simulate_run(const ScenarioConfig& cfg, const MonteCarloOptions& opt) {
    RunResult r;
    r.seed = cfg.seed;
    r.truth = generate_truth(cfg);
    r.estimate = generate_estimates(r.truth, cfg);
    r.ptgospa = ptgospa(r.truth, r.estimate, opt.params, opt.kind, opt.metric);
    if (opt.with_tgospa) r.tgospa = ptgospa(r.truth, point_estimates(r.estimate), opt.params, opt.kind, opt.metric);
    return r;
}

/// Runs seeds base, base+1, ... concurrently on up to `jobs` threads. Results
/// are ordered by run index and independent of the thread count.
inline std::vector<RunResult> run_monte_carlo(const ScenarioConfig& cfg, const MonteCarloOptions& opt) {
    detail::require(opt.runs >= 1, "runs: must be >= 1");
    detail::require(opt.jobs >= 1, "jobs: must be >= 1");
    cfg.validate();
    std::vector<std::optional<RunResult>> slots(static_cast<std::size_t>(opt.runs));
    std::mutex mtx;
    std::exception_ptr failure;
    int next = 0;
    auto worker = [&] {
        for (;;) {
            int idx;
            {
                std::lock_guard lock(mtx);
                if (next >= opt.runs || failure) return;
                idx = next++;
            }
            try {
                ScenarioConfig c = cfg;
                c.seed = cfg.seed + static_cast<std::uint64_t>(idx);
                auto res = simulate_run(c, opt);
                std::lock_guard lock(mtx);
                slots[static_cast<std::size_t>(idx)] = std::move(res);
            } catch (...) {
                std::lock_guard lock(mtx);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int threads = std::min(opt.jobs, opt.runs);
    std::vector<std::thread> pool;
    for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
    std::vector<RunResult> out;
    out.reserve(slots.size());
    for (auto& s : slots) out.push_back(std::move(*s));
    return out;
}

} // namespace trajmetric
