#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <iostream>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "qsim/error.hpp"
#include "qsim/forecasting.hpp"
#include "qsim/policies.hpp"
#include "qsim/synopsis.hpp"
#include "qsim/t2fls.hpp"

namespace qsim {

// ---------------------------------------------------------------------------
// Synthetic streams
// ---------------------------------------------------------------------------

enum class ProfileKind : std::uint8_t { random_walk, drift, piecewise };

constexpr std::string_view to_string(ProfileKind k) noexcept {
    switch (k) {
        case ProfileKind::random_walk: return "random-walk";
        case ProfileKind::drift: return "drift";
        case ProfileKind::piecewise: return "piecewise";
    }
    return "?";
}

struct SyntheticProfile {
    ProfileKind kind = ProfileKind::drift;
    double base = 20.0;       // starting value of every dimension
    double slope = 0.5;       // drift: expected per-step increment
    double noise = 0.5;       // std-dev of the per-step Gaussian step
    double jump_rate = 0.05;  // piecewise: per-step jump probability
    double jump_scale = 5.0;  // piecewise: std-dev of a jump

    static ProfileKind parse_kind(std::string_view s) {
        if (s == "drift") return ProfileKind::drift;
        if (s == "random-walk" || s == "random_walk" || s == "walk") return ProfileKind::random_walk;
        if (s == "piecewise" || s == "piecewise-constant") return ProfileKind::piecewise;
        throw ConfigError("unknown synthetic profile '" + std::string(s) +
                          "' (expected drift, random-walk or piecewise)");
    }
};

inline std::vector<DataVector> generate_synthetic_stream(std::uint64_t seed, std::size_t length,
                                                         std::size_t dim,
                                                         const SyntheticProfile& profile) {
    if (length == 0) throw ConfigError("synthetic stream length must be >= 1");
    if (dim == 0) throw ConfigError("synthetic stream dimension must be >= 1");
    if (!(profile.noise >= 0.0) || !(profile.jump_scale >= 0.0))
        throw ConfigError("synthetic noise and jump scale must be >= 0");
    if (!(profile.jump_rate >= 0.0 && profile.jump_rate <= 1.0))
        throw ConfigError("jump rate must lie in [0,1]");

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<double> x(dim, profile.base);
    std::vector<DataVector> out;
    out.reserve(length);
    for (std::size_t i = 0; i < length; ++i) {
        if (i > 0) {
            switch (profile.kind) {
                case ProfileKind::random_walk:
                    for (double& v : x) v += profile.noise * gauss(rng);
                    break;
                case ProfileKind::drift:
                    for (double& v : x) v += profile.slope + profile.noise * gauss(rng);
                    break;
                case ProfileKind::piecewise:
                    if (profile.jump_rate > 0.0 && unit(rng) < profile.jump_rate)
                        for (double& v : x) v += profile.jump_scale * gauss(rng);
                    break;
            }
        }
        out.push_back(DataVector{x, static_cast<std::int64_t>(i + 1)});
    }
    return out;
}

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

}  // namespace detail

// Derives an independent seed for slice `index` of a run seeded with `seed`.
constexpr std::uint64_t slice_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return detail::splitmix64(seed ^ detail::splitmix64(index));
}

// Where experiments draw their per-node streams from. Synthetic sources
// generate each slice from its own derived seed; replay sources cut disjoint
// contiguous slices out of one dataset, wrapping when it runs out.
class StreamSource {
public:
    static StreamSource synthetic(std::uint64_t seed, std::size_t dim, SyntheticProfile profile) {
        StreamSource s;
        s.seed_ = seed;
        s.dim_ = dim;
        s.profile_ = profile;
        return s;
    }

    static StreamSource replay(std::vector<DataVector> data) {
        if (data.empty()) throw TruncationError(1, 0);
        StreamSource s;
        s.dim_ = data.front().dim();
        s.data_ = std::make_shared<const std::vector<DataVector>>(std::move(data));
        s.wrap_warned_ = std::make_shared<std::once_flag>();
        return s;
    }

    [[nodiscard]] bool is_replay() const noexcept { return data_ != nullptr; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] const SyntheticProfile& profile() const noexcept { return profile_; }

    [[nodiscard]] std::vector<DataVector> slice(std::uint64_t index, std::size_t length) const {
        if (!data_) return generate_synthetic_stream(slice_seed(seed_, index), length, dim_, profile_);

        const auto& data = *data_;
        if (data.size() < length) throw TruncationError(length, data.size());
        const std::size_t n = data.size();
        const std::size_t start = static_cast<std::size_t>((index * length) % n);
        if (index * length + length > n)
            std::call_once(*wrap_warned_, [&] {
                std::clog << "qsim: warning: dataset of " << n
                          << " vectors exhausted, experiment slices wrap around\n";
            });
        std::vector<DataVector> out;
        out.reserve(length);
        for (std::size_t i = 0; i < length; ++i) {
            DataVector v = data[(start + i) % n];
            v.step = static_cast<std::int64_t>(i + 1);
            out.push_back(std::move(v));
        }
        return out;
    }

private:
    StreamSource() = default;

    std::uint64_t seed_ = 0;
    std::size_t dim_ = 0;
    SyntheticProfile profile_;
    std::shared_ptr<const std::vector<DataVector>> data_;
    std::shared_ptr<std::once_flag> wrap_warned_;
};

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

// Vectors absorbed into a node's synopsis before its first monitoring round.
inline constexpr std::size_t kWarmup = 3;

struct ExperimentConfig {
    int N = 1;
    int T = 10;
    double theta = 0.6;
    int E = 1000;
    Policy policy = Policy::uddm;
    HoltParams holt;
    std::size_t window = QuantumNormalizer::kDefaultWindow;
    std::uint64_t seed = 42;

    void validate() const {
        if (N < 1) throw ConfigError("N must be >= 1");
        if (T < 1) throw ConfigError("T must be >= 1");
        if (E < 1) throw ConfigError("E must be >= 1");
        if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("theta must be > 0");
        if (window < 1) throw ConfigError("window must be >= 1");
        holt.validate();
    }

    // Vectors each node consumes per experiment.
    [[nodiscard]] std::size_t slice_length() const noexcept {
        return static_cast<std::size_t>(T) + kWarmup;
    }
};

struct NodeState {
    int id = 1;
    EpochState epoch;
    Synopsis synopsis;
    int phase_offset = 0;

    // Deadlines of node `id` fall on absolute steps congruent to id mod T.
    static int stagger(int id, int T) noexcept { return id % T; }
};

struct DisseminationEvent {
    int node = 1;
    std::int64_t step = 0;  // absolute step
    int t_star = 0;         // position within the epoch
    Cause cause = Cause::none;
    double magnitude = 0.0;
    std::optional<double> score;

    friend bool operator==(const DisseminationEvent&, const DisseminationEvent&) = default;
};

struct ExperimentTrace {
    std::vector<DisseminationEvent> events;
};

// Runs one experiment: every node absorbs kWarmup vectors, then monitors for
// T rounds starting after its phase offset. One vector per round.
inline ExperimentTrace run_experiment(const ExperimentConfig& cfg, const t2::Engine& engine,
                                      std::span<const std::vector<DataVector>> node_streams) {
    cfg.validate();
    if (node_streams.size() != static_cast<std::size_t>(cfg.N))
        throw ConfigError("expected " + std::to_string(cfg.N) + " node streams, got " +
                          std::to_string(node_streams.size()));
    const std::size_t need = cfg.slice_length();
    for (const auto& s : node_streams)
        if (s.size() < need) throw TruncationError(need, s.size());

    std::vector<NodeState> nodes;
    nodes.reserve(node_streams.size());
    int max_offset = 0;
    for (int id = 1; id <= cfg.N; ++id) {
        const auto& stream = node_streams[static_cast<std::size_t>(id - 1)];
        Synopsis syn = Synopsis::empty(stream.front().dim());
        for (std::size_t i = 0; i < kWarmup; ++i) syn.absorb(stream[i]);
        NodeState n{id, EpochState::begin(cfg.T, cfg.theta, syn, cfg.window), std::move(syn),
                    NodeState::stagger(id, cfg.T)};
        max_offset = std::max(max_offset, n.phase_offset);
        nodes.push_back(std::move(n));
    }

    const PolicyContext ctx{&engine, cfg.holt};
    ExperimentTrace trace;
    const std::int64_t last_step = static_cast<std::int64_t>(cfg.T) + max_offset;
    for (std::int64_t step = 1; step <= last_step; ++step) {
        for (NodeState& node : nodes) {
            const std::int64_t round = step - node.phase_offset;
            if (round < 1 || round > cfg.T) continue;
            const auto& stream = node_streams[static_cast<std::size_t>(node.id - 1)];
            node.synopsis.absorb(stream[kWarmup + static_cast<std::size_t>(round) - 1]);
            const UpdateQuantum e = update_quantum(node.epoch.last_sent, node.synopsis, round);
            const int t = node.epoch.t;
            const Decision d = policy_step(cfg.policy, node.epoch, node.synopsis, e, ctx);
            if (d.disseminate())
                trace.events.push_back({node.id, step, t, d.cause, e.value, d.score});
        }
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// Mean fraction of the deadline consumed before each dissemination.
inline double compute_phi(std::span<const int> t_stars, int T) {
    if (t_stars.empty()) throw ConfigError("phi needs at least one record");
    if (T < 1) throw ConfigError("T must be >= 1");
    double sum = 0.0;
    for (int t : t_stars) sum += static_cast<double>(t) / static_cast<double>(T);
    return sum / static_cast<double>(t_stars.size());
}

// Mean quantum magnitude at dissemination time.
inline double compute_delta(std::span<const double> magnitudes) {
    if (magnitudes.empty()) throw ConfigError("delta needs at least one record");
    double sum = 0.0;
    for (double m : magnitudes) sum += m;
    return sum / static_cast<double>(magnitudes.size());
}

// Monitoring rounds per stop within one window of T rounds.
inline double compute_psi(std::size_t stop_count, int T) {
    if (stop_count == 0) throw InvariantError("window without a single stop violates the deadline rule");
    return static_cast<double>(T) / static_cast<double>(stop_count);
}

struct ExperimentRecord {
    int experiment = 0;
    int t_star = 0;
    Cause cause = Cause::none;
    double magnitude = 0.0;
    std::optional<double> score;
};

struct MetricsReport {
    Policy policy = Policy::uddm;
    int T = 0;
    double theta = 0.0;
    int N = 1;
    int E = 0;
    double phi = 0.0;
    double delta = 0.0;
    double psi = 0.0;
    std::size_t message_count = 0;
    std::vector<ExperimentRecord> per_experiment;
};

// Aggregates records that are already ordered by experiment index. The same
// routine recomputes a summary from a detail file, so both paths sum in the
// same order.
inline MetricsReport summarize(Policy policy, int T, double theta, int N, int E,
                               std::vector<ExperimentRecord> records) {
    MetricsReport r{policy, T, theta, N, E, 0.0, 0.0, 0.0, records.size(), {}};
    std::vector<int> t_stars;
    std::vector<double> magnitudes;
    t_stars.reserve(records.size());
    magnitudes.reserve(records.size());
    std::vector<std::size_t> stops(static_cast<std::size_t>(E), 0);
    for (const auto& rec : records) {
        if (rec.experiment < 0 || rec.experiment >= E)
            throw InvariantError("record refers to experiment " + std::to_string(rec.experiment));
        t_stars.push_back(rec.t_star);
        magnitudes.push_back(rec.magnitude);
        ++stops[static_cast<std::size_t>(rec.experiment)];
    }
    r.phi = compute_phi(t_stars, T);
    r.delta = compute_delta(magnitudes);
    // Each experiment spans N node-windows of T rounds.
    double psi_sum = 0.0;
    for (std::size_t s : stops) psi_sum += compute_psi(s, T * N);
    r.psi = psi_sum / static_cast<double>(E);
    r.per_experiment = std::move(records);

    if (!(r.psi >= 1.0 && r.psi <= static_cast<double>(T)) || !(r.phi > 0.0 && r.phi <= 1.0) ||
        !(r.delta >= 0.0))
        throw InvariantError("metrics out of range for " + std::string(to_string(policy)) +
                             " T=" + std::to_string(T));
    return r;
}

// Runs all E experiments of one (policy, T, theta) cell across `workers`
// threads. Results do not depend on the worker count.
inline MetricsReport run_cell(const ExperimentConfig& cfg, const t2::Engine& engine,
                              const StreamSource& source, unsigned workers = 1) {
    cfg.validate();
    const auto E = static_cast<std::size_t>(cfg.E);
    const auto N = static_cast<std::size_t>(cfg.N);
    std::vector<ExperimentTrace> traces(E);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&] {
        for (;;) {
            const std::size_t e = next.fetch_add(1);
            if (e >= E) return;
            try {
                std::vector<std::vector<DataVector>> streams;
                streams.reserve(N);
                for (std::size_t n = 0; n < N; ++n)
                    streams.push_back(source.slice(e * N + n, cfg.slice_length()));
                traces[e] = run_experiment(cfg, engine, streams);
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(E);
                return;
            }
        }
    };

    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(E)));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<ExperimentRecord> records;
    for (std::size_t e = 0; e < E; ++e)
        for (const auto& ev : traces[e].events)
            records.push_back({static_cast<int>(e), ev.t_star, ev.cause, ev.magnitude, ev.score});
    return summarize(cfg.policy, cfg.T, cfg.theta, cfg.N, cfg.E, std::move(records));
}

}  // namespace qsim
