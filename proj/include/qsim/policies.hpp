#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "qsim/error.hpp"
#include "qsim/forecasting.hpp"
#include "qsim/synopsis.hpp"
#include "qsim/t2fls.hpp"

namespace qsim {

enum class Policy : std::uint8_t { uddm, bm, pm };

constexpr std::string_view to_string(Policy p) noexcept {
    switch (p) {
        case Policy::uddm: return "UDDM";
        case Policy::bm: return "BM";
        case Policy::pm: return "PM";
    }
    return "?";
}

inline Policy parse_policy(std::string_view s) {
    std::string lower(s);
    for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "uddm") return Policy::uddm;
    if (lower == "bm") return Policy::bm;
    if (lower == "pm") return Policy::pm;
    throw ConfigError("unknown policy '" + std::string(s) + "' (expected uddm, bm or pm)");
}

enum class Action : std::uint8_t { hold, disseminate };
enum class Cause : std::uint8_t { none, threshold, deadline, any_change, prediction };

constexpr std::string_view to_string(Cause c) noexcept {
    switch (c) {
        case Cause::none: return "none";
        case Cause::threshold: return "threshold";
        case Cause::deadline: return "deadline";
        case Cause::any_change: return "any-change";
        case Cause::prediction: return "prediction";
    }
    return "?";
}

struct Decision {
    Action action = Action::hold;
    Cause cause = Cause::none;
    // UDDM: fused score G. PM: mean normalized forecast. Absent otherwise.
    std::optional<double> score;

    [[nodiscard]] bool disseminate() const noexcept { return action == Action::disseminate; }
};

inline constexpr std::size_t kForecastHorizon = 3;

// Geometric mean of the two potentials; zero if either is zero.
inline double combine_pods(t2::PoD past, t2::PoD future) noexcept {
    return std::sqrt(past.value * future.value);
}

// Everything a node needs to run one monitoring epoch. The normalizer is the
// one piece that survives an epoch reset.
struct EpochState {
    int t = 1;
    int deadline = 1;
    double theta = 0.6;
    QuantumSeries quanta;
    std::optional<HoltState> holt;
    Synopsis last_sent;
    QuantumNormalizer normalizer;

    static EpochState begin(int deadline, double theta, Synopsis last_sent,
                            std::size_t window = QuantumNormalizer::kDefaultWindow) {
        if (deadline < 1) throw ConfigError("deadline T must be >= 1");
        if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("theta must be > 0");
        EpochState s;
        s.deadline = deadline;
        s.theta = theta;
        s.last_sent = std::move(last_sent);
        s.normalizer = QuantumNormalizer(window);
        return s;
    }

    void reset(const Synopsis& current) {
        t = 1;
        quanta.clear();
        holt.reset();
        last_sent = current;
    }
};

namespace detail {

inline void observe(EpochState& s, const UpdateQuantum& e, const HoltParams& holt) {
    s.quanta.push(e);
    s.normalizer.observe(e.value);
    if (s.holt) {
        s.holt = holt_step(*s.holt, e.value);
    } else if (s.quanta.size() == 2) {
        s.holt = holt_init(s.quanta[0].value, s.quanta[1].value, holt);
    }
}

inline std::array<double, 3> normalized_forecast(const EpochState& s) {
    const Forecast f = holt_forecast(*s.holt, kForecastHorizon);
    return {s.normalizer.normalize(f.values[0]), s.normalizer.normalize(f.values[1]),
            s.normalizer.normalize(f.values[2])};
}

// Applies the trigger or, failing that, the deadline; advances or resets the
// epoch accordingly.
inline Decision conclude(EpochState& s, const Synopsis& current, bool triggered, Cause trigger,
                         std::optional<double> score) {
    Decision d{Action::hold, Cause::none, score};
    if (triggered) {
        d.action = Action::disseminate;
        d.cause = trigger;
    } else if (s.t >= s.deadline) {
        d.action = Action::disseminate;
        d.cause = Cause::deadline;
    }
    if (d.disseminate())
        s.reset(current);
    else
        ++s.t;
    return d;
}

}  // namespace detail

struct PolicyContext {
    const t2::Engine* engine = nullptr;
    HoltParams holt;
};

// Uncertainty-driven policy: fuse PoD over the last three quanta with PoD over
// three forecast quanta and disseminate when the geometric mean exceeds theta.
inline Decision uddm_step(EpochState& s, const Synopsis& current, const UpdateQuantum& e,
                          const PolicyContext& ctx) {
    detail::observe(s, e, ctx.holt);
    std::optional<double> g;
    if (s.quanta.size() >= 3) {
        const std::size_t n = s.quanta.size();
        const std::array<double, 3> past{s.normalizer.normalize(s.quanta[n - 3].value),
                                         s.normalizer.normalize(s.quanta[n - 2].value),
                                         s.normalizer.normalize(s.quanta[n - 1].value)};
        const t2::PoD pod_p = ctx.engine->evaluate(past);
        // Holt is always initialized by the third quantum; the fallback keeps
        // the zero-annihilation semantics if that ever changes.
        const t2::PoD pod_f =
            s.holt ? ctx.engine->evaluate(detail::normalized_forecast(s)) : pod_p;
        g = combine_pods(pod_p, pod_f);
    }
    return detail::conclude(s, current, g && *g > s.theta, Cause::threshold, g);
}

// Baseline: disseminate on any non-zero change.
inline Decision bm_step(EpochState& s, const Synopsis& current, const UpdateQuantum& e,
                        const PolicyContext& ctx) {
    detail::observe(s, e, ctx.holt);
    return detail::conclude(s, current, e.value > 0.0, Cause::any_change, std::nullopt);
}

// Prediction-only: disseminate when the mean normalized forecast exceeds theta.
inline Decision pm_step(EpochState& s, const Synopsis& current, const UpdateQuantum& e,
                        const PolicyContext& ctx) {
    detail::observe(s, e, ctx.holt);
    std::optional<double> score;
    if (s.holt) {
        const auto f = detail::normalized_forecast(s);
        score = (f[0] + f[1] + f[2]) / 3.0;
    }
    return detail::conclude(s, current, score && *score > s.theta, Cause::prediction, score);
}

inline Decision policy_step(Policy p, EpochState& s, const Synopsis& current,
                            const UpdateQuantum& e, const PolicyContext& ctx) {
    switch (p) {
        case Policy::uddm: return uddm_step(s, current, e, ctx);
        case Policy::bm: return bm_step(s, current, e, ctx);
        case Policy::pm: return pm_step(s, current, e, ctx);
    }
    throw InvariantError("unknown policy");
}

}  // namespace qsim
