#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "qsim/error.hpp"

namespace qsim {

struct HoltParams {
    double alpha = 0.5;  // level smoothing
    double beta = 0.5;   // trend smoothing

    // Factors must lie in (0, 1). Tests that probe the alpha = beta = 1 limit
    // pass allow_boundary.
    void validate(bool allow_boundary = false) const {
        auto ok = [&](double f) {
            return allow_boundary ? (f > 0.0 && f <= 1.0) : (f > 0.0 && f < 1.0);
        };
        if (!ok(alpha)) throw ConfigError("Holt alpha must lie in (0,1), got " + std::to_string(alpha));
        if (!ok(beta)) throw ConfigError("Holt beta must lie in (0,1), got " + std::to_string(beta));
    }
};

// Double exponential smoothing state: level, trend and how many quanta it has
// absorbed.
struct HoltState {
    double level = 0.0;
    double trend = 0.0;
    HoltParams params;
    std::uint64_t observations = 0;
};

// Raw k-step projection. values[i] = max(0, level + (i+1) * trend).
struct Forecast {
    std::vector<double> values;

    [[nodiscard]] std::size_t horizon() const noexcept { return values.size(); }
};

inline HoltState holt_step(HoltState s, double e) {
    if (s.observations < 2) throw InvariantError("Holt state used before initialization");
    if (!std::isfinite(e))
        throw IngestError(static_cast<std::int64_t>(s.observations + 1), "non-finite quantum");
    const double prev_level = s.level;
    const double a = s.params.alpha;
    const double b = s.params.beta;
    // Error-correction form of the usual recurrences; a flat series stays
    // exactly flat.
    const double projected = prev_level + s.trend;
    s.level = projected + a * (e - projected);
    s.trend = s.trend + b * ((s.level - prev_level) - s.trend);
    ++s.observations;
    return s;
}

// Seeds level = e1, trend = e2 - e1, then absorbs e2 so the returned state has
// seen both quanta.
inline HoltState holt_init(double e1, double e2, HoltParams params, bool allow_boundary = false) {
    params.validate(allow_boundary);
    if (!std::isfinite(e1)) throw IngestError(1, "non-finite quantum");
    if (!std::isfinite(e2)) throw IngestError(2, "non-finite quantum");
    HoltState s{e1, e2 - e1, params, 2};
    const double a = params.alpha;
    const double b = params.beta;
    const double projected = s.level + s.trend;
    const double level = projected + a * (e2 - projected);
    s.trend = s.trend + b * ((level - s.level) - s.trend);
    s.level = level;
    return s;
}

inline Forecast holt_forecast(const HoltState& s, std::size_t k) {
    if (k == 0) throw ConfigError("forecast horizon must be >= 1");
    if (s.observations < 2) throw InvariantError("Holt state used before initialization");
    Forecast f;
    f.values.reserve(k);
    for (std::size_t i = 1; i <= k; ++i)
        f.values.push_back(std::max(0.0, s.level + static_cast<double>(i) * s.trend));
    return f;
}

}  // namespace qsim
