#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "qsim/error.hpp"

namespace qsim {

// A d-dimensional reading arriving at a node at discrete step `step`.
struct DataVector {
    std::vector<double> values;
    std::int64_t step = 0;

    [[nodiscard]] std::size_t dim() const noexcept { return values.size(); }
};

// Per-dimension running mean over every vector absorbed so far.
struct Synopsis {
    std::vector<double> stats;
    std::uint64_t count = 0;

    static Synopsis empty(std::size_t dim) {
        if (dim == 0) throw ConfigError("synopsis dimension must be >= 1");
        return Synopsis{std::vector<double>(dim, 0.0), 0};
    }

    [[nodiscard]] std::size_t dim() const noexcept { return stats.size(); }

    // In-place incremental mean: mean' = mean + (x - mean) / count'.
    void absorb(const DataVector& x) {
        if (x.dim() != stats.size())
            throw ConfigError("data vector has " + std::to_string(x.dim()) +
                              " dimensions, synopsis has " + std::to_string(stats.size()));
        for (double v : x.values)
            if (!std::isfinite(v)) throw IngestError(x.step, "non-finite entry in data vector");
        ++count;
        const double n = static_cast<double>(count);
        for (std::size_t i = 0; i < stats.size(); ++i) stats[i] += (x.values[i] - stats[i]) / n;
    }

    friend bool operator==(const Synopsis&, const Synopsis&) = default;
};

inline Synopsis update_synopsis(Synopsis s, const DataVector& x) {
    s.absorb(x);
    return s;
}

struct UpdateQuantum {
    double value = 0.0;
    std::int64_t step = 0;
};

// L1 distance between the last-sent and the current synopsis.
inline UpdateQuantum update_quantum(const Synopsis& last_sent, const Synopsis& current,
                                    std::int64_t step = 0) {
    if (last_sent.dim() != current.dim())
        throw ConfigError("synopsis length mismatch: " + std::to_string(last_sent.dim()) +
                          " vs " + std::to_string(current.dim()));
    double sum = 0.0;
    for (std::size_t i = 0; i < current.dim(); ++i)
        sum += std::abs(current.stats[i] - last_sent.stats[i]);
    return {sum, step};
}

// Quanta of the current epoch, in step order.
class QuantumSeries {
public:
    void push(UpdateQuantum q) {
        if (!quanta_.empty() && q.step <= quanta_.back().step)
            throw InvariantError("quantum steps must be strictly increasing");
        quanta_.push_back(q);
    }

    void clear() noexcept { quanta_.clear(); }

    [[nodiscard]] std::size_t size() const noexcept { return quanta_.size(); }
    [[nodiscard]] bool empty() const noexcept { return quanta_.empty(); }
    [[nodiscard]] const UpdateQuantum& operator[](std::size_t i) const { return quanta_[i]; }
    [[nodiscard]] const UpdateQuantum& back() const { return quanta_.back(); }
    [[nodiscard]] std::span<const UpdateQuantum> view() const noexcept { return quanta_; }

private:
    std::vector<UpdateQuantum> quanta_;
};

// Maps quanta from [0, inf) onto [0, 1] by dividing by the running maximum of
// the last `window` observed quanta. History spans epochs.
class QuantumNormalizer {
public:
    static constexpr std::size_t kDefaultWindow = 50;
    static constexpr double kDefaultFloor = 1e-9;

    explicit QuantumNormalizer(std::size_t window = kDefaultWindow, double floor = kDefaultFloor)
        : window_(window), floor_(floor) {
        if (window == 0) throw ConfigError("normalization window must be >= 1");
        if (!(floor > 0.0)) throw ConfigError("normalization floor must be > 0");
    }

    void observe(double quantum) {
        history_.push_back(quantum);
        if (history_.size() > window_) history_.pop_front();
        max_ = *std::max_element(history_.begin(), history_.end());
    }

    [[nodiscard]] double running_max() const noexcept { return max_; }
    [[nodiscard]] bool has_history() const noexcept { return !history_.empty(); }
    [[nodiscard]] std::size_t window() const noexcept { return window_; }

    [[nodiscard]] double normalize(double quantum) const noexcept {
        if (!(quantum > 0.0)) return 0.0;
        return std::clamp(quantum / std::max(floor_, max_), 0.0, 1.0);
    }

private:
    std::size_t window_;
    double floor_;
    std::deque<double> history_;
    double max_ = 0.0;
};

inline double normalize_quantum(const UpdateQuantum& e, const QuantumNormalizer& normalizer) {
    return normalizer.normalize(e.value);
}

}  // namespace qsim
