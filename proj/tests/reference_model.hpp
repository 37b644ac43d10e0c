#pragma once

// Brute-force reference evaluator used as an oracle by the unit and
// acceptance suites. It recomputes everything from scratch at every step
// (means from raw vectors, Holt from the full epoch series, memberships from
// the raw trapezoid parameters) and deliberately shares no code with the
// library beyond plain parameter structs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

namespace ref {

struct Trap {
    double a, b, c, d;
};

struct Terms {
    std::array<Trap, 3> upper{Trap{0.0, 0.0, 0.2, 0.45}, Trap{0.25, 0.45, 0.55, 0.75},
                              Trap{0.55, 0.8, 1.0, 1.0}};
    double shrink = 0.1;
    double height = 0.9;
};

inline double trap(const Trap& t, double h, double x) {
    if (x < t.a || x > t.d) return 0.0;
    const double rise = t.b > t.a ? (x - t.a) / (t.b - t.a) : 1.0;
    const double fall = t.d > t.c ? (t.d - x) / (t.d - t.c) : 1.0;
    return h * std::max(0.0, std::min({rise, 1.0, fall}));
}

inline double upper_mu(const Terms& s, int term, double x) { return trap(s.upper[term], 1.0, x); }

inline double lower_mu(const Terms& s, int term, double x) {
    const Trap& u = s.upper[term];
    const Trap l{u.a + s.shrink * (u.b - u.a), u.b, u.c, u.d - s.shrink * (u.d - u.c)};
    return trap(l, s.height, x);
}

inline double centroid(const Terms& s, int term, int points = 101) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < points; ++i) {
        const double x = static_cast<double>(i) / (points - 1);
        const double mu = 0.5 * (lower_mu(s, term, x) + upper_mu(s, term, x));
        num += x * mu;
        den += mu;
    }
    return num / den;
}

inline int rank_average(int i, int j, int k) {
    return static_cast<int>(std::floor((i + j + k) / 3.0 + 0.5));
}

inline double pod(const Terms& s, const std::array<double, 3>& x) {
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                const double lo =
                    std::min({lower_mu(s, i, x[0]), lower_mu(s, j, x[1]), lower_mu(s, k, x[2])});
                const double up =
                    std::min({upper_mu(s, i, x[0]), upper_mu(s, j, x[1]), upper_mu(s, k, x[2])});
                const double w = (lo + up) / 2.0;
                num += w * centroid(s, rank_average(i, j, k));
                den += w;
            }
    return den > 0.0 ? std::clamp(num / den, 0.0, 1.0) : 0.0;
}

// Type-1 Mamdani-style weighted-centroid system on the upper shapes only.
inline double type1_pod(const std::array<Trap, 3>& terms, const std::array<double, 3>& x) {
    std::array<double, 3> c{};
    for (int t = 0; t < 3; ++t) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double g = i / 100.0;
            num += g * trap(terms[t], 1.0, g);
            den += trap(terms[t], 1.0, g);
        }
        c[t] = num / den;
    }
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) {
                const double w = std::min(
                    {trap(terms[i], 1.0, x[0]), trap(terms[j], 1.0, x[1]), trap(terms[k], 1.0, x[2])});
                num += w * c[rank_average(i, j, k)];
                den += w;
            }
    return den > 0.0 ? num / den : 0.0;
}

// Level and trend after running the double-smoothing recurrences over the
// whole series: v1 = e1, b1 = e2 - e1, then j = 2..n.
struct Holt {
    double v, b;
};

inline Holt holt_direct(const std::vector<double>& e, double alpha, double beta) {
    std::vector<double> v(e.size()), b(e.size());
    v[0] = e[0];
    b[0] = e[1] - e[0];
    for (std::size_t j = 1; j < e.size(); ++j) {
        v[j] = alpha * e[j] + (1 - alpha) * (v[j - 1] + b[j - 1]);
        b[j] = beta * (v[j] - v[j - 1]) + (1 - beta) * b[j - 1];
    }
    return {v.back(), b.back()};
}

enum class Pol { uddm, bm, pm };
enum class Why { threshold, deadline, any_change, prediction };

struct Event {
    int node;
    std::int64_t step;
    int t_star;
    Why cause;
    double magnitude;
    std::optional<double> score;
};

struct Setup {
    Pol policy = Pol::uddm;
    int T = 5;
    double theta = 0.6;
    double alpha = 0.5;
    double beta = 0.5;
    std::size_t window = 50;
    std::size_t warmup = 3;
    Terms terms;
};

inline std::vector<double> mean_of(const std::vector<std::vector<double>>& rows, std::size_t n) {
    std::vector<double> m(rows[0].size(), 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t i = 0; i < m.size(); ++i) m[i] += rows[r][i];
    for (double& x : m) x /= static_cast<double>(n);
    return m;
}

// streams[node][k] is the k-th vector fed to node `node + 1`.
inline std::vector<Event> run(const Setup& s, const std::vector<std::vector<std::vector<double>>>& streams) {
    struct Node {
        int id;
        int offset;
        std::vector<double> last_sent;
        std::vector<double> epoch_quanta;
        std::vector<double> all_quanta;
        int t = 1;
    };
    std::vector<Node> nodes;
    int max_offset = 0;
    for (std::size_t n = 0; n < streams.size(); ++n) {
        const int id = static_cast<int>(n) + 1;
        nodes.push_back({id, id % s.T, mean_of(streams[n], s.warmup), {}, {}, 1});
        max_offset = std::max(max_offset, id % s.T);
    }

    auto norm = [&](const Node& nd, double q) {
        const std::size_t from = nd.all_quanta.size() > s.window ? nd.all_quanta.size() - s.window : 0;
        double mx = 0.0;
        for (std::size_t i = from; i < nd.all_quanta.size(); ++i) mx = std::max(mx, nd.all_quanta[i]);
        if (q <= 0.0) return 0.0;
        return std::min(1.0, q / std::max(1e-9, mx));
    };

    std::vector<Event> events;
    for (std::int64_t step = 1; step <= s.T + max_offset; ++step) {
        for (Node& nd : nodes) {
            const std::int64_t round = step - nd.offset;
            if (round < 1 || round > s.T) continue;
            const auto& rows = streams[static_cast<std::size_t>(nd.id - 1)];
            const auto current = mean_of(rows, s.warmup + static_cast<std::size_t>(round));
            double q = 0.0;
            for (std::size_t i = 0; i < current.size(); ++i) q += std::fabs(current[i] - nd.last_sent[i]);
            nd.epoch_quanta.push_back(q);
            nd.all_quanta.push_back(q);

            const auto& eq = nd.epoch_quanta;
            std::optional<std::array<double, 3>> fc;
            if (eq.size() >= 2) {
                const Holt h = holt_direct(eq, s.alpha, s.beta);
                fc = std::array<double, 3>{norm(nd, std::max(0.0, h.v + h.b)),
                                           norm(nd, std::max(0.0, h.v + 2 * h.b)),
                                           norm(nd, std::max(0.0, h.v + 3 * h.b))};
            }

            bool fire = false;
            Why why = Why::deadline;
            std::optional<double> score;
            switch (s.policy) {
                case Pol::uddm:
                    if (eq.size() >= 3) {
                        const std::size_t n = eq.size();
                        const double pp =
                            pod(s.terms, {norm(nd, eq[n - 3]), norm(nd, eq[n - 2]), norm(nd, eq[n - 1])});
                        const double pf = fc ? pod(s.terms, *fc) : pp;
                        score = std::sqrt(pp * pf);
                        fire = *score > s.theta;
                        why = Why::threshold;
                    }
                    break;
                case Pol::bm:
                    fire = q > 0.0;
                    why = Why::any_change;
                    break;
                case Pol::pm:
                    if (fc) {
                        score = ((*fc)[0] + (*fc)[1] + (*fc)[2]) / 3.0;
                        fire = *score > s.theta;
                        why = Why::prediction;
                    }
                    break;
            }
            if (!fire && nd.t == s.T) {
                fire = true;
                why = Why::deadline;
            }
            if (fire) {
                events.push_back({nd.id, step, nd.t, why, q, score});
                nd.t = 1;
                nd.epoch_quanta.clear();
                nd.last_sent = current;
            } else {
                ++nd.t;
            }
        }
    }
    return events;
}

}  // namespace ref
