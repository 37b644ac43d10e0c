#pragma once

// Interval Type-2 fuzzy inference over three normalized quanta.
//
// Each linguistic term carries an upper and a lower trapezoidal membership
// function; the band between them is the footprint of uncertainty. Rules fire
// with the minimum t-norm applied to both bounds, each firing interval is
// collapsed to its midpoint (Nie-Tan), and the crisp output is the
// firing-weighted average of the consequent term centroids.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>

#include "qsim/error.hpp"

namespace qsim::t2 {

enum class Term : std::uint8_t { low = 0, medium = 1, high = 2 };

inline constexpr std::array<Term, 3> kTerms{Term::low, Term::medium, Term::high};

constexpr int rank(Term t) noexcept { return static_cast<int>(t); }

constexpr std::string_view to_string(Term t) noexcept {
    switch (t) {
        case Term::low: return "low";
        case Term::medium: return "medium";
        case Term::high: return "high";
    }
    return "?";
}

inline std::optional<Term> parse_term(std::string_view s) noexcept {
    for (Term t : kTerms)
        if (to_string(t) == s) return t;
    return std::nullopt;
}

// Trapezoid (a, b, c, d) scaled to `height`. a == b or c == d give shoulders.
struct Trapezoid {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
    double d = 0.0;
    double height = 1.0;

    [[nodiscard]] double operator()(double x) const noexcept {
        if (x < a || x > d) return 0.0;
        if (x >= b && x <= c) return height;
        if (x < b) return height * (x - a) / (b - a);
        return height * (d - x) / (d - c);
    }

    [[nodiscard]] bool well_formed() const noexcept {
        return 0.0 <= a && a <= b && b <= c && c <= d && d <= 1.0 && height > 0.0 &&
               height <= 1.0;
    }
};

struct IntervalMembership {
    double lower = 0.0;
    double upper = 0.0;

    friend bool operator==(const IntervalMembership&, const IntervalMembership&) = default;
};

class IntervalTerm {
public:
    IntervalTerm() = default;

    IntervalTerm(Term label, Trapezoid upper, Trapezoid lower)
        : label_(label), upper_(upper), lower_(lower) {
        if (!upper.well_formed() || !lower.well_formed())
            throw ConfigError("term '" + std::string(to_string(label)) +
                              "': trapezoid must satisfy 0 <= a <= b <= c <= d <= 1, 0 < h <= 1");
        // Containment of the lower shape inside the upper one is guaranteed by
        // a narrower support, an inner core and a lower height.
        if (lower.a < upper.a || lower.b < upper.b || lower.c > upper.c || lower.d > upper.d ||
            lower.height > upper.height)
            throw ConfigError("term '" + std::string(to_string(label)) +
                              "': lower membership must lie inside the upper one");
    }

    // Lower shape = upper shape with each sloped edge shrunk by `shrink` of its
    // width toward the core, scaled to height h.
    static IntervalTerm from_upper(Term label, Trapezoid upper, double shrink, double h) {
        if (!(shrink >= 0.0 && shrink <= 1.0))
            throw ConfigError("lower-shape shrink must lie in [0,1]");
        Trapezoid lower{upper.a + shrink * (upper.b - upper.a), upper.b, upper.c,
                        upper.d - shrink * (upper.d - upper.c), h};
        return IntervalTerm(label, upper, lower);
    }

    [[nodiscard]] Term label() const noexcept { return label_; }
    [[nodiscard]] const Trapezoid& upper() const noexcept { return upper_; }
    [[nodiscard]] const Trapezoid& lower() const noexcept { return lower_; }

    [[nodiscard]] IntervalMembership membership(double x) const noexcept {
        return {lower_(x), upper_(x)};
    }

private:
    Term label_ = Term::low;
    Trapezoid upper_;
    Trapezoid lower_;
};

struct TermSet {
    static constexpr double kDefaultShrink = 0.1;
    static constexpr double kDefaultLowerHeight = 0.9;

    std::array<IntervalTerm, 3> terms;

    [[nodiscard]] const IntervalTerm& operator[](Term t) const noexcept {
        return terms[static_cast<std::size_t>(rank(t))];
    }

    static TermSet symmetric(double shrink = kDefaultShrink, double h = kDefaultLowerHeight) {
        return from_uppers({Trapezoid{0.0, 0.0, 0.2, 0.45}, Trapezoid{0.25, 0.45, 0.55, 0.75},
                            Trapezoid{0.55, 0.8, 1.0, 1.0}},
                           shrink, h);
    }

    static TermSet from_uppers(const std::array<Trapezoid, 3>& uppers, double shrink, double h) {
        TermSet s;
        for (Term t : kTerms)
            s.terms[static_cast<std::size_t>(rank(t))] =
                IntervalTerm::from_upper(t, uppers[static_cast<std::size_t>(rank(t))], shrink, h);
        return s;
    }
};

// Clamps x into [0,1]; out-of-range input is reported on std::clog.
inline IntervalMembership fuzzify(double x, const IntervalTerm& term) {
    if (!(x >= 0.0 && x <= 1.0)) {
        std::clog << "qsim: fuzzify input " << x << " outside [0,1], clamped\n";
        x = std::isnan(x) ? 0.0 : std::clamp(x, 0.0, 1.0);
    }
    return term.membership(x);
}

struct Rule {
    std::array<Term, 3> antecedents{};
    Term consequent = Term::low;
};

// Minimum t-norm applied separately to the lower and upper bounds.
inline IntervalMembership fire_rule(const Rule& /*rule*/,
                                    const std::array<IntervalMembership, 3>& memberships) noexcept {
    IntervalMembership out = memberships[0];
    for (std::size_t i = 1; i < 3; ++i) {
        out.lower = std::min(out.lower, memberships[i].lower);
        out.upper = std::min(out.upper, memberships[i].upper);
    }
    return out;
}

// Complete 3 x 3 x 3 rule grid, indexed by the antecedent ranks.
class RuleBase {
public:
    static constexpr std::size_t kSize = 27;

    static constexpr std::size_t index(Term a, Term b, Term c) noexcept {
        return static_cast<std::size_t>(rank(a) * 9 + rank(b) * 3 + rank(c));
    }

    // Consequent rank = round-half-up of the mean antecedent rank.
    static RuleBase rank_average() {
        RuleBase rb;
        for (Term a : kTerms)
            for (Term b : kTerms)
                for (Term c : kTerms) {
                    const int sum = rank(a) + rank(b) + rank(c);
                    // round(sum / 3) half-up, in integers
                    const int r = (2 * sum + 3) / 6;
                    rb.consequents_[index(a, b, c)] = static_cast<Term>(r);
                }
        return rb;
    }

    void set(Term a, Term b, Term c, Term consequent) noexcept {
        consequents_[index(a, b, c)] = consequent;
    }

    [[nodiscard]] Term consequent(Term a, Term b, Term c) const noexcept {
        return consequents_[index(a, b, c)];
    }

    [[nodiscard]] Rule rule(std::size_t i) const noexcept {
        return Rule{{static_cast<Term>(i / 9), static_cast<Term>((i / 3) % 3),
                     static_cast<Term>(i % 3)},
                    consequents_[i]};
    }

    // Raising any single antecedent by one label never lowers the consequent.
    [[nodiscard]] bool is_monotone() const noexcept {
        for (std::size_t i = 0; i < kSize; ++i) {
            const Rule r = rule(i);
            for (std::size_t pos = 0; pos < 3; ++pos) {
                if (r.antecedents[pos] == Term::high) continue;
                auto up = r.antecedents;
                up[pos] = static_cast<Term>(rank(up[pos]) + 1);
                if (rank(consequent(up[0], up[1], up[2])) < rank(r.consequent)) return false;
            }
        }
        return true;
    }

private:
    std::array<Term, kSize> consequents_{};
};

// Centroid of the term's midpoint membership (lower + upper) / 2 sampled on a
// uniform grid over [0,1].
inline double grid_centroid(const IntervalTerm& term, std::size_t points) {
    if (points < 2) throw ConfigError("centroid grid needs at least 2 points");
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(points - 1);
        const IntervalMembership m = term.membership(x);
        const double mu = 0.5 * (m.lower + m.upper);
        num += x * mu;
        den += mu;
    }
    if (!(den > 0.0))
        throw ConfigError("term '" + std::string(to_string(term.label())) +
                          "' has zero mass on the centroid grid");
    return num / den;
}

struct PoD {
    double value = 0.0;
};

class Engine {
public:
    static constexpr std::size_t kDefaultGrid = 101;

    Engine() : Engine(TermSet::symmetric(), TermSet::symmetric(), RuleBase::rank_average()) {}

    Engine(TermSet inputs, TermSet outputs, RuleBase rules, std::size_t grid = kDefaultGrid)
        : inputs_(std::move(inputs)), outputs_(std::move(outputs)), rules_(rules) {
        if (!rules_.is_monotone())
            std::clog << "qsim: rule base is not monotone; PoD monotonicity is not guaranteed\n";
        for (Term t : kTerms)
            centroids_[static_cast<std::size_t>(rank(t))] = grid_centroid(outputs_[t], grid);
    }

    [[nodiscard]] const TermSet& inputs() const noexcept { return inputs_; }
    [[nodiscard]] const TermSet& outputs() const noexcept { return outputs_; }
    [[nodiscard]] const RuleBase& rules() const noexcept { return rules_; }

    [[nodiscard]] double centroid(Term t) const noexcept {
        return centroids_[static_cast<std::size_t>(rank(t))];
    }

    [[nodiscard]] PoD evaluate(const std::array<double, 3>& x) const {
        // memberships[input][term]
        std::array<std::array<IntervalMembership, 3>, 3> m{};
        for (std::size_t i = 0; i < 3; ++i)
            for (Term t : kTerms) m[i][static_cast<std::size_t>(rank(t))] = fuzzify(x[i], inputs_[t]);

        double num = 0.0;
        double den = 0.0;
        for (std::size_t k = 0; k < RuleBase::kSize; ++k) {
            const Rule r = rules_.rule(k);
            const IntervalMembership fired =
                fire_rule(r, {m[0][static_cast<std::size_t>(rank(r.antecedents[0]))],
                              m[1][static_cast<std::size_t>(rank(r.antecedents[1]))],
                              m[2][static_cast<std::size_t>(rank(r.antecedents[2]))]});
            const double w = 0.5 * (fired.lower + fired.upper);
            num += w * centroid(r.consequent);
            den += w;
        }
        if (!(den > 0.0)) return PoD{0.0};
        return PoD{std::clamp(num / den, 0.0, 1.0)};
    }

private:
    TermSet inputs_;
    TermSet outputs_;
    RuleBase rules_;
    std::array<double, 3> centroids_{};
};

inline PoD evaluate_pod(const std::array<double, 3>& inputs, const Engine& engine) {
    return engine.evaluate(inputs);
}

}  // namespace qsim::t2
