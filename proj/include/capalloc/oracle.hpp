#pragma once

// Ground-truth solvers and theoretical checks: water-filling for the
// separable concave allocation objective, a brute-force grid oracle, the
// marginal-gain shift test, and regret accounting over recorded traces.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "capalloc/core.hpp"
#include "capalloc/gains.hpp"
#include "capalloc/trace.hpp"

namespace capalloc {

// Separable concave objective sum_c r_c * G_c(b_c). Forms are restricted to
// the concave curves; the linear form has no interior optimum and is
// rejected.
struct GainSpec {
    std::vector<GainParams> gains;
    Vec requirement;

    std::size_t size() const { return gains.size(); }

    void validate() const {
        if (gains.empty()) throw DimensionError("GainSpec: empty");
        check_size(requirement.size(), gains.size(), "GainSpec requirement");
        check_finite(requirement, "GainSpec requirement");
        for (const auto& g : gains) {
            g.validate();
            if (g.form == GainForm::linear)
                throw std::domain_error("GainSpec: gains must be strictly concave (sqrt or exp)");
        }
    }

    double objective(const Vec& b) const {
        check_size(b.size(), gains.size(), "GainSpec::objective");
        double v = 0.0;
        for (std::size_t c = 0; c < gains.size(); ++c) v += requirement[c] * gain_value(gains[c], b[c]);
        return v;
    }

    double weighted_marginal(std::size_t c, double b) const {
        return requirement[c] * gain_derivative(gains[c], b);
    }
};

struct WaterfillResult {
    Vec budget;              // b*, sums to B over the support
    double nu = 0.0;         // KKT multiplier
    double objective = 0.0;
    bool degenerate = false;               // all weighted amplitudes zero
    bool closed_form = false;              // sqrt-only fast path
    double bisection_interval = 0.0;       // final [lo, hi] width diagnostic
};

namespace detail {

// Tokens demanded by capability c at water level nu (inverse marginal).
inline double waterfill_demand(const GainSpec& spec, std::size_t c, double nu) {
    const auto& g = spec.gains[c];
    const double ra = spec.requirement[c] * g.amplitude;
    if (ra <= 0.0) return 0.0;
    switch (g.form) {
        case GainForm::sqrt: {
            const double s = ra / (2.0 * nu);
            return s * s;
        }
        case GainForm::exp_saturation: {
            const double arg = ra / (g.scale * nu);
            return arg > 1.0 ? g.scale * std::log(arg) : 0.0;
        }
        case GainForm::linear: break;
    }
    throw std::domain_error("waterfill_demand: invalid form");
}

}  // namespace detail

// Equalizes weighted marginal gains among active capabilities:
// r_c G'_c(b*_c) = nu* where b*_c > 0, <= nu* elsewhere; sum b* = B over the
// support. Closed form for all-sqrt instances, bisection on nu otherwise.
inline WaterfillResult waterfill(const GainSpec& spec, double B,
                                 const std::vector<std::size_t>& support) {
    spec.validate();
    if (!(B > 0.0) || !std::isfinite(B)) throw std::domain_error("waterfill: B must be positive");
    if (support.empty()) throw DimensionError("waterfill: empty support");
    for (std::size_t c : support)
        if (c >= spec.size()) throw DimensionError("waterfill: support index out of range");

    WaterfillResult res;
    res.budget.assign(spec.size(), 0.0);

    std::vector<std::size_t> active;
    bool all_sqrt = true;
    for (std::size_t c : support) {
        if (spec.requirement[c] * spec.gains[c].amplitude > 0.0) {
            active.push_back(c);
            if (spec.gains[c].form != GainForm::sqrt) all_sqrt = false;
        }
    }

    if (active.empty()) {
        // Any allocation is optimal; report uniform over the support.
        for (std::size_t c : support) res.budget[c] = B / static_cast<double>(support.size());
        res.degenerate = true;
        res.objective = spec.objective(res.budget);
        return res;
    }

    if (all_sqrt) {
        // b_c proportional to (r_c a_c)^2 on the active set.
        double denom = 0.0;
        for (std::size_t c : active) {
            const double ra = spec.requirement[c] * spec.gains[c].amplitude;
            denom += ra * ra;
        }
        for (std::size_t c : active) {
            const double ra = spec.requirement[c] * spec.gains[c].amplitude;
            res.budget[c] = B * ra * ra / denom;
        }
        const std::size_t c0 = active.front();
        res.nu = spec.weighted_marginal(c0, res.budget[c0]);
        res.closed_form = true;
        res.objective = spec.objective(res.budget);
        return res;
    }

    double hi = 0.0;
    for (std::size_t c : active) hi = std::max(hi, spec.weighted_marginal(c, 0.0));
    double lo = 0.0;  // demand(0+) is unbounded, so the root lies in (0, hi]
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        double demand = 0.0;
        for (std::size_t c : active) demand += detail::waterfill_demand(spec, c, mid);
        if (demand > B)
            lo = mid;
        else
            hi = mid;
    }
    res.nu = 0.5 * (lo + hi);
    res.bisection_interval = hi - lo;
    double total = 0.0;
    for (std::size_t c : active) {
        res.budget[c] = detail::waterfill_demand(spec, c, res.nu);
        total += res.budget[c];
    }
    // Feasibility: scale out the residual bisection slack on the active set.
    if (total > 0.0)
        for (std::size_t c : active) res.budget[c] *= B / total;
    res.objective = spec.objective(res.budget);
    return res;
}

inline WaterfillResult waterfill(const GainSpec& spec, double B) {
    std::vector<std::size_t> support(spec.size());
    std::iota(support.begin(), support.end(), 0);
    return waterfill(spec, B, support);
}

struct BruteForceResult {
    Vec budget;
    double objective = 0.0;
};

// Exhaustive search over the simplex*B grid with `resolution` cells per
// axis. Combinatorial; refuses above four capabilities.
inline BruteForceResult brute_force_alloc(const GainSpec& spec, double B, int resolution) {
    spec.validate();
    if (spec.size() > 4)
        throw DimensionError("brute_force_alloc: exhaustive grid limited to |C| <= 4");
    if (resolution < 1) throw std::domain_error("brute_force_alloc: resolution must be >= 1");
    if (B < 0.0) throw std::domain_error("brute_force_alloc: negative budget");

    BruteForceResult best;
    best.budget.assign(spec.size(), 0.0);
    if (B == 0.0) {
        best.objective = spec.objective(best.budget);
        return best;
    }

    const std::size_t n = spec.size();
    std::vector<int> counts(n, 0);
    best.objective = -std::numeric_limits<double>::infinity();
    Vec b(n, 0.0);
    // Enumerate compositions of `resolution` into n parts.
    std::function<void(std::size_t, int)> recurse = [&](std::size_t idx, int left) {
        if (idx + 1 == n) {
            counts[idx] = left;
            for (std::size_t c = 0; c < n; ++c)
                b[c] = B * static_cast<double>(counts[c]) / static_cast<double>(resolution);
            const double v = spec.objective(b);
            if (v > best.objective) {
                best.objective = v;
                best.budget = b;
            }
            return;
        }
        for (int k = 0; k <= left; ++k) {
            counts[idx] = k;
            recurse(idx + 1, left - k);
        }
    };
    recurse(0, resolution);
    return best;
}

// Whether shifting an infinitesimal budget from the one-hot target to the
// alternative improves the proxy objective: r_{c'} G'_{c'}(0) > r_{cbar}
// G'_{cbar}(b). A sqrt-form alternative has unbounded marginal at zero, so
// the answer is true exactly when its weighted amplitude is positive.
inline bool shift_improves(const GainSpec& spec, std::size_t target, double b,
                           std::size_t alternative) {
    spec.validate();
    if (target >= spec.size() || alternative >= spec.size())
        throw DimensionError("shift_improves: capability index out of range");
    if (b < 0.0 || !std::isfinite(b)) throw std::domain_error("shift_improves: b must be >= 0");

    const double r_alt = spec.requirement[alternative];
    const auto& g_alt = spec.gains[alternative];
    if (r_alt * g_alt.amplitude <= 0.0) return false;
    if (g_alt.form == GainForm::sqrt) return true;

    const double lhs = r_alt * (g_alt.amplitude / g_alt.scale);  // exp marginal at 0
    const double rhs = spec.weighted_marginal(target, b);
    return lhs > rhs;
}

struct RegretReport {
    Vec per_step_gap;
    Vec per_step_sigma;
    double cumulative_regret = 0.0;
    double bound = 0.0;  // 2 kappa sum sigma(selected)
    std::vector<int> violation_steps;  // steps where gap > 2 kappa sigma
};

// Scores each recorded step's candidate set under the supplied analytic
// conditional reward and checks the instantaneous bound
// gap_t <= 2 kappa sigma_t.
inline RegretReport regret_accounting(
    const EpisodeTrace& trace,
    const std::function<double(const StepRecord&, const Vec& action)>& true_reward) {
    RegretReport rep;
    const double kappa = trace.meta.kappa;
    for (const auto& s : trace.steps) {
        if (s.candidates.empty())
            throw std::runtime_error("regret_accounting: step " + std::to_string(s.step) +
                                     " is missing its candidate set");
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& cand : s.candidates) best = std::max(best, true_reward(s, cand));
        const double selected = true_reward(s, s.selected);
        const double gap = best - selected;
        rep.per_step_gap.push_back(gap);
        rep.per_step_sigma.push_back(s.sigma);
        rep.cumulative_regret += gap;
        rep.bound += 2.0 * kappa * s.sigma;
        if (gap > 2.0 * kappa * s.sigma + 1e-9) rep.violation_steps.push_back(s.step);
    }
    return rep;
}

}  // namespace capalloc
