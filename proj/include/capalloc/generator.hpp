#pragma once

// Capability-labeled prompt abstraction: factor templates, deterministic
// difficulty scoring against a frozen calibration pool, tertile bucketing,
// curriculum mixing between a start and end difficulty mix, and
// template-frequency caps over a sliding window.

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "capalloc/core.hpp"
#include "capalloc/rng.hpp"

namespace capalloc {

struct FactorRange {
    std::string name;
    long long lo = 0;
    long long hi = 0;
};

struct PromptTemplate {
    std::string id;
    std::size_t capability = 0;
    std::vector<FactorRange> factors;  // ordered; at least one

    void validate() const {
        if (factors.empty())
            throw std::domain_error("PromptTemplate '" + id + "': needs at least one factor");
        for (const auto& f : factors)
            if (f.hi < f.lo)
                throw std::domain_error("PromptTemplate '" + id + "': empty range for factor '" +
                                        f.name + "'");
    }
};

using FactorValues = std::map<std::string, long long>;

struct PromptInstance {
    std::string template_id;
    std::size_t capability = 0;
    FactorValues factor_values;
    double difficulty = 0.0;  // in [0, 1]
    Bucket bucket = Bucket::medium;
};

struct CurriculumSchedule {
    DifficultyMix start_mix{0.5, 0.4, 0.1};
    DifficultyMix end_mix{0.2, 0.3, 0.5};
    double template_share_cap = 0.5;  // fraction in (0, 1]
    int window = 10;                  // recent-sample count per capability

    void validate() const {
        start_mix.validate();
        end_mix.validate();
        if (!(template_share_cap > 0.0) || template_share_cap > 1.0)
            throw std::domain_error("CurriculumSchedule: template_share_cap must be in (0, 1]");
        if (window < 1 || template_share_cap * window < 1.0)
            throw std::domain_error("CurriculumSchedule: need cap * window >= 1");
    }

    DifficultyMix mix_at(double step_fraction) const {
        if (step_fraction < 0.0 || step_fraction > 1.0)
            throw std::domain_error("CurriculumSchedule: step fraction outside [0, 1]");
        const double t = step_fraction;
        return DifficultyMix{(1.0 - t) * start_mix.easy + t * end_mix.easy,
                             (1.0 - t) * start_mix.medium + t * end_mix.medium,
                             (1.0 - t) * start_mix.hard + t * end_mix.hard};
    }
};

struct FactorStats {
    double min = 0.0;
    double max = 0.0;
};

// Frozen per-capability reference pool used for normalization and tertiles.
struct CalibrationPool {
    std::vector<FactorValues> prompts;
    std::map<std::string, FactorStats> stats;

    static CalibrationPool from_prompts(std::vector<FactorValues> prompts) {
        CalibrationPool pool;
        pool.prompts = std::move(prompts);
        for (const auto& p : pool.prompts)
            for (const auto& [name, value] : p) {
                auto it = pool.stats.find(name);
                const double v = static_cast<double>(value);
                if (it == pool.stats.end())
                    pool.stats[name] = FactorStats{v, v};
                else {
                    it->second.min = std::min(it->second.min, v);
                    it->second.max = std::max(it->second.max, v);
                }
            }
        return pool;
    }
};

// Mean over the prompt's factors of (f - min_pool) / (max_pool - min_pool + eps),
// clamped to [0, 1]. Deterministic; a constant factor contributes zero.
inline double difficulty_score(const FactorValues& factors, const CalibrationPool& pool,
                               double epsilon) {
    if (pool.prompts.empty())
        throw std::domain_error("difficulty_score: empty calibration pool");
    if (!(epsilon > 0.0)) throw std::domain_error("difficulty_score: epsilon must be positive");
    if (factors.empty()) throw std::domain_error("difficulty_score: prompt has no factors");
    double sum = 0.0;
    for (const auto& [name, value] : factors) {
        auto it = pool.stats.find(name);
        if (it == pool.stats.end())
            throw std::runtime_error("difficulty_score: factor '" + name +
                                     "' missing from calibration pool");
        sum += (static_cast<double>(value) - it->second.min) /
               (it->second.max - it->second.min + epsilon);
    }
    const double d = sum / static_cast<double>(factors.size());
    return std::clamp(d, 0.0, 1.0);
}

struct BucketBoundaries {
    double q1 = 0.0;  // 1/3 empirical quantile
    double q2 = 0.0;  // 2/3 empirical quantile
    bool degenerate = false;  // pool smaller than 3: everything medium

    Bucket assign(double d) const {
        if (degenerate) return Bucket::medium;
        if (d <= q1) return Bucket::easy;  // ties fall toward the easier bucket
        if (d <= q2) return Bucket::medium;
        return Bucket::hard;
    }
};

// Tertile boundaries at the ceil(p*n) order statistics.
inline BucketBoundaries bucket_boundaries(const Vec& scores) {
    BucketBoundaries b;
    const std::size_t n = scores.size();
    if (n < 3) {
        b.degenerate = true;
        return b;
    }
    Vec sorted(scores);
    std::sort(sorted.begin(), sorted.end());
    b.q1 = sorted[(n + 2) / 3 - 1];
    b.q2 = sorted[(2 * n + 2) / 3 - 1];
    return b;
}

inline std::vector<Bucket> bucketize(const Vec& scores) {
    const BucketBoundaries b = bucket_boundaries(scores);
    std::vector<Bucket> out;
    out.reserve(scores.size());
    for (double d : scores) out.push_back(b.assign(d));
    return out;
}

// Stateful sampler for one episode. Calibration pools and tertile
// boundaries are frozen at construction; the sliding template-frequency
// window is the only mutable state.
class PromptSampler {
  public:
    PromptSampler(std::vector<PromptTemplate> templates, CurriculumSchedule schedule,
                  std::size_t capability_count, std::uint64_t pool_seed,
                  std::size_t pool_size_per_template = 60, double epsilon = 1e-6)
        : templates_(std::move(templates)), schedule_(schedule), epsilon_(epsilon) {
        schedule_.validate();
        if (!(epsilon_ > 0.0)) throw std::domain_error("PromptSampler: epsilon must be positive");
        by_capability_.assign(capability_count, {});
        for (std::size_t i = 0; i < templates_.size(); ++i) {
            templates_[i].validate();
            if (templates_[i].capability >= capability_count)
                throw DimensionError("PromptSampler: template '" + templates_[i].id +
                                     "' targets capability out of range");
            by_capability_[templates_[i].capability].push_back(i);
        }

        // Build and freeze the per-capability calibration pools.
        pools_.resize(capability_count);
        boundaries_.resize(capability_count);
        Rng pool_rng(derive_seed(pool_seed, "calibration-pool"));
        for (std::size_t c = 0; c < capability_count; ++c) {
            std::vector<FactorValues> prompts;
            for (std::size_t ti : by_capability_[c])
                for (std::size_t k = 0; k < pool_size_per_template; ++k)
                    prompts.push_back(draw_factors(templates_[ti], pool_rng));
            pools_[c] = CalibrationPool::from_prompts(std::move(prompts));
            Vec scores;
            for (const auto& p : pools_[c].prompts)
                scores.push_back(difficulty_score(p, pools_[c], epsilon_));
            boundaries_[c] = bucket_boundaries(scores);
        }

        windows_.assign(capability_count, {});
        last_use_.assign(templates_.size(), -1);
    }

    const CalibrationPool& pool(std::size_t capability) const { return pools_.at(capability); }
    const BucketBoundaries& boundaries(std::size_t capability) const {
        return boundaries_.at(capability);
    }
    const CurriculumSchedule& schedule() const { return schedule_; }

    PromptInstance sample(const Allocation& alloc, double step_fraction, Rng& rng) {
        check_size(alloc.size(), by_capability_.size(), "PromptSampler::sample allocation");
        const std::size_t capability = rng.categorical(alloc.weights());
        if (by_capability_[capability].empty())
            throw std::runtime_error("PromptSampler: no template configured for capability " +
                                     std::to_string(capability));

        const DifficultyMix mix = schedule_.mix_at(step_fraction);
        const std::size_t bucket_idx = rng.categorical({mix.easy, mix.medium, mix.hard});
        const Bucket target = static_cast<Bucket>(bucket_idx);

        const std::size_t ti = pick_template(capability, rng);
        const PromptTemplate& tmpl = templates_[ti];

        // Condition the factor draw on the target bucket by rejection; if the
        // template cannot reach the bucket within the attempt cap, keep the
        // closest draw and label it with its true bucket.
        const BucketBoundaries& bounds = boundaries_[capability];
        FactorValues best_factors;
        double best_d = 0.0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int attempt = 0; attempt < 200; ++attempt) {
            FactorValues f = draw_factors(tmpl, rng);
            const double d = difficulty_score(f, pools_[capability], epsilon_);
            const double dist = bucket_distance(d, target, bounds);
            if (dist < best_dist) {
                best_dist = dist;
                best_factors = std::move(f);
                best_d = d;
            }
            if (best_dist == 0.0) break;
        }

        PromptInstance inst;
        inst.template_id = tmpl.id;
        inst.capability = capability;
        inst.factor_values = std::move(best_factors);
        inst.difficulty = best_d;
        inst.bucket = bounds.assign(best_d);

        auto& win = windows_[capability];
        win.push_back(ti);
        while (static_cast<int>(win.size()) > schedule_.window) win.pop_front();
        last_use_[ti] = ++use_counter_;
        return inst;
    }

  private:
    static FactorValues draw_factors(const PromptTemplate& tmpl, Rng& rng) {
        FactorValues f;
        for (const auto& fr : tmpl.factors) f[fr.name] = rng.uniform_int(fr.lo, fr.hi);
        return f;
    }

    static double bucket_distance(double d, Bucket target, const BucketBoundaries& b) {
        if (b.degenerate) return 0.0;
        switch (target) {
            case Bucket::easy: return d <= b.q1 ? 0.0 : d - b.q1;
            case Bucket::medium:
                if (d <= b.q1) return b.q1 - d;
                return d <= b.q2 ? 0.0 : d - b.q2;
            case Bucket::hard: return d > b.q2 ? 0.0 : b.q2 - d;
        }
        throw std::domain_error("bucket_distance: invalid bucket");
    }

    // Uniform among templates whose recent-window share is below the cap;
    // least-recently-used fallback when everything is capped.
    std::size_t pick_template(std::size_t capability, Rng& rng) {
        const auto& ids = by_capability_[capability];
        const auto& win = windows_[capability];
        std::vector<std::size_t> eligible;
        for (std::size_t ti : ids) {
            const long count = static_cast<long>(std::count(win.begin(), win.end(), ti));
            if (static_cast<double>(count) <
                schedule_.template_share_cap * static_cast<double>(schedule_.window))
                eligible.push_back(ti);
        }
        if (!eligible.empty()) return eligible[rng.uniform_index(eligible.size())];
        std::size_t lru = ids.front();
        for (std::size_t ti : ids)
            if (last_use_[ti] < last_use_[lru]) lru = ti;
        return lru;
    }

    std::vector<PromptTemplate> templates_;
    CurriculumSchedule schedule_;
    double epsilon_;
    std::vector<std::vector<std::size_t>> by_capability_;
    std::vector<CalibrationPool> pools_;
    std::vector<BucketBoundaries> boundaries_;
    std::vector<std::deque<std::size_t>> windows_;
    std::vector<long> last_use_;
    long use_counter_ = 0;
};

// -------- template library JSON --------

inline std::vector<PromptTemplate> templates_from_json(const nlohmann::json& j) {
    std::vector<PromptTemplate> out;
    for (const auto& t : j) {
        PromptTemplate tmpl;
        tmpl.id = t.at("id").get<std::string>();
        tmpl.capability = t.at("capability").get<std::size_t>();
        for (const auto& [name, range] : t.at("factors").items()) {
            if (!range.is_array() || range.size() != 2)
                throw std::runtime_error("template '" + tmpl.id + "': factor '" + name +
                                         "' must be a [lo, hi] pair");
            tmpl.factors.push_back(
                FactorRange{name, range[0].get<long long>(), range[1].get<long long>()});
        }
        tmpl.validate();
        out.push_back(std::move(tmpl));
    }
    return out;
}

// One generic template per capability, for configs that do not specify a
// library.
inline std::vector<PromptTemplate> default_templates(std::size_t capability_count) {
    std::vector<PromptTemplate> out;
    for (std::size_t c = 0; c < capability_count; ++c) {
        PromptTemplate t;
        t.id = "default-c" + std::to_string(c);
        t.capability = c;
        t.factors = {FactorRange{"constraints", 1, 12}, FactorRange{"hops", 1, 8}};
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace capalloc
