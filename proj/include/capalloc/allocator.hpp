#pragma once

// The decision core: bandit context assembly, candidate-set construction,
// proxy reward, bootstrap-ensemble reward regression, UCB selection,
// exploration calibration, and the baseline policies.

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "capalloc/core.hpp"
#include "capalloc/mlp.hpp"
#include "capalloc/rng.hpp"

namespace capalloc {

// x_t = [r; s_probe; remaining budget fraction; flattened recent
// (allocation, gain) pairs]. Fixed total length for a given run.
struct BanditContext {
    Vec requirement;
    Vec probe_profile;
    double remaining_budget_frac = 1.0;
    Vec history;  // H * (|C| + 1) entries, zero-padded

    Vec features() const {
        Vec f;
        f.reserve(requirement.size() + probe_profile.size() + 1 + history.size());
        f.insert(f.end(), requirement.begin(), requirement.end());
        f.insert(f.end(), probe_profile.begin(), probe_profile.end());
        f.push_back(remaining_budget_frac);
        f.insert(f.end(), history.begin(), history.end());
        return f;
    }
};

inline Vec flatten_history(const std::deque<std::pair<Vec, double>>& recent, std::size_t horizon,
                           std::size_t capability_count) {
    Vec out(horizon * (capability_count + 1), 0.0);
    const std::size_t take = std::min(horizon, recent.size());
    // Most recent pair first.
    for (std::size_t i = 0; i < take; ++i) {
        const auto& [alloc, gain] = recent[recent.size() - 1 - i];
        const std::size_t base = i * (capability_count + 1);
        for (std::size_t c = 0; c < capability_count; ++c) out[base + c] = alloc[c];
        out[base + capability_count] = gain;
    }
    return out;
}

struct RewardConfig {
    double beta = 1.0;         // spillover weight
    double lambda_cost = 0.0;  // budget weight
    std::size_t essential_k = 3;

    void validate(std::size_t capability_count) const {
        if (beta < 0.0 || lambda_cost < 0.0)
            throw std::domain_error("RewardConfig: beta and lambda_cost must be >= 0");
        if (essential_k < 1 || essential_k > capability_count)
            throw std::domain_error("RewardConfig: essential_k must be in [1, |C|]");
    }
};

// Indices of the k largest requirement weights; ties break toward the
// lower index.
inline std::vector<std::size_t> essential_set(const Vec& r, std::size_t k) {
    if (k < 1 || k > r.size()) throw std::domain_error("essential_set: k out of range");
    std::vector<std::size_t> idx(r.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
    idx.resize(k);
    return idx;
}

// r^T ds - beta * sum_{c in C_ess} r_c [-ds_c]_+ - lambda * cost.
inline double proxy_reward(const Vec& requirement, const Vec& delta_probe, double cost,
                           const RewardConfig& cfg) {
    check_size(delta_probe.size(), requirement.size(), "proxy_reward");
    cfg.validate(requirement.size());
    double aligned = dot(requirement, delta_probe);
    double spill = 0.0;
    for (std::size_t c : essential_set(requirement, cfg.essential_k))
        spill += requirement[c] * std::max(0.0, -delta_probe[c]);
    return aligned - cfg.beta * spill - cfg.lambda_cost * cost;
}

struct CandidateConfig {
    double grid_step = 0.1;
    std::size_t top_k = 3;
};

// Union of the previous allocation, single-pair transfers of grid_step mass
// that stay nonnegative, and sparse grid allocations supported on the top-k
// requirement capabilities. Deduplicated at 1e-9; deterministic order (the
// UCB tie rule depends on it).
inline std::vector<Allocation> build_candidates(const Allocation& prev, const Vec& requirement,
                                                const CandidateConfig& cfg) {
    check_size(requirement.size(), prev.size(), "build_candidates requirement");
    if (!(cfg.grid_step > 0.0) || cfg.grid_step > 0.5)
        throw std::domain_error("build_candidates: grid_step must be in (0, 0.5]");
    if (cfg.top_k < 1) throw std::domain_error("build_candidates: top_k must be >= 1");

    std::vector<Allocation> out;
    auto push_unique = [&](Allocation a) {
        for (const auto& existing : out)
            if (existing.approx_equal(a)) return;
        out.push_back(std::move(a));
    };

    push_unique(prev);

    const std::size_t n = prev.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            if (prev[j] - cfg.grid_step < -kSimplexTol) continue;
            Vec w = prev.weights();
            w[i] += cfg.grid_step;
            w[j] = std::max(0.0, w[j] - cfg.grid_step);
            push_unique(Allocation::normalized(std::move(w)));
        }
    }

    const std::size_t k = std::min(cfg.top_k, n);
    const std::vector<std::size_t> support = essential_set(requirement, k);
    const int units = std::max(1, static_cast<int>(std::lround(1.0 / cfg.grid_step)));
    std::vector<std::vector<int>> compositions;
    std::vector<int> cur(k, 0);
    std::function<void(std::size_t, int)> enumerate = [&](std::size_t idx, int left) {
        if (idx + 1 == k) {
            cur[idx] = left;
            compositions.push_back(cur);
            return;
        }
        for (int c = 0; c <= left; ++c) {
            cur[idx] = c;
            enumerate(idx + 1, left - c);
        }
    };
    enumerate(0, units);
    for (const auto& comp : compositions) {
        Vec w(n, 0.0);
        for (std::size_t i = 0; i < k; ++i)
            w[support[i]] = static_cast<double>(comp[i]) * cfg.grid_step;
        push_unique(Allocation::normalized(std::move(w)));
    }
    return out;
}

struct RewardRecord {
    Vec context;
    Vec action;
    double reward = 0.0;
};

struct EnsembleConfig {
    std::size_t members = 4;  // J >= 2
    std::size_t hidden = 32;
    int epochs = 200;
    double learning_rate = 0.05;
    double kappa = 1.0;
};

struct Prediction {
    double mu = 0.0;
    double sigma = 0.0;
};

class RewardEnsemble {
  public:
    RewardEnsemble() = default;

    double kappa() const { return kappa_; }
    void set_kappa(double k) { kappa_ = k; }
    std::size_t member_count() const { return members_.size(); }
    const std::vector<std::uint64_t>& member_seeds() const { return member_seeds_; }

    Prediction predict(const Vec& context, const Vec& action) const {
        if (members_.empty()) throw std::runtime_error("RewardEnsemble: not fitted");
        Vec x;
        x.reserve(context.size() + action.size());
        x.insert(x.end(), context.begin(), context.end());
        x.insert(x.end(), action.begin(), action.end());
        const Vec xn = scaler_.transform(x);
        Vec outs(members_.size());
        double mean = 0.0;
        for (std::size_t j = 0; j < members_.size(); ++j) {
            outs[j] = members_[j].forward(xn)[0] * target_sd_ + target_mean_;
            mean += outs[j];
        }
        mean /= static_cast<double>(members_.size());
        double ss = 0.0;
        for (double o : outs) ss += (o - mean) * (o - mean);
        const double sigma = members_.size() > 1
                                 ? std::sqrt(ss / static_cast<double>(members_.size() - 1))
                                 : 0.0;
        return Prediction{mean, sigma};
    }

    nlohmann::json to_json() const {
        nlohmann::json members = nlohmann::json::array();
        for (const auto& m : members_) members.push_back(m.to_json());
        return {{"members", members},
                {"kappa", kappa_},
                {"member_seeds", member_seeds_},
                {"scaler", scaler_.to_json()},
                {"target_mean", target_mean_},
                {"target_sd", target_sd_}};
    }

    static RewardEnsemble from_json(const nlohmann::json& j) {
        RewardEnsemble e;
        for (const auto& m : j.at("members")) e.members_.push_back(Mlp::from_json(m));
        e.kappa_ = j.at("kappa").get<double>();
        e.member_seeds_ = j.at("member_seeds").get<std::vector<std::uint64_t>>();
        e.scaler_ = FeatureScaler::from_json(j.at("scaler"));
        e.target_mean_ = j.at("target_mean").get<double>();
        e.target_sd_ = j.at("target_sd").get<double>();
        return e;
    }

    friend RewardEnsemble ensemble_fit_seeded(const std::vector<RewardRecord>&,
                                              const EnsembleConfig&,
                                              const std::vector<std::uint64_t>&);

  private:
    std::vector<Mlp> members_;
    std::vector<std::uint64_t> member_seeds_;
    FeatureScaler scaler_;
    double target_mean_ = 0.0;
    double target_sd_ = 1.0;
    double kappa_ = 1.0;
};

// Each member trains on its own bootstrap resample (with replacement, same
// size as the buffer) of (context + action) -> reward. Members sharing a
// seed produce identical resamples and weights, hence zero disagreement.
inline RewardEnsemble ensemble_fit_seeded(const std::vector<RewardRecord>& buffer,
                                          const EnsembleConfig& cfg,
                                          const std::vector<std::uint64_t>& member_seeds) {
    if (buffer.empty()) throw std::runtime_error("ensemble_fit: empty reward buffer");
    if (member_seeds.size() < 2)
        throw std::domain_error("ensemble_fit: at least 2 members required (sigma undefined)");
    if (buffer.size() < member_seeds.size())
        throw std::runtime_error("ensemble_fit: need at least one record per member");

    const std::size_t d = buffer.front().context.size() + buffer.front().action.size();
    std::vector<Vec> rows;
    Vec targets;
    rows.reserve(buffer.size());
    for (const auto& rec : buffer) {
        Vec x;
        x.reserve(d);
        x.insert(x.end(), rec.context.begin(), rec.context.end());
        x.insert(x.end(), rec.action.begin(), rec.action.end());
        check_size(x.size(), d, "ensemble_fit record");
        rows.push_back(std::move(x));
        targets.push_back(rec.reward);
    }

    RewardEnsemble ens;
    ens.kappa_ = cfg.kappa;
    ens.member_seeds_ = member_seeds;
    ens.scaler_ = FeatureScaler::fit(rows);
    double mean = 0.0;
    for (double t : targets) mean += t;
    mean /= static_cast<double>(targets.size());
    double var = 0.0;
    for (double t : targets) var += (t - mean) * (t - mean);
    const double sd = std::sqrt(var / static_cast<double>(targets.size()));
    ens.target_mean_ = mean;
    ens.target_sd_ = sd > 1e-12 ? sd : 1.0;

    std::vector<Vec> normalized;
    normalized.reserve(rows.size());
    for (const auto& r : rows) normalized.push_back(ens.scaler_.transform(r));
    Vec y(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i)
        y[i] = (targets[i] - ens.target_mean_) / ens.target_sd_;

    for (std::size_t j = 0; j < member_seeds.size(); ++j) {
        Rng boot(derive_seed(member_seeds[j], "bootstrap"));
        std::vector<std::size_t> sample(rows.size());
        for (auto& s : sample) s = boot.uniform_index(rows.size());

        Mlp net(d, cfg.hidden, 1, derive_seed(member_seeds[j], "member-init"));
        const double batch_scale = 1.0 / static_cast<double>(sample.size());
        for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
            MlpGrad grad = net.zero_grad();
            double loss = 0.0;
            for (std::size_t s : sample) {
                Vec hidden;
                const Vec out = net.forward(normalized[s], &hidden);
                const double err = out[0] - y[s];
                loss += err * err;
                net.backward(normalized[s], hidden, Vec{2.0 * err}, grad);
            }
            if (!std::isfinite(loss))
                throw std::runtime_error("ensemble_fit: member " + std::to_string(j) +
                                         " diverged at epoch " + std::to_string(epoch));
            net.apply_gradient(grad, cfg.learning_rate, batch_scale);
        }
        ens.members_.push_back(std::move(net));
    }
    return ens;
}

inline RewardEnsemble ensemble_fit(const std::vector<RewardRecord>& buffer,
                                   const EnsembleConfig& cfg, std::uint64_t seed) {
    std::vector<std::uint64_t> seeds;
    for (std::size_t j = 0; j < cfg.members; ++j) seeds.push_back(derive_seed(seed, "member", j));
    return ensemble_fit_seeded(buffer, cfg, seeds);
}

inline Prediction ensemble_predict(const RewardEnsemble& ens, const BanditContext& ctx,
                                   const Allocation& action) {
    return ens.predict(ctx.features(), action.weights());
}

struct UcbChoice {
    std::size_t index = 0;
    double mu = 0.0;
    double sigma = 0.0;
};

// argmax over candidates of mu + kappa sigma; exact ties break by higher
// mu, then lower candidate index (the forward scan keeps the first).
inline UcbChoice select_ucb_scored(const std::vector<Prediction>& scored, double kappa) {
    if (scored.empty()) throw std::runtime_error("select_ucb: empty candidate set");
    UcbChoice best{0, scored[0].mu, scored[0].sigma};
    double best_score = scored[0].mu + kappa * scored[0].sigma;
    for (std::size_t i = 1; i < scored.size(); ++i) {
        const double score = scored[i].mu + kappa * scored[i].sigma;
        if (score > best_score || (score == best_score && scored[i].mu > best.mu)) {
            best = UcbChoice{i, scored[i].mu, scored[i].sigma};
            best_score = score;
        }
    }
    return best;
}

inline UcbChoice select_ucb(const RewardEnsemble& ens, const BanditContext& ctx,
                            const std::vector<Allocation>& candidates) {
    std::vector<Prediction> scored;
    scored.reserve(candidates.size());
    for (const auto& c : candidates) scored.push_back(ensemble_predict(ens, ctx, c));
    return select_ucb_scored(scored, ens.kappa());
}

struct CalibrationConfig {
    double stagnation_threshold = 1e-3;
    double kappa_decay = 0.5;  // in (0, 1)
};

struct CalibrationResult {
    bool fitted = false;   // false when fewer than 2 checkpoints
    double alpha = 0.0;    // U ~ alpha * Rcum + gamma
    double gamma = 0.0;
    double kappa = 0.0;
    bool stagnated = false;
};

// Least-squares affine map from cumulative proxy reward to development
// utility; halves exploration when the last two utility checkpoints
// improved by less than the stagnation threshold.
inline CalibrationResult calibrate(const Vec& cumulative_proxy, const Vec& dev_utility,
                                   double kappa, const CalibrationConfig& cfg) {
    if (!(cfg.kappa_decay > 0.0) || cfg.kappa_decay >= 1.0)
        throw std::domain_error("calibrate: kappa_decay must be in (0, 1)");
    check_size(dev_utility.size(), cumulative_proxy.size(), "calibrate series");
    CalibrationResult res;
    res.kappa = kappa;
    if (cumulative_proxy.size() < 2) return res;

    const double n = static_cast<double>(cumulative_proxy.size());
    double mr = 0.0, mu = 0.0;
    for (std::size_t i = 0; i < cumulative_proxy.size(); ++i) {
        mr += cumulative_proxy[i];
        mu += dev_utility[i];
    }
    mr /= n;
    mu /= n;
    double cov = 0.0, var = 0.0;
    for (std::size_t i = 0; i < cumulative_proxy.size(); ++i) {
        cov += (cumulative_proxy[i] - mr) * (dev_utility[i] - mu);
        var += (cumulative_proxy[i] - mr) * (cumulative_proxy[i] - mr);
    }
    res.fitted = true;
    res.alpha = var > 1e-12 ? cov / var : 0.0;
    res.gamma = mu - res.alpha * mr;

    const std::size_t last = dev_utility.size() - 1;
    if (dev_utility[last] - dev_utility[last - 1] < cfg.stagnation_threshold) {
        res.kappa = kappa * cfg.kappa_decay;
        res.stagnated = true;
    }
    return res;
}

enum class PolicyKind { ucb, greedy, uniform, task_static, grid_static, one_hot };

inline std::string policy_kind_name(PolicyKind k) {
    switch (k) {
        case PolicyKind::ucb: return "ucb";
        case PolicyKind::greedy: return "greedy";
        case PolicyKind::uniform: return "uniform";
        case PolicyKind::task_static: return "task-static";
        case PolicyKind::grid_static: return "grid";
        case PolicyKind::one_hot: return "one-hot";
    }
    throw std::domain_error("policy_kind_name: invalid kind");
}

// Accepts "one-hot:<index>" for the single-capability baselines.
inline std::pair<PolicyKind, std::size_t> policy_kind_from_name(const std::string& s) {
    if (s == "ucb") return {PolicyKind::ucb, 0};
    if (s == "greedy") return {PolicyKind::greedy, 0};
    if (s == "uniform") return {PolicyKind::uniform, 0};
    if (s == "task-static" || s == "task_static") return {PolicyKind::task_static, 0};
    if (s == "grid" || s == "grid-static" || s == "grid_static") return {PolicyKind::grid_static, 0};
    if (s.rfind("one-hot", 0) == 0) {
        const auto colon = s.find(':');
        const std::size_t idx = colon == std::string::npos
                                    ? 0
                                    : static_cast<std::size_t>(std::stoul(s.substr(colon + 1)));
        return {PolicyKind::one_hot, idx};
    }
    throw std::domain_error("unknown policy kind '" + s + "'");
}

struct BaselineInputs {
    std::size_t capability_count = 0;
    const Vec* requirement = nullptr;                  // task_static
    const RewardEnsemble* ensemble = nullptr;          // greedy
    const BanditContext* context = nullptr;            // greedy
    const std::vector<Allocation>* candidates = nullptr;  // greedy
    const Allocation* grid_winner = nullptr;           // grid_static (precomputed)
    std::size_t one_hot_index = 0;
};

inline Allocation baseline_select(PolicyKind kind, const BaselineInputs& in) {
    switch (kind) {
        case PolicyKind::uniform:
            return Allocation(Vec(in.capability_count, 1.0 / static_cast<double>(in.capability_count)));
        case PolicyKind::task_static:
            if (!in.requirement) throw std::runtime_error("baseline_select: task_static needs r");
            return Allocation::normalized(*in.requirement);
        case PolicyKind::greedy: {
            if (!in.ensemble || !in.context || !in.candidates)
                throw std::runtime_error("baseline_select: greedy needs ensemble, context, candidates");
            std::vector<Prediction> scored;
            for (const auto& c : *in.candidates)
                scored.push_back(ensemble_predict(*in.ensemble, *in.context, c));
            return (*in.candidates)[select_ucb_scored(scored, 0.0).index];
        }
        case PolicyKind::grid_static:
            if (!in.grid_winner) throw std::runtime_error("baseline_select: grid_static needs winner");
            return *in.grid_winner;
        case PolicyKind::one_hot:
            return one_hot(in.one_hot_index, in.capability_count);
        case PolicyKind::ucb:
            throw std::runtime_error("baseline_select: ucb is the main policy, not a baseline");
    }
    throw std::domain_error("baseline_select: unknown kind");
}

// -------- reward buffer persistence --------

inline void write_reward_buffer(const std::vector<RewardRecord>& buffer, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_reward_buffer: cannot open '" + path + "'");
    for (const auto& r : buffer) {
        nlohmann::json j = {{"context", r.context}, {"action", r.action}, {"reward", r.reward}};
        f << j.dump() << '\n';
    }
}

inline std::vector<RewardRecord> read_reward_buffer(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_reward_buffer: cannot open '" + path + "'");
    std::vector<RewardRecord> out;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        out.push_back(RewardRecord{j.at("context").get<Vec>(), j.at("action").get<Vec>(),
                                   j.at("reward").get<double>()});
    }
    return out;
}

}  // namespace capalloc
