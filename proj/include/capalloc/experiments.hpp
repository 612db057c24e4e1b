#pragma once

// Episode runner and the diagnostic studies: one-hot transfer matrices,
// diminishing-returns and spillover curves, and matched-budget schedule
// comparisons. Episodes across (policy, budget, seed) cells are independent
// and run in a local worker pool; aggregation order is fixed by index.

#include <atomic>
#include <cmath>
#include <deque>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "capalloc/allocator.hpp"
#include "capalloc/core.hpp"
#include "capalloc/env.hpp"
#include "capalloc/generator.hpp"
#include "capalloc/oracle.hpp"
#include "capalloc/report.hpp"
#include "capalloc/requirement.hpp"
#include "capalloc/trace.hpp"

namespace capalloc {

struct EpisodeConfig {
    double total_budget = 20.0;  // desk units, 1 unit : 1M tokens
    int steps = 20;              // T_step; per-step cost = B / T_step
    EnvironmentSpec env;
    PolicyKind policy = PolicyKind::ucb;
    std::size_t one_hot_index = 0;
    RewardConfig reward;
    CandidateConfig candidates;
    CurriculumSchedule curriculum;
    EnsembleConfig ensemble;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    int checkpoint_interval = 5;
    CalibrationConfig calibration;
    std::size_t history_length = 3;  // H pairs in the bandit context
    int prompts_per_step = 64;
    Vec requirement;  // allocation prior; empty means fit it from probes
    ProbeConfig probe;
    IdentifierConfig identifier;
    std::vector<PromptTemplate> templates;  // empty means one default per capability

    // grid_static pre-episode search
    double grid_search_step = 0.25;
    double grid_rollout_budget_frac = 0.1;  // of B per rollout, excluded from B
    int grid_rollout_steps = 5;

    bool parallel = true;

    void validate() const {
        if (!(total_budget > 0.0)) throw std::domain_error("EpisodeConfig: total_budget must be > 0");
        if (steps < 1) throw std::domain_error("EpisodeConfig: steps must be >= 1");
        env.validate();
        reward.validate(env.size());
        curriculum.validate();
        if (checkpoint_interval < 1)
            throw std::domain_error("EpisodeConfig: checkpoint_interval must be >= 1");
        if (prompts_per_step < 1)
            throw std::domain_error("EpisodeConfig: prompts_per_step must be >= 1");
        if (!requirement.empty()) check_size(requirement.size(), env.size(), "EpisodeConfig requirement");
        if (seeds.empty()) throw std::domain_error("EpisodeConfig: need at least one seed");
    }
};

namespace detail {

inline Vec fit_requirement_from_probes(const EnvironmentBase& env, const EpisodeConfig& cfg,
                                       std::uint64_t seed) {
    TaskCard card;
    card.task_id = "episode-task";
    card.features = Vec{1.0};
    ProbeConfig pc = cfg.probe;
    pc.seed = derive_seed(seed, "requirement-probes");
    const InterventionSet set = run_probe_interventions(env, card, pc);
    const IdentifierModel model = fit_identifier(set.records, {card}, cfg.identifier);
    return predict_requirement(model, card).r.weights();
}

// Static-mix dev rollout used by the grid-searched baseline.
inline double static_rollout_utility(const EpisodeConfig& cfg, const Allocation& mix_alloc,
                                     std::uint64_t seed) {
    auto env = Environment(cfg.env, seed);
    PromptSampler sampler(cfg.templates.empty() ? default_templates(cfg.env.size()) : cfg.templates,
                          cfg.curriculum, cfg.env.size(), derive_seed(seed, "grid-pool"));
    Rng rng(derive_seed(seed, "grid-sampler"));
    const double budget = cfg.total_budget * cfg.grid_rollout_budget_frac;
    const int steps = std::max(1, cfg.grid_rollout_steps);
    const double cost = budget / steps;
    for (int t = 0; t < steps; ++t) {
        const double frac = steps > 1 ? static_cast<double>(t) / (steps - 1) : 1.0;
        int counts[3] = {0, 0, 0};
        for (int p = 0; p < cfg.prompts_per_step; ++p)
            counts[static_cast<int>(sampler.sample(mix_alloc, frac, rng).bucket)]++;
        const double total = cfg.prompts_per_step;
        env.step(mix_alloc, cost,
                 DifficultyMix{counts[0] / total, counts[1] / total, counts[2] / total});
    }
    return env.current_utility();
}

inline std::vector<Allocation> simplex_grid(std::size_t n, double step) {
    const int units = std::max(1, static_cast<int>(std::lround(1.0 / step)));
    std::vector<Allocation> out;
    std::vector<int> cur(n, 0);
    std::function<void(std::size_t, int)> enumerate = [&](std::size_t idx, int left) {
        if (idx + 1 == n) {
            cur[idx] = left;
            Vec w(n);
            for (std::size_t i = 0; i < n; ++i) w[i] = static_cast<double>(cur[i]) / units;
            out.push_back(Allocation::normalized(std::move(w)));
            return;
        }
        for (int c = 0; c <= left; ++c) {
            cur[idx] = c;
            enumerate(idx + 1, left - c);
        }
    };
    enumerate(0, units);
    return out;
}

}  // namespace detail

struct GridSearchOutcome {
    Allocation winner{Vec{1.0}};
    double dev_utility = 0.0;
    std::size_t cells = 0;
    double rollout_budget = 0.0;
};

// Pre-episode grid search over static mixes using short dev rollouts. The
// rollout budget (grid_rollout_budget_frac * B per cell) is development
// spend, excluded from the compared budget and reported in metadata.
inline GridSearchOutcome grid_static_search(const EpisodeConfig& cfg, std::uint64_t seed) {
    const auto grid = detail::simplex_grid(cfg.env.size(), cfg.grid_search_step);
    GridSearchOutcome out;
    out.cells = grid.size();
    out.rollout_budget = cfg.total_budget * cfg.grid_rollout_budget_frac;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double u =
            detail::static_rollout_utility(cfg, grid[i], derive_seed(seed, "grid-cell", i));
        if (u > best) {
            best = u;
            out.winner = grid[i];
        }
    }
    out.dev_utility = best;
    return out;
}

// One full budgeted run: build context, build candidates, select, sample
// prompts under the curriculum, step the environment, measure the probe
// delta, score the proxy reward, refit the ensemble, calibrate at
// checkpoints. The budget exhausts exactly; the trace is seed-determined.
inline EpisodeTrace run_episode(const EpisodeConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const std::size_t n = cfg.env.size();
    const int T = cfg.steps;
    const double cost = cfg.total_budget / T;

    Environment env(cfg.env, derive_seed(seed, "episode-env"));
    Vec requirement = cfg.requirement.empty()
                          ? detail::fit_requirement_from_probes(env, cfg, seed)
                          : Allocation::normalized(cfg.requirement).weights();

    PromptSampler sampler(cfg.templates.empty() ? default_templates(n) : cfg.templates,
                          cfg.curriculum, n, derive_seed(seed, "episode-pool"));
    Rng sample_rng(derive_seed(seed, "episode-sampler"));

    const bool model_based = cfg.policy == PolicyKind::ucb || cfg.policy == PolicyKind::greedy;
    double kappa = cfg.policy == PolicyKind::ucb ? cfg.ensemble.kappa : 0.0;

    GridSearchOutcome grid;
    if (cfg.policy == PolicyKind::grid_static) grid = grid_static_search(cfg, derive_seed(seed, "grid"));

    EpisodeTrace trace;
    trace.meta.capabilities = env.capability_names();
    trace.meta.total_budget = cfg.total_budget;
    trace.meta.steps = T;
    trace.meta.seed = seed;
    trace.meta.policy = cfg.policy == PolicyKind::one_hot
                            ? "one-hot:" + std::to_string(cfg.one_hot_index)
                            : policy_kind_name(cfg.policy);
    trace.meta.cost_per_step = cost;
    trace.meta.kappa = kappa;
    trace.meta.utility = cfg.env.utility;
    trace.meta.extra["requirement"] = requirement;
    trace.meta.extra["checkpoint_interval"] = cfg.checkpoint_interval;
    if (cfg.policy == PolicyKind::grid_static)
        trace.meta.extra["grid_search"] = {{"winner", grid.winner.weights()},
                                           {"dev_utility", grid.dev_utility},
                                           {"cells", grid.cells},
                                           {"rollout_budget_per_cell", grid.rollout_budget},
                                           {"excluded_from_budget", true}};

    Budget budget(cfg.total_budget);
    Allocation prev = Allocation::normalized(requirement);
    std::vector<RewardRecord> buffer;
    std::deque<std::pair<Vec, double>> recent;
    Vec probe_now = env.probe().scores;
    double cum_reward = 0.0;
    Vec checkpoint_proxy, checkpoint_utility;
    nlohmann::json calibration_events = nlohmann::json::array();

    for (int t = 0; t < T; ++t) {
        BanditContext ctx;
        ctx.requirement = requirement;
        ctx.probe_profile = probe_now;
        ctx.remaining_budget_frac = budget.remaining() / budget.total();
        ctx.history = flatten_history(recent, cfg.history_length, n);

        const std::vector<Allocation> candidates = build_candidates(prev, requirement, cfg.candidates);

        Allocation selected = prev;
        double mu = 0.0, sigma = 0.0;
        bool warmup = true;
        if (model_based) {
            if (buffer.size() >= std::max<std::size_t>(cfg.ensemble.members, 2)) {
                EnsembleConfig ec = cfg.ensemble;
                ec.kappa = kappa;
                const RewardEnsemble ens = ensemble_fit(buffer, ec, derive_seed(seed, "ensemble", t));
                const UcbChoice choice = select_ucb(ens, ctx, candidates);
                selected = candidates[choice.index];
                mu = choice.mu;
                sigma = choice.sigma;
                warmup = false;
            }
        } else {
            BaselineInputs in;
            in.capability_count = n;
            in.requirement = &requirement;
            in.grid_winner = &grid.winner;
            in.one_hot_index = cfg.one_hot_index;
            selected = baseline_select(cfg.policy, in);
            warmup = false;
        }

        const double frac = T > 1 ? static_cast<double>(t) / (T - 1) : 1.0;
        int counts[3] = {0, 0, 0};
        for (int p = 0; p < cfg.prompts_per_step; ++p)
            counts[static_cast<int>(sampler.sample(selected, frac, sample_rng).bucket)]++;
        const double total_prompts = cfg.prompts_per_step;
        const DifficultyMix mix{counts[0] / total_prompts, counts[1] / total_prompts,
                                counts[2] / total_prompts};

        const StepResult res = env.step(selected, cost, mix);
        budget.spend(cost);

        const Vec probe_next = env.probe().scores;
        Vec probe_delta(n);
        for (std::size_t c = 0; c < n; ++c) probe_delta[c] = probe_next[c] - probe_now[c];
        const double reward = proxy_reward(requirement, probe_delta, cost, cfg.reward);
        cum_reward += reward;

        buffer.push_back(RewardRecord{ctx.features(), selected.weights(), reward});
        recent.emplace_back(selected.weights(), reward);
        while (recent.size() > cfg.history_length) recent.pop_front();

        StepRecord rec;
        rec.step = t;
        rec.requirement = ctx.requirement;
        rec.probe_profile = ctx.probe_profile;
        rec.remaining_frac = ctx.remaining_budget_frac;
        rec.history = ctx.history;
        for (const auto& c : candidates) rec.candidates.push_back(c.weights());
        rec.candidates_digest = candidates_digest(rec.candidates);
        rec.selected = selected.weights();
        rec.probe_delta = probe_delta;
        rec.profile_delta = res.delta;
        rec.proxy_reward = reward;
        rec.cost = cost;
        rec.mu = mu;
        rec.sigma = sigma;
        rec.warmup = warmup;
        trace.steps.push_back(std::move(rec));

        if ((t + 1) % cfg.checkpoint_interval == 0) {
            checkpoint_proxy.push_back(cum_reward);
            checkpoint_utility.push_back(env.current_utility());
            const CalibrationResult cal =
                calibrate(checkpoint_proxy, checkpoint_utility, kappa, cfg.calibration);
            if (cal.fitted) {
                kappa = cal.kappa;
                calibration_events.push_back({{"step", t + 1},
                                              {"alpha", cal.alpha},
                                              {"gamma", cal.gamma},
                                              {"kappa", cal.kappa},
                                              {"stagnated", cal.stagnated}});
            }
        }

        prev = selected;
        probe_now = probe_next;
    }

    trace.meta.extra["calibration"] = calibration_events;
    trace.final_profile = env.state().profile.scores;
    trace.final_utility = env.current_utility();
    trace.final_cumulative_tokens = env.state().cumulative_tokens;
    trace.total_cost = budget.spent();
    return trace;
}

namespace detail {

// Index-ordered parallel map; results land by index so the output is
// independent of scheduling.
template <typename Fn>
inline void parallel_for(std::size_t count, bool parallel, Fn&& fn) {
    if (!parallel || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const std::size_t workers =
        std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), count);
    std::vector<std::future<void>> futs;
    std::atomic<std::size_t> next{0};
    for (std::size_t w = 0; w < workers; ++w)
        futs.push_back(std::async(std::launch::async, [&]() {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= count) return;
                fn(i);
            }
        }));
    for (auto& f : futs) f.get();
}

}  // namespace detail

// One-hot sweep: for each budget and capability i, run a fresh episode with
// the full budget on capability i and record the profile change as row i,
// averaged over seeds.
inline std::vector<TransferMatrix> run_transfer_study(const EpisodeConfig& base,
                                                      const std::vector<double>& budgets,
                                                      const std::vector<std::uint64_t>& seeds) {
    if (budgets.empty()) throw std::domain_error("run_transfer_study: empty budget list");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        if (!(budgets[i] > 0.0)) throw std::domain_error("run_transfer_study: budgets must be positive");
        if (i && budgets[i] <= budgets[i - 1])
            throw std::domain_error("run_transfer_study: budgets must be increasing");
    }
    if (seeds.empty()) throw std::domain_error("run_transfer_study: need at least one seed");

    const std::size_t n = base.env.size();
    const Vec initial = base.env.initial_profile.empty() ? Vec(n, 0.0) : base.env.initial_profile;

    std::vector<TransferMatrix> out(budgets.size());
    struct Cell {
        std::size_t budget_idx, target;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (std::size_t b = 0; b < budgets.size(); ++b)
        for (std::size_t i = 0; i < n; ++i)
            for (std::uint64_t s : seeds) cells.push_back(Cell{b, i, s});

    std::vector<Vec> deltas(cells.size());
    detail::parallel_for(cells.size(), base.parallel, [&](std::size_t k) {
        const Cell& cell = cells[k];
        EpisodeConfig cfg = base;
        cfg.total_budget = budgets[cell.budget_idx];
        cfg.policy = PolicyKind::one_hot;
        cfg.one_hot_index = cell.target;
        if (cfg.requirement.empty()) cfg.requirement = Vec(n, 1.0 / static_cast<double>(n));
        const EpisodeTrace tr = run_episode(cfg, cell.seed);
        Vec d(n);
        for (std::size_t j = 0; j < n; ++j) d[j] = tr.final_profile[j] - initial[j];
        deltas[k] = std::move(d);
    });

    for (std::size_t b = 0; b < budgets.size(); ++b) {
        Matrix m(n, n, 0.0);
        for (std::size_t k = 0; k < cells.size(); ++k) {
            if (cells[k].budget_idx != b) continue;
            for (std::size_t j = 0; j < n; ++j) m(cells[k].target, j) += deltas[k][j];
        }
        const double inv = 1.0 / static_cast<double>(seeds.size());
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) m(i, j) *= inv;
        out[b] = TransferMatrix(std::move(m), budgets[b]);
    }
    return out;
}

struct DiagnosticsReport {
    std::vector<double> budgets;
    // diag_gain[k][c] = diagonal gain from budgets[k] to budgets[k+1] for target c
    std::vector<Vec> diag_gain;
    Vec diminishing_gap;           // per target: gain(B0->B1) - gain(B1->B2)
    Vec mean_negative_spillover;   // per budget: mean over off-diagonal [-(entry)]_+
    Vec on_target_gain;            // per budget: mean diagonal
    Vec off_target_delta;          // per budget: mean off-diagonal entry
    Vec negative_transfer_mass;    // per budget: mean off-diagonal negative part

    std::string to_csv(const std::vector<std::string>& names) const {
        std::vector<std::string> lines;
        lines.push_back("section,budget,target,value");
        for (std::size_t b = 0; b < budgets.size(); ++b) {
            lines.push_back(csv_join({"on_target_gain", format_number(budgets[b]), "all",
                                      format_number(on_target_gain[b])}));
            lines.push_back(csv_join({"off_target_delta", format_number(budgets[b]), "all",
                                      format_number(off_target_delta[b])}));
            lines.push_back(csv_join({"negative_transfer_mass", format_number(budgets[b]), "all",
                                      format_number(negative_transfer_mass[b])}));
            lines.push_back(csv_join({"mean_negative_spillover", format_number(budgets[b]), "all",
                                      format_number(mean_negative_spillover[b])}));
        }
        for (std::size_t k = 0; k < diag_gain.size(); ++k)
            for (std::size_t c = 0; c < diag_gain[k].size(); ++c)
                lines.push_back(csv_join(
                    {"diag_gain_" + format_number(budgets[k]) + "_to_" + format_number(budgets[k + 1]),
                     format_number(budgets[k + 1]), names[c], format_number(diag_gain[k][c])}));
        for (std::size_t c = 0; c < diminishing_gap.size(); ++c)
            lines.push_back(
                csv_join({"diminishing_gap", "all", names[c], format_number(diminishing_gap[c])}));
        std::string out;
        for (const auto& l : lines) out += l + "\n";
        return out;
    }
};

// Diminishing-returns gaps from the matrix diagonals plus spillover mass
// per budget. Needs at least three budgets for the gap column.
inline DiagnosticsReport run_diagnostics(const std::vector<TransferMatrix>& matrices) {
    if (matrices.size() < 3)
        throw std::domain_error("run_diagnostics: need at least 3 budgets (e.g. 20/80/150)");
    DiagnosticsReport rep;
    const std::size_t n = matrices.front().entries.rows();
    for (const auto& m : matrices) {
        if (m.entries.rows() != n || m.entries.cols() != n)
            throw DimensionError("run_diagnostics: inconsistent matrix shapes");
        rep.budgets.push_back(m.budget_label);

        double diag = 0.0, off = 0.0, neg = 0.0, spill = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double v = m.entries(i, j);
                if (i == j)
                    diag += v;
                else {
                    off += v;
                    neg += std::max(0.0, -v);
                    spill += std::max(0.0, -v);
                }
            }
        const double offcount = n > 1 ? static_cast<double>(n * (n - 1)) : 1.0;
        rep.on_target_gain.push_back(diag / static_cast<double>(n));
        rep.off_target_delta.push_back(off / offcount);
        rep.negative_transfer_mass.push_back(neg / offcount);
        rep.mean_negative_spillover.push_back(spill / offcount);
    }
    for (std::size_t k = 0; k + 1 < matrices.size(); ++k) {
        Vec gain(n);
        for (std::size_t c = 0; c < n; ++c)
            gain[c] = matrices[k + 1].entries(c, c) - matrices[k].entries(c, c);
        rep.diag_gain.push_back(std::move(gain));
    }
    rep.diminishing_gap.resize(n);
    for (std::size_t c = 0; c < n; ++c)
        rep.diminishing_gap[c] = rep.diag_gain[0][c] - rep.diag_gain[1][c];
    return rep;
}

struct ComparisonCell {
    std::string policy;
    double budget = 0.0;
    Vec utilities;  // per seed
    double mean = 0.0;
    double sd = 0.0;
};

struct ComparisonTable {
    std::vector<ComparisonCell> cells;

    std::string to_csv() const {
        std::string out = "policy,budget,mean_utility,sd_utility,seeds\n";
        for (const auto& c : cells) {
            std::string per_seed;
            for (std::size_t i = 0; i < c.utilities.size(); ++i) {
                if (i) per_seed += ';';
                per_seed += format_number(c.utilities[i]);
            }
            out += csv_join({c.policy, format_number(c.budget), format_number(c.mean),
                             format_number(c.sd), per_seed}) +
                   "\n";
        }
        return out;
    }

    std::string to_text() const {
        std::ostringstream s;
        s << "policy          budget      mean ± sd\n";
        for (const auto& c : cells) {
            char buf[96];
            std::snprintf(buf, sizeof buf, "%-15s %-10g %8.4f ± %.4f\n", c.policy.c_str(),
                          c.budget, c.mean, c.sd);
            s << buf;
        }
        return s.str();
    }

    const ComparisonCell& at(const std::string& policy, double budget) const {
        for (const auto& c : cells)
            if (c.policy == policy && c.budget == budget) return c;
        throw std::runtime_error("ComparisonTable: no cell for " + policy);
    }
};

// Matched-budget schedule comparison: same environment, generator and seeds
// across policies; mean and sd of final true utility per (policy, budget).
inline ComparisonTable run_schedule_comparison(const EpisodeConfig& base,
                                               const std::vector<std::string>& policies,
                                               const std::vector<double>& budgets,
                                               const std::vector<std::uint64_t>& seeds) {
    if (policies.empty() || budgets.empty() || seeds.empty())
        throw std::domain_error("run_schedule_comparison: empty policies, budgets or seeds");

    struct Cell {
        std::size_t policy_idx, budget_idx, seed_idx;
    };
    std::vector<Cell> cells;
    for (std::size_t p = 0; p < policies.size(); ++p)
        for (std::size_t b = 0; b < budgets.size(); ++b)
            for (std::size_t s = 0; s < seeds.size(); ++s) cells.push_back(Cell{p, b, s});

    Vec results(cells.size(), 0.0);
    detail::parallel_for(cells.size(), base.parallel, [&](std::size_t k) {
        const Cell& cell = cells[k];
        EpisodeConfig cfg = base;
        const auto [kind, idx] = policy_kind_from_name(policies[cell.policy_idx]);
        cfg.policy = kind;
        cfg.one_hot_index = idx;
        cfg.total_budget = budgets[cell.budget_idx];
        results[k] = run_episode(cfg, seeds[cell.seed_idx]).final_utility;
    });

    ComparisonTable table;
    for (std::size_t p = 0; p < policies.size(); ++p)
        for (std::size_t b = 0; b < budgets.size(); ++b) {
            ComparisonCell cell;
            cell.policy = policies[p];
            cell.budget = budgets[b];
            for (std::size_t k = 0; k < cells.size(); ++k)
                if (cells[k].policy_idx == p && cells[k].budget_idx == b)
                    cell.utilities.push_back(results[k]);
            double mean = 0.0;
            for (double u : cell.utilities) mean += u;
            mean /= static_cast<double>(cell.utilities.size());
            double var = 0.0;
            for (double u : cell.utilities) var += (u - mean) * (u - mean);
            cell.mean = mean;
            cell.sd = cell.utilities.size() > 1
                          ? std::sqrt(var / static_cast<double>(cell.utilities.size() - 1))
                          : 0.0;
            table.cells.push_back(std::move(cell));
        }
    return table;
}

// -------- transfer matrix persistence --------

inline std::string transfer_matrix_to_csv(const TransferMatrix& m,
                                          const std::vector<std::string>& names) {
    std::vector<std::string> header{"target\\affected"};
    for (std::size_t j = 0; j < m.entries.cols(); ++j) header.push_back(names[j]);
    std::string out = csv_join(header) + "\n";
    for (std::size_t i = 0; i < m.entries.rows(); ++i) {
        std::vector<std::string> row{names[i]};
        for (std::size_t j = 0; j < m.entries.cols(); ++j)
            row.push_back(format_number(m.entries(i, j)));
        out += csv_join(row) + "\n";
    }
    return out;
}

inline void write_transfer_matrices(const std::vector<TransferMatrix>& ms,
                                    const std::vector<std::string>& names,
                                    const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_transfer_matrices: cannot open '" + path + "'");
    nlohmann::json meta = {{"type", "meta"}, {"capabilities", names}};
    f << meta.dump() << '\n';
    for (const auto& m : ms) {
        std::vector<Vec> rows;
        for (std::size_t i = 0; i < m.entries.rows(); ++i) rows.push_back(m.entries.row(i));
        nlohmann::json j = {{"type", "matrix"}, {"budget", m.budget_label}, {"entries", rows}};
        f << j.dump() << '\n';
    }
}

inline std::pair<std::vector<TransferMatrix>, std::vector<std::string>> read_transfer_matrices(
    const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_transfer_matrices: cannot open '" + path + "'");
    std::vector<TransferMatrix> ms;
    std::vector<std::string> names;
    std::string line;
    while (std::getline(f, line)) {
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        if (j.value("type", "") == "meta")
            names = j.at("capabilities").get<std::vector<std::string>>();
        else if (j.value("type", "") == "matrix")
            ms.emplace_back(Matrix::from_rows(j.at("entries").get<std::vector<Vec>>()),
                            j.at("budget").get<double>());
    }
    if (ms.empty()) throw std::runtime_error("read_transfer_matrices: no matrices in '" + path + "'");
    return {ms, names};
}

}  // namespace capalloc
