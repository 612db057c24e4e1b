#pragma once

// Task requirement estimation from low-budget interventions: sparse
// Dirichlet probe allocations applied to fresh environment copies, and a
// small identifier network mapping task-card features to a simplex
// requirement vector by predicting observed utility changes.

#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "capalloc/core.hpp"
#include "capalloc/env.hpp"
#include "capalloc/mlp.hpp"
#include "capalloc/rng.hpp"

namespace capalloc {

// Fixed-length feature vector standing in for an encoded task description.
struct TaskCard {
    Vec features;
    std::string task_id;
};

struct InterventionRecord {
    std::string task_id;
    Vec delta_s;          // probe-measured capability change, score units
    double delta_u = 0.0; // utility change measured on the task evaluation
    double probe_budget = 0.0;
};

struct InterventionSet {
    std::vector<InterventionRecord> records;
    std::string task_id;
    std::size_t requested = 0;
    double probe_budget = 0.0;
    bool under_determined = false;  // fewer interventions than capabilities
};

struct RequirementVector {
    Allocation r;
    std::string task_id;
};

struct ProbeConfig {
    std::size_t count = 16;       // M
    double probe_budget = 0.5;    // b_probe, tokens
    std::size_t support_size = 2; // k, max nonzero capabilities per draw
    double dirichlet_alpha = 1.0;
    std::uint64_t seed = 0;
};

// Each draw picks a support of size <= k, samples Dirichlet weights on it,
// runs one probe-budget step on a fresh copy of the initial state, and
// records the probe-measured profile delta plus the exact utility delta.
inline InterventionSet run_probe_interventions(const EnvironmentBase& env, const TaskCard& task,
                                               const ProbeConfig& cfg) {
    if (!(cfg.probe_budget > 0.0))
        throw std::domain_error("run_probe_interventions: probe budget must be positive");
    if (cfg.support_size < 1)
        throw std::domain_error("run_probe_interventions: support size must be >= 1");

    const std::size_t n = env.capability_count();
    InterventionSet out;
    out.task_id = task.task_id;
    out.requested = cfg.count;
    out.probe_budget = cfg.probe_budget;
    out.under_determined = cfg.count < n;

    Rng rng(derive_seed(cfg.seed, "interventions", fnv1a64(task.task_id)));
    const DifficultyMix mix{0.0, 1.0, 0.0};  // probes run at medium difficulty
    const std::size_t k = std::min(cfg.support_size, n);

    for (std::size_t m = 0; m < cfg.count; ++m) {
        auto probe_env = env.fresh(derive_seed(cfg.seed, "intervention-env", m));
        const Vec before = probe_env->probe().scores;
        const double u_before = probe_env->current_utility();

        const std::size_t s = static_cast<std::size_t>(rng.uniform_int(1, static_cast<long long>(k)));
        const auto support = rng.sample_without_replacement(n, s);
        const Vec sparse = rng.dirichlet(cfg.dirichlet_alpha, s);
        Vec w(n, 0.0);
        for (std::size_t i = 0; i < s; ++i) w[support[i]] = sparse[i];
        const Allocation alloc = Allocation::normalized(std::move(w));

        probe_env->step(alloc, cfg.probe_budget, mix);

        const Vec after = probe_env->probe().scores;
        InterventionRecord rec;
        rec.task_id = task.task_id;
        rec.delta_s.resize(n);
        for (std::size_t c = 0; c < n; ++c) rec.delta_s[c] = after[c] - before[c];
        rec.delta_u = probe_env->current_utility() - u_before;
        rec.probe_budget = cfg.probe_budget;
        out.records.push_back(std::move(rec));
    }
    return out;
}

struct IdentifierConfig {
    double entropy_weight = 0.0;  // lambda_ent >= 0
    int epochs = 4000;
    double learning_rate = 0.2;
    std::size_t hidden = 16;
    std::uint64_t seed = 1;
};

// Card features -> one hidden layer -> |C| logits -> softmax. Output is on
// the simplex for any parameters.
struct IdentifierModel {
    Mlp net;
    std::size_t capability_count = 0;
    double final_loss = 0.0;

    Vec forward(const TaskCard& card) const { return softmax(net.forward(card.features)); }
};

// Minimizes sum (dU - r(card)^T ds)^2 + lambda * H(r(card)) by full-batch
// gradient descent. The entropy term is a penalty: larger lambda drives the
// requirement toward a simplex vertex. Residuals are pre-scaled by the RMS
// delta magnitude so the step size is insensitive to probe-budget units.
inline IdentifierModel fit_identifier(const std::vector<InterventionRecord>& records,
                                      const std::vector<TaskCard>& cards,
                                      const IdentifierConfig& cfg) {
    if (records.empty()) throw std::runtime_error("fit_identifier: empty record set");
    if (cards.empty()) throw std::runtime_error("fit_identifier: no task cards");
    if (cfg.entropy_weight < 0.0)
        throw std::domain_error("fit_identifier: entropy weight must be >= 0");

    std::map<std::string, std::size_t> card_index;
    for (std::size_t i = 0; i < cards.size(); ++i) {
        check_size(cards[i].features.size(), cards.front().features.size(), "task card features");
        card_index[cards[i].task_id] = i;
    }
    const std::size_t n = records.front().delta_s.size();
    std::vector<std::size_t> rec_card(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = card_index.find(records[i].task_id);
        if (it == card_index.end())
            throw std::runtime_error("fit_identifier: record references unknown task '" +
                                     records[i].task_id + "'");
        check_size(records[i].delta_s.size(), n, "intervention delta_s");
        rec_card[i] = it->second;
    }

    double ms = 0.0;
    for (const auto& r : records) {
        for (double d : r.delta_s) ms += d * d;
        ms += r.delta_u * r.delta_u;
    }
    const double scale = std::sqrt(ms / static_cast<double>(records.size()));
    const double inv_scale = scale > 1e-12 ? 1.0 / scale : 1.0;

    IdentifierModel model;
    model.capability_count = n;
    model.net = Mlp(cards.front().features.size(), cfg.hidden, n, cfg.seed);

    const double batch_scale = 1.0 / static_cast<double>(records.size());
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        MlpGrad grad = model.net.zero_grad();
        double loss = 0.0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            const TaskCard& card = cards[rec_card[i]];
            Vec hidden;
            const Vec logits = model.net.forward(card.features, &hidden);
            const Vec r = softmax(logits);

            double pred = 0.0;
            for (std::size_t c = 0; c < n; ++c) pred += r[c] * records[i].delta_s[c] * inv_scale;
            const double err = records[i].delta_u * inv_scale - pred;
            loss += err * err + cfg.entropy_weight * entropy_raw(r);

            Vec dr(n);
            for (std::size_t c = 0; c < n; ++c) {
                dr[c] = -2.0 * err * records[i].delta_s[c] * inv_scale;
                if (r[c] > 0.0) dr[c] += cfg.entropy_weight * (-(std::log(r[c]) + 1.0));
            }
            double mean_dr = 0.0;
            for (std::size_t c = 0; c < n; ++c) mean_dr += r[c] * dr[c];
            Vec dz(n);
            for (std::size_t c = 0; c < n; ++c) dz[c] = r[c] * (dr[c] - mean_dr);
            model.net.backward(card.features, hidden, dz, grad);
        }
        if (!std::isfinite(loss))
            throw std::runtime_error("fit_identifier: loss diverged at epoch " +
                                     std::to_string(epoch));
        model.net.apply_gradient(grad, cfg.learning_rate, batch_scale);
        model.final_loss = loss * batch_scale;
    }
    return model;
}

inline RequirementVector predict_requirement(const IdentifierModel& model, const TaskCard& card) {
    check_size(card.features.size(), model.net.input_size(), "predict_requirement features");
    return RequirementVector{Allocation::normalized(model.forward(card)), card.task_id};
}

// -------- persistence --------

inline void write_interventions(const InterventionSet& set, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_interventions: cannot open '" + path + "'");
    nlohmann::json meta = {{"type", "meta"},
                           {"task_id", set.task_id},
                           {"requested", set.requested},
                           {"probe_budget", set.probe_budget},
                           {"under_determined", set.under_determined}};
    f << meta.dump() << '\n';
    for (const auto& r : set.records) {
        nlohmann::json rec = {{"type", "record"},
                              {"task_id", r.task_id},
                              {"delta_s", r.delta_s},
                              {"delta_u", r.delta_u},
                              {"probe_budget", r.probe_budget}};
        f << rec.dump() << '\n';
    }
}

inline InterventionSet read_interventions(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_interventions: cannot open '" + path + "'");
    InterventionSet set;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        const nlohmann::json j = nlohmann::json::parse(line);
        if (j.value("type", "") == "meta") {
            set.task_id = j.at("task_id").get<std::string>();
            set.requested = j.at("requested").get<std::size_t>();
            set.probe_budget = j.at("probe_budget").get<double>();
            set.under_determined = j.at("under_determined").get<bool>();
        } else if (j.value("type", "") == "record") {
            InterventionRecord r;
            r.task_id = j.at("task_id").get<std::string>();
            r.delta_s = j.at("delta_s").get<Vec>();
            r.delta_u = j.at("delta_u").get<double>();
            r.probe_budget = j.at("probe_budget").get<double>();
            set.records.push_back(std::move(r));
        } else {
            throw std::runtime_error("read_interventions: unknown record at line " +
                                     std::to_string(lineno));
        }
    }
    return set;
}

inline void write_identifier(const IdentifierModel& model, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_identifier: cannot open '" + path + "'");
    nlohmann::json j = {{"capability_count", model.capability_count},
                        {"final_loss", model.final_loss},
                        {"net", model.net.to_json()}};
    f << j.dump(2) << '\n';
}

inline IdentifierModel read_identifier(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_identifier: cannot open '" + path + "'");
    nlohmann::json j;
    f >> j;
    IdentifierModel m;
    m.capability_count = j.at("capability_count").get<std::size_t>();
    m.final_loss = j.at("final_loss").get<double>();
    m.net = Mlp::from_json(j.at("net"));
    return m;
}

}  // namespace capalloc
