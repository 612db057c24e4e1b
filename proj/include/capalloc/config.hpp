#pragma once

// Single-document run configuration: one JSON file embeds the environment
// spec, episode settings, reward and candidate configs, the curriculum
// schedule, and an optional template library.

#include <fstream>
#include <string>

#include <json.hpp>

#include "capalloc/experiments.hpp"

namespace capalloc {

inline EpisodeConfig episode_config_from_json(const nlohmann::json& j) {
    EpisodeConfig cfg;
    cfg.env = environment_spec_from_json(j.at("environment"));

    if (j.contains("episode")) {
        const auto& e = j.at("episode");
        cfg.total_budget = e.value("total_budget", cfg.total_budget);
        cfg.steps = e.value("steps", cfg.steps);
        if (e.contains("policy")) {
            const auto [kind, idx] = policy_kind_from_name(e.at("policy").get<std::string>());
            cfg.policy = kind;
            cfg.one_hot_index = idx;
        }
        if (e.contains("seeds")) cfg.seeds = e.at("seeds").get<std::vector<std::uint64_t>>();
        cfg.checkpoint_interval = e.value("checkpoint_interval", cfg.checkpoint_interval);
        cfg.history_length = e.value("history_length", cfg.history_length);
        cfg.prompts_per_step = e.value("prompts_per_step", cfg.prompts_per_step);
        if (e.contains("requirement") && e.at("requirement").is_array())
            cfg.requirement = e.at("requirement").get<Vec>();
        cfg.parallel = e.value("parallel", cfg.parallel);
        cfg.grid_search_step = e.value("grid_search_step", cfg.grid_search_step);
        cfg.grid_rollout_budget_frac =
            e.value("grid_rollout_budget_frac", cfg.grid_rollout_budget_frac);
        cfg.grid_rollout_steps = e.value("grid_rollout_steps", cfg.grid_rollout_steps);
    }

    if (j.contains("reward")) {
        const auto& r = j.at("reward");
        cfg.reward.beta = r.value("beta", cfg.reward.beta);
        cfg.reward.lambda_cost = r.value("lambda_cost", cfg.reward.lambda_cost);
        cfg.reward.essential_k = r.value("essential_k", cfg.reward.essential_k);
    }
    cfg.reward.essential_k = std::min(cfg.reward.essential_k, cfg.env.size());

    if (j.contains("candidates")) {
        const auto& c = j.at("candidates");
        cfg.candidates.grid_step = c.value("grid_step", cfg.candidates.grid_step);
        cfg.candidates.top_k = c.value("top_k", cfg.candidates.top_k);
    }

    if (j.contains("ensemble")) {
        const auto& e = j.at("ensemble");
        cfg.ensemble.members = e.value("members", cfg.ensemble.members);
        cfg.ensemble.hidden = e.value("hidden", cfg.ensemble.hidden);
        cfg.ensemble.epochs = e.value("epochs", cfg.ensemble.epochs);
        cfg.ensemble.learning_rate = e.value("learning_rate", cfg.ensemble.learning_rate);
        cfg.ensemble.kappa = e.value("kappa", cfg.ensemble.kappa);
        cfg.calibration.stagnation_threshold =
            e.value("stagnation_threshold", cfg.calibration.stagnation_threshold);
        cfg.calibration.kappa_decay = e.value("kappa_decay", cfg.calibration.kappa_decay);
    }

    if (j.contains("curriculum")) {
        const auto& c = j.at("curriculum");
        auto read_mix = [](const nlohmann::json& m) {
            return DifficultyMix{m.value("easy", 0.0), m.value("medium", 0.0),
                                 m.value("hard", 0.0)};
        };
        if (c.contains("start_mix")) cfg.curriculum.start_mix = read_mix(c.at("start_mix"));
        if (c.contains("end_mix")) cfg.curriculum.end_mix = read_mix(c.at("end_mix"));
        cfg.curriculum.template_share_cap =
            c.value("template_share_cap", cfg.curriculum.template_share_cap);
        cfg.curriculum.window = c.value("window", cfg.curriculum.window);
    }

    if (j.contains("templates")) cfg.templates = templates_from_json(j.at("templates"));

    if (j.contains("probe")) {
        const auto& p = j.at("probe");
        cfg.probe.count = p.value("count", cfg.probe.count);
        cfg.probe.probe_budget = p.value("probe_budget", cfg.probe.probe_budget);
        cfg.probe.support_size = p.value("support_size", cfg.probe.support_size);
        cfg.probe.dirichlet_alpha = p.value("dirichlet_alpha", cfg.probe.dirichlet_alpha);
    }
    if (j.contains("identifier")) {
        const auto& i = j.at("identifier");
        cfg.identifier.entropy_weight = i.value("entropy_weight", cfg.identifier.entropy_weight);
        cfg.identifier.epochs = i.value("epochs", cfg.identifier.epochs);
        cfg.identifier.learning_rate = i.value("learning_rate", cfg.identifier.learning_rate);
        cfg.identifier.hidden = i.value("hidden", cfg.identifier.hidden);
        cfg.identifier.seed = i.value("seed", cfg.identifier.seed);
    }

    cfg.validate();
    return cfg;
}

inline EpisodeConfig load_episode_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_episode_config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("load_episode_config: parse error in '" + path + "': " + e.what());
    }
    return episode_config_from_json(j);
}

}  // namespace capalloc
