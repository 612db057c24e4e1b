#pragma once

// EpisodeTrace: the per-step record of one budgeted run, persisted as JSONL
// with a metadata header object on the first line and a final-summary
// object on the last. This is the unit of persistence and analysis; the
// replay environment reads the same format back.

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "capalloc/core.hpp"
#include "capalloc/gains.hpp"
#include "capalloc/rng.hpp"

namespace capalloc {

struct TraceMeta {
    std::vector<std::string> capabilities;
    double total_budget = 0.0;
    int steps = 0;
    std::uint64_t seed = 0;
    std::string policy;
    double cost_per_step = 0.0;
    double kappa = 0.0;
    std::string budget_unit = "desk-token-unit (1 unit : 1M tokens)";
    UtilitySpec utility;
    nlohmann::json extra = nlohmann::json::object();  // study-specific notes
};

struct StepRecord {
    int step = 0;
    Vec requirement;
    Vec probe_profile;
    double remaining_frac = 1.0;
    Vec history;  // flattened recent (allocation, gain) pairs, zero-padded
    std::vector<Vec> candidates;
    std::string candidates_digest;
    Vec selected;
    Vec probe_delta;
    Vec profile_delta;  // environment's realized (true) delta; enables exact replay
    double proxy_reward = 0.0;
    double cost = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    bool warmup = false;
};

struct EpisodeTrace {
    TraceMeta meta;
    std::vector<StepRecord> steps;
    Vec final_profile;
    double final_utility = 0.0;
    Vec final_cumulative_tokens;
    double total_cost = 0.0;
};

inline std::string candidates_digest(const std::vector<Vec>& candidates) {
    std::ostringstream oss;
    oss.precision(12);
    for (const auto& c : candidates) {
        for (double w : c) oss << w << ',';
        oss << ';';
    }
    std::ostringstream hex;
    hex << std::hex << fnv1a64(oss.str());
    return hex.str();
}

namespace detail {

inline nlohmann::json utility_to_json(const UtilitySpec& u) {
    return {{"kind", utility_kind_name(u.kind)}, {"weights", u.weights}, {"curvature", u.curvature}};
}

inline UtilitySpec utility_from_json(const nlohmann::json& j) {
    UtilitySpec u;
    u.kind = utility_kind_from_name(j.at("kind").get<std::string>());
    u.weights = j.at("weights").get<Vec>();
    u.curvature = j.value("curvature", 0.0);
    u.validate();
    return u;
}

}  // namespace detail

inline std::string trace_to_jsonl(const EpisodeTrace& t) {
    std::ostringstream out;
    nlohmann::json meta = {
        {"type", "meta"},
        {"version", 1},
        {"capabilities", t.meta.capabilities},
        {"total_budget", t.meta.total_budget},
        {"steps", t.meta.steps},
        {"seed", t.meta.seed},
        {"policy", t.meta.policy},
        {"cost_per_step", t.meta.cost_per_step},
        {"kappa", t.meta.kappa},
        {"budget_unit", t.meta.budget_unit},
        {"utility", detail::utility_to_json(t.meta.utility)},
        {"extra", t.meta.extra},
    };
    out << meta.dump() << '\n';
    for (const auto& s : t.steps) {
        nlohmann::json rec = {
            {"type", "step"},
            {"step", s.step},
            {"context",
             {{"requirement", s.requirement},
              {"probe_profile", s.probe_profile},
              {"remaining_budget_frac", s.remaining_frac},
              {"history", s.history}}},
            {"candidates", s.candidates},
            {"candidates_digest", s.candidates_digest},
            {"selected", s.selected},
            {"probe_delta", s.probe_delta},
            {"profile_delta", s.profile_delta},
            {"proxy_reward", s.proxy_reward},
            {"cost", s.cost},
            {"mu", s.mu},
            {"sigma", s.sigma},
            {"warmup", s.warmup},
        };
        out << rec.dump() << '\n';
    }
    nlohmann::json fin = {
        {"type", "final"},
        {"profile", t.final_profile},
        {"utility", t.final_utility},
        {"cumulative_tokens", t.final_cumulative_tokens},
        {"total_cost", t.total_cost},
    };
    out << fin.dump() << '\n';
    return out.str();
}

inline void write_trace(const EpisodeTrace& t, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("write_trace: cannot open '" + path + "'");
    f << trace_to_jsonl(t);
}

inline EpisodeTrace read_trace(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("read_trace: cannot open '" + path + "'");
    EpisodeTrace t;
    std::string line;
    std::size_t lineno = 0;
    bool have_meta = false, have_final = false;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("read_trace: malformed JSON at " + path + ":" +
                                     std::to_string(lineno) + ": " + e.what());
        }
        const std::string type = j.value("type", "");
        if (type == "meta") {
            t.meta.capabilities = j.at("capabilities").get<std::vector<std::string>>();
            t.meta.total_budget = j.at("total_budget").get<double>();
            t.meta.steps = j.at("steps").get<int>();
            t.meta.seed = j.at("seed").get<std::uint64_t>();
            t.meta.policy = j.at("policy").get<std::string>();
            t.meta.cost_per_step = j.at("cost_per_step").get<double>();
            t.meta.kappa = j.value("kappa", 0.0);
            t.meta.budget_unit = j.value("budget_unit", t.meta.budget_unit);
            if (j.contains("utility")) t.meta.utility = detail::utility_from_json(j.at("utility"));
            t.meta.extra = j.value("extra", nlohmann::json::object());
            have_meta = true;
        } else if (type == "step") {
            StepRecord s;
            s.step = j.at("step").get<int>();
            const auto& ctx = j.at("context");
            s.requirement = ctx.at("requirement").get<Vec>();
            s.probe_profile = ctx.at("probe_profile").get<Vec>();
            s.remaining_frac = ctx.at("remaining_budget_frac").get<double>();
            s.history = ctx.at("history").get<Vec>();
            s.candidates = j.at("candidates").get<std::vector<Vec>>();
            s.candidates_digest = j.value("candidates_digest", "");
            s.selected = j.at("selected").get<Vec>();
            s.probe_delta = j.at("probe_delta").get<Vec>();
            s.profile_delta = j.at("profile_delta").get<Vec>();
            s.proxy_reward = j.at("proxy_reward").get<double>();
            s.cost = j.at("cost").get<double>();
            s.mu = j.value("mu", 0.0);
            s.sigma = j.value("sigma", 0.0);
            s.warmup = j.value("warmup", false);
            t.steps.push_back(std::move(s));
        } else if (type == "final") {
            t.final_profile = j.at("profile").get<Vec>();
            t.final_utility = j.at("utility").get<double>();
            t.final_cumulative_tokens = j.at("cumulative_tokens").get<Vec>();
            t.total_cost = j.at("total_cost").get<double>();
            have_final = true;
        } else {
            throw std::runtime_error("read_trace: unknown record type at " + path + ":" +
                                     std::to_string(lineno));
        }
    }
    if (!have_meta && t.steps.empty() && !have_final)
        throw std::runtime_error("read_trace: empty trace file '" + path + "'");
    if (!have_meta)
        throw std::runtime_error("read_trace: missing metadata header in '" + path + "'");
    return t;
}

}  // namespace capalloc
