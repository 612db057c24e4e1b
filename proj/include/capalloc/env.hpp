#pragma once

// Capability environments: stand-ins for the teacher-student distillation
// process. A synthetic environment maps (allocation, token cost, difficulty
// mix) to capability-profile changes through a transfer matrix composed
// with per-capability gain curves; a replay environment serves logged
// deltas back from a recorded trace.

#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "capalloc/core.hpp"
#include "capalloc/gains.hpp"
#include "capalloc/rng.hpp"
#include "capalloc/trace.hpp"

namespace capalloc {

struct DifficultyMultipliers {
    double easy = 0.8;
    double medium = 1.0;
    double hard = 1.25;

    void validate() const {
        for (double m : {easy, medium, hard})
            if (!(m > 0.0) || !std::isfinite(m))
                throw std::domain_error("DifficultyMultipliers: multipliers must be positive");
    }

    double weighted(const DifficultyMix& mix) const {
        return mix.easy * easy + mix.medium * medium + mix.hard * hard;
    }
};

// Ground truth a run tries to exploit. transfer(c, c') is the score change
// on capability c per unit of effective training signal on capability c'.
struct EnvironmentSpec {
    std::vector<std::string> capability_names;
    Matrix transfer;
    std::vector<GainParams> gain_params;
    double probe_noise_sd = 0.0;
    double eval_noise_sd = 0.0;
    DifficultyMultipliers difficulty_multipliers;
    UtilitySpec utility;
    Vec initial_profile;  // empty means all zeros
    std::uint64_t seed = 0;

    // Optional budget-dependent transfer structure: the effective matrix
    // interpolates linearly from `transfer` at 0 consumed tokens to
    // `transfer_end` at `transfer_interp_budget`. Off (empty) by default.
    Matrix transfer_end;
    double transfer_interp_budget = 0.0;

    std::size_t size() const { return transfer.rows(); }

    void validate() const {
        const std::size_t n = transfer.rows();
        if (n == 0 || transfer.cols() != n)
            throw DimensionError("EnvironmentSpec: transfer must be square and nonempty");
        if (n > kMaxCapabilities) throw DimensionError("EnvironmentSpec: capability count exceeds 64");
        transfer.check_finite("EnvironmentSpec transfer");
        for (std::size_t i = 0; i < n; ++i)
            if (transfer(i, i) < 0.0)
                throw std::domain_error("EnvironmentSpec: diagonal transfer entries must be >= 0");
        check_size(gain_params.size(), n, "EnvironmentSpec gain_params");
        for (const auto& g : gain_params) g.validate();
        if (!(probe_noise_sd >= eval_noise_sd) || !(eval_noise_sd >= 0.0))
            throw std::domain_error("EnvironmentSpec: need probe_noise_sd >= eval_noise_sd >= 0");
        difficulty_multipliers.validate();
        if (!utility.weights.empty()) {
            check_size(utility.weights.size(), n, "EnvironmentSpec utility weights");
            utility.validate();
        }
        if (!capability_names.empty()) check_size(capability_names.size(), n, "EnvironmentSpec names");
        if (!initial_profile.empty()) {
            check_size(initial_profile.size(), n, "EnvironmentSpec initial_profile");
            check_finite(initial_profile, "EnvironmentSpec initial_profile");
        }
        if (transfer_end.rows() != 0) {
            if (transfer_end.rows() != n || transfer_end.cols() != n)
                throw DimensionError("EnvironmentSpec: transfer_end shape mismatch");
            transfer_end.check_finite("EnvironmentSpec transfer_end");
            if (!(transfer_interp_budget > 0.0))
                throw std::domain_error("EnvironmentSpec: transfer_interp_budget must be > 0");
        }
    }

    std::vector<std::string> names_or_default() const {
        if (!capability_names.empty()) return capability_names;
        std::vector<std::string> names;
        for (std::size_t i = 0; i < size(); ++i) names.push_back("c" + std::to_string(i));
        return names;
    }
};

struct EnvState {
    Vec cumulative_tokens;
    CapabilityProfile profile;
    long step_count = 0;
};

struct StepResult {
    Vec delta;   // realized profile change, noise included
    Vec signal;  // per-capability effective training signal g
};

class EnvironmentBase {
  public:
    virtual ~EnvironmentBase() = default;

    virtual std::size_t capability_count() const = 0;
    virtual const std::vector<std::string>& capability_names() const = 0;
    virtual const EnvState& state() const = 0;

    virtual StepResult step(const Allocation& alloc, double cost, const DifficultyMix& mix) = 0;

    // Noisy capability measurement; fresh draw per call from the run's
    // seeded stream.
    virtual CapabilityProfile probe() = 0;

    virtual const UtilitySpec& utility_spec() const = 0;

    double utility_of(const Vec& scores) const { return utility_spec().value(scores); }
    double current_utility() const { return utility_of(state().profile.scores); }

    // Fresh copy at the initial state with its own noise streams.
    virtual std::unique_ptr<EnvironmentBase> fresh(std::uint64_t seed) const = 0;
};

inline double true_utility(const CapabilityProfile& profile, const UtilitySpec& spec) {
    return spec.value(profile.scores);
}

class Environment final : public EnvironmentBase {
  public:
    Environment(EnvironmentSpec spec, std::uint64_t run_seed)
        : spec_(std::move(spec)),
          names_(spec_.names_or_default()),
          run_seed_(run_seed),
          eval_rng_(derive_seed(run_seed ^ spec_.seed, "env-eval")),
          probe_rng_(derive_seed(run_seed ^ spec_.seed, "env-probe")) {
        spec_.validate();
        state_.cumulative_tokens.assign(spec_.size(), 0.0);
        Vec init = spec_.initial_profile.empty() ? Vec(spec_.size(), 0.0) : spec_.initial_profile;
        state_.profile = CapabilityProfile(std::move(init), names_);
    }

    std::size_t capability_count() const override { return spec_.size(); }
    const std::vector<std::string>& capability_names() const override { return names_; }
    const EnvState& state() const override { return state_; }
    const EnvironmentSpec& spec() const { return spec_; }
    const UtilitySpec& utility_spec() const override { return spec_.utility; }

    StepResult step(const Allocation& alloc, double cost, const DifficultyMix& mix) override {
        check_size(alloc.size(), spec_.size(), "Environment::step allocation");
        if (!(cost > 0.0) || !std::isfinite(cost))
            throw std::domain_error("Environment::step: cost must be positive");
        mix.validate();

        const double mult = spec_.difficulty_multipliers.weighted(mix);
        const std::size_t n = spec_.size();
        Vec signal(n, 0.0);
        for (std::size_t c = 0; c < n; ++c) {
            const double add = alloc[c] * cost * mult;
            if (add > 0.0)
                signal[c] = gain_increment(spec_.gain_params[c], state_.cumulative_tokens[c], add);
        }

        Vec delta = effective_transfer().apply(signal);
        if (spec_.eval_noise_sd > 0.0)
            for (double& d : delta) d += eval_rng_.gaussian(0.0, spec_.eval_noise_sd);

        for (std::size_t c = 0; c < n; ++c) {
            state_.cumulative_tokens[c] += alloc[c] * cost;
            state_.profile.scores[c] += delta[c];
        }
        state_.step_count += 1;
        return StepResult{std::move(delta), std::move(signal)};
    }

    CapabilityProfile probe() override {
        Vec scores = state_.profile.scores;
        if (spec_.probe_noise_sd > 0.0)
            for (double& s : scores) s += probe_rng_.gaussian(0.0, spec_.probe_noise_sd);
        return CapabilityProfile(std::move(scores), names_);
    }

    std::unique_ptr<EnvironmentBase> fresh(std::uint64_t seed) const override {
        return std::make_unique<Environment>(spec_, seed);
    }

  private:
    Matrix effective_transfer() const {
        if (spec_.transfer_end.rows() == 0) return spec_.transfer;
        double total = 0.0;
        for (double b : state_.cumulative_tokens) total += b;
        const double t = std::min(1.0, total / spec_.transfer_interp_budget);
        Matrix m(spec_.size(), spec_.size());
        for (std::size_t i = 0; i < spec_.size(); ++i)
            for (std::size_t j = 0; j < spec_.size(); ++j)
                m(i, j) = (1.0 - t) * spec_.transfer(i, j) + t * spec_.transfer_end(i, j);
        return m;
    }

    EnvironmentSpec spec_;
    std::vector<std::string> names_;
    std::uint64_t run_seed_;
    Rng eval_rng_;
    Rng probe_rng_;
    EnvState state_;
};

// Replays logged profile deltas instead of simulating. Keys are the
// (allocation, cost) pairs of the recorded steps; each key holds a FIFO of
// the deltas observed under it, served in trace order. Probes are exact.
class TraceReplayEnvironment final : public EnvironmentBase {
  public:
    explicit TraceReplayEnvironment(EpisodeTrace trace) : trace_(std::move(trace)) {
        if (trace_.steps.empty())
            throw std::runtime_error("TraceReplayEnvironment: trace has no step records");
        names_ = trace_.meta.capabilities;
        const std::size_t n = names_.size();
        for (const auto& s : trace_.steps) {
            check_size(s.selected.size(), n, "trace step selected");
            check_size(s.profile_delta.size(), n, "trace step profile_delta");
            queues_[make_key(s.selected, s.cost)].push_back(s.profile_delta);
        }
        Vec init(n, 0.0);
        // The trace records deltas; reconstruct the initial profile from the
        // final snapshot minus the summed deltas.
        if (!trace_.final_profile.empty()) {
            init = trace_.final_profile;
            for (const auto& s : trace_.steps)
                for (std::size_t c = 0; c < n; ++c) init[c] -= s.profile_delta[c];
        }
        initial_profile_ = init;
        reset();
    }

    std::size_t capability_count() const override { return names_.size(); }
    const std::vector<std::string>& capability_names() const override { return names_; }
    const EnvState& state() const override { return state_; }
    const UtilitySpec& utility_spec() const override { return trace_.meta.utility; }

    StepResult step(const Allocation& alloc, double cost, const DifficultyMix& mix) override {
        if (!(cost > 0.0) || !std::isfinite(cost))
            throw std::domain_error("TraceReplayEnvironment::step: cost must be positive");
        mix.validate();
        const std::string key = make_key(alloc.weights(), cost);
        auto it = live_.find(key);
        if (it == live_.end() || it->second.empty())
            throw std::runtime_error(
                "TraceReplayEnvironment: no recorded response for action key " + key);
        Vec delta = it->second.front();
        it->second.erase(it->second.begin());
        for (std::size_t c = 0; c < names_.size(); ++c) {
            state_.cumulative_tokens[c] += alloc[c] * cost;
            state_.profile.scores[c] += delta[c];
        }
        state_.step_count += 1;
        return StepResult{delta, Vec(names_.size(), 0.0)};
    }

    CapabilityProfile probe() override { return state_.profile; }

    std::unique_ptr<EnvironmentBase> fresh(std::uint64_t) const override {
        auto copy = std::make_unique<TraceReplayEnvironment>(*this);
        copy->reset();
        return copy;
    }

  private:
    // Quantized to 1e-9 so float noise in re-serialized allocations cannot
    // split a key.
    static std::string make_key(const Vec& alloc, double cost) {
        std::ostringstream oss;
        oss.precision(9);
        oss << std::fixed << "cost=" << cost << " w=[";
        for (std::size_t i = 0; i < alloc.size(); ++i) {
            if (i) oss << ',';
            oss << alloc[i];
        }
        oss << ']';
        return oss.str();
    }

    void reset() {
        live_ = queues_;
        state_.cumulative_tokens.assign(names_.size(), 0.0);
        state_.profile = CapabilityProfile(initial_profile_, names_);
        state_.step_count = 0;
    }

    EpisodeTrace trace_;
    std::vector<std::string> names_;
    Vec initial_profile_;
    std::map<std::string, std::vector<Vec>> queues_;
    std::map<std::string, std::vector<Vec>> live_;
    EnvState state_;
};

inline std::unique_ptr<EnvironmentBase> load_trace_environment(const std::string& path) {
    return std::make_unique<TraceReplayEnvironment>(read_trace(path));
}

// -------- EnvironmentSpec JSON --------

inline EnvironmentSpec environment_spec_from_json(const nlohmann::json& j) {
    EnvironmentSpec spec;
    if (j.contains("capabilities"))
        spec.capability_names = j.at("capabilities").get<std::vector<std::string>>();
    spec.transfer = Matrix::from_rows(j.at("transfer").get<std::vector<Vec>>());
    const std::size_t n = spec.transfer.rows();
    if (j.contains("gains")) {
        for (const auto& g : j.at("gains")) {
            GainParams p;
            p.amplitude = g.value("amplitude", 1.0);
            p.form = gain_form_from_name(g.value("form", std::string("sqrt")));
            p.scale = g.value("scale", 1.0);
            spec.gain_params.push_back(p);
        }
    } else {
        spec.gain_params.assign(n, GainParams{});
    }
    spec.probe_noise_sd = j.value("probe_noise_sd", 0.0);
    spec.eval_noise_sd = j.value("eval_noise_sd", 0.0);
    if (j.contains("difficulty_multipliers")) {
        const auto& m = j.at("difficulty_multipliers");
        spec.difficulty_multipliers.easy = m.value("easy", 0.8);
        spec.difficulty_multipliers.medium = m.value("medium", 1.0);
        spec.difficulty_multipliers.hard = m.value("hard", 1.25);
    }
    if (j.contains("utility")) spec.utility = detail::utility_from_json(j.at("utility"));
    if (j.contains("initial_profile")) spec.initial_profile = j.at("initial_profile").get<Vec>();
    spec.seed = j.value("seed", 0ULL);
    if (j.contains("transfer_end")) {
        spec.transfer_end = Matrix::from_rows(j.at("transfer_end").get<std::vector<Vec>>());
        spec.transfer_interp_budget = j.value("transfer_interp_budget", 0.0);
    }
    spec.validate();
    return spec;
}

inline nlohmann::json environment_spec_to_json(const EnvironmentSpec& spec) {
    std::vector<Vec> rows;
    for (std::size_t i = 0; i < spec.transfer.rows(); ++i) rows.push_back(spec.transfer.row(i));
    nlohmann::json gains = nlohmann::json::array();
    for (const auto& g : spec.gain_params)
        gains.push_back({{"amplitude", g.amplitude},
                         {"form", gain_form_name(g.form)},
                         {"scale", g.scale}});
    nlohmann::json j = {
        {"capabilities", spec.names_or_default()},
        {"transfer", rows},
        {"gains", gains},
        {"probe_noise_sd", spec.probe_noise_sd},
        {"eval_noise_sd", spec.eval_noise_sd},
        {"difficulty_multipliers",
         {{"easy", spec.difficulty_multipliers.easy},
          {"medium", spec.difficulty_multipliers.medium},
          {"hard", spec.difficulty_multipliers.hard}}},
        {"utility", detail::utility_to_json(spec.utility)},
        {"seed", spec.seed},
    };
    if (!spec.initial_profile.empty()) j["initial_profile"] = spec.initial_profile;
    if (spec.transfer_end.rows() != 0) {
        std::vector<Vec> erows;
        for (std::size_t i = 0; i < spec.transfer_end.rows(); ++i)
            erows.push_back(spec.transfer_end.row(i));
        j["transfer_end"] = erows;
        j["transfer_interp_budget"] = spec.transfer_interp_budget;
    }
    return j;
}

}  // namespace capalloc
