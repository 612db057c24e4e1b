#pragma once

// Per-capability gain curves mapping cumulative effective tokens to score
// gain. sqrt and exp forms are concave nondecreasing; linear is the
// saturation-free mode used by closed-form checks.

#include <cmath>
#include <stdexcept>
#include <string>

#include "capalloc/core.hpp"

namespace capalloc {

enum class GainForm { linear, sqrt, exp_saturation };

inline const char* gain_form_name(GainForm f) {
    switch (f) {
        case GainForm::linear: return "linear";
        case GainForm::sqrt: return "sqrt";
        case GainForm::exp_saturation: return "exp";
    }
    throw std::domain_error("gain_form_name: invalid form");
}

inline GainForm gain_form_from_name(const std::string& s) {
    if (s == "linear") return GainForm::linear;
    if (s == "sqrt") return GainForm::sqrt;
    if (s == "exp" || s == "exp_saturation" || s == "exponential-saturation")
        return GainForm::exp_saturation;
    throw std::domain_error("gain_form_from_name: unknown form '" + s + "'");
}

struct GainParams {
    double amplitude = 1.0;        // a_c >= 0, score units at the curve's scale
    GainForm form = GainForm::sqrt;
    double scale = 1.0;            // m_c > 0, tokens (exp form only)

    void validate() const {
        if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
            throw std::domain_error("GainParams: amplitude must be finite and >= 0");
        if (!(scale > 0.0) || !std::isfinite(scale))
            throw std::domain_error("GainParams: scale must be finite and > 0");
    }
};

inline double gain_value(const GainParams& p, double tokens) {
    if (tokens < 0.0) throw std::domain_error("gain_value: negative token count");
    switch (p.form) {
        case GainForm::linear: return p.amplitude * tokens;
        case GainForm::sqrt: return p.amplitude * std::sqrt(tokens);
        case GainForm::exp_saturation:
            return p.amplitude * (1.0 - std::exp(-tokens / p.scale));
    }
    throw std::domain_error("gain_value: invalid form");
}

// G(b + add) - G(b): the incremental training signal from `add` tokens on
// top of b already spent.
inline double gain_increment(const GainParams& p, double tokens, double add) {
    return gain_value(p, tokens + add) - gain_value(p, tokens);
}

// Marginal gain G'(b). The sqrt form's singularity at 0 is regularized by a
// floor of 1e-12 tokens; callers that need the unbounded boundary behavior
// (shift tests) special-case the sqrt form instead.
inline double gain_derivative(const GainParams& p, double tokens) {
    if (tokens < 0.0) throw std::domain_error("gain_derivative: negative token count");
    switch (p.form) {
        case GainForm::linear: return p.amplitude;
        case GainForm::sqrt: return p.amplitude / (2.0 * std::sqrt(std::max(tokens, 1e-12)));
        case GainForm::exp_saturation:
            return (p.amplitude / p.scale) * std::exp(-tokens / p.scale);
    }
    throw std::domain_error("gain_derivative: invalid form");
}

enum class UtilityKind { linear, softplus_composed };

inline const char* utility_kind_name(UtilityKind k) {
    return k == UtilityKind::linear ? "linear" : "softplus";
}

inline UtilityKind utility_kind_from_name(const std::string& s) {
    if (s == "linear") return UtilityKind::linear;
    if (s == "softplus" || s == "softplus-composed" || s == "softplus_composed")
        return UtilityKind::softplus_composed;
    throw std::domain_error("utility_kind_from_name: unknown kind '" + s + "'");
}

inline double log1p_exp(double x) {
    // ln(1 + e^x), overflow-safe
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

// Task utility over a capability profile. The linear kind is U(s) = u.s
// exactly; the softplus kind warps the linear score through
// h(z) = (2/c) ln((1 + e^{cz}) / 2), which reduces to the identity at
// curvature c = 0.
struct UtilitySpec {
    UtilityKind kind = UtilityKind::linear;
    Vec weights;
    double curvature = 0.0;

    void validate() const {
        check_finite(weights, "UtilitySpec weights");
        if (!std::isfinite(curvature) || curvature < 0.0)
            throw std::domain_error("UtilitySpec: curvature must be finite and >= 0");
    }

    double value(const Vec& scores) const {
        check_size(scores.size(), weights.size(), "UtilitySpec::value");
        const double z = dot(weights, scores);
        if (kind == UtilityKind::linear || curvature == 0.0) return z;
        const double c = curvature;
        return (2.0 / c) * (log1p_exp(c * z) - std::log(2.0));
    }

    Vec gradient(const Vec& scores) const {
        check_size(scores.size(), weights.size(), "UtilitySpec::gradient");
        Vec g(weights);
        if (kind == UtilityKind::linear || curvature == 0.0) return g;
        const double z = dot(weights, scores);
        const double sig = 1.0 / (1.0 + std::exp(-curvature * z));
        for (double& x : g) x *= 2.0 * sig;
        return g;
    }
};

}  // namespace capalloc
