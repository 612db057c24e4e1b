#pragma once

// Minimal one-hidden-layer perceptron with tanh activation, trained by
// plain full-batch gradient descent. Big enough for the tiny regression
// problems in this toolkit (tens to thousands of rows), deterministic per
// seed, and serializable as a flat weight array plus shape metadata.

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "capalloc/core.hpp"
#include "capalloc/rng.hpp"

namespace capalloc {

inline Vec softmax(const Vec& z) {
    double zmax = z.front();
    for (double v : z) zmax = std::max(zmax, v);
    Vec p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - zmax);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

struct MlpGrad {
    Vec w1, b1, w2, b2;
};

class Mlp {
  public:
    Mlp() = default;

    Mlp(std::size_t in, std::size_t hidden, std::size_t out, std::uint64_t seed)
        : in_(in), hidden_(hidden), out_(out),
          w1_(hidden * in), b1_(hidden, 0.0), w2_(out * hidden), b2_(out, 0.0) {
        if (in == 0 || hidden == 0 || out == 0)
            throw DimensionError("Mlp: all dimensions must be positive");
        Rng rng(derive_seed(seed, "mlp-init"));
        const double s1 = 1.0 / std::sqrt(static_cast<double>(in));
        const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
        for (auto& w : w1_) w = rng.gaussian(0.0, s1);
        for (auto& w : w2_) w = rng.gaussian(0.0, s2);
    }

    std::size_t input_size() const { return in_; }
    std::size_t hidden_size() const { return hidden_; }
    std::size_t output_size() const { return out_; }

    // Raw (pre-head) outputs; hidden activations returned for backprop.
    Vec forward(const Vec& x, Vec* hidden_out = nullptr) const {
        check_size(x.size(), in_, "Mlp::forward");
        Vec h(hidden_);
        for (std::size_t j = 0; j < hidden_; ++j) {
            double z = b1_[j];
            const double* row = &w1_[j * in_];
            for (std::size_t i = 0; i < in_; ++i) z += row[i] * x[i];
            h[j] = std::tanh(z);
        }
        Vec y(out_);
        for (std::size_t k = 0; k < out_; ++k) {
            double z = b2_[k];
            const double* row = &w2_[k * hidden_];
            for (std::size_t j = 0; j < hidden_; ++j) z += row[j] * h[j];
            y[k] = z;
        }
        if (hidden_out) *hidden_out = std::move(h);
        return y;
    }

    MlpGrad zero_grad() const {
        return MlpGrad{Vec(w1_.size(), 0.0), Vec(b1_.size(), 0.0),
                       Vec(w2_.size(), 0.0), Vec(b2_.size(), 0.0)};
    }

    // Accumulates dL/dparams for one sample given dL/d(raw output).
    void backward(const Vec& x, const Vec& hidden, const Vec& dout, MlpGrad& g) const {
        check_size(dout.size(), out_, "Mlp::backward dout");
        Vec dh(hidden_, 0.0);
        for (std::size_t k = 0; k < out_; ++k) {
            g.b2[k] += dout[k];
            double* grow = &g.w2[k * hidden_];
            const double* wrow = &w2_[k * hidden_];
            for (std::size_t j = 0; j < hidden_; ++j) {
                grow[j] += dout[k] * hidden[j];
                dh[j] += dout[k] * wrow[j];
            }
        }
        for (std::size_t j = 0; j < hidden_; ++j) {
            const double dz = dh[j] * (1.0 - hidden[j] * hidden[j]);
            g.b1[j] += dz;
            double* grow = &g.w1[j * in_];
            for (std::size_t i = 0; i < in_; ++i) grow[i] += dz * x[i];
        }
    }

    void apply_gradient(const MlpGrad& g, double lr, double scale) {
        const double step = lr * scale;
        for (std::size_t i = 0; i < w1_.size(); ++i) w1_[i] -= step * g.w1[i];
        for (std::size_t i = 0; i < b1_.size(); ++i) b1_[i] -= step * g.b1[i];
        for (std::size_t i = 0; i < w2_.size(); ++i) w2_[i] -= step * g.w2[i];
        for (std::size_t i = 0; i < b2_.size(); ++i) b2_[i] -= step * g.b2[i];
    }

    // Flat array + shape metadata, stable ordering w1,b1,w2,b2.
    nlohmann::json to_json() const {
        Vec flat;
        flat.reserve(w1_.size() + b1_.size() + w2_.size() + b2_.size());
        for (const Vec* v : {&w1_, &b1_, &w2_, &b2_}) flat.insert(flat.end(), v->begin(), v->end());
        return nlohmann::json{{"input", in_}, {"hidden", hidden_}, {"output", out_}, {"weights", flat}};
    }

    static Mlp from_json(const nlohmann::json& j) {
        Mlp m;
        m.in_ = j.at("input").get<std::size_t>();
        m.hidden_ = j.at("hidden").get<std::size_t>();
        m.out_ = j.at("output").get<std::size_t>();
        const Vec flat = j.at("weights").get<Vec>();
        const std::size_t expect = m.in_ * m.hidden_ + m.hidden_ + m.hidden_ * m.out_ + m.out_;
        check_size(flat.size(), expect, "Mlp::from_json weights");
        auto it = flat.begin();
        m.w1_.assign(it, it + static_cast<long>(m.hidden_ * m.in_));
        it += static_cast<long>(m.hidden_ * m.in_);
        m.b1_.assign(it, it + static_cast<long>(m.hidden_));
        it += static_cast<long>(m.hidden_);
        m.w2_.assign(it, it + static_cast<long>(m.out_ * m.hidden_));
        it += static_cast<long>(m.out_ * m.hidden_);
        m.b2_.assign(it, flat.end());
        return m;
    }

  private:
    std::size_t in_ = 0, hidden_ = 0, out_ = 0;
    Vec w1_, b1_, w2_, b2_;
};

// Per-feature affine standardization fitted on a training set. Keeps tiny
// regressors well-conditioned when raw features mix scales (scores vs
// budget fractions).
struct FeatureScaler {
    Vec mean, inv_sd;

    static FeatureScaler fit(const std::vector<Vec>& rows) {
        if (rows.empty()) throw std::runtime_error("FeatureScaler: empty training set");
        const std::size_t d = rows.front().size();
        FeatureScaler s;
        s.mean.assign(d, 0.0);
        s.inv_sd.assign(d, 1.0);
        for (const auto& r : rows) {
            check_size(r.size(), d, "FeatureScaler row");
            for (std::size_t i = 0; i < d; ++i) s.mean[i] += r[i];
        }
        for (double& m : s.mean) m /= static_cast<double>(rows.size());
        Vec var(d, 0.0);
        for (const auto& r : rows)
            for (std::size_t i = 0; i < d; ++i) {
                const double e = r[i] - s.mean[i];
                var[i] += e * e;
            }
        for (std::size_t i = 0; i < d; ++i) {
            const double sd = std::sqrt(var[i] / static_cast<double>(rows.size()));
            s.inv_sd[i] = sd > 1e-12 ? 1.0 / sd : 1.0;
        }
        return s;
    }

    Vec transform(const Vec& x) const {
        check_size(x.size(), mean.size(), "FeatureScaler::transform");
        Vec y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[i] = (x[i] - mean[i]) * inv_sd[i];
        return y;
    }

    nlohmann::json to_json() const { return {{"mean", mean}, {"inv_sd", inv_sd}}; }
    static FeatureScaler from_json(const nlohmann::json& j) {
        FeatureScaler s;
        s.mean = j.at("mean").get<Vec>();
        s.inv_sd = j.at("inv_sd").get<Vec>();
        return s;
    }
};

}  // namespace capalloc
