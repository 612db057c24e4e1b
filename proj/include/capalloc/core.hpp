#pragma once

// Foundational value types shared by every module: simplex allocations,
// capability profiles, budgets and transfer matrices. All types are
// immutable-by-convention values; none hold references to shared state.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace capalloc {

using Vec = std::vector<double>;

inline constexpr double kSimplexTol = 1e-9;
inline constexpr std::size_t kMaxCapabilities = 64;

struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

inline void check_finite(const Vec& v, const char* what) {
    for (double x : v)
        if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite value");
}

inline void check_size(std::size_t got, std::size_t want, const char* what) {
    if (got != want)
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(want) +
                             ", got " + std::to_string(got));
}

inline double dot(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Dense row-major matrix, sized for |C| <= 64. No sparse paths by design.
class Matrix {
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix from_rows(const std::vector<Vec>& rows) {
        if (rows.empty()) throw DimensionError("Matrix: no rows");
        Matrix m(rows.size(), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            check_size(rows[i].size(), m.cols_, "Matrix row");
            for (std::size_t j = 0; j < m.cols_; ++j) m(i, j) = rows[i][j];
        }
        return m;
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    Vec row(std::size_t i) const {
        Vec r(cols_);
        for (std::size_t j = 0; j < cols_; ++j) r[j] = (*this)(i, j);
        return r;
    }

    // y = M x
    Vec apply(const Vec& x) const {
        check_size(x.size(), cols_, "Matrix::apply");
        Vec y(rows_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[i] += (*this)(i, j) * x[j];
        return y;
    }

    // y = M^T x
    Vec apply_transposed(const Vec& x) const {
        check_size(x.size(), rows_, "Matrix::apply_transposed");
        Vec y(cols_, 0.0);
        for (std::size_t i = 0; i < rows_; ++i)
            for (std::size_t j = 0; j < cols_; ++j) y[j] += (*this)(i, j) * x[i];
        return y;
    }

    void check_finite(const char* what) const {
        for (double x : data_)
            if (!std::isfinite(x)) throw std::domain_error(std::string(what) + ": non-finite entry");
    }

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

// Point on the probability simplex: nonnegative weights summing to one
// within kSimplexTol. After arithmetic the caller renormalizes via
// Allocation::normalized; weights are never silently clipped.
class Allocation {
  public:
    explicit Allocation(Vec weights) : weights_(std::move(weights)) {
        if (weights_.empty()) throw DimensionError("Allocation: empty weight vector");
        if (weights_.size() > kMaxCapabilities)
            throw DimensionError("Allocation: capability count exceeds 64");
        double sum = 0.0;
        for (double w : weights_) {
            if (!std::isfinite(w)) throw std::domain_error("Allocation: non-finite weight");
            if (w < 0.0) throw std::domain_error("Allocation: negative weight");
            sum += w;
        }
        if (std::abs(sum - 1.0) > kSimplexTol)
            throw std::domain_error("Allocation: weights sum to " + std::to_string(sum) +
                                    ", expected 1 within 1e-9");
    }

    // Divides by the sum (mass conservation), then constructs.
    static Allocation normalized(Vec weights) {
        if (weights.empty()) throw DimensionError("Allocation: empty weight vector");
        double sum = 0.0;
        for (double w : weights) {
            if (!std::isfinite(w)) throw std::domain_error("Allocation: non-finite weight");
            if (w < 0.0) throw std::domain_error("Allocation: negative weight");
            sum += w;
        }
        if (sum <= 0.0) throw std::domain_error("Allocation: cannot normalize zero mass");
        for (double& w : weights) w /= sum;
        return Allocation(std::move(weights));
    }

    const Vec& weights() const { return weights_; }
    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_.at(i); }

    bool approx_equal(const Allocation& other, double tol = kSimplexTol) const {
        if (other.size() != size()) return false;
        for (std::size_t i = 0; i < size(); ++i)
            if (std::abs(weights_[i] - other.weights_[i]) > tol) return false;
        return true;
    }

  private:
    Vec weights_;
};

// Per-capability benchmark scores plus the stable capability ordering.
struct CapabilityProfile {
    Vec scores;
    std::vector<std::string> capability_names;

    CapabilityProfile() = default;
    CapabilityProfile(Vec s, std::vector<std::string> names)
        : scores(std::move(s)), capability_names(std::move(names)) {
        if (!capability_names.empty())
            check_size(scores.size(), capability_names.size(), "CapabilityProfile");
        check_finite(scores, "CapabilityProfile");
    }

    std::size_t size() const { return scores.size(); }
};

// Token budget with monotone-nonincreasing remaining mass.
class Budget {
  public:
    explicit Budget(double total) : total_(total), remaining_(total) {
        if (!(total >= 0.0) || !std::isfinite(total))
            throw std::domain_error("Budget: total must be finite and nonnegative");
    }

    double total() const { return total_; }
    double remaining() const { return remaining_; }
    double spent() const { return total_ - remaining_; }

    void spend(double cost) {
        if (!(cost >= 0.0) || !std::isfinite(cost))
            throw std::domain_error("Budget::spend: cost must be finite and nonnegative");
        if (cost > remaining_ + kSimplexTol * std::max(1.0, total_))
            throw std::domain_error("Budget::spend: cost exceeds remaining budget");
        remaining_ = std::max(0.0, remaining_ - cost);
    }

  private:
    double total_;
    double remaining_;
};

// Entry (i, j): change in capability j when training targets capability i.
struct TransferMatrix {
    Matrix entries;
    double budget_label = 0.0;  // tokens at which the matrix was measured

    TransferMatrix() = default;
    TransferMatrix(Matrix m, double budget) : entries(std::move(m)), budget_label(budget) {
        entries.check_finite("TransferMatrix");
    }
};

// Euclidean projection onto the probability simplex (sort-and-threshold).
// Idempotent on valid allocations up to one renormalization.
inline Allocation project_to_simplex(const Vec& v) {
    if (v.empty()) throw DimensionError("project_to_simplex: empty vector");
    check_finite(v, "project_to_simplex");

    Vec u(v);
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = 0.0;
    std::size_t support = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cumsum += u[j];
        const double candidate = (cumsum - 1.0) / static_cast<double>(j + 1);
        if (u[j] - candidate > 0.0) {
            tau = candidate;
            support = j + 1;
        }
    }
    (void)support;
    Vec x(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) x[i] = std::max(v[i] - tau, 0.0);
    return Allocation::normalized(std::move(x));
}

inline Allocation one_hot(std::size_t index, std::size_t size) {
    if (size == 0) throw DimensionError("one_hot: size must be positive");
    if (index >= size) throw DimensionError("one_hot: index out of range");
    Vec w(size, 0.0);
    w[index] = 1.0;
    return Allocation(std::move(w));
}

// Shannon entropy in nats, with 0 ln 0 := 0. Range [0, ln |C|].
inline double entropy(const Allocation& a) {
    double h = 0.0;
    for (double w : a.weights())
        if (w > 0.0) h -= w * std::log(w);
    return h;
}

// Entropy of an arbitrary nonnegative vector treated as (unnormalized) mass;
// used by the identifier training loss on softmax outputs.
inline double entropy_raw(const Vec& w) {
    double h = 0.0;
    for (double x : w)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

// Difficulty tertile of a generated prompt.
enum class Bucket { easy = 0, medium = 1, hard = 2 };

inline const char* bucket_name(Bucket b) {
    switch (b) {
        case Bucket::easy: return "easy";
        case Bucket::medium: return "medium";
        case Bucket::hard: return "hard";
    }
    throw std::domain_error("bucket_name: invalid bucket");
}

inline Bucket bucket_from_name(const std::string& s) {
    if (s == "easy") return Bucket::easy;
    if (s == "medium") return Bucket::medium;
    if (s == "hard") return Bucket::hard;
    throw std::domain_error("bucket_from_name: unknown bucket '" + s + "'");
}

// Fractions of a batch falling in each difficulty bucket.
struct DifficultyMix {
    double easy = 0.0;
    double medium = 1.0;
    double hard = 0.0;

    double sum() const { return easy + medium + hard; }

    void validate() const {
        for (double f : {easy, medium, hard})
            if (!std::isfinite(f) || f < 0.0)
                throw std::domain_error("DifficultyMix: fractions must be finite and nonnegative");
        if (std::abs(sum() - 1.0) > kSimplexTol)
            throw std::domain_error("DifficultyMix: fractions must sum to 1");
    }
};

inline double cosine_similarity(const Vec& a, const Vec& b) {
    const double na = std::sqrt(dot(a, a));
    const double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

}  // namespace capalloc
