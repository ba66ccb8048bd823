#pragma once

#include <vector>

#include "mff/objective.hpp"

namespace mff {

/// Which L2 norm a fluctuation statistic is taken in: the empirical data
/// measure (needs a dataset) or the exact uniform-sphere population measure
/// (closed form, relu + sphere only).
struct NormSpec {
    enum class Kind { empirical, population };
    Kind kind = Kind::population;
    const Dataset* data = nullptr;

    static NormSpec empirical(const Dataset& d) { return {Kind::empirical, &d}; }
    static NormSpec population() { return {Kind::population, nullptr}; }
};

/// (1/k) sum_k ||f_k - f_bar||^2 across runs, via the identity
/// (1/k) sum ||f_k||^2 - ||f_bar||^2.
double average_fluctuation(const std::vector<Ensemble>& runs, const NormSpec& norm);

/// Exact resampling error (1/m)(int c^2 ||phi(z,.)||^2 mu - ||f[mu]||^2) when
/// m atoms are drawn i.i.d. from mu.
double static_mc_error(const Ensemble& mu, std::size_t m, const NormSpec& norm);

/// The asymptotic Monte-Carlo bound: int ||phi(theta,.)||^2 mu - ||f||^2
/// (equals m * static_mc_error for every m).
double mc_bound(const Ensemble& mu_inf, const NormSpec& norm);
double mc_bound(const Target& mu_inf, const NormSpec& norm);

/// Largest empirical feature norm max_z (1/n) sum_l relu(<z, x_l>)^2,
/// estimated by multi-start projected gradient ascent (documented as a lower
/// bound). Seeds: all data directions plus `extra_starts` random ones.
double k_hat_empirical(const Dataset& data, int d, Rng& rng, int extra_starts = 64);

struct MinimizerReport {
    double lambda = 0.0;
    double q2 = 0.0;          // (1/m) sum c_i^2
    double k_hat = 0.0;       // K_M estimate used
    double lhs1 = 0.0;        // lambda^2 q2 / K_M
    double mid = 0.0;         // ||f - f*||^2
    double rhs2 = 0.0;        // lambda gamma1(f*)^2
    bool ineq1_ok = false;    // lhs1 <= mid (5% slack)
    bool ineq2_ok = false;    // mid + lambda q2 <= rhs2 (5% slack)
};

/// Checks the two global-minimizer inequalities for an approximate
/// regularized minimizer, with 5% slack. Population variant.
MinimizerReport minimizer_inequalities(const Ensemble& e, double lambda, double gamma1_star,
                                       const Target& target);
/// Empirical variant; K_M is estimated from the data.
MinimizerReport minimizer_inequalities(const Ensemble& e, double lambda, double gamma1_star,
                                       const Dataset& data, Rng& rng);

/// Per-width multi-seed fluctuation summary (serialized by the experiment
/// driver).
struct FluctuationReport {
    std::size_t m = 0;
    std::size_t kappa = 0;
    std::vector<long> epochs;
    std::vector<double> fluct_emp;  // empty when no dataset norm applies
    std::vector<double> fluct_pop;  // empty for non-closed-form runs
    double mc_bound_value = 0.0;
    std::vector<double> avg_tv;
    std::vector<double> avg_two;
};

}  // namespace mff
