#pragma once

#include <vector>

#include "mff/flow.hpp"
#include "mff/linalg.hpp"
#include "mff/objective.hpp"

namespace mff {

/// Discrete base measure mu_0: M atoms with weights summing to one. With a
/// discrete base the mean-field characteristic flow is exactly the M-particle
/// gradient descent, so the CLT claim can be isolated from mean-field
/// discretization error.
struct BaseMeasure {
    std::vector<Neuron> atoms;
    std::vector<double> weights;
    int d = 3;
    Activation activation = Activation::tanh_act;

    std::size_t size() const { return atoms.size(); }
    int particle_dim() const { return d + 2; }
    void validate() const;

    static BaseMeasure uniform(std::vector<Neuron> atoms, int d,
                               Activation act = Activation::tanh_act);
    /// M atoms sampled like init_ensemble (z uniform on S^d, c per scheme).
    static BaseMeasure sample(std::size_t M, int d, const CInitScheme& c_init, Rng& rng,
                              Activation act = Activation::tanh_act);
};

/// Signed weights a on the base atoms with sum(a) = 0; represents omega_0.
struct Discrepancy {
    std::vector<double> a;
};

/// Gaussian omega_0 with covariance w_i delta_ij - w_i w_j.
Discrepancy sample_omega_gaussian(const BaseMeasure& base, Rng& rng);

struct ResampledOmega {
    Discrepancy omega;                  // sqrt(m) (counts/m - w)
    std::vector<std::size_t> counts;    // multiplicity of each base atom among the m draws
    std::size_t m = 0;
};

/// Draws m atoms i.i.d. from the base and returns the scaled discrepancy plus
/// the index multiset, so the matching finite-m ensemble can be trained from
/// the exact same initial atoms.
ResampledOmega sample_omega_resampled(const BaseMeasure& base, std::size_t m, Rng& rng);

struct CltState {
    std::vector<Neuron> theta;            // Theta_t per atom
    std::vector<std::vector<double>> T;   // fluctuation vector per atom, (c,z) packed
    double time = 0.0;
};

struct CltTrajectory {
    std::vector<std::vector<Neuron>> theta_path;           // steps+1 entries
    std::vector<std::vector<std::vector<double>>> T_path;  // steps+1 entries
    double lr = 0.0;
    long steps = 0;

    CltState state_at(long k) const;
};

/// Jointly advances the characteristic flow Theta_t and the linearized
/// fluctuation flow T_t by forward Euler on one clock. Empirical loss;
/// euclidean parameters; T_0 = 0.
CltTrajectory integrate_T(const BaseMeasure& base, const Discrepancy& omega, const Dataset& data,
                          const ObjectiveConfig& cfg, double lr, long steps);

/// g_t(x) = sum_i a_i phi(Theta_i, x) + sum_i w_i <grad phi(Theta_i, x), T_i>.
double predicted_g(const CltState& state, const BaseMeasure& base, const Discrepancy& omega,
                   const UnitVector& x);

/// Resampling-only deviation: gbar_t(x) = sum_i a_i phi(Theta_i, x).
double gbar(const BaseMeasure& base, const Discrepancy& omega,
            const std::vector<Neuron>& theta_t, const UnitVector& x);

/// Per-atom J_{t,s} solving dJ/dt = -grad^2 V(Theta_t, mu_t) J, J_{s,s} = Id,
/// by forward Euler along the stored flow.
std::vector<Mat> jacobian_flow(const BaseMeasure& base, const CltTrajectory& traj, long s_idx,
                               long t_idx, const Dataset& data, const ObjectiveConfig& cfg);

/// Residual r(t_k) of the Volterra identity
/// g_t + int_0^t int Gamma_{t,s}(x,x') g_s(x') nu(dx') ds = gbar_t
/// with trapezoid time quadrature; one entry per grid point. Guards the grid
/// at 200 steps.
std::vector<double> volterra_residual(const BaseMeasure& base, const Discrepancy& omega,
                                      const Dataset& data, const ObjectiveConfig& cfg, double lr,
                                      long steps);

/// Gamma^infty_tau as an n x n matrix over the data points:
/// sum_i w_i <grad phi(theta_i, x), exp(-tau H_i^+) grad phi(theta_i, x')>
/// with H_i the PSD-projected per-atom potential Hessian at mu_inf.
SymMat gamma_infty(const Ensemble& mu_inf, const Dataset& data, const ObjectiveConfig& cfg,
                   double tau);

/// Same kernel with caller-supplied per-atom Hessians (one per atom).
SymMat gamma_infty_from_hessians(const std::vector<Neuron>& atoms,
                                 const std::vector<double>& weights, Activation act,
                                 const std::vector<SymMat>& hessians, const Dataset& data,
                                 double tau);

// --- weighted-particle helpers (the finite-m comparator reuses base atoms
// --- with multiplicities, so the m-particle flow is an M-atom weighted GD)

double weighted_eval(const std::vector<Neuron>& atoms, const std::vector<double>& weights,
                     Activation act, const UnitVector& x);

/// Trajectory of the weighted interacting GD from the given atoms.
std::vector<std::vector<Neuron>> integrate_weighted_gd(std::vector<Neuron> atoms,
                                                       const std::vector<double>& weights,
                                                       Activation act, const Dataset& data,
                                                       const ObjectiveConfig& cfg, double lr,
                                                       long steps);

struct CltPrediction {
    std::vector<std::size_t> m_list;
    std::vector<double> mean_error;  // mean over trials of ||g_pred - g_actual||_data
    double fitted_slope = 0.0;       // log-log slope of mean_error vs m
};

/// First-order coupling test of the dynamical CLT: for each m, resample
/// omega_0, train the coupled finite-m system, and compare the predicted
/// fluctuation field against sqrt(m)(f^(m) - f^(M)) at the final time.
CltPrediction clt_prediction_experiment(const BaseMeasure& base, const Dataset& data,
                                        const ObjectiveConfig& cfg, double lr, long steps,
                                        const std::vector<std::size_t>& m_list, int trials,
                                        std::uint64_t seed);

}  // namespace mff
