#include "mff/clt.hpp"

#include <cmath>
#include <stdexcept>

namespace mff {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double phi_value(const Neuron& atom, Activation act, const std::vector<double>& x) {
    return atom.c * act_value(act, dot(atom.z, x));
}

/// grad_theta phi = (act(s), c act'(s) x), packed as (c, z) of length d+2.
void grad_phi_into(const Neuron& atom, Activation act, const std::vector<double>& x,
                   std::vector<double>& out) {
    const double s = dot(atom.z, x);
    out[0] = act_value(act, s);
    const double zc = atom.c * act_deriv(act, s);
    for (std::size_t k = 0; k < x.size(); ++k) out[k + 1] = zc * x[k];
}

std::vector<double> residuals(const std::vector<Neuron>& atoms, const std::vector<double>& weights,
                              Activation act, const Dataset& data) {
    std::vector<double> r(data.size());
    for (std::size_t l = 0; l < data.size(); ++l) {
        double f = 0.0;
        for (std::size_t j = 0; j < atoms.size(); ++j)
            f += weights[j] * phi_value(atoms[j], act, data.points[l].coords());
        r[l] = f - data.values[l];
    }
    return r;
}

/// grad^2 V(theta, mu) applied as a matrix: (1/n) sum_l r_l grad^2 phi + lambda e0 e0^T,
/// times the configured scale.
SymMat hessian_at(const Neuron& atom, Activation act, const Dataset& data,
                  const std::vector<double>& residual, const ObjectiveConfig& cfg) {
    const std::size_t ambient = atom.z.size();
    const int dim = static_cast<int>(ambient) + 1;
    SymMat h(dim);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (std::size_t l = 0; l < data.size(); ++l) {
        const auto& x = data.points[l].coords();
        const double r = residual[l] * inv_n;
        const double s = dot(atom.z, x);
        const double d1 = act_deriv(act, s);
        const double d2 = act_second(act, s);
        for (std::size_t k = 0; k < ambient; ++k) {
            h.at(0, static_cast<int>(k) + 1) += r * d1 * x[k];
            for (std::size_t j = 0; j < ambient; ++j)
                h.at(static_cast<int>(j) + 1, static_cast<int>(k) + 1) +=
                    r * atom.c * d2 * x[j] * x[k];
        }
    }
    for (int k = 1; k < dim; ++k) h.at(k, 0) = h.at(0, k);
    h.at(0, 0) += cfg.lambda;
    const double scale = cfg.scale();
    if (scale != 1.0)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) h.at(i, j) *= scale;
    return h;
}

void check_clt_preconditions(const BaseMeasure& base, const ObjectiveConfig& cfg) {
    base.validate();
    if (cfg.loss_kind != LossKind::empirical)
        throw std::invalid_argument("clt: the linearized flow is defined under the empirical loss");
    if (cfg.d != base.d) throw std::invalid_argument("clt: config/base dimension mismatch");
}

/// One forward-Euler step of the weighted interacting GD. Shared by the
/// mean-field flow inside integrate_T and the finite-m comparator so the
/// coupled trajectories use the exact same arithmetic.
std::vector<Neuron> advance_atoms(const std::vector<Neuron>& atoms,
                                  const std::vector<double>& residual, Activation act,
                                  const Dataset& data, const ObjectiveConfig& cfg, double lr) {
    const std::size_t n = data.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    const double scale = cfg.scale();
    std::vector<Neuron> next(atoms.size());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        const Neuron& atom = atoms[i];
        double grad_c = cfg.lambda * atom.c;
        std::vector<double> grad_z(atom.z.size(), 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            const auto& x = data.points[l].coords();
            const double s = dot(atom.z, x);
            const double rl = residual[l] * inv_n;
            grad_c += rl * act_value(act, s);
            const double gz = rl * atom.c * act_deriv(act, s);
            for (std::size_t k = 0; k < x.size(); ++k) grad_z[k] += gz * x[k];
        }
        Neuron out = atom;
        out.c -= lr * scale * grad_c;
        for (std::size_t k = 0; k < out.z.size(); ++k) out.z[k] -= lr * scale * grad_z[k];
        next[i] = std::move(out);
    }
    return next;
}

}  // namespace

void BaseMeasure::validate() const {
    if (atoms.size() < 2) throw std::invalid_argument("BaseMeasure: need at least 2 atoms");
    if (weights.size() != atoms.size())
        throw std::invalid_argument("BaseMeasure: weights/atoms size mismatch");
    double sum = 0.0;
    for (double w : weights) {
        if (w < 0.0) throw std::invalid_argument("BaseMeasure: negative weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("BaseMeasure: weights sum to " + std::to_string(sum));
    const std::size_t ambient = static_cast<std::size_t>(d) + 1;
    for (const Neuron& a : atoms)
        if (a.z.size() != ambient)
            throw std::invalid_argument("BaseMeasure: atom feature dimension mismatch");
}

BaseMeasure BaseMeasure::uniform(std::vector<Neuron> atoms, int d, Activation act) {
    BaseMeasure b;
    b.d = d;
    b.activation = act;
    b.weights.assign(atoms.size(), 1.0 / static_cast<double>(atoms.size()));
    b.atoms = std::move(atoms);
    b.validate();
    return b;
}

BaseMeasure BaseMeasure::sample(std::size_t M, int d, const CInitScheme& c_init, Rng& rng,
                                Activation act) {
    std::vector<Neuron> atoms(M);
    for (std::size_t i = 0; i < M; ++i) {
        atoms[i].z = sample_uniform_sphere(d, rng).coords();
        switch (c_init.kind) {
            case CInitScheme::Kind::gaussian: atoms[i].c = rng.gaussian(); break;
            case CInitScheme::Kind::zero: atoms[i].c = 0.0; break;
            case CInitScheme::Kind::constant: atoms[i].c = c_init.value; break;
        }
    }
    return uniform(std::move(atoms), d, act);
}

Discrepancy sample_omega_gaussian(const BaseMeasure& base, Rng& rng) {
    base.validate();
    const std::size_t M = base.size();
    std::vector<double> g(M);
    for (double& v : g) v = rng.gaussian();
    double mix = 0.0;
    for (std::size_t i = 0; i < M; ++i) mix += std::sqrt(base.weights[i]) * g[i];
    Discrepancy omega;
    omega.a.resize(M);
    for (std::size_t i = 0; i < M; ++i)
        omega.a[i] = std::sqrt(base.weights[i]) * g[i] - base.weights[i] * mix;
    return omega;
}

ResampledOmega sample_omega_resampled(const BaseMeasure& base, std::size_t m, Rng& rng) {
    base.validate();
    if (m == 0) throw std::invalid_argument("sample_omega_resampled: need m >= 1");
    const std::size_t M = base.size();
    ResampledOmega out;
    out.m = m;
    out.counts.assign(M, 0);
    // inverse-CDF draw per sample; exact for uniform or general weights
    std::vector<double> cdf(M);
    double acc = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        acc += base.weights[i];
        cdf[i] = acc;
    }
    cdf[M - 1] = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
        const double u = rng.uniform();
        std::size_t lo = 0, hi = M - 1;
        while (lo < hi) {
            const std::size_t mid = (lo + hi) / 2;
            if (u < cdf[mid]) hi = mid; else lo = mid + 1;
        }
        ++out.counts[lo];
    }
    const double root_m = std::sqrt(static_cast<double>(m));
    out.omega.a.resize(M);
    for (std::size_t i = 0; i < M; ++i)
        out.omega.a[i] = root_m * (static_cast<double>(out.counts[i]) / static_cast<double>(m) -
                                   base.weights[i]);
    return out;
}

CltState CltTrajectory::state_at(long k) const {
    if (k < 0 || k > steps) throw std::out_of_range("CltTrajectory::state_at: index out of range");
    return CltState{theta_path[static_cast<std::size_t>(k)], T_path[static_cast<std::size_t>(k)],
                    lr * static_cast<double>(k)};
}

CltTrajectory integrate_T(const BaseMeasure& base, const Discrepancy& omega, const Dataset& data,
                          const ObjectiveConfig& cfg, double lr, long steps) {
    check_clt_preconditions(base, cfg);
    data.validate();
    if (omega.a.size() != base.size())
        throw std::invalid_argument("integrate_T: discrepancy size mismatch");
    if (steps < 1) throw std::invalid_argument("integrate_T: need steps >= 1");

    const std::size_t M = base.size();
    const std::size_t n = data.size();
    const std::size_t dim = static_cast<std::size_t>(base.particle_dim());
    const Activation act = base.activation;
    const double scale = cfg.scale();
    const double inv_n = 1.0 / static_cast<double>(n);

    CltTrajectory traj;
    traj.lr = lr;
    traj.steps = steps;
    traj.theta_path.reserve(static_cast<std::size_t>(steps) + 1);
    traj.T_path.reserve(static_cast<std::size_t>(steps) + 1);

    std::vector<Neuron> theta = base.atoms;
    std::vector<std::vector<double>> T(M, std::vector<double>(dim, 0.0));
    traj.theta_path.push_back(theta);
    traj.T_path.push_back(T);

    for (long step = 0; step < steps; ++step) {
        const std::vector<double> r = residuals(theta, base.weights, act, data);

        // s_l = sum_j w_j <grad phi_j, T_j>, u_l = gbar_t(x_l)
        std::vector<double> s_plus_u(n, 0.0);
        for (std::size_t l = 0; l < n; ++l) {
            const auto& x = data.points[l].coords();
            double s_l = 0.0, u_l = 0.0;
            for (std::size_t j = 0; j < M; ++j) {
                const double sj = dot(theta[j].z, x);
                const double a1 = act_value(act, sj);
                const double d1 = act_deriv(act, sj);
                double xz = 0.0;
                for (std::size_t k = 0; k < x.size(); ++k) xz += x[k] * T[j][k + 1];
                s_l += base.weights[j] * (a1 * T[j][0] + theta[j].c * d1 * xz);
                u_l += omega.a[j] * theta[j].c * a1;
            }
            s_plus_u[l] = s_l + u_l;
        }

        std::vector<std::vector<double>> T_next(M);
        for (std::size_t i = 0; i < M; ++i) {
            const Neuron& atom = theta[i];
            const std::size_t ambient = atom.z.size();
            // T forcing: H_i T_i + (1/n) sum_l (s_l + u_l) grad phi_i
            std::vector<double> rhs(dim, 0.0);
            for (std::size_t l = 0; l < n; ++l) {
                const auto& x = data.points[l].coords();
                const double s = dot(atom.z, x);
                const double a1 = act_value(act, s);
                const double d1 = act_deriv(act, s);
                const double d2 = act_second(act, s);
                double xT = 0.0;
                for (std::size_t k = 0; k < ambient; ++k) xT += x[k] * T[i][k + 1];
                const double rl = r[l] * inv_n;
                // (grad^2 phi . T) = (d1 xT, (d1 T_c + c d2 xT) x)
                rhs[0] += rl * d1 * xT;
                const double zc = rl * (d1 * T[i][0] + atom.c * d2 * xT);
                const double fl = s_plus_u[l] * inv_n;
                rhs[0] += fl * a1;
                const double fz = fl * atom.c * d1;
                for (std::size_t k = 0; k < ambient; ++k) rhs[k + 1] += (zc + fz) * x[k];
            }
            rhs[0] += cfg.lambda * T[i][0];

            T_next[i].resize(dim);
            for (std::size_t k = 0; k < dim; ++k) T_next[i][k] = T[i][k] - lr * scale * rhs[k];
            for (double v : T_next[i])
                if (!std::isfinite(v))
                    throw std::runtime_error("integrate_T: non-finite T at step " +
                                             std::to_string(step + 1) + ", atom " +
                                             std::to_string(i));
        }
        theta = advance_atoms(theta, r, act, data, cfg, lr);
        T = std::move(T_next);
        traj.theta_path.push_back(theta);
        traj.T_path.push_back(T);
    }
    return traj;
}

double predicted_g(const CltState& state, const BaseMeasure& base, const Discrepancy& omega,
                   const UnitVector& x) {
    const Activation act = base.activation;
    const auto& xc = x.coords();
    double g = 0.0;
    std::vector<double> grad(static_cast<std::size_t>(base.particle_dim()));
    for (std::size_t i = 0; i < base.size(); ++i) {
        g += omega.a[i] * phi_value(state.theta[i], act, xc);
        grad_phi_into(state.theta[i], act, xc, grad);
        g += base.weights[i] * dot(grad, state.T[i]);
    }
    return g;
}

double gbar(const BaseMeasure& base, const Discrepancy& omega,
            const std::vector<Neuron>& theta_t, const UnitVector& x) {
    const auto& xc = x.coords();
    double g = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i)
        g += omega.a[i] * phi_value(theta_t[i], base.activation, xc);
    return g;
}

std::vector<Mat> jacobian_flow(const BaseMeasure& base, const CltTrajectory& traj, long s_idx,
                               long t_idx, const Dataset& data, const ObjectiveConfig& cfg) {
    check_clt_preconditions(base, cfg);
    if (s_idx < 0 || t_idx < s_idx || t_idx > traj.steps)
        throw std::invalid_argument("jacobian_flow: flow snapshots do not cover [s, t]");
    const int dim = base.particle_dim();
    std::vector<Mat> J(base.size(), Mat::identity(dim));
    for (long k = s_idx; k < t_idx; ++k) {
        const auto& theta = traj.theta_path[static_cast<std::size_t>(k)];
        const std::vector<double> r = residuals(theta, base.weights, base.activation, data);
        for (std::size_t i = 0; i < base.size(); ++i) {
            const SymMat h = hessian_at(theta[i], base.activation, data, r, cfg);
            // J <- J - lr H J
            Mat hj(dim);
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b) {
                    double s = 0.0;
                    for (int c = 0; c < dim; ++c) s += h.at(a, c) * J[i].at(c, b);
                    hj.at(a, b) = s;
                }
            for (int a = 0; a < dim; ++a)
                for (int b = 0; b < dim; ++b) J[i].at(a, b) -= traj.lr * hj.at(a, b);
        }
    }
    return J;
}

std::vector<double> volterra_residual(const BaseMeasure& base, const Discrepancy& omega,
                                      const Dataset& data, const ObjectiveConfig& cfg, double lr,
                                      long steps) {
    check_clt_preconditions(base, cfg);
    if (steps > 200)
        throw std::invalid_argument("volterra_residual: grid of " + std::to_string(steps) +
                                    " steps exceeds the 200-step memory guard");
    const CltTrajectory traj = integrate_T(base, omega, data, cfg, lr, steps);

    const std::size_t M = base.size();
    const std::size_t n = data.size();
    const std::size_t dim = static_cast<std::size_t>(base.particle_dim());
    const std::size_t K = static_cast<std::size_t>(steps);
    const Activation act = base.activation;
    const double inv_n = 1.0 / static_cast<double>(n);

    // g and gbar on the full grid
    std::vector<std::vector<double>> g(K + 1, std::vector<double>(n));
    std::vector<std::vector<double>> gb(K + 1, std::vector<double>(n));
    std::vector<std::vector<double>> residual_at(K + 1);
    for (std::size_t k = 0; k <= K; ++k) {
        const CltState state = traj.state_at(static_cast<long>(k));
        for (std::size_t l = 0; l < n; ++l) {
            g[k][l] = predicted_g(state, base, omega, data.points[l]);
            gb[k][l] = gbar(base, omega, state.theta, data.points[l]);
        }
        residual_at[k] = residuals(state.theta, base.weights, act, data);
    }

    // memory kernel accumulation R[t][l] = int_0^t (1/n) sum_l' Gamma_{t,s}(x_l, x_l') g_s(x_l') ds
    std::vector<std::vector<double>> R(K + 1, std::vector<double>(n, 0.0));
    std::vector<double> grad(dim);
    for (std::size_t s = 0; s <= K; ++s) {
        // beta_i = (1/n) sum_l grad phi(Theta_s(theta_i), x_l) g_s(x_l); y_i(t) = J_{t,s} beta_i
        std::vector<std::vector<double>> y(M, std::vector<double>(dim, 0.0));
        for (std::size_t i = 0; i < M; ++i) {
            const Neuron& atom = traj.theta_path[s][i];
            for (std::size_t l = 0; l < n; ++l) {
                grad_phi_into(atom, act, data.points[l].coords(), grad);
                const double w = g[s][l] * inv_n;
                for (std::size_t k = 0; k < dim; ++k) y[i][k] += w * grad[k];
            }
        }
        for (std::size_t t = s; t <= K; ++t) {
            if (t >= 1) {
                const double wt = lr * ((s == 0 || s == t) ? 0.5 : 1.0);
                const auto& theta_t = traj.theta_path[t];
                for (std::size_t l = 0; l < n; ++l) {
                    double v = 0.0;
                    for (std::size_t i = 0; i < M; ++i) {
                        grad_phi_into(theta_t[i], act, data.points[l].coords(), grad);
                        v += base.weights[i] * dot(grad, y[i]);
                    }
                    R[t][l] += wt * v;
                }
            }
            if (t == K) break;
            // advance y by one Euler step of the Jacobian equation
            for (std::size_t i = 0; i < M; ++i) {
                const SymMat h = hessian_at(traj.theta_path[t][i], act, data, residual_at[t], cfg);
                const std::vector<double> hy = h.apply(y[i]);
                for (std::size_t k = 0; k < dim; ++k) y[i][k] -= lr * hy[k];
            }
        }
    }

    std::vector<double> out(K + 1, 0.0);
    for (std::size_t t = 0; t <= K; ++t) {
        double sq = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double e = g[t][l] + R[t][l] - gb[t][l];
            sq += e * e;
        }
        out[t] = std::sqrt(sq * inv_n);
    }
    return out;
}

SymMat gamma_infty_from_hessians(const std::vector<Neuron>& atoms,
                                 const std::vector<double>& weights, Activation act,
                                 const std::vector<SymMat>& hessians, const Dataset& data,
                                 double tau) {
    data.validate();
    if (tau < 0.0) throw std::invalid_argument("gamma_infty: need tau >= 0");
    if (hessians.size() != atoms.size())
        throw std::invalid_argument("gamma_infty: one Hessian per atom required");
    const std::size_t n = data.size();
    const std::size_t dim = atoms.front().z.size() + 1;
    SymMat gamma(static_cast<int>(n));
    std::vector<double> grad(dim);
    std::vector<std::vector<double>> b(n, std::vector<double>(dim));
    for (std::size_t ai = 0; ai < atoms.size(); ++ai) {
        const EigenDecomposition eig = jacobi_eigensolve(hessians[ai]);
        for (std::size_t l = 0; l < n; ++l) {
            grad_phi_into(atoms[ai], act, data.points[l].coords(), grad);
            b[l] = grad;
        }
        // projections onto eigenvectors, with PSD clamp of the spectrum
        for (int k = 0; k < eig.n; ++k) {
            const double lam = std::max(0.0, eig.values[k]);
            const double decay = std::exp(-tau * lam);
            std::vector<double> proj(n, 0.0);
            for (std::size_t l = 0; l < n; ++l) {
                double p = 0.0;
                for (int rIdx = 0; rIdx < eig.n; ++rIdx) p += eig.vec(rIdx, k) * b[l][rIdx];
                proj[l] = p;
            }
            for (std::size_t l = 0; l < n; ++l)
                for (std::size_t l2 = 0; l2 < n; ++l2)
                    gamma.at(static_cast<int>(l), static_cast<int>(l2)) +=
                        weights[ai] * decay * proj[l] * proj[l2];
        }
    }
    return gamma;
}

SymMat gamma_infty(const Ensemble& mu_inf, const Dataset& data, const ObjectiveConfig& cfg,
                   double tau) {
    std::vector<SymMat> hessians;
    hessians.reserve(mu_inf.width());
    for (const Neuron& atom : mu_inf.neurons())
        hessians.push_back(potential_hessian(atom, mu_inf, data, cfg));
    const std::vector<double> weights(mu_inf.width(), 1.0 / static_cast<double>(mu_inf.width()));
    return gamma_infty_from_hessians(mu_inf.neurons(), weights, mu_inf.activation(), hessians,
                                     data, tau);
}

double weighted_eval(const std::vector<Neuron>& atoms, const std::vector<double>& weights,
                     Activation act, const UnitVector& x) {
    const auto& xc = x.coords();
    double f = 0.0;
    for (std::size_t j = 0; j < atoms.size(); ++j) f += weights[j] * phi_value(atoms[j], act, xc);
    return f;
}

std::vector<std::vector<Neuron>> integrate_weighted_gd(std::vector<Neuron> atoms,
                                                       const std::vector<double>& weights,
                                                       Activation act, const Dataset& data,
                                                       const ObjectiveConfig& cfg, double lr,
                                                       long steps) {
    data.validate();
    std::vector<std::vector<Neuron>> path;
    path.reserve(static_cast<std::size_t>(steps) + 1);
    path.push_back(atoms);
    for (long step = 0; step < steps; ++step) {
        const std::vector<double> r = residuals(atoms, weights, act, data);
        atoms = advance_atoms(atoms, r, act, data, cfg, lr);
        path.push_back(atoms);
    }
    return path;
}

CltPrediction clt_prediction_experiment(const BaseMeasure& base, const Dataset& data,
                                        const ObjectiveConfig& cfg, double lr, long steps,
                                        const std::vector<std::size_t>& m_list, int trials,
                                        std::uint64_t seed) {
    check_clt_preconditions(base, cfg);
    if (m_list.empty() || trials < 1)
        throw std::invalid_argument("clt_prediction_experiment: empty m_list or trials < 1");
    const std::size_t n = data.size();

    // mean-field flow (independent of omega): final atoms
    const auto mean_path = integrate_weighted_gd(base.atoms, base.weights, base.activation, data,
                                                 cfg, lr, steps);
    const std::vector<Neuron>& theta_final = mean_path.back();

    CltPrediction out;
    out.m_list = m_list;
    out.mean_error.assign(m_list.size(), 0.0);
    for (std::size_t mi = 0; mi < m_list.size(); ++mi) {
        const std::size_t m = m_list[mi];
        double err_sum = 0.0;
        for (int trial = 0; trial < trials; ++trial) {
            Rng rng(mix64(seed, mix64(static_cast<std::uint64_t>(mi),
                                      static_cast<std::uint64_t>(trial))));
            const ResampledOmega res = sample_omega_resampled(base, m, rng);
            // coupled finite-m flow: base atoms with multiplicity weights
            std::vector<double> q(base.size());
            for (std::size_t i = 0; i < base.size(); ++i)
                q[i] = static_cast<double>(res.counts[i]) / static_cast<double>(m);
            const auto m_path = integrate_weighted_gd(base.atoms, q, base.activation, data, cfg,
                                                      lr, steps);
            const CltTrajectory traj = integrate_T(base, res.omega, data, cfg, lr, steps);
            const CltState state = traj.state_at(steps);
            const double root_m = std::sqrt(static_cast<double>(m));
            double sq = 0.0;
            for (std::size_t l = 0; l < n; ++l) {
                const double fm = weighted_eval(m_path.back(), q, base.activation, data.points[l]);
                const double fM =
                    weighted_eval(theta_final, base.weights, base.activation, data.points[l]);
                const double actual = root_m * (fm - fM);
                const double pred = predicted_g(state, base, res.omega, data.points[l]);
                const double e = pred - actual;
                sq += e * e;
            }
            err_sum += std::sqrt(sq / static_cast<double>(n));
        }
        out.mean_error[mi] = err_sum / trials;
    }

    // least-squares slope in log-log coordinates
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double cnt = static_cast<double>(m_list.size());
    for (std::size_t i = 0; i < m_list.size(); ++i) {
        const double x = std::log(static_cast<double>(m_list[i]));
        const double y = std::log(std::max(out.mean_error[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    out.fitted_slope = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    return out;
}

}  // namespace mff
