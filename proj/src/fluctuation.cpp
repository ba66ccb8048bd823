#include "mff/fluctuation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "mff/parallel.hpp"

namespace mff {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

std::vector<double> predictions(const Ensemble& e, const Dataset& data) {
    std::vector<double> p(data.size(), 0.0);
    const Activation act = e.activation();
    for (const Neuron& n : e.neurons())
        for (std::size_t l = 0; l < data.size(); ++l)
            p[l] += n.c * act_value(act, dot(n.z, data.points[l].coords()));
    const double inv_m = 1.0 / static_cast<double>(e.width());
    for (double& v : p) v *= inv_m;
    return p;
}

double empirical_sq_norm(const std::vector<double>& values) {
    double s = 0.0;
    for (double v : values) s += v * v;
    return s / static_cast<double>(values.size());
}

/// ||phi_hat(z, .)||^2 under the empirical measure.
double empirical_feature_sq_norm(const std::vector<double>& z, Activation act,
                                 const Dataset& data) {
    double s = 0.0;
    for (const UnitVector& x : data.points) {
        const double v = act_value(act, dot(z, x.coords()));
        s += v * v;
    }
    return s / static_cast<double>(data.size());
}

Ensemble concatenate_runs(const std::vector<Ensemble>& runs) {
    std::vector<Neuron> all;
    all.reserve(runs.size() * runs.front().width());
    for (const Ensemble& e : runs)
        for (const Neuron& n : e.neurons()) all.push_back(n);
    return Ensemble(std::move(all), runs.front().d(), runs.front().activation(),
                    runs.front().mode());
}

void check_runs(const std::vector<Ensemble>& runs) {
    if (runs.size() < 2) throw std::invalid_argument("average_fluctuation: need kappa >= 2 runs");
    for (const Ensemble& e : runs) {
        if (e.width() != runs.front().width())
            throw std::invalid_argument("average_fluctuation: mixed widths across runs");
        if (e.d() != runs.front().d())
            throw std::invalid_argument("average_fluctuation: mixed dimensions across runs");
    }
}

}  // namespace

double average_fluctuation(const std::vector<Ensemble>& runs, const NormSpec& norm) {
    check_runs(runs);
    const double kappa = static_cast<double>(runs.size());
    if (norm.kind == NormSpec::Kind::empirical) {
        if (!norm.data) throw std::invalid_argument("average_fluctuation: empirical norm needs data");
        std::vector<double> mean(norm.data->size(), 0.0);
        double sum_sq = 0.0;
        for (const Ensemble& e : runs) {
            const std::vector<double> p = predictions(e, *norm.data);
            sum_sq += empirical_sq_norm(p);
            for (std::size_t l = 0; l < mean.size(); ++l) mean[l] += p[l];
        }
        for (double& v : mean) v /= kappa;
        return sum_sq / kappa - empirical_sq_norm(mean);
    }
    // population norm: ||f_bar||^2 through the Gram sum over all kappa*m atoms
    double sum_sq = 0.0;
    for (const Ensemble& e : runs) sum_sq += population_inner(e, e);
    const Ensemble merged = concatenate_runs(runs);
    return sum_sq / kappa - population_inner(merged, merged);
}

double static_mc_error(const Ensemble& mu, std::size_t m, const NormSpec& norm) {
    if (m == 0) throw std::invalid_argument("static_mc_error: need m >= 1");
    return mc_bound(mu, norm) / static_cast<double>(m);
}

double mc_bound(const Ensemble& mu_inf, const NormSpec& norm) {
    const double w = 1.0 / static_cast<double>(mu_inf.width());
    double second_moment = 0.0;
    double f_sq = 0.0;
    if (norm.kind == NormSpec::Kind::population) {
        const double selfnorm = relu_selfnorm(mu_inf.d());
        for (const Neuron& n : mu_inf.neurons()) second_moment += w * n.c * n.c * selfnorm;
        f_sq = population_inner(mu_inf, mu_inf);
    } else {
        if (!norm.data) throw std::invalid_argument("mc_bound: empirical norm needs data");
        for (const Neuron& n : mu_inf.neurons())
            second_moment +=
                w * n.c * n.c * empirical_feature_sq_norm(n.z, mu_inf.activation(), *norm.data);
        f_sq = empirical_sq_norm(predictions(mu_inf, *norm.data));
    }
    return second_moment - f_sq;
}

double mc_bound(const Target& mu_inf, const NormSpec& norm) {
    switch (mu_inf.kind()) {
        case Target::Kind::teacher: return mc_bound(mu_inf.teacher_ensemble(), norm);
        case Target::Kind::zero: return 0.0;
        case Target::Kind::great_circle: {
            const int d = mu_inf.d();
            if (norm.kind == NormSpec::Kind::population)
                return relu_selfnorm(d) - circle_circle_inner(d);
            if (!norm.data) throw std::invalid_argument("mc_bound: empirical norm needs data");
            const int nodes = 512;
            double second_moment = 0.0;
            for (int k = 0; k < nodes; ++k) {
                const double psi = 2.0 * std::numbers::pi * k / nodes;
                std::vector<double> z(static_cast<std::size_t>(d) + 1, 0.0);
                z[0] = std::cos(psi);
                z[1] = std::sin(psi);
                second_moment += empirical_feature_sq_norm(z, Activation::relu, *norm.data);
            }
            second_moment /= nodes;
            double f_sq = 0.0;
            for (const UnitVector& x : norm.data->points) {
                const double v = great_circle_target_value(x);
                f_sq += v * v;
            }
            f_sq /= static_cast<double>(norm.data->size());
            return second_moment - f_sq;
        }
    }
    return 0.0;
}

double k_hat_empirical(const Dataset& data, int d, Rng& rng, int extra_starts) {
    data.validate();
    std::vector<std::vector<double>> seeds;
    for (const UnitVector& x : data.points) seeds.push_back(x.coords());
    for (int s = 0; s < extra_starts; ++s) seeds.push_back(sample_uniform_sphere(d, rng).coords());

    auto objective = [&](const std::vector<double>& z) {
        return empirical_feature_sq_norm(z, Activation::relu, data);
    };
    // fixed-step projected ascent; the max is taken over every iterate, so an
    // overshooting step can never lose ground against the seeds
    double best = 0.0;
    for (auto z : seeds) {
        best = std::max(best, objective(z));
        const int iters = 300;
        const double step = 0.5;
        for (int it = 0; it < iters; ++it) {
            std::vector<double> grad(z.size(), 0.0);
            for (const UnitVector& x : data.points) {
                const double s = dot(z, x.coords());
                if (s > 0.0)
                    for (std::size_t k = 0; k < z.size(); ++k) grad[k] += 2.0 * s * x[k];
            }
            const double inv_n = 1.0 / static_cast<double>(data.size());
            double radial = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k) {
                grad[k] *= inv_n;
                radial += grad[k] * z[k];
            }
            double sq = 0.0;
            for (std::size_t k = 0; k < z.size(); ++k) {
                z[k] += step * (grad[k] - radial * z[k]);
                sq += z[k] * z[k];
            }
            const double inv = 1.0 / std::sqrt(sq);
            for (double& v : z) v *= inv;
            best = std::max(best, objective(z));
        }
    }
    return best;
}

namespace {

MinimizerReport assemble_report(const Ensemble& e, double lambda, double gamma1_star,
                                double k_hat, double mid) {
    MinimizerReport rep;
    rep.lambda = lambda;
    rep.q2 = q_norm(e, 2.0);
    rep.k_hat = k_hat;
    rep.lhs1 = lambda * lambda * rep.q2 / k_hat;
    rep.mid = mid;
    rep.rhs2 = lambda * gamma1_star * gamma1_star;
    // e is an approximate minimizer, not exact: allow 5% slack
    rep.ineq1_ok = rep.lhs1 <= rep.mid * 1.05;
    rep.ineq2_ok = rep.mid + lambda * rep.q2 <= rep.rhs2 * 1.05;
    return rep;
}

}  // namespace

MinimizerReport minimizer_inequalities(const Ensemble& e, double lambda, double gamma1_star,
                                       const Target& target) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("minimizer_inequalities: need lambda > 0 (vacuous otherwise)");
    return assemble_report(e, lambda, gamma1_star, relu_selfnorm(e.d()),
                           population_l2_error(e, target));
}

MinimizerReport minimizer_inequalities(const Ensemble& e, double lambda, double gamma1_star,
                                       const Dataset& data, Rng& rng) {
    if (!(lambda > 0.0))
        throw std::invalid_argument("minimizer_inequalities: need lambda > 0 (vacuous otherwise)");
    const std::vector<double> p = predictions(e, data);
    double mid = 0.0;
    for (std::size_t l = 0; l < data.size(); ++l) {
        const double r = p[l] - data.values[l];
        mid += r * r;
    }
    mid /= static_cast<double>(data.size());
    return assemble_report(e, lambda, gamma1_star, k_hat_empirical(data, e.d(), rng), mid);
}

}  // namespace mff
