#pragma once

#include <string>
#include <vector>

#include "mff/ensemble.hpp"
#include "mff/linalg.hpp"

namespace mff {

enum class LossKind { empirical, population };

struct ObjectiveConfig {
    LossKind loss_kind = LossKind::empirical;
    double lambda = 0.0;      // 2-norm regularization strength, r(theta) = c^2/2
    bool rescale_by_d = true; // multiply loss and gradient by d (spherical-integral scale)
    int d = 16;

    double scale() const { return rescale_by_d ? static_cast<double>(d) : 1.0; }
};

/// Empirical data measure: n points with target values f*(x_l).
struct Dataset {
    std::vector<UnitVector> points;
    std::vector<double> values;

    std::size_t size() const { return points.size(); }
    void validate() const;
};

Dataset sample_dataset(const Target& target, std::size_t n, int d, Rng& rng);

/// Dataset CSV: header `y,x_0,...,x_d`.
void write_dataset_csv_file(const std::string& path, const Dataset& data);
Dataset read_dataset_csv_file(const std::string& path);

struct LossBreakdown {
    double total = 0.0;
    double fit = 0.0;
    double reg = 0.0;
};

/// Per-neuron gradient of m * L (the per-particle scaling of the flow),
/// z part tangent-projected in sphere mode.
struct NeuronGrad {
    double dc = 0.0;
    std::vector<double> dz;
};

struct LossGrad {
    LossBreakdown loss;
    std::vector<NeuronGrad> grads;
};

LossBreakdown empirical_loss(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg);
std::vector<NeuronGrad> empirical_gradient(const Ensemble& e, const Dataset& data,
                                           const ObjectiveConfig& cfg);
LossGrad empirical_loss_grad(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg);

LossBreakdown population_loss(const Ensemble& e, const Target& t, const ObjectiveConfig& cfg);
std::vector<NeuronGrad> population_gradient(const Ensemble& e, const Target& t,
                                            const ObjectiveConfig& cfg);
LossGrad population_loss_grad(const Ensemble& e, const Target& t, const ObjectiveConfig& cfg);

/// Hessian of the per-particle potential V(theta, mu_e) under the empirical
/// loss: (1/n) sum_l grad^2 phi(theta, x_l) (f(x_l) - y_l) + lambda e0 e0^T,
/// ambient coordinates, a.e. convention for ReLU.
SymMat potential_hessian(const Neuron& theta, const Ensemble& e, const Dataset& data,
                         const ObjectiveConfig& cfg);

/// -(1/m) sum_i min{lambda_min(grad^2 V(theta_i)), 0} >= 0.
double curvature_defect(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg);

}  // namespace mff
