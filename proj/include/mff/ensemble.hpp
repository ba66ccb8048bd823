#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mff/rng.hpp"
#include "mff/sphere_kernel.hpp"

namespace mff {

enum class Activation { relu, tanh_act };
enum class ParamMode { sphere, euclidean };

/// One particle theta = (c, z): outer weight and feature direction. z is a
/// plain vector so euclidean (unconstrained) mode can leave the sphere.
struct Neuron {
    double c = 0.0;
    std::vector<double> z;
};

/// m particles representing the empirical measure mu^(m) and the network
/// f^(m)(x) = (1/m) sum_i c_i act(<z_i, x>).
class Ensemble {
public:
    Ensemble(std::vector<Neuron> neurons, int d, Activation activation = Activation::relu,
             ParamMode mode = ParamMode::sphere);

    std::size_t width() const { return neurons_.size(); }
    int d() const { return d_; }
    Activation activation() const { return activation_; }
    ParamMode mode() const { return mode_; }
    const std::vector<Neuron>& neurons() const { return neurons_; }
    const Neuron& neuron(std::size_t i) const { return neurons_[i]; }

private:
    std::vector<Neuron> neurons_;
    int d_;
    Activation activation_;
    ParamMode mode_;
};

struct CInitScheme {
    enum class Kind { gaussian, zero, constant };
    Kind kind = Kind::gaussian;
    double value = 0.0;  // used by `constant`

    static CInitScheme gaussian() { return {Kind::gaussian, 0.0}; }
    static CInitScheme zero() { return {Kind::zero, 0.0}; }
    static CInitScheme constant(double v) { return {Kind::constant, v}; }
};

/// Target function f*: a planted teacher ensemble, the great-circle measure,
/// or identically zero.
class Target {
public:
    enum class Kind { teacher, great_circle, zero };

    static Target teacher(Ensemble teacher_ensemble);
    static Target great_circle(int d);
    static Target zero(int d);

    Kind kind() const { return kind_; }
    int d() const { return d_; }
    const Ensemble& teacher_ensemble() const;

    double value(const UnitVector& x) const;

private:
    Target(Kind kind, int d) : kind_(kind), d_(d) {}
    Kind kind_;
    int d_;
    std::optional<Ensemble> teacher_;
};

/// z_i i.i.d. uniform on S^d; c_i per scheme. Deterministic given the stream.
Ensemble init_ensemble(std::size_t m, int d, const CInitScheme& c_init, Rng& rng,
                       Activation activation = Activation::relu,
                       ParamMode mode = ParamMode::sphere);

/// The two-neuron c = 1 teacher with a prescribed angle between its features
/// (z1 = e0, z2 = cos(angle) e0 + sin(angle) e1).
Ensemble make_fixed_angle_teacher(int d, double angle);
/// Teacher with feature directions sampled from the given stream, c = 1.
Ensemble make_sampled_teacher(int d, std::size_t m_t, Rng& rng);

double evaluate(const Ensemble& e, const UnitVector& x);

/// (1/m) sum |c_i|^q. q = 1 is the TV-norm proxy, q = 2 the squared 2-norm.
double q_norm(const Ensemble& e, double q);

/// <f_a, f_b>_{L2(nu)} over the uniform sphere, by the closed-form kernel.
/// Requires relu + sphere mode on ensemble operands.
double population_inner(const Ensemble& a, const Ensemble& b);
double population_inner(const Ensemble& a, const Target& b);
double population_inner(const Target& a, const Target& b);

/// ||f_e - f_t||^2_nu assembled from population_inner terms.
double population_l2_error(const Ensemble& e, const Target& t);

/// Snapshot CSV: header `c,z_0,...,z_d`, one neuron per row, 17 significant
/// digits (bit-exact decimal round trip).
void write_ensemble_csv(std::ostream& os, const Ensemble& e);
void write_ensemble_csv_file(const std::string& path, const Ensemble& e);
Ensemble read_ensemble_csv(std::istream& is, Activation activation = Activation::relu,
                           ParamMode mode = ParamMode::sphere);
Ensemble read_ensemble_csv_file(const std::string& path,
                                Activation activation = Activation::relu,
                                ParamMode mode = ParamMode::sphere);

// Activation helpers shared by the objective and CLT modules.
double act_value(Activation a, double s);
double act_deriv(Activation a, double s);    // subgradient 0 at the ReLU kink
double act_second(Activation a, double s);   // a.e. convention: 0 for ReLU

}  // namespace mff
