#include "mff/ensemble.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "mff/parallel.hpp"

namespace mff {

namespace {

void check_unit(const std::vector<double>& z, std::size_t index) {
    double sq = 0.0;
    for (double v : z) sq += v * v;
    if (std::fabs(std::sqrt(sq) - 1.0) > 1e-12)
        throw std::invalid_argument("Ensemble: sphere-mode neuron " + std::to_string(index) +
                                    " is off the unit sphere (|z| = " + std::to_string(std::sqrt(sq)) +
                                    ")");
}

struct AtomView {
    double weight;
    double c;
    const std::vector<double>* z;
};

std::vector<AtomView> atoms_of(const Ensemble& e) {
    std::vector<AtomView> atoms;
    atoms.reserve(e.width());
    const double w = 1.0 / static_cast<double>(e.width());
    for (const Neuron& n : e.neurons()) atoms.push_back({w, n.c, &n.z});
    return atoms;
}

void require_relu_sphere(const Ensemble& e, const char* where) {
    if (e.activation() != Activation::relu || e.mode() != ParamMode::sphere)
        throw std::invalid_argument(std::string(where) +
                                    ": closed form requires relu activation in sphere mode");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

/// Pairwise Gram sum sum_ij w_i w_j c_i c_j K(z_i, z_j) between two atom
/// lists; deterministic block reduction.
double atomic_inner(const std::vector<AtomView>& a, const std::vector<AtomView>& b, int d) {
    return par::block_sum(a.size(), [&](std::size_t i) {
        const AtomView& ai = a[i];
        double s = 0.0;
        for (const AtomView& bj : b)
            s += ai.weight * bj.weight * ai.c * bj.c * arc_kernel_from_cos(dot(*ai.z, *bj.z), d);
        return s;
    }, 16);
}

/// sum_i w_i c_i P(z_i) against the great-circle measure.
double atomic_circle_inner(const std::vector<AtomView>& a, int d) {
    return par::block_sum(a.size(), [&](std::size_t i) {
        const AtomView& ai = a[i];
        return ai.weight * ai.c * great_circle_potential(UnitVector(*ai.z), d);
    }, 16);
}

}  // namespace

Ensemble::Ensemble(std::vector<Neuron> neurons, int d, Activation activation, ParamMode mode)
    : neurons_(std::move(neurons)), d_(d), activation_(activation), mode_(mode) {
    if (neurons_.empty()) throw std::invalid_argument("Ensemble: need at least one neuron");
    if (d_ < 1) throw std::invalid_argument("Ensemble: need d >= 1");
    if (activation_ == Activation::relu && mode_ != ParamMode::sphere)
        throw std::invalid_argument("Ensemble: relu activation requires sphere mode");
    const std::size_t ambient = static_cast<std::size_t>(d_) + 1;
    for (std::size_t i = 0; i < neurons_.size(); ++i) {
        if (neurons_[i].z.size() != ambient)
            throw std::invalid_argument("Ensemble: neuron " + std::to_string(i) +
                                        " has wrong feature dimension");
        if (!std::isfinite(neurons_[i].c))
            throw std::invalid_argument("Ensemble: neuron " + std::to_string(i) +
                                        " has non-finite weight");
        if (mode_ == ParamMode::sphere) check_unit(neurons_[i].z, i);
    }
}

Target Target::teacher(Ensemble teacher_ensemble) {
    Target t(Kind::teacher, teacher_ensemble.d());
    t.teacher_ = std::move(teacher_ensemble);
    return t;
}

Target Target::great_circle(int d) {
    if (d < 1) throw std::invalid_argument("Target::great_circle: need d >= 1");
    return Target(Kind::great_circle, d);
}

Target Target::zero(int d) {
    if (d < 1) throw std::invalid_argument("Target::zero: need d >= 1");
    return Target(Kind::zero, d);
}

const Ensemble& Target::teacher_ensemble() const {
    if (!teacher_) throw std::logic_error("Target: not a teacher target");
    return *teacher_;
}

double Target::value(const UnitVector& x) const {
    switch (kind_) {
        case Kind::teacher: return evaluate(*teacher_, x);
        case Kind::great_circle: return great_circle_target_value(x);
        case Kind::zero: return 0.0;
    }
    return 0.0;
}

Ensemble init_ensemble(std::size_t m, int d, const CInitScheme& c_init, Rng& rng,
                       Activation activation, ParamMode mode) {
    if (m == 0) throw std::invalid_argument("init_ensemble: need m >= 1");
    std::vector<Neuron> neurons(m);
    for (std::size_t i = 0; i < m; ++i) {
        neurons[i].z = sample_uniform_sphere(d, rng).coords();
        switch (c_init.kind) {
            case CInitScheme::Kind::gaussian: neurons[i].c = rng.gaussian(); break;
            case CInitScheme::Kind::zero: neurons[i].c = 0.0; break;
            case CInitScheme::Kind::constant: neurons[i].c = c_init.value; break;
        }
    }
    return Ensemble(std::move(neurons), d, activation, mode);
}

Ensemble make_fixed_angle_teacher(int d, double angle) {
    Neuron n1{1.0, UnitVector::axis(d + 1, 0).coords()};
    std::vector<double> z2(static_cast<std::size_t>(d) + 1, 0.0);
    z2[0] = std::cos(angle);
    z2[1] = std::sin(angle);
    Neuron n2{1.0, z2};
    return Ensemble({n1, n2}, d);
}

Ensemble make_sampled_teacher(int d, std::size_t m_t, Rng& rng) {
    return init_ensemble(m_t, d, CInitScheme::constant(1.0), rng);
}

double act_value(Activation a, double s) {
    return a == Activation::relu ? (s > 0.0 ? s : 0.0) : std::tanh(s);
}

double act_deriv(Activation a, double s) {
    if (a == Activation::relu) return s > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(s);
    return 1.0 - t * t;
}

double act_second(Activation a, double s) {
    if (a == Activation::relu) return 0.0;
    const double t = std::tanh(s);
    return -2.0 * t * (1.0 - t * t);
}

double evaluate(const Ensemble& e, const UnitVector& x) {
    if (x.sphere_dim() != e.d())
        throw std::invalid_argument("evaluate: data point dimension mismatch");
    const Activation a = e.activation();
    double s = 0.0;
    for (const Neuron& n : e.neurons()) s += n.c * act_value(a, dot(n.z, x.coords()));
    return s / static_cast<double>(e.width());
}

double q_norm(const Ensemble& e, double q) {
    if (q <= 0.0) throw std::invalid_argument("q_norm: need q > 0");
    double s = 0.0;
    for (const Neuron& n : e.neurons()) s += std::pow(std::fabs(n.c), q);
    return s / static_cast<double>(e.width());
}

double population_inner(const Ensemble& a, const Ensemble& b) {
    require_relu_sphere(a, "population_inner");
    require_relu_sphere(b, "population_inner");
    if (a.d() != b.d()) throw std::invalid_argument("population_inner: dimension mismatch");
    return atomic_inner(atoms_of(a), atoms_of(b), a.d());
}

double population_inner(const Ensemble& a, const Target& b) {
    require_relu_sphere(a, "population_inner");
    if (a.d() != b.d()) throw std::invalid_argument("population_inner: dimension mismatch");
    switch (b.kind()) {
        case Target::Kind::teacher: return atomic_inner(atoms_of(a), atoms_of(b.teacher_ensemble()), a.d());
        case Target::Kind::great_circle: return atomic_circle_inner(atoms_of(a), a.d());
        case Target::Kind::zero: return 0.0;
    }
    return 0.0;
}

double population_inner(const Target& a, const Target& b) {
    if (a.d() != b.d()) throw std::invalid_argument("population_inner: dimension mismatch");
    if (a.kind() == Target::Kind::zero || b.kind() == Target::Kind::zero) return 0.0;
    if (a.kind() == Target::Kind::teacher && b.kind() == Target::Kind::teacher)
        return atomic_inner(atoms_of(a.teacher_ensemble()), atoms_of(b.teacher_ensemble()), a.d());
    if (a.kind() == Target::Kind::great_circle && b.kind() == Target::Kind::great_circle)
        return circle_circle_inner(a.d());
    const Target& teacher = a.kind() == Target::Kind::teacher ? a : b;
    return atomic_circle_inner(atoms_of(teacher.teacher_ensemble()), a.d());
}

double population_l2_error(const Ensemble& e, const Target& t) {
    const double err = population_inner(e, e) - 2.0 * population_inner(e, t) +
                       population_inner(t, t);
    if (err < -1e-12)
        throw std::runtime_error("population_l2_error: negative squared norm " +
                                 std::to_string(err));
    return err < 0.0 ? 0.0 : err;
}

void write_ensemble_csv(std::ostream& os, const Ensemble& e) {
    os << "c";
    for (int j = 0; j <= e.d(); ++j) os << ",z_" << j;
    os << "\n";
    char buf[32];
    for (const Neuron& n : e.neurons()) {
        std::snprintf(buf, sizeof buf, "%.17g", n.c);
        os << buf;
        for (double v : n.z) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << "," << buf;
        }
        os << "\n";
    }
}

void write_ensemble_csv_file(const std::string& path, const Ensemble& e) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_ensemble_csv_file: cannot open " + path);
    write_ensemble_csv(os, e);
}

Ensemble read_ensemble_csv(std::istream& is, Activation activation, ParamMode mode) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("read_ensemble_csv: empty input");
    if (line.rfind("c,z_0", 0) != 0)
        throw std::runtime_error("read_ensemble_csv: bad header '" + line + "'");
    std::vector<Neuron> neurons;
    int ambient = -1;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        if (ambient < 0) ambient = static_cast<int>(row.size()) - 1;
        if (static_cast<int>(row.size()) != ambient + 1)
            throw std::runtime_error("read_ensemble_csv: ragged row with " +
                                     std::to_string(row.size()) + " cells");
        Neuron n;
        n.c = row[0];
        n.z.assign(row.begin() + 1, row.end());
        neurons.push_back(std::move(n));
    }
    if (neurons.empty()) throw std::runtime_error("read_ensemble_csv: no neurons");
    return Ensemble(std::move(neurons), ambient - 1, activation, mode);
}

Ensemble read_ensemble_csv_file(const std::string& path, Activation activation, ParamMode mode) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_ensemble_csv_file: cannot open " + path);
    return read_ensemble_csv(is, activation, mode);
}

}  // namespace mff
