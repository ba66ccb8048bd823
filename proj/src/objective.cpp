#include "mff/objective.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mff/parallel.hpp"

namespace mff {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

void tangent_project(std::vector<double>& g, const std::vector<double>& z) {
    double radial = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) radial += g[i] * z[i];
    for (std::size_t i = 0; i < g.size(); ++i) g[i] -= radial * z[i];
}

std::vector<double> predictions(const Ensemble& e, const Dataset& data) {
    const std::size_t n = data.size();
    std::vector<double> p(n, 0.0);
    const Activation act = e.activation();
    const double inv_m = 1.0 / static_cast<double>(e.width());
    for (const Neuron& nrn : e.neurons())
        for (std::size_t l = 0; l < n; ++l)
            p[l] += nrn.c * act_value(act, dot(nrn.z, data.points[l].coords()));
    for (double& v : p) v *= inv_m;
    return p;
}

/// F_hat(z) = \int f*(x) relu(<z,x>) nu(dx) and its ambient gradient for the
/// closed-form targets.
void target_potential(const Target& t, const std::vector<double>& z, double* value,
                      std::vector<double>* grad) {
    const int d = t.d();
    switch (t.kind()) {
        case Target::Kind::zero:
            if (value) *value = 0.0;
            if (grad) grad->assign(z.size(), 0.0);
            return;
        case Target::Kind::teacher: {
            const Ensemble& teach = t.teacher_ensemble();
            const double w = 1.0 / static_cast<double>(teach.width());
            double v = 0.0;
            if (grad) grad->assign(z.size(), 0.0);
            for (const Neuron& tn : teach.neurons()) {
                const double cz = dot(z, tn.z);
                v += w * tn.c * arc_kernel_from_cos(cz, d);
                if (grad) {
                    const double f = arc_kernel_grad_factor(cz, d);
                    if (cz > -1.0 && cz < 1.0)
                        for (std::size_t i = 0; i < z.size(); ++i)
                            (*grad)[i] += w * tn.c * f * (tn.z[i] - cz * z[i]);
                }
            }
            if (value) *value = v;
            return;
        }
        case Target::Kind::great_circle: {
            const UnitVector u(z);
            if (value) *value = great_circle_potential(u, d);
            if (grad) *grad = great_circle_potential_grad(u, d);
            return;
        }
    }
}

}  // namespace

void Dataset::validate() const {
    if (points.empty()) throw std::invalid_argument("Dataset: need n >= 1");
    if (points.size() != values.size())
        throw std::invalid_argument("Dataset: points/values size mismatch");
    for (std::size_t l = 0; l < values.size(); ++l)
        if (!std::isfinite(values[l]))
            throw std::invalid_argument("Dataset: non-finite value at row " + std::to_string(l));
}

Dataset sample_dataset(const Target& target, std::size_t n, int d, Rng& rng) {
    Dataset data;
    data.points.reserve(n);
    data.values.reserve(n);
    for (std::size_t l = 0; l < n; ++l) {
        UnitVector x = sample_uniform_sphere(d, rng);
        data.values.push_back(target.value(x));
        data.points.push_back(std::move(x));
    }
    data.validate();
    return data;
}

void write_dataset_csv_file(const std::string& path, const Dataset& data) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("write_dataset_csv_file: cannot open " + path);
    const int ambient = static_cast<int>(data.points.front().ambient_dim());
    os << "y";
    for (int j = 0; j < ambient; ++j) os << ",x_" << j;
    os << "\n";
    char buf[32];
    for (std::size_t l = 0; l < data.size(); ++l) {
        std::snprintf(buf, sizeof buf, "%.17g", data.values[l]);
        os << buf;
        for (double v : data.points[l].coords()) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            os << "," << buf;
        }
        os << "\n";
    }
}

Dataset read_dataset_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("read_dataset_csv_file: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line.rfind("y,x_0", 0) != 0)
        throw std::runtime_error("read_dataset_csv_file: bad header in " + path);
    Dataset data;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> row;
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        data.values.push_back(row[0]);
        data.points.push_back(
            UnitVector::from_normalized(std::vector<double>(row.begin() + 1, row.end())));
    }
    data.validate();
    return data;
}

LossGrad empirical_loss_grad(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg) {
    data.validate();
    if (data.points.front().sphere_dim() != e.d())
        throw std::invalid_argument("empirical_loss_grad: data dimension mismatch");
    const std::size_t m = e.width();
    const std::size_t n = data.size();
    const double scale = cfg.scale();
    const Activation act = e.activation();

    const std::vector<double> pred = predictions(e, data);
    std::vector<double> residual(n);
    double fit_raw = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        residual[l] = pred[l] - data.values[l];
        fit_raw += residual[l] * residual[l];
    }
    fit_raw = 0.5 * fit_raw / static_cast<double>(n);

    LossGrad out;
    out.grads.resize(m);
    par::parallel_for(m, [&](std::size_t i) {
        const Neuron& nrn = e.neuron(i);
        NeuronGrad g;
        g.dz.assign(nrn.z.size(), 0.0);
        double dc = 0.0;
        for (std::size_t l = 0; l < n; ++l) {
            const double s = dot(nrn.z, data.points[l].coords());
            const double r = residual[l];
            dc += r * act_value(act, s);
            const double zc = r * nrn.c * act_deriv(act, s);
            const auto& x = data.points[l].coords();
            for (std::size_t k = 0; k < g.dz.size(); ++k) g.dz[k] += zc * x[k];
        }
        const double inv_n = 1.0 / static_cast<double>(n);
        g.dc = scale * (dc * inv_n + cfg.lambda * nrn.c);
        for (double& v : g.dz) v *= scale * inv_n;
        if (e.mode() == ParamMode::sphere) tangent_project(g.dz, nrn.z);
        out.grads[i] = std::move(g);
    });

    double reg_raw = 0.0;
    for (const Neuron& nrn : e.neurons()) reg_raw += 0.5 * nrn.c * nrn.c;
    reg_raw *= cfg.lambda / static_cast<double>(m);

    out.loss.fit = scale * fit_raw;
    out.loss.reg = scale * reg_raw;
    out.loss.total = out.loss.fit + out.loss.reg;
    return out;
}

LossBreakdown empirical_loss(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg) {
    data.validate();
    if (data.points.front().sphere_dim() != e.d())
        throw std::invalid_argument("empirical_loss: data dimension mismatch");
    const std::vector<double> pred = predictions(e, data);
    double fit_raw = 0.0;
    for (std::size_t l = 0; l < data.size(); ++l) {
        const double r = pred[l] - data.values[l];
        fit_raw += r * r;
    }
    fit_raw = 0.5 * fit_raw / static_cast<double>(data.size());
    double reg_raw = 0.0;
    for (const Neuron& nrn : e.neurons()) reg_raw += 0.5 * nrn.c * nrn.c;
    reg_raw *= cfg.lambda / static_cast<double>(e.width());
    const double scale = cfg.scale();
    return LossBreakdown{scale * (fit_raw + reg_raw), scale * fit_raw, scale * reg_raw};
}

std::vector<NeuronGrad> empirical_gradient(const Ensemble& e, const Dataset& data,
                                           const ObjectiveConfig& cfg) {
    return empirical_loss_grad(e, data, cfg).grads;
}

LossGrad population_loss_grad(const Ensemble& e, const Target& t, const ObjectiveConfig& cfg) {
    if (e.activation() != Activation::relu || e.mode() != ParamMode::sphere)
        throw std::invalid_argument("population loss: closed form requires relu + sphere mode");
    if (e.d() != t.d()) throw std::invalid_argument("population loss: dimension mismatch");
    const std::size_t m = e.width();
    const int d = e.d();
    const double scale = cfg.scale();
    const double inv_m = 1.0 / static_cast<double>(m);

    // Per-neuron pair sums over the student and potential terms from the target.
    std::vector<double> kernel_row(m, 0.0);            // sum_j c_j K(z_i, z_j)
    std::vector<double> f_hat(m, 0.0);                 // F(z_i) against the target
    std::vector<NeuronGrad> grads(m);
    par::parallel_for(m, [&](std::size_t i) {
        const Neuron& ni = e.neuron(i);
        const std::size_t ambient = ni.z.size();
        double row = 0.0;
        std::vector<double> vz(ambient, 0.0);
        for (std::size_t j = 0; j < m; ++j) {
            const Neuron& nj = e.neuron(j);
            const double cz = dot(ni.z, nj.z);
            row += nj.c * arc_kernel_from_cos(cz, d);
            if (cz > -1.0 && cz < 1.0) {
                const double f = nj.c * arc_kernel_grad_factor(cz, d);
                for (std::size_t k = 0; k < ambient; ++k) vz[k] += f * (nj.z[k] - cz * ni.z[k]);
            }
        }
        double fh = 0.0;
        std::vector<double> gh;
        target_potential(t, ni.z, &fh, &gh);
        kernel_row[i] = row;
        f_hat[i] = fh;
        NeuronGrad g;
        g.dc = scale * (-fh + inv_m * row + cfg.lambda * ni.c);
        g.dz.resize(ambient);
        for (std::size_t k = 0; k < ambient; ++k)
            g.dz[k] = scale * ni.c * (-gh[k] + inv_m * vz[k]);
        tangent_project(g.dz, ni.z);
        grads[i] = std::move(g);
    });

    double ff = 0.0;    // <f, f>
    double ft = 0.0;    // <f, f*>
    double reg_raw = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        ff += e.neuron(i).c * kernel_row[i];
        ft += e.neuron(i).c * f_hat[i];
        reg_raw += 0.5 * e.neuron(i).c * e.neuron(i).c;
    }
    ff *= inv_m * inv_m;
    ft *= inv_m;
    reg_raw *= cfg.lambda * inv_m;
    const double tt = population_inner(t, t);

    LossGrad out;
    out.grads = std::move(grads);
    out.loss.fit = scale * 0.5 * (ff - 2.0 * ft + tt);
    out.loss.reg = scale * reg_raw;
    out.loss.total = out.loss.fit + out.loss.reg;
    return out;
}

LossBreakdown population_loss(const Ensemble& e, const Target& t, const ObjectiveConfig& cfg) {
    if (e.activation() != Activation::relu || e.mode() != ParamMode::sphere)
        throw std::invalid_argument("population_loss: closed form requires relu + sphere mode");
    const double scale = cfg.scale();
    const double fit_raw = 0.5 * population_l2_error(e, t);
    double reg_raw = 0.0;
    for (const Neuron& nrn : e.neurons()) reg_raw += 0.5 * nrn.c * nrn.c;
    reg_raw *= cfg.lambda / static_cast<double>(e.width());
    return LossBreakdown{scale * (fit_raw + reg_raw), scale * fit_raw, scale * reg_raw};
}

std::vector<NeuronGrad> population_gradient(const Ensemble& e, const Target& t,
                                            const ObjectiveConfig& cfg) {
    return population_loss_grad(e, t, cfg).grads;
}

SymMat potential_hessian(const Neuron& theta, const Ensemble& e, const Dataset& data,
                         const ObjectiveConfig& cfg) {
    if (cfg.loss_kind == LossKind::population)
        throw std::invalid_argument(
            "potential_hessian: unsupported under population loss (no spherical closed form)");
    data.validate();
    const std::size_t ambient = theta.z.size();
    const int dim = static_cast<int>(ambient) + 1;  // (c, z) block order
    const Activation act = e.activation();
    const std::vector<double> pred = predictions(e, data);
    const double scale = cfg.scale();
    SymMat h(dim);
    const double inv_n = 1.0 / static_cast<double>(data.size());
    for (std::size_t l = 0; l < data.size(); ++l) {
        const double r = (pred[l] - data.values[l]) * inv_n;
        const auto& x = data.points[l].coords();
        const double s = dot(theta.z, x);
        const double d1 = act_deriv(act, s);
        const double d2 = act_second(act, s);
        for (std::size_t k = 0; k < ambient; ++k) {
            h.at(0, static_cast<int>(k) + 1) += r * d1 * x[k];
            for (std::size_t j = 0; j < ambient; ++j)
                h.at(static_cast<int>(j) + 1, static_cast<int>(k) + 1) +=
                    r * theta.c * d2 * x[j] * x[k];
        }
    }
    for (int k = 1; k < dim; ++k) h.at(k, 0) = h.at(0, k);
    h.at(0, 0) += cfg.lambda;
    if (scale != 1.0)
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) h.at(i, j) *= scale;
    return h;
}

double curvature_defect(const Ensemble& e, const Dataset& data, const ObjectiveConfig& cfg) {
    double defect = 0.0;
    for (const Neuron& nrn : e.neurons()) {
        const double lam = min_eigenvalue(potential_hessian(nrn, e, data, cfg));
        if (lam < 0.0) defect -= lam;
    }
    return defect / static_cast<double>(e.width());
}

}  // namespace mff
