#include "mff/sphere_kernel.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mff {

namespace {
constexpr double kPi = std::numbers::pi;

double clamp_cos(double t) { return t < -1.0 ? -1.0 : (t > 1.0 ? 1.0 : t); }

void check_same_sphere(const UnitVector& u, const UnitVector& v, int d, const char* where) {
    if (u.sphere_dim() != d || v.sphere_dim() != d)
        throw std::invalid_argument(std::string(where) + ": dimension mismatch (u on S^" +
                                    std::to_string(u.sphere_dim()) + ", v on S^" +
                                    std::to_string(v.sphere_dim()) + ", expected S^" +
                                    std::to_string(d) + ")");
}
}  // namespace

UnitVector::UnitVector(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.size() < 2)
        throw std::invalid_argument("UnitVector: ambient dimension must be >= 2");
    double sq = 0.0;
    for (double c : coords_) sq += c * c;
    if (!std::isfinite(sq) || sq <= 0.0)
        throw std::invalid_argument("UnitVector: cannot normalize zero or non-finite vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (double& c : coords_) c *= inv;
}

UnitVector UnitVector::axis(int ambient_dim, int k) {
    std::vector<double> v(static_cast<std::size_t>(ambient_dim), 0.0);
    v.at(static_cast<std::size_t>(k)) = 1.0;
    return UnitVector(std::move(v));
}

UnitVector UnitVector::from_normalized(std::vector<double> coords) {
    if (coords.size() < 2)
        throw std::invalid_argument("UnitVector: ambient dimension must be >= 2");
    double sq = 0.0;
    for (double c : coords) sq += c * c;
    if (!std::isfinite(sq) || std::fabs(std::sqrt(sq) - 1.0) > 1e-12)
        throw std::invalid_argument("UnitVector::from_normalized: |coords| = " +
                                    std::to_string(std::sqrt(sq)) + " is not 1 within 1e-12");
    UnitVector out;
    out.coords_ = std::move(coords);
    return out;
}

double UnitVector::dot(const UnitVector& other) const {
    if (other.coords_.size() != coords_.size())
        throw std::invalid_argument("UnitVector::dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < coords_.size(); ++i) s += coords_[i] * other.coords_[i];
    return s;
}

UnitVector sample_uniform_sphere(int d, Rng& rng) {
    if (d < 1) throw std::invalid_argument("sample_uniform_sphere: need d >= 1, got d = " +
                                           std::to_string(d));
    std::vector<double> v(static_cast<std::size_t>(d) + 1);
    // A Gaussian draw is almost surely nonzero; retry on the measure-zero event.
    for (;;) {
        double sq = 0.0;
        for (double& c : v) {
            c = rng.gaussian();
            sq += c * c;
        }
        if (sq > 0.0 && std::isfinite(sq)) break;
    }
    return UnitVector(std::move(v));
}

double arc_kernel_from_cos(double cos_angle, int d) {
    const double t = clamp_cos(cos_angle);
    const double alpha = std::acos(t);
    const double sin_alpha = std::sqrt(std::max(0.0, 1.0 - t * t));
    return (sin_alpha + (kPi - alpha) * t) / (2.0 * (d + 1) * kPi);
}

double arc_kernel_grad_factor(double cos_angle, int d) {
    const double t = clamp_cos(cos_angle);
    return (kPi - std::acos(t)) / (2.0 * (d + 1) * kPi);
}

KernelValue relu_arc_kernel(const UnitVector& u, const UnitVector& v, int d) {
    check_same_sphere(u, v, d, "relu_arc_kernel");
    return KernelValue{arc_kernel_from_cos(u.dot(v), d), d};
}

std::vector<double> relu_arc_kernel_grad(const UnitVector& u, const UnitVector& v, int d) {
    check_same_sphere(u, v, d, "relu_arc_kernel_grad");
    const double t = clamp_cos(u.dot(v));
    std::vector<double> g(u.ambient_dim(), 0.0);
    // Zero tangent at the poles: the true limit at alpha = 0, a measure-zero
    // kink at alpha = pi.
    if (t >= 1.0 || t <= -1.0) return g;
    const double factor = arc_kernel_grad_factor(t, d);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = factor * (v[i] - t * u[i]);
    return g;
}

double relu_selfnorm(int d) {
    if (d < 1) throw std::invalid_argument("relu_selfnorm: need d >= 1");
    return 1.0 / (2.0 * (d + 1));
}

McEstimate mc_spherical_integral(const std::function<double(const UnitVector&)>& integrand,
                                 int d, std::size_t n_samples, Rng& rng) {
    if (n_samples < 2)
        throw std::invalid_argument("mc_spherical_integral: need n_samples >= 2");
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i < n_samples; ++i) {
        const UnitVector x = sample_uniform_sphere(d, rng);
        const double f = integrand(x);
        if (!std::isfinite(f))
            throw std::runtime_error("mc_spherical_integral: non-finite integrand value at sample " +
                                     std::to_string(i));
        const double delta = f - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (f - mean);
    }
    const double var = m2 / static_cast<double>(n_samples - 1);
    return McEstimate{mean, std::sqrt(var / static_cast<double>(n_samples)), n_samples};
}

double great_circle_potential(const UnitVector& u, int d, int quad_nodes) {
    if (u.sphere_dim() != d)
        throw std::invalid_argument("great_circle_potential: dimension mismatch");
    if (quad_nodes < 8) throw std::invalid_argument("great_circle_potential: need quad_nodes >= 8");
    const double u0 = u[0];
    const double u1 = u[1];
    double sum = 0.0;
    for (int k = 0; k < quad_nodes; ++k) {
        const double psi = 2.0 * kPi * k / quad_nodes;
        sum += arc_kernel_from_cos(u0 * std::cos(psi) + u1 * std::sin(psi), d);
    }
    return sum / quad_nodes;
}

std::vector<double> great_circle_potential_grad(const UnitVector& u, int d, int quad_nodes) {
    if (u.sphere_dim() != d)
        throw std::invalid_argument("great_circle_potential_grad: dimension mismatch");
    if (quad_nodes < 8)
        throw std::invalid_argument("great_circle_potential_grad: need quad_nodes >= 8");
    const std::size_t n = u.ambient_dim();
    std::vector<double> acc(n, 0.0);
    for (int k = 0; k < quad_nodes; ++k) {
        const double psi = 2.0 * kPi * k / quad_nodes;
        const double c0 = std::cos(psi);
        const double c1 = std::sin(psi);
        const double t = clamp_cos(u[0] * c0 + u[1] * c1);
        if (t >= 1.0 || t <= -1.0) continue;
        const double factor = arc_kernel_grad_factor(t, d);
        acc[0] += factor * c0;
        acc[1] += factor * c1;
        // ambient gradient accumulates only in the circle plane; the radial
        // part t*u is removed after averaging
        for (std::size_t i = 0; i < n; ++i) acc[i] -= factor * t * u[i];
    }
    for (double& a : acc) a /= quad_nodes;
    // re-project: averaging of per-node tangents already lands in the tangent
    // space of u up to roundoff, but make it exact
    double radial = 0.0;
    for (std::size_t i = 0; i < n; ++i) radial += acc[i] * u[i];
    for (std::size_t i = 0; i < n; ++i) acc[i] -= radial * u[i];
    return acc;
}

double great_circle_target_value(const UnitVector& x) {
    return std::sqrt(x[0] * x[0] + x[1] * x[1]) / kPi;
}

double circle_circle_inner(int d, int quad_nodes) {
    if (quad_nodes < 8) throw std::invalid_argument("circle_circle_inner: need quad_nodes >= 8");
    double sum = 0.0;
    for (int k = 0; k < quad_nodes; ++k) {
        const double delta = 2.0 * kPi * k / quad_nodes;
        sum += arc_kernel_from_cos(std::cos(delta), d);
    }
    return sum / quad_nodes;
}

}  // namespace mff
