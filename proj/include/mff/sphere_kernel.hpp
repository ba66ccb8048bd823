#pragma once

#include <functional>
#include <vector>

#include "mff/rng.hpp"

namespace mff {

/// Point on S^d, stored as d+1 ambient coordinates with |coords| = 1.
class UnitVector {
public:
    /// Normalizes the given coordinates. Rejects vectors of near-zero or
    /// non-finite norm and ambient dimension < 2 (S^0 is degenerate here).
    explicit UnitVector(std::vector<double> coords);

    /// k-th standard basis vector of R^{ambient_dim}.
    static UnitVector axis(int ambient_dim, int k);

    /// Accepts coordinates already normalized to 1e-12 without rescaling, so
    /// decimal round trips keep their bits.
    static UnitVector from_normalized(std::vector<double> coords);

    const std::vector<double>& coords() const { return coords_; }
    double operator[](std::size_t i) const { return coords_[i]; }
    std::size_t ambient_dim() const { return coords_.size(); }
    int sphere_dim() const { return static_cast<int>(coords_.size()) - 1; }

    double dot(const UnitVector& other) const;

private:
    UnitVector() = default;
    std::vector<double> coords_;
};

struct KernelValue {
    double value;  // in [0, 1/(2(d+1))]
    int d;
};

/// Uniform sample on S^d via a normalized isotropic Gaussian.
UnitVector sample_uniform_sphere(int d, Rng& rng);

/// Closed-form spherical integral of two ReLU features,
/// (sin a + (pi - a) cos a) / (2(d+1)pi) with a the angle between u and v.
KernelValue relu_arc_kernel(const UnitVector& u, const UnitVector& v, int d);

/// Gradient of relu_arc_kernel in its first argument, projected to the
/// tangent space at u. Zero tangent by convention when u = +/- v.
std::vector<double> relu_arc_kernel_grad(const UnitVector& u, const UnitVector& v, int d);

/// \int |phi(z, x)|^2 nu(dx) over the uniform sphere = 1/(2(d+1)), any z.
double relu_selfnorm(int d);

struct McEstimate {
    double estimate;
    double stderr_est;
    std::size_t n_samples;
};

/// Plain Monte-Carlo average of `integrand` over the uniform measure on S^d.
/// Serves as the independent oracle for every spherical closed form.
McEstimate mc_spherical_integral(const std::function<double(const UnitVector&)>& integrand,
                                 int d, std::size_t n_samples, Rng& rng);

/// (1/2pi) \oint K(u, z(psi)) dpsi over the great circle in the first two
/// coordinates, by composite trapezoid (periodic integrand).
double great_circle_potential(const UnitVector& u, int d, int quad_nodes = 512);

/// Gradient of great_circle_potential in u, tangent at u.
std::vector<double> great_circle_potential_grad(const UnitVector& u, int d, int quad_nodes = 512);

/// f*(x) for the great-circle target: sqrt(x0^2 + x1^2) / pi.
double great_circle_target_value(const UnitVector& x);

/// <f*, f*> for the great-circle measure: the circle-circle double kernel
/// integral, reduced to one angle by translation invariance and evaluated by
/// trapezoid quadrature.
double circle_circle_inner(int d, int quad_nodes = 512);

// Fast paths for pairwise sums; cos_angle must already be a clamped inner
// product of unit vectors.
double arc_kernel_from_cos(double cos_angle, int d);
/// d/dt of the kernel as a function of t = cos angle: (pi - a)/(2(d+1)pi).
double arc_kernel_grad_factor(double cos_angle, int d);

}  // namespace mff
