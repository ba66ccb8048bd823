#pragma once

// Test-only oracles. Everything here is independent of the library paths it
// is used to check: plain finite differences, characteristic-polynomial
// bisection, and brute-force quadrature/sampling.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mff/linalg.hpp"
#include "mff/sphere_kernel.hpp"

namespace oracle {

/// Central finite difference of a scalar function of one real parameter.
inline double central_diff(const std::function<double(double)>& f, double h = 1e-5) {
    return (f(h) - f(-h)) / (2.0 * h);
}

/// det(A - lam I) by Gaussian elimination with partial pivoting.
inline double shifted_determinant(const mff::SymMat& a, double lam) {
    const int n = a.order();
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m[i][j] = a.at(i, j) - (i == j ? lam : 0.0);
    double det = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::fabs(m[r][col]) > std::fabs(m[pivot][col])) pivot = r;
        if (m[pivot][col] == 0.0) return 0.0;
        if (pivot != col) {
            std::swap(m[pivot], m[col]);
            det = -det;
        }
        det *= m[col][col];
        for (int r = col + 1; r < n; ++r) {
            const double f = m[r][col] / m[col][col];
            for (int j = col; j < n; ++j) m[r][j] -= f * m[col][j];
        }
    }
    return det;
}

/// All eigenvalues of a small symmetric matrix by sign scanning of the
/// characteristic polynomial plus bisection. Assumes simple eigenvalues
/// (random test matrices), scan resolution 4096.
inline std::vector<double> charpoly_eigenvalues(const mff::SymMat& a, double tol = 1e-12) {
    const int n = a.order();
    double radius = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::fabs(a.at(i, j));
        radius = std::max(radius, row);
    }
    radius += 1.0;
    const int scan = 4096;
    std::vector<double> roots;
    double prev_x = -radius;
    double prev_f = shifted_determinant(a, prev_x);
    for (int k = 1; k <= scan; ++k) {
        const double x = -radius + 2.0 * radius * k / scan;
        const double f = shifted_determinant(a, x);
        if (prev_f == 0.0) roots.push_back(prev_x);
        else if (prev_f * f < 0.0) {
            double lo = prev_x, hi = x, flo = prev_f;
            while (hi - lo > tol) {
                const double mid = 0.5 * (lo + hi);
                const double fm = shifted_determinant(a, mid);
                if (flo * fm <= 0.0) hi = mid;
                else {
                    lo = mid;
                    flo = fm;
                }
            }
            roots.push_back(0.5 * (lo + hi));
        }
        prev_x = x;
        prev_f = f;
    }
    return roots;
}

/// (1/2pi) integral over the circle of a piecewise-smooth integrand with
/// kinks located by bisection of `kink_fn` sign changes; composite Simpson on
/// each smooth arc. Used as the quadrature oracle for the circle target.
inline double circle_average_kink_split(const std::function<double(double)>& f,
                                        const std::function<double(double)>& kink_fn) {
    const double two_pi = 2.0 * 3.14159265358979323846;
    std::vector<double> cuts{0.0, two_pi};
    const int probe = 2048;
    for (int k = 0; k < probe; ++k) {
        double lo = two_pi * k / probe, hi = two_pi * (k + 1) / probe;
        if (kink_fn(lo) * kink_fn(hi) < 0.0) {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo + hi);
                (kink_fn(lo) * kink_fn(mid) <= 0.0 ? hi : lo) = mid;
            }
            cuts.push_back(0.5 * (lo + hi));
        }
    }
    std::sort(cuts.begin(), cuts.end());
    double total = 0.0;
    for (std::size_t seg = 0; seg + 1 < cuts.size(); ++seg) {
        const double a = cuts[seg], b = cuts[seg + 1];
        const int steps = 256;
        const double h = (b - a) / (2 * steps);
        double s = f(a) + f(b);
        for (int k = 1; k < 2 * steps; ++k) s += f(a + h * k) * (k % 2 ? 4.0 : 2.0);
        total += s * h / 3.0;
    }
    return total / two_pi;
}

struct MeanStderr {
    double mean = 0.0;
    double stderr_est = 0.0;
};

/// Streaming mean/stderr over `count` draws of `draw(i)`.
inline MeanStderr sample_mean(std::size_t count, const std::function<double(std::size_t)>& draw) {
    double mean = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const double v = draw(i);
        const double delta = v - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (v - mean);
    }
    const double var = m2 / static_cast<double>(count - 1);
    return {mean, std::sqrt(var / static_cast<double>(count))};
}

}  // namespace oracle
