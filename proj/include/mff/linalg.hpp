#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mff {

/// Small dense symmetric matrix, row-major. Sized for per-particle Hessians
/// ((d+2) x (d+2)), not for anything large.
class SymMat {
public:
    explicit SymMat(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
        if (n < 1) throw std::invalid_argument("SymMat: order must be >= 1");
    }

    int order() const { return n_; }
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

    void set_sym(int i, int j, double v) {
        at(i, j) = v;
        at(j, i) = v;
    }

    /// a += w * v v^T
    void add_outer(double w, const std::vector<double>& v) {
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) a_[static_cast<std::size_t>(i) * n_ + j] += w * v[i] * v[j];
    }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int j = 0; j < n_; ++j) s += at(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    double max_asymmetry() const {
        double worst = 0.0;
        for (int i = 0; i < n_; ++i)
            for (int j = i + 1; j < n_; ++j) worst = std::max(worst, std::fabs(at(i, j) - at(j, i)));
        return worst;
    }

private:
    int n_;
    std::vector<double> a_;
};

/// Small dense square matrix for Jacobian flows; row-major.
class Mat {
public:
    explicit Mat(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {}

    static Mat identity(int n) {
        Mat m(n);
        for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    int order() const { return n_; }
    double& at(int i, int j) { return a_[static_cast<std::size_t>(i) * n_ + j]; }
    double at(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

    std::vector<double> apply(const std::vector<double>& x) const {
        std::vector<double> y(n_, 0.0);
        for (int i = 0; i < n_; ++i) {
            double s = 0.0;
            for (int j = 0; j < n_; ++j) s += at(i, j) * x[j];
            y[i] = s;
        }
        return y;
    }

    Mat multiply(const Mat& rhs) const {
        Mat out(n_);
        for (int i = 0; i < n_; ++i)
            for (int k = 0; k < n_; ++k) {
                const double v = at(i, k);
                if (v == 0.0) continue;
                for (int j = 0; j < n_; ++j) out.at(i, j) += v * rhs.at(k, j);
            }
        return out;
    }

private:
    int n_;
    std::vector<double> a_;
};

struct EigenDecomposition {
    std::vector<double> values;   // ascending
    std::vector<double> vectors;  // column k (stride n) is the eigenvector of values[k]
    int n = 0;

    double vec(int row, int k) const { return vectors[static_cast<std::size_t>(row) * n + k]; }
};

/// Cyclic Jacobi eigensolver for small symmetric matrices. Throws if the
/// off-diagonal mass has not vanished after max_sweeps sweeps.
inline EigenDecomposition jacobi_eigensolve(SymMat a, int max_sweeps = 100) {
    const int n = a.order();
    EigenDecomposition out;
    out.n = n;
    out.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) out.vectors[static_cast<std::size_t>(i) * n + i] = 1.0;

    auto off_norm = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += a.at(i, j) * a.at(i, j);
        return std::sqrt(s);
    };
    double scale = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) scale = std::max(scale, std::fabs(a.at(i, j)));
    const double tol = (scale > 0.0 ? scale : 1.0) * 1e-15;

    int sweep = 0;
    while (off_norm() > tol) {
        if (++sweep > max_sweeps)
            throw std::runtime_error("jacobi_eigensolve: no convergence after " +
                                     std::to_string(max_sweeps) + " sweeps");
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a.at(p, q);
                if (std::fabs(apq) <= tol * 1e-2) continue;
                const double app = a.at(p, p);
                const double aqq = a.at(q, q);
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a.at(k, p);
                    const double akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a.at(p, k);
                    const double aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = out.vectors[static_cast<std::size_t>(k) * n + p];
                    const double vkq = out.vectors[static_cast<std::size_t>(k) * n + q];
                    out.vectors[static_cast<std::size_t>(k) * n + p] = c * vkp - s * vkq;
                    out.vectors[static_cast<std::size_t>(k) * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    out.values.resize(n);
    for (int i = 0; i < n; ++i) out.values[i] = a.at(i, i);
    // sort ascending, permuting columns alongside
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (out.values[order[j]] < out.values[order[i]]) std::swap(order[i], order[j]);
    EigenDecomposition sorted;
    sorted.n = n;
    sorted.values.resize(n);
    sorted.vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int k = 0; k < n; ++k) {
        sorted.values[k] = out.values[order[k]];
        for (int r = 0; r < n; ++r)
            sorted.vectors[static_cast<std::size_t>(r) * n + k] =
                out.vectors[static_cast<std::size_t>(r) * n + order[k]];
    }
    return sorted;
}

inline double min_eigenvalue(const SymMat& a, int max_sweeps = 100) {
    return jacobi_eigensolve(a, max_sweeps).values.front();
}

/// y = exp(-tau * H_+) b where H_+ clamps negative eigenvalues of the
/// decomposed matrix to zero (PSD projection).
inline std::vector<double> psd_exp_apply(const EigenDecomposition& eig, double tau,
                                         const std::vector<double>& b) {
    const int n = eig.n;
    std::vector<double> y(n, 0.0);
    for (int k = 0; k < n; ++k) {
        const double lam = std::max(0.0, eig.values[k]);
        double proj = 0.0;
        for (int r = 0; r < n; ++r) proj += eig.vec(r, k) * b[r];
        const double coeff = std::exp(-tau * lam) * proj;
        for (int r = 0; r < n; ++r) y[r] += coeff * eig.vec(r, k);
    }
    return y;
}

}  // namespace mff
