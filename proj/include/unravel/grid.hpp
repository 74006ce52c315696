#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace unravel {

/// Uniform periodic 1-D position lattice. Points are x_j = x_min + j*dx for
/// j = 0 .. n_points-1; point n_points wraps to 0.
class SpatialGrid {
public:
    SpatialGrid(double x_min, double x_max, int n_points)
        : x_min_(x_min), x_max_(x_max), n_points_(n_points) {
        if (n_points < 8)
            throw std::invalid_argument("SpatialGrid: n_points must be >= 8");
        if (!(x_max > x_min))
            throw std::invalid_argument("SpatialGrid: x_max must exceed x_min");
        dx_ = (x_max - x_min) / n_points;
    }

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    int n_points() const { return n_points_; }
    double dx() const { return dx_; }
    double length() const { return x_max_ - x_min_; }

    double point(int j) const { return x_min_ + j * dx_; }

    Eigen::VectorXd points() const {
        Eigen::VectorXd x(n_points_);
        for (int j = 0; j < n_points_; ++j) x[j] = point(j);
        return x;
    }

    /// FFT-ordered wavenumber of mode j (positive modes first, then negative).
    double wavenumber(int j) const {
        const double dk = 2.0 * 3.14159265358979323846 / length();
        return (j < n_points_ / 2) ? j * dk : (j - n_points_) * dk;
    }

    Eigen::VectorXd wavenumbers() const {
        Eigen::VectorXd k(n_points_);
        for (int j = 0; j < n_points_; ++j) k[j] = wavenumber(j);
        return k;
    }

    bool contains(double x) const { return x >= x_min_ && x <= x_max_; }

    friend bool operator==(const SpatialGrid& a, const SpatialGrid& b) {
        return a.x_min_ == b.x_min_ && a.x_max_ == b.x_max_ && a.n_points_ == b.n_points_;
    }
    friend bool operator!=(const SpatialGrid& a, const SpatialGrid& b) { return !(a == b); }

private:
    double x_min_;
    double x_max_;
    int n_points_;
    double dx_;
};

} // namespace unravel
