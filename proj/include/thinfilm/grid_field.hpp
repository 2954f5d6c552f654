#pragma once

#include <complex>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <numbers>
#include <span>
#include <vector>

namespace thinfilm {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/**
 * Uniform discretization of the circle [-pi, pi) with N nodes.
 *
 * Node i sits at x_i = -pi + i*h with h = 2*pi/N. N must be even and at
 * least 16 so that Fourier indices p in (-N/2, N/2) are cleanly separated
 * from the Nyquist mode.
 */
class PeriodicGrid {
public:
    explicit PeriodicGrid(int n);

    int size() const { return n_; }
    double spacing() const { return h_; }
    double node(int i) const { return -kPi + i * h_; }
    std::vector<double> nodes() const;

    /// Periodic index wrap for stencil access.
    int wrap(int i) const { return ((i % n_) + n_) % n_; }

    bool operator==(const PeriodicGrid& other) const { return n_ == other.n_; }

private:
    int n_;
    double h_;
};

PeriodicGrid make_grid(int n);

/// Nodal samples of a real function on a PeriodicGrid. Immutable.
class Field {
public:
    Field(PeriodicGrid grid, std::vector<double> values);

    static Field sample(const PeriodicGrid& grid, const std::function<double(double)>& f);
    static Field constant(const PeriodicGrid& grid, double c);

    const PeriodicGrid& grid() const { return grid_; }
    std::span<const double> values() const { return values_; }
    const std::vector<double>& data() const { return values_; }
    double operator[](int i) const { return values_[static_cast<std::size_t>(i)]; }
    int size() const { return grid_.size(); }

    /// Periodic trapezoid mass h * sum(u_i).
    double mass() const { return mass_; }
    double min() const { return min_; }
    double max() const { return max_; }
    /// min value >= -1e-13 (round-off slack).
    bool nonnegative() const { return min_ >= -1e-13; }

private:
    PeriodicGrid grid_;
    std::vector<double> values_;
    double mass_ = 0.0;
    double min_ = 0.0;
    double max_ = 0.0;
};

Field operator+(const Field& a, const Field& b);
Field operator-(const Field& a, const Field& b);
Field operator*(double s, const Field& a);

double integrate(const Field& u);

/// Spectral derivative of order 1, 2 or 3. The Nyquist mode is dropped
/// for odd orders.
Field derivative(const Field& u, int order);

/// Fourier coefficient with u(x) = sum_p uhat(p) exp(i p x), so uhat(0) is
/// the mean. Requires |p| < N/2.
std::complex<double> fourier_coeff(const Field& u, int p);

/// All coefficients uhat(p) for p = 0..N/2 (the last entry is the Nyquist
/// coefficient; negative p follow by conjugate symmetry).
std::vector<std::complex<double>> fourier_coeffs(const Field& u);

/// ||u_x - v_x||_2 via spectral differentiation. Warns (once per process)
/// on stderr when the masses differ by more than 1e-10.
double h1_distance(const Field& u, const Field& v);

/// Same as h1_distance, without the equal-mass check.
double h1_seminorm_distance(const Field& u, const Field& v);

double l2_distance(const Field& u, const Field& v);
double linf_distance(const Field& u, const Field& v);

/// CSV with header `x,u`, one row per node, 17 significant digits.
void write_field_csv(std::ostream& os, const Field& u);
void write_field_csv(const std::filesystem::path& path, const Field& u);
/// Reads a CSV written by write_field_csv; the x column must match a
/// uniform periodic grid.
Field read_field_csv(std::istream& is);
Field read_field_csv(const std::filesystem::path& path);

}  // namespace thinfilm
