#include "thinfilm/grid_field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>

namespace thinfilm {

namespace {

// FFTW's planner is not thread-safe; execution on distinct buffers is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class RealFft {
public:
    explicit RealFft(int n) : n_(n) {
        real_ = fftw_alloc_real(static_cast<std::size_t>(n));
        spec_ = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
        std::lock_guard lock(planner_mutex());
        forward_ = fftw_plan_dft_r2c_1d(n, real_, spec_, FFTW_ESTIMATE);
        backward_ = fftw_plan_dft_c2r_1d(n, spec_, real_, FFTW_ESTIMATE);
    }
    ~RealFft() {
        {
            std::lock_guard lock(planner_mutex());
            fftw_destroy_plan(forward_);
            fftw_destroy_plan(backward_);
        }
        fftw_free(real_);
        fftw_free(spec_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    // Raw DFT C_p = sum_j u_j exp(-2 pi i p j / N), p = 0..N/2.
    std::vector<std::complex<double>> forward(std::span<const double> u) {
        std::copy(u.begin(), u.end(), real_);
        fftw_execute(forward_);
        std::vector<std::complex<double>> out(static_cast<std::size_t>(n_ / 2 + 1));
        for (int p = 0; p <= n_ / 2; ++p) out[p] = {spec_[p][0], spec_[p][1]};
        return out;
    }

    // Inverse of forward (including the 1/N).
    std::vector<double> backward(const std::vector<std::complex<double>>& c) {
        for (int p = 0; p <= n_ / 2; ++p) {
            spec_[p][0] = c[p].real();
            spec_[p][1] = c[p].imag();
        }
        fftw_execute(backward_);
        std::vector<double> out(real_, real_ + n_);
        for (double& v : out) v /= n_;
        return out;
    }

private:
    int n_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan forward_ = nullptr;
    fftw_plan backward_ = nullptr;
};

void require_same_grid(const Field& a, const Field& b) {
    if (!(a.grid() == b.grid())) {
        throw std::invalid_argument("fields live on different grids");
    }
}

}  // namespace

PeriodicGrid::PeriodicGrid(int n) : n_(n), h_(kTwoPi / n) {
    if (n < 16 || n % 2 != 0) {
        throw std::invalid_argument("N must be even >= 16 (got " + std::to_string(n) + ")");
    }
}

std::vector<double> PeriodicGrid::nodes() const {
    std::vector<double> x(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) x[i] = node(i);
    return x;
}

PeriodicGrid make_grid(int n) { return PeriodicGrid(n); }

Field::Field(PeriodicGrid grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (static_cast<int>(values_.size()) != grid_.size()) {
        throw std::invalid_argument("field length does not match grid size");
    }
    double sum = 0.0;
    for (double v : values_) sum += v;
    mass_ = grid_.spacing() * sum;
    auto [lo, hi] = std::minmax_element(values_.begin(), values_.end());
    min_ = *lo;
    max_ = *hi;
}

Field Field::sample(const PeriodicGrid& grid, const std::function<double(double)>& f) {
    std::vector<double> v(static_cast<std::size_t>(grid.size()));
    for (int i = 0; i < grid.size(); ++i) v[i] = f(grid.node(i));
    return Field(grid, std::move(v));
}

Field Field::constant(const PeriodicGrid& grid, double c) {
    return Field(grid, std::vector<double>(static_cast<std::size_t>(grid.size()), c));
}

Field operator+(const Field& a, const Field& b) {
    require_same_grid(a, b);
    std::vector<double> v(a.data());
    for (int i = 0; i < a.size(); ++i) v[i] += b[i];
    return Field(a.grid(), std::move(v));
}

Field operator-(const Field& a, const Field& b) {
    require_same_grid(a, b);
    std::vector<double> v(a.data());
    for (int i = 0; i < a.size(); ++i) v[i] -= b[i];
    return Field(a.grid(), std::move(v));
}

Field operator*(double s, const Field& a) {
    std::vector<double> v(a.data());
    for (double& x : v) x *= s;
    return Field(a.grid(), std::move(v));
}

double integrate(const Field& u) { return u.mass(); }

Field derivative(const Field& u, int order) {
    if (order < 1 || order > 3) {
        throw std::invalid_argument("derivative order must be 1, 2 or 3");
    }
    const int n = u.size();
    RealFft fft(n);
    auto c = fft.forward(u.values());
    for (int p = 0; p <= n / 2; ++p) {
        const double k = p;
        switch (order) {
            case 1: c[p] *= std::complex<double>(0.0, k); break;
            case 2: c[p] *= -k * k; break;
            default: c[p] *= std::complex<double>(0.0, -k * k * k); break;
        }
    }
    if (order % 2 == 1) c[n / 2] = 0.0;
    return Field(u.grid(), fft.backward(c));
}

std::vector<std::complex<double>> fourier_coeffs(const Field& u) {
    const int n = u.size();
    RealFft fft(n);
    auto c = fft.forward(u.values());
    // x_i = -pi + i h contributes exp(i p pi) = (-1)^p relative to the raw DFT.
    for (int p = 0; p <= n / 2; ++p) {
        c[p] /= static_cast<double>(n);
        if (p % 2 == 1) c[p] = -c[p];
    }
    return c;
}

std::complex<double> fourier_coeff(const Field& u, int p) {
    const int n = u.size();
    if (std::abs(p) >= n / 2) {
        throw std::invalid_argument("Fourier index must satisfy |p| < N/2");
    }
    auto c = fourier_coeffs(u);
    return p >= 0 ? c[p] : std::conj(c[-p]);
}

double h1_seminorm_distance(const Field& u, const Field& v) {
    require_same_grid(u, v);
    Field dx = derivative(u - v, 1);
    double s = 0.0;
    for (double d : dx.values()) s += d * d;
    return std::sqrt(u.grid().spacing() * s);
}

double h1_distance(const Field& u, const Field& v) {
    require_same_grid(u, v);
    static std::atomic<bool> warned{false};
    if (std::abs(u.mass() - v.mass()) > 1e-10 && !warned.exchange(true)) {
        std::cerr << "warning: h1_distance between fields of unequal mass ("
                  << std::setprecision(17) << u.mass() << " vs " << v.mass()
                  << "); the seminorm is then not equivalent to the H1 norm\n";
    }
    return h1_seminorm_distance(u, v);
}

double l2_distance(const Field& u, const Field& v) {
    require_same_grid(u, v);
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
    return std::sqrt(u.grid().spacing() * s);
}

double linf_distance(const Field& u, const Field& v) {
    require_same_grid(u, v);
    double m = 0.0;
    for (int i = 0; i < u.size(); ++i) m = std::max(m, std::abs(u[i] - v[i]));
    return m;
}

void write_field_csv(std::ostream& os, const Field& u) {
    os << "x,u\n" << std::setprecision(17);
    for (int i = 0; i < u.size(); ++i) os << u.grid().node(i) << ',' << u[i] << '\n';
}

void write_field_csv(const std::filesystem::path& path, const Field& u) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
    write_field_csv(os, u);
}

Field read_field_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("x,u", 0) != 0) {
        throw std::runtime_error("field CSV must start with header `x,u`");
    }
    std::vector<double> xs, us;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed field CSV row: " + line);
        xs.push_back(std::stod(line.substr(0, comma)));
        us.push_back(std::stod(line.substr(comma + 1)));
    }
    PeriodicGrid grid(static_cast<int>(us.size()));
    for (int i = 0; i < grid.size(); ++i) {
        if (std::abs(xs[i] - grid.node(i)) > 1e-12) {
            throw std::runtime_error("field CSV nodes do not form the uniform grid on [-pi, pi)");
        }
    }
    return Field(grid, std::move(us));
}

Field read_field_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open " + path.string());
    return read_field_csv(is);
}

}  // namespace thinfilm
