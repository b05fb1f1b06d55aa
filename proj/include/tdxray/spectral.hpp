#pragma once

// Space-time Fourier analysis with the convention
//     f^(tau, xi) = int int f(t, x) exp(-i (t tau + x . xi)) dt dx,
// the slice identity F_x(If)(xi, omega) = f^(-omega . xi, xi), and the
// visible {|tau| <= |xi|} / hidden {|tau| > |xi|} split of frequency space.

#include "tdxray/core.hpp"
#include "tdxray/fields.hpp"
#include "tdxray/xray.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace tdxray {

template <int Dim>
struct FrequencyPoint {
    double tau = 0.0;
    Vec<Dim> xi = Vec<Dim>::Zero();
};

enum class Region { Visible, Hidden };

inline const char* to_string(Region r) { return r == Region::Visible ? "visible" : "hidden"; }

/// Visible iff |tau| <= |xi|. Ties are visible, with a few ulps of slack so
/// that lattice points on the cone are not split by rounding.
template <int Dim>
Region classify_region(const FrequencyPoint<Dim>& p) {
    return std::abs(p.tau) <= p.xi.norm() * (1.0 + 8 * std::numeric_limits<double>::epsilon()) ? Region::Visible
                                                                                                 : Region::Hidden;
}

/// Unit omega with omega . xi = -tau:
///     omega = -(tau/|xi|^2) xi + sqrt(1 - tau^2/|xi|^2) e_perp,
/// e_perp being the rejection from xi of the canonical basis vector with the
/// smallest |xi_i| (lowest index on ties), normalized. The choice depends on xi
/// only through |xi_i|, so (tau, xi) and (-tau, -xi) share omega.
template <int Dim>
Vec<Dim> visible_direction(const FrequencyPoint<Dim>& p) {
    const double xn2 = p.xi.squaredNorm();
    if (xn2 == 0.0) {
        if (p.tau != 0.0) throw Error(ErrorKind::ZeroXi, "spectral/visible_direction", "xi = 0 with tau != 0");
        Vec<Dim> e = Vec<Dim>::Zero();
        e[0] = 1.0;
        return e;
    }
    if (classify_region(p) == Region::Hidden)
        throw Error(ErrorKind::NotVisible, "spectral/visible_direction", "|tau| > |xi|");
    const double xn = std::sqrt(xn2);
    int best = 0;
    for (int i = 1; i < Dim; ++i)
        if (std::abs(p.xi[i]) < std::abs(p.xi[best])) best = i;
    Vec<Dim> eperp = Vec<Dim>::Zero();
    eperp[best] = 1.0;
    for (int pass = 0; pass < 2; ++pass) eperp -= (eperp.dot(p.xi) / xn2) * p.xi;
    eperp.normalize();
    double r = std::clamp(p.tau / xn, -1.0, 1.0);
    Vec<Dim> w = -(p.tau / xn2) * p.xi + std::sqrt(std::max(0.0, 1.0 - r * r)) * eperp;
    return w.normalized();
}

/// C exp(|tau|/3) |tau|^{-1/3} delta^{2/3}: envelope for |f^| in the hidden region.
inline double hidden_bound(double tau, double delta, double C) {
    if (delta == 0.0) return 0.0;
    const double a = std::abs(tau);
    return C * std::exp(a / 3.0) * std::pow(a, -1.0 / 3.0) * std::pow(delta, 2.0 / 3.0);
}

/// Cartesian (tau, xi) lattice: tau_i = tau_lo + i dtau, xi_k = xi_lo + k dxi.
template <int Dim>
struct FrequencyLattice {
    double tau_lo = 0.0;
    double dtau = 1.0;
    int ntau = 1;
    double xi_lo = 0.0;
    double dxi = 1.0;
    int nxi = 1;

    std::size_t xi_size() const { return static_cast<std::size_t>(std::pow(nxi, Dim)); }
    std::size_t size() const { return static_cast<std::size_t>(ntau) * xi_size(); }
    double cell_volume() const { return dtau * std::pow(dxi, Dim); }
    double tau(int i) const { return tau_lo + i * dtau; }
    double xi_axis(int k) const { return xi_lo + k * dxi; }

    FrequencyPoint<Dim> point(std::size_t flat) const {
        FrequencyPoint<Dim> p;
        std::size_t xs = xi_size();
        p.tau = tau(static_cast<int>(flat / xs));
        std::size_t k = flat % xs;
        for (int a = 0; a < Dim; ++a) {
            p.xi[a] = xi_axis(static_cast<int>(k % static_cast<std::size_t>(nxi)));
            k /= static_cast<std::size_t>(nxi);
        }
        return p;
    }

    /// Largest R with the closed ball B_R inside the lattice extent.
    double inscribed_radius() const {
        double t = std::min(-tau_lo, tau_lo + (ntau - 1) * dtau);
        double x = std::min(-xi_lo, xi_lo + (nxi - 1) * dxi);
        return std::min(t, x);
    }

    /// DFT-dual lattice of a sampling grid: frequencies 2 pi k / (N h), k = -N/2 .. N/2-1.
    static FrequencyLattice dual_of(const SpaceTimeGrid<Dim>& g) {
        FrequencyLattice l;
        l.ntau = g.nt;
        l.dtau = 2.0 * kPi / (g.nt * g.dt);
        l.tau_lo = -(g.nt / 2) * l.dtau;
        l.nxi = g.nx;
        l.dxi = 2.0 * kPi / (g.nx * g.dx);
        l.xi_lo = -(g.nx / 2) * l.dxi;
        return l;
    }
};

template <int Dim>
struct SpectralField {
    FrequencyLattice<Dim> lattice;
    std::vector<Complex> values;  // time-major, xi axis 0 fastest
    std::vector<Region> region;

    const Complex& at(std::size_t flat) const { return values[flat]; }

    /// Flat index of the lattice point (-tau, -xi), or size() if it is not on the lattice.
    std::size_t mirror(std::size_t flat) const {
        const auto& l = lattice;
        auto mirror_axis = [](int i, double lo, double d, int n) -> int {
            double f = -(lo + i * d);
            double j = (f - lo) / d;
            int jr = static_cast<int>(std::lround(j));
            if (jr < 0 || jr >= n || std::abs(j - jr) > 1e-9) return -1;
            return jr;
        };
        std::size_t xs = l.xi_size();
        int it = mirror_axis(static_cast<int>(flat / xs), l.tau_lo, l.dtau, l.ntau);
        if (it < 0) return l.size();
        std::size_t k = flat % xs, out = 0, stride = 1;
        for (int a = 0; a < Dim; ++a) {
            int ik = mirror_axis(static_cast<int>(k % static_cast<std::size_t>(l.nxi)), l.xi_lo, l.dxi, l.nxi);
            if (ik < 0) return l.size();
            out += static_cast<std::size_t>(ik) * stride;
            stride *= static_cast<std::size_t>(l.nxi);
            k /= static_cast<std::size_t>(l.nxi);
        }
        return static_cast<std::size_t>(it) * xs + out;
    }
};

namespace spectral_detail {

/// Contracts axis `axis` of a tensor (shape[0] fastest) with the matrix
/// m (rows = new extent, cols = old extent).
inline std::vector<Complex> apply_along(const std::vector<Complex>& in, std::vector<int>& shape, int axis,
                                        const std::vector<Complex>& m, int rows) {
    std::size_t inner = 1;
    for (int a = 0; a < axis; ++a) inner *= static_cast<std::size_t>(shape[static_cast<std::size_t>(a)]);
    std::size_t outer = 1;
    for (std::size_t a = static_cast<std::size_t>(axis) + 1; a < shape.size(); ++a)
        outer *= static_cast<std::size_t>(shape[a]);
    const int cols = shape[static_cast<std::size_t>(axis)];
    std::vector<Complex> out(inner * static_cast<std::size_t>(rows) * outer);
    parallel_for(outer, [&](std::size_t o) {
        const Complex* src = in.data() + o * inner * static_cast<std::size_t>(cols);
        Complex* dst = out.data() + o * inner * static_cast<std::size_t>(rows);
        for (int r = 0; r < rows; ++r) {
            const Complex* mr = m.data() + static_cast<std::size_t>(r) * static_cast<std::size_t>(cols);
            Complex* d = dst + static_cast<std::size_t>(r) * inner;
            for (int c = 0; c < cols; ++c) {
                const Complex w = mr[c];
                const Complex* s = src + static_cast<std::size_t>(c) * inner;
                for (std::size_t i = 0; i < inner; ++i) d[i] += w * s[i];
            }
        }
    });
    shape[static_cast<std::size_t>(axis)] = rows;
    return out;
}

/// exp(sign * i * freq_r * coord_c) * weight as a rows x cols matrix.
inline std::vector<Complex> phase_matrix(int rows, double f_lo, double df, int cols, double c_lo, double dc,
                                         double sign, double weight) {
    std::vector<Complex> m(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols));
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            double ph = sign * (f_lo + r * df) * (c_lo + c * dc);
            m[static_cast<std::size_t>(r) * static_cast<std::size_t>(cols) + static_cast<std::size_t>(c)] =
                weight * Complex(std::cos(ph), std::sin(ph));
        }
    return m;
}

}  // namespace spectral_detail

/// Trapezoid approximation of f^ on an arbitrary lattice from grid samples
/// (time-major layout as produced by sample()). Separable: one contraction per axis.
template <int Dim>
SpectralField<Dim> fourier_from_samples(const std::vector<double>& samples, const SpaceTimeGrid<Dim>& g,
                                        const FrequencyLattice<Dim>& l) {
    using namespace spectral_detail;
    std::vector<Complex> data(samples.begin(), samples.end());
    std::vector<int> shape(Dim + 1, g.nx);
    shape[Dim] = g.nt;
    for (int a = 0; a < Dim; ++a)
        data = apply_along(data, shape, a, phase_matrix(l.nxi, l.xi_lo, l.dxi, g.nx, g.x_lo[a], g.dx, -1.0, g.dx), l.nxi);
    data = apply_along(data, shape, Dim, phase_matrix(l.ntau, l.tau_lo, l.dtau, g.nt, g.t0, g.dt, -1.0, g.dt), l.ntau);
    SpectralField<Dim> s;
    s.lattice = l;
    s.values = std::move(data);
    s.region.resize(l.size());
    for (std::size_t i = 0; i < l.size(); ++i) s.region[i] = classify_region(l.point(i));
    return s;
}

/// Trapezoid value of f^ at one (tau, xi) from grid samples.
template <int Dim>
Complex fourier_at(const std::vector<double>& samples, const SpaceTimeGrid<Dim>& g, const FrequencyPoint<Dim>& p) {
    std::vector<std::vector<Complex>> ph(Dim);
    for (int a = 0; a < Dim; ++a) {
        ph[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(g.nx));
        for (int k = 0; k < g.nx; ++k) ph[static_cast<std::size_t>(a)][static_cast<std::size_t>(k)] = std::polar(1.0, -p.xi[a] * g.x(a, k));
    }
    const std::size_t ns = g.spatial_size();
    Complex total = 0.0;
    for (int j = 0; j < g.nt; ++j) {
        Complex acc = 0.0;
        const double* row = samples.data() + static_cast<std::size_t>(j) * ns;
        for (std::size_t k = 0; k < ns; ++k) {
            if (row[k] == 0.0) continue;
            std::size_t r = k;
            Complex w = 1.0;
            for (int a = 0; a < Dim; ++a) {
                w *= ph[static_cast<std::size_t>(a)][r % static_cast<std::size_t>(g.nx)];
                r /= static_cast<std::size_t>(g.nx);
            }
            acc += w * row[k];
        }
        total += acc * std::polar(1.0, -p.tau * g.t(j));
    }
    return total * g.cell_volume();
}

/// f^ on the lattice. With check_aliasing, values at up to ten low-frequency
/// probe points are recomputed on the grid with halved spacings; a relative change
/// above 1e-6 raises AliasingSuspected.
template <int Dim>
SpectralField<Dim> fourier_full(const SpaceTimeField<Dim>& f, const SpaceTimeGrid<Dim>& g,
                                const FrequencyLattice<Dim>& l, bool check_aliasing = false) {
    std::vector<double> samples = sample(f, g);
    SpectralField<Dim> s = fourier_from_samples(samples, g, l);
    if (check_aliasing) {
        SpaceTimeGrid<Dim> fine = g.refined();
        std::vector<double> fine_samples = sample(f, fine);
        double peak = 0.0;
        for (const auto& v : s.values) peak = std::max(peak, std::abs(v));
        const double reach = 0.5 * std::min(kPi / g.dt, kPi / g.dx);
        int probes = 0;
        for (std::size_t i = 0; i < l.size() && probes < 10; i += std::max<std::size_t>(1, l.size() / 97)) {
            FrequencyPoint<Dim> p = l.point(i);
            if (std::abs(p.tau) > reach || p.xi.cwiseAbs().maxCoeff() > reach) continue;
            ++probes;
            Complex fv = fourier_at(fine_samples, fine, p);
            double scale = std::max(std::abs(fv), 1e-6 * peak);
            if (std::abs(fv - s.values[i]) > 1e-6 * scale)
                throw Error(ErrorKind::AliasingSuspected, "spectral/fourier_full",
                            "grid doubling changed a probe value by " + std::to_string(std::abs(fv - s.values[i]) / scale));
        }
    }
    return s;
}

/// max |f^(-k) - conj f^(k)| / max |f^| over lattice points with a mirror.
template <int Dim>
double hermitian_residual(const SpectralField<Dim>& s) {
    double peak = 0.0, worst = 0.0;
    for (const auto& v : s.values) peak = std::max(peak, std::abs(v));
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        std::size_t m = s.mirror(i);
        if (m >= s.values.size()) continue;
        worst = std::max(worst, std::abs(s.values[m] - std::conj(s.values[i])));
    }
    return peak > 0.0 ? worst / peak : 0.0;
}

/// F_x(If)(xi, omega) from line data: trapezoid sum of If(x, omega) exp(-i x . xi)
/// over the omega-aligned start-point grid.
template <int Dim>
Complex slice(const LineData<Dim>& d, const Vec<Dim>& xi) {
    const std::size_t npp = d.p_count();
    std::array<std::vector<Complex>, Dim - 1> pp;
    for (int a = 0; a < Dim - 1; ++a) {
        double k = d.frame[static_cast<std::size_t>(a)].dot(xi);
        pp[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(d.np));
        for (int i = 0; i < d.np; ++i) pp[static_cast<std::size_t>(a)][static_cast<std::size_t>(i)] = std::polar(1.0, -k * (d.p_lo[static_cast<std::size_t>(a)] + i * d.dp));
    }
    const double kh = d.omega.dot(xi);
    Complex total = 0.0;
    for (int ih = 0; ih < d.nh; ++ih) {
        const double* row = d.values.data() + static_cast<std::size_t>(ih) * npp;
        Complex acc = 0.0;
        for (std::size_t ip = 0; ip < npp; ++ip) {
            if (row[ip] == 0.0) continue;
            std::size_t r = ip;
            Complex w = 1.0;
            for (int a = 0; a < Dim - 1; ++a) {
                w *= pp[static_cast<std::size_t>(a)][r % static_cast<std::size_t>(d.np)];
                r /= static_cast<std::size_t>(d.np);
            }
            acc += w * row[ip];
        }
        total += acc * std::polar(1.0, -kh * (d.h_lo + ih * d.dh));
    }
    return total * std::pow(d.dp, Dim - 1) * d.dh;
}

/// F_x(If)(xi, omega) computed from the X-ray data of f in direction omega.
template <int Dim>
Complex slice_from_sinogram(const SpaceTimeField<Dim>& f, const Vec<Dim>& omega, const Vec<Dim>& xi,
                            const ConvexBody<Dim>& body, double spacing = 0.25) {
    return slice(line_data(f, omega, body, spacing), xi);
}

}  // namespace tdxray
