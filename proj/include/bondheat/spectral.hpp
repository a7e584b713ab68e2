#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "bondheat/errors.hpp"
#include "bondheat/model.hpp"

// Eigenvalue machinery for the wire and compound series.
//
// Characteristic equations (Robin side/top walls):
//   x direction:  lambda * tan(lambda*W/2) =  h_c/kappa_m
//   z direction:  lambda * cot(lambda*H)   = -h_c/kappa_m
// plus the closed-form wire and compound y-modes
//   lambda_y;w,k = k*pi/L_w   (k = 1..N_k, wire transient)
//   lambda_y;m,m = (2m+1)*pi/(2*L_w)   (m = 0.., compound transient)
//
// Roots are solved in the dimensionless variable s (= lambda*W/2 resp.
// lambda*H). At double precision the dimensional residual cannot be pushed
// below ~1e-10 for deep modes (one ulp of lambda already moves it more), so
// the residual contract |f| < 1e-10 is defined on the dimensionless form,
// which is the same equation scaled by W/2 (resp. H).

namespace bondheat::spectral {

struct TruncationCounts {
    int nx = 20;  // x cosine modes (tan roots)
    int ny = 30;  // compound y quarter-wave modes
    int nz = 20;  // z sine modes (cot roots)
    int nk = 60;  // wire transient sine modes

    void validate() const {
        if (nx < 1 || ny < 1 || nz < 1 || nk < 1)
            throw ValidationError("TruncationCounts: all counts must be >= 1");
    }
};

// Dimensionless characteristic residuals. s_tan = lambda*W/2, s_cot = lambda*H,
// r_tan = ratio*W/2, r_cot = ratio*H.
inline double tan_characteristic(double s, double r) { return s * std::tan(s) - r; }
inline double cot_characteristic(double s, double r) {
    return s * std::cos(s) / std::sin(s) + r;
}

namespace detail {

// Bracketed bisection to 1e-8 relative, then up to 5 Newton steps clamped to
// the bracket. f must be monotone on (lo, hi) with a sign change.
template <typename F, typename DF>
double solve_branch(F f, DF df, double lo, double hi, const char* what) {
    double flo = f(lo);
    double fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw ConvergenceFailure(std::string("solve_branch: no sign change for ") + what);

    double a = lo, b = hi, fa = flo;
    int it = 0;
    while ((b - a) > 1e-8 * b) {
        if (++it > 200)
            throw ConvergenceFailure(std::string("solve_branch: bisection stalled for ") + what);
        double mid = 0.5 * (a + b);
        double fm = f(mid);
        if (fm == 0.0) {
            a = b = mid;
            break;
        }
        if ((fm > 0.0) == (fa > 0.0)) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }

    double s = 0.5 * (a + b);
    for (int k = 0; k < 5; ++k) {
        double fs = f(s);
        double d = df(s);
        if (d == 0.0) break;
        double step = fs / d;
        double next = s - step;
        if (!(next > lo && next < hi)) break;  // safeguard: stay inside the branch
        s = next;
        if (std::abs(step) < 1e-15 * s) break;
    }
    return s;
}

}  // namespace detail

// First `count` positive roots of lambda*tan(lambda*W/2) = ratio.
// Root j (0-based) lies in lambda*W/2 in (j*pi, j*pi + pi/2).
inline std::vector<double> robin_tan_roots(double width, double ratio, int count) {
    if (!(width > 0.0) || !(ratio > 0.0) || count < 1)
        throw ValidationError("robin_tan_roots: need width > 0, ratio > 0, count >= 1");
    const double r = ratio * width / 2.0;
    std::vector<double> roots;
    roots.reserve(count);
    for (int j = 0; j < count; ++j) {
        // f = s*tan(s) - r runs from -r to +inf over s in (j*pi, j*pi + pi/2)
        const double base = j * M_PI;
        const double lo = (j == 0) ? 1e-14 : base * (1.0 + 1e-12);
        const double hi = (base + M_PI / 2.0) * (1.0 - 1e-12);
        auto f = [r](double s) { return tan_characteristic(s, r); };
        auto df = [](double s) {
            double t = std::tan(s);
            return t + s * (1.0 + t * t);
        };
        double s = detail::solve_branch(f, df, lo, hi, "robin_tan_roots");
        roots.push_back(2.0 * s / width);
    }
    return roots;
}

// First `count` positive roots of lambda*cot(lambda*H) = -ratio.
// Root j (0-based) lies in lambda*H in (j*pi + pi/2, (j+1)*pi).
inline std::vector<double> robin_cot_roots(double height, double ratio, int count) {
    if (!(height > 0.0) || !(ratio > 0.0) || count < 1)
        throw ValidationError("robin_cot_roots: need height > 0, ratio > 0, count >= 1");
    const double r = ratio * height;
    std::vector<double> roots;
    roots.reserve(count);
    for (int j = 0; j < count; ++j) {
        const double lo = j * M_PI + M_PI / 2.0;
        const double hi = (j + 1) * M_PI;
        auto f = [r](double s) { return cot_characteristic(s, r); };
        auto df = [](double s) {
            double c = std::cos(s) / std::sin(s);
            return c - s * (1.0 + c * c);
        };
        double s = detail::solve_branch(f, df, lo * (1.0 + 1e-12), hi * (1.0 - 1e-12), "robin_cot_roots");
        roots.push_back(s / height);
    }
    return roots;
}

// Closed-form mode families.
inline std::vector<double> wire_sine_modes(double length, int count) {
    std::vector<double> v(count);
    for (int k = 1; k <= count; ++k) v[k - 1] = k * M_PI / length;
    return v;
}
inline std::vector<double> quarter_wave_modes(double length, int count) {
    std::vector<double> v(count);
    for (int m = 0; m < count; ++m) v[m] = (2 * m + 1) * M_PI / (2.0 * length);
    return v;
}

// Composite rates: lambda^2_y;np = lambda^2_x;n + lambda^2_z;p (chip steady
// y-decay) and lambda^2_z;nm = lambda^2_x;n + lambda^2_y;m (die steady z-decay).
struct CombinedEigen {
    int nx = 0, ny = 0, nz = 0;
    std::vector<double> lambda_y_np_sq;  // nx*nz, row-major [n*nz + p]
    std::vector<double> lambda_z_nm_sq;  // nx*ny, row-major [n*ny + m]

    double y_np_sq(int n, int p) const { return lambda_y_np_sq[n * nz + p]; }
    double z_nm_sq(int n, int m) const { return lambda_z_nm_sq[n * ny + m]; }
};

struct SpectralBasis {
    double wire_length = 0.0;
    double width = 0.0;
    double height = 0.0;
    double ratio = 0.0;  // h_c/kappa_m, 1/m
    TruncationCounts counts;

    std::vector<double> lambda_x;    // tan roots, size nx
    std::vector<double> lambda_z;    // cot roots, size nz
    std::vector<double> lambda_y_m;  // quarter-wave, size ny
    std::vector<double> lambda_y_w;  // wire sine, size nk

    // Sturm-Liouville norms. norm_x_half over x in [0, W/2]; the full-width
    // norm is twice that. norm_z over u = z + H/2 in [0, H]. The y-family
    // norms are exactly L/2 for both mode sets.
    std::vector<double> norm_x_half;
    std::vector<double> norm_z;

    CombinedEigen combined;

    double norm_y() const { return wire_length / 2.0; }

    double tan_residual(int n) const {
        double s = lambda_x[n] * width / 2.0;
        return std::abs(tan_characteristic(s, ratio * width / 2.0));
    }
    double cot_residual(int p) const {
        double s = lambda_z[p] * height;
        return std::abs(cot_characteristic(s, ratio * height));
    }
};

inline SpectralBasis build_basis(const WireSpec& wire, const CompoundSpec& compound,
                                 const BoundarySet& bc, const TruncationCounts& counts) {
    counts.validate();
    SpectralBasis b;
    b.wire_length = wire.length;
    b.width = compound.width;
    b.height = compound.height;
    b.ratio = bc.h_conv / compound.kappa;
    b.counts = counts;

    b.lambda_x = robin_tan_roots(compound.width, b.ratio, counts.nx);
    b.lambda_z = robin_cot_roots(compound.height, b.ratio, counts.nz);
    b.lambda_y_m = quarter_wave_modes(wire.length, counts.ny);
    b.lambda_y_w = wire_sine_modes(wire.length, counts.nk);

    b.norm_x_half.resize(counts.nx);
    for (int n = 0; n < counts.nx; ++n) {
        double lam = b.lambda_x[n];
        b.norm_x_half[n] = compound.width / 4.0 + std::sin(lam * compound.width) / (4.0 * lam);
    }
    b.norm_z.resize(counts.nz);
    for (int p = 0; p < counts.nz; ++p) {
        double lam = b.lambda_z[p];
        b.norm_z[p] = compound.height / 2.0 - std::sin(2.0 * lam * compound.height) / (4.0 * lam);
    }

    b.combined.nx = counts.nx;
    b.combined.ny = counts.ny;
    b.combined.nz = counts.nz;
    b.combined.lambda_y_np_sq.resize(static_cast<std::size_t>(counts.nx) * counts.nz);
    for (int n = 0; n < counts.nx; ++n)
        for (int p = 0; p < counts.nz; ++p)
            b.combined.lambda_y_np_sq[n * counts.nz + p] =
                b.lambda_x[n] * b.lambda_x[n] + b.lambda_z[p] * b.lambda_z[p];
    b.combined.lambda_z_nm_sq.resize(static_cast<std::size_t>(counts.nx) * counts.ny);
    for (int n = 0; n < counts.nx; ++n)
        for (int m = 0; m < counts.ny; ++m)
            b.combined.lambda_z_nm_sq[n * counts.ny + m] =
                b.lambda_x[n] * b.lambda_x[n] + b.lambda_y_m[m] * b.lambda_y_m[m];

    for (std::size_t i = 1; i < b.lambda_x.size(); ++i)
        if (b.lambda_x[i] <= b.lambda_x[i - 1])
            throw ConvergenceFailure("build_basis: lambda_x not strictly increasing");
    for (std::size_t i = 1; i < b.lambda_z.size(); ++i)
        if (b.lambda_z[i] <= b.lambda_z[i - 1])
            throw ConvergenceFailure("build_basis: lambda_z not strictly increasing");
    return b;
}

}  // namespace bondheat::spectral
