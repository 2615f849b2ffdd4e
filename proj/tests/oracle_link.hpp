#pragma once
// Hand-rolled reference implementations used only by tests. Deliberately
// independent of the library code paths: Cramer's rule instead of a LU
// solve, dense sweeps instead of bracketed searches.
#include <cmath>
#include <complex>
#include <vector>

#include "wptsim/link_model.hpp"

namespace oracle {

using cplx = std::complex<double>;

struct Sol {
    cplx i1, i2, v_rx, v_trans;
    double p_in, p_rad, p_out, phase_deg;
};

inline Sol solve(const wptsim::LinkParams& lk, double r_rx, double v_tx) {
    const double w = 2.0 * wptsim::kPi * lk.f0;
    const cplx j(0.0, 1.0);
    const double m = lk.k * std::sqrt(lk.l_tx * lk.l_rx);
    const cplx zp = r_rx / (1.0 + j * w * lk.c_rx * r_rx);
    const cplx z11 = lk.r_src + lk.r_ltx + lk.r_rad
                   + j * (w * lk.l_tx - 1.0 / (w * lk.c_tx));
    const cplx z22 = lk.r_lrx + j * w * lk.l_rx + zp;
    const cplx zm = j * w * m;
    const cplx det = z11 * z22 - zm * zm;
    Sol s;
    s.i1 = v_tx * z22 / det;
    s.i2 = -v_tx * zm / det;
    s.v_rx = s.i2 * zp;
    s.v_trans = s.i1 * (lk.r_ltx + lk.r_rad + j * w * lk.l_tx) + zm * s.i2;
    s.p_out = 0.5 * std::norm(s.v_rx) / r_rx;
    s.p_rad = 0.5 * std::norm(s.i1) * lk.r_rad;
    s.p_in = 0.5 * (v_tx * std::conj(s.i1)).real();
    s.phase_deg = std::arg(s.i1) * 180.0 / wptsim::kPi;
    return s;
}

inline double energy_balance_residual(const wptsim::LinkParams& lk,
                                      double r_rx, double v_tx) {
    Sol s = solve(lk, r_rx, v_tx);
    double loss = 0.5 * std::norm(s.i1) * (lk.r_src + lk.r_ltx + lk.r_rad)
                + 0.5 * std::norm(s.i2) * lk.r_lrx;
    return std::abs(s.p_in - (s.p_out + loss)) / std::max(s.p_in, 1e-300);
}

struct DenseOpt {
    double r;
    double value;
};

inline DenseOpt dense_argmax(const wptsim::LinkParams& lk, bool use_pre,
                             double lo = 10.0, double hi = 1e4, int n = 10000) {
    DenseOpt best{lo, -1e300};
    for (int i = 0; i < n; ++i) {
        double r = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
        Sol s = solve(lk, r, 1.0);
        double f = use_pre ? s.p_out / s.p_rad : s.p_out / s.p_in;
        if (f > best.value) best = {r, f};
    }
    return best;
}

// Number of interior maxima of the metric over a dense log sweep.
inline int interior_maxima(const wptsim::LinkParams& lk, bool use_pre,
                           double lo = 10.0, double hi = 1e4, int n = 10000) {
    std::vector<double> f(n);
    for (int i = 0; i < n; ++i) {
        double r = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
        Sol s = solve(lk, r, 1.0);
        f[i] = use_pre ? s.p_out / s.p_rad : s.p_out / s.p_in;
    }
    int peaks = 0;
    for (int i = 1; i + 1 < n; ++i)
        if (f[i] > f[i - 1] && f[i] >= f[i + 1]) ++peaks;
    return peaks;
}

} // namespace oracle
