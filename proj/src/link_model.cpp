#include "wptsim/link_model.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace wptsim {

double LinkParams::mutual() const { return k * std::sqrt(l_tx * l_rx); }

double resonant_cap(double f0, double l) {
    if (f0 <= 0.0 || l <= 0.0) throw ConfigError("resonant_cap: f0 and L must be positive");
    double w = 2.0 * kPi * f0;
    return 1.0 / (w * w * l);
}

double resonance_residual(double f0, double l, double c) {
    double w = 2.0 * kPi * f0;
    return std::abs(w * w * l * c - 1.0);
}

LinkParams default_link() {
    LinkParams p;
    double w = p.omega();
    p.r_ltx = w * p.l_tx / 80.0;
    p.r_lrx = w * p.l_rx / 15.0;
    p.r_rad = 0.5 * p.r_ltx;
    p.c_tx = resonant_cap(p.f0, p.l_tx);
    p.c_rx = resonant_cap(p.f0, p.l_rx);
    return p;
}

void validate(const LinkParams& lk) {
    auto pos = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ConfigError(std::string("link.") + name + " must be positive");
    };
    pos(lk.f0, "f0");
    pos(lk.l_tx, "l_tx");
    pos(lk.l_rx, "l_rx");
    pos(lk.r_ltx, "r_ltx");
    pos(lk.r_lrx, "r_lrx");
    pos(lk.c_tx, "c_tx");
    pos(lk.c_rx, "c_rx");
    if (lk.r_rad < 0.0) throw ConfigError("link.r_rad must be >= 0");
    if (lk.r_src < 0.0) throw ConfigError("link.r_src must be >= 0");
    if (lk.k < 0.0 || lk.k >= 1.0)
        throw ConfigError("link.k must lie in [0, 1)");
}

PhasorSolution solve_phasor(const LinkParams& lk, double r_rx, double v_tx_amp) {
    validate(lk);
    if (!(r_rx > 0.0)) throw ConfigError("r_rx must be positive");
    if (!(v_tx_amp > 0.0)) throw ConfigError("v_tx_amp must be positive");

    const double w = lk.omega();
    const cplx j(0.0, 1.0);
    const double m = lk.mutual();
    const cplx zp = r_rx / (1.0 + j * w * lk.c_rx * r_rx);

    Eigen::Matrix2cd z;
    z << lk.r_src + lk.r_ltx + lk.r_rad + j * (w * lk.l_tx - 1.0 / (w * lk.c_tx)),
         j * w * m,
         j * w * m,
         lk.r_lrx + j * w * lk.l_rx + zp;
    Eigen::Vector2cd rhs(cplx(v_tx_amp, 0.0), cplx(0.0, 0.0));
    Eigen::Vector2cd i = z.fullPivLu().solve(rhs);

    PhasorSolution s;
    s.i_tx = i(0);
    s.i_rx = i(1);
    if (!std::isfinite(std::abs(s.i_tx)) || !std::isfinite(std::abs(s.i_rx)))
        throw SolverError("singular mesh matrix");
    s.v_rx = s.i_rx * zp;
    s.v_trans = s.i_tx * (lk.r_ltx + lk.r_rad + j * w * lk.l_tx) + j * w * m * s.i_rx;
    s.p_out = 0.5 * std::norm(s.v_rx) / r_rx;
    s.p_rad = 0.5 * std::norm(s.i_tx) * lk.r_rad;
    s.p_in = 0.5 * (cplx(v_tx_amp, 0.0) * std::conj(s.i_tx)).real();
    s.phase_deg = std::arg(s.i_tx) * 180.0 / kPi;
    s.r_rx = r_rx;
    return s;
}

double pte(const PhasorSolution& s) {
    if (!(s.p_in > 0.0)) throw SolverError("pte: p_in is not positive");
    return s.p_out / s.p_in;
}

double pre(const PhasorSolution& s) {
    if (!(s.p_rad > 0.0)) throw SolverError("pre: p_rad is not positive");
    return s.p_out / s.p_rad;
}

namespace {

double metric_at(const LinkParams& lk, Metric metric, double r) {
    PhasorSolution s = solve_phasor(lk, r, 1.0);
    return metric == Metric::PRE ? pre(s) : pte(s);
}

} // namespace

LoadOpt optimal_load(const LinkParams& lk, Metric metric,
                     double r_lo, double r_hi) {
    if (!(r_lo > 0.0) || !(r_lo < r_hi))
        throw ConfigError("optimal_load: bounds must satisfy 0 < lo < hi");

    constexpr int kCoarse = 64;
    const double llo = std::log(r_lo), lhi = std::log(r_hi);
    int best = 0;
    double fbest = -1.0;
    std::vector<double> grid(kCoarse);
    for (int i = 0; i < kCoarse; ++i) {
        grid[i] = std::exp(llo + (lhi - llo) * i / (kCoarse - 1));
        double f = metric_at(lk, metric, grid[i]);
        if (f > fbest) { fbest = f; best = i; }
    }

    double a = grid[best > 0 ? best - 1 : 0];
    double b = grid[best < kCoarse - 1 ? best + 1 : kCoarse - 1];

    // golden section on [a, b]
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = metric_at(lk, metric, x1), f2 = metric_at(lk, metric, x2);
    while (b - a > 0.1 && (b - a) > 1e-4 * a) {
        if (f1 < f2) {
            a = x1; x1 = x2; f1 = f2;
            x2 = a + gr * (b - a);
            f2 = metric_at(lk, metric, x2);
        } else {
            b = x2; x2 = x1; f2 = f1;
            x1 = b - gr * (b - a);
            f1 = metric_at(lk, metric, x1);
        }
    }

    LoadOpt out;
    out.r_rx = 0.5 * (a + b);
    out.value = metric_at(lk, metric, out.r_rx);
    out.boundary = (best == 0 || best == kCoarse - 1);
    return out;
}

double radiated_power_reduction(const LinkParams& lk, double p_out_target) {
    if (!(p_out_target > 0.0))
        throw ConfigError("radiated_power_reduction: target must be positive");
    LoadOpt at_pre = optimal_load(lk, Metric::PRE, 10.0, 1e4);
    LoadOpt at_pte = optimal_load(lk, Metric::PTE, 10.0, 1e4);
    // p_rad at fixed p_out is p_out/pre, so the ratio collapses to PREs.
    double pre_at_pre = pre(solve_phasor(lk, at_pre.r_rx, 1.0));
    double pre_at_pte = pre(solve_phasor(lk, at_pte.r_rx, 1.0));
    if (std::abs(at_pre.r_rx - at_pte.r_rx) < 1e-9 * at_pte.r_rx) return 0.0;
    return 1.0 - pre_at_pte / pre_at_pre;
}

double phase_vtx_itx(const LinkParams& lk, double r_rx) {
    return solve_phasor(lk, r_rx, 1.0).phase_deg;
}

void validate(const LoadModel& lm) {
    if (lm.kind == LoadModel::Kind::resistive && !(lm.r_l > 0.0))
        throw ConfigError("load.r_l must be positive");
    if (lm.kind == LoadModel::Kind::constant_power && !(lm.p0 > 0.0))
        throw ConfigError("load.p0 must be positive");
    if (!(lm.ratio > 0.0)) throw ConfigError("load.ratio must be positive");
    if (!(lm.alpha > 0.0) || lm.alpha > 1.0)
        throw ConfigError("load.alpha must lie in (0, 1]");
}

double rectifier_input_resistance(const LoadModel& lm, double v_rx_amp) {
    validate(lm);
    if (lm.kind == LoadModel::Kind::resistive)
        return lm.alpha * lm.r_l / (lm.ratio * lm.ratio);
    if (!(v_rx_amp > 0.0))
        throw ConfigError("constant-power mapping needs v_rx_amp > 0");
    return lm.alpha * v_rx_amp * v_rx_amp / lm.p0;
}

PhasorSolution solve_operating_point(const LinkParams& lk, const LoadModel& lm,
                                     double v_tx_amp) {
    validate(lm);
    if (lm.kind == LoadModel::Kind::resistive)
        return solve_phasor(lk, rectifier_input_resistance(lm, 1.0), v_tx_amp);

    // Fixed point of g(r) = implied_r(|v_rx(r)|) - r. g has an interior
    // maximum in log r; the root on its falling side is the stable branch.
    auto g = [&](double r) {
        PhasorSolution s = solve_phasor(lk, r, v_tx_amp);
        return rectifier_input_resistance(lm, std::abs(s.v_rx)) - r;
    };
    constexpr int kScan = 141;
    const double llo = std::log(1.0), lhi = std::log(1e7);
    double rpk = 0.0, gpk = -1e300;
    std::vector<double> rs(kScan), gs(kScan);
    for (int i = 0; i < kScan; ++i) {
        rs[i] = std::exp(llo + (lhi - llo) * i / (kScan - 1));
        gs[i] = g(rs[i]);
        if (gs[i] > gpk) { gpk = gs[i]; rpk = rs[i]; }
    }
    if (gpk < 0.0)
        throw InfeasibleError("constant-power demand above link capability at this drive");
    int hi = -1;
    for (int i = 0; i < kScan; ++i)
        if (rs[i] > rpk && gs[i] < 0.0) { hi = i; break; }
    if (hi <= 0)
        throw InfeasibleError("no stable operating point inside the scan bracket");
    double a = rs[hi - 1], b = rs[hi];
    for (int it = 0; it < 200 && (b - a) > 1e-9 * a; ++it) {
        double mid = 0.5 * (a + b);
        (g(mid) >= 0.0 ? a : b) = mid;
    }
    return solve_phasor(lk, 0.5 * (a + b), v_tx_amp);
}

PhasorSolution solve_brownout_point(const LinkParams& lk, const LoadModel& lm,
                                    double v_tx_amp) {
    validate(lm);
    if (lm.kind == LoadModel::Kind::resistive)
        return solve_phasor(lk, rectifier_input_resistance(lm, 1.0), v_tx_amp);
    auto g = [&](double r) {
        PhasorSolution s = solve_phasor(lk, r, v_tx_amp);
        return rectifier_input_resistance(lm, std::abs(s.v_rx)) - r;
    };
    constexpr int kScan = 141;
    const double llo = std::log(1.0), lhi = std::log(1e7);
    int ipk = 0;
    double gpk = -1e300;
    std::vector<double> rs(kScan);
    for (int i = 0; i < kScan; ++i) {
        rs[i] = std::exp(llo + (lhi - llo) * i / (kScan - 1));
        double gi = g(rs[i]);
        if (gi > gpk) { gpk = gi; ipk = i; }
    }
    double a = std::log(rs[std::max(ipk - 1, 0)]);
    double b = std::log(rs[std::min(ipk + 1, kScan - 1)]);
    for (int it = 0; it < 80; ++it) {
        double m1 = a + (b - a) / 3.0, m2 = b - (b - a) / 3.0;
        if (g(std::exp(m1)) < g(std::exp(m2))) a = m1; else b = m2;
    }
    return solve_phasor(lk, std::exp(0.5 * (a + b)), v_tx_amp);
}

} // namespace wptsim
