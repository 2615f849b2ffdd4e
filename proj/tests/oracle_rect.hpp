#pragma once
// Brute-force reference for the event-driven rectifier: fixed tiny steps,
// comparator crossings quantized to step boundaries, switch transitions
// applied at the first boundary past the scheduled instant. No sub-step
// interpolation anywhere, so agreement with the event machinery at a much
// coarser step validates the interpolation rather than restating it.
#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "wptsim/rectifier_sim.hpp"

namespace oracle {

struct BruteTrace {
    std::vector<double> t;
    std::vector<double> v_out;
};

// Raw OFF sensing, compensation off (thresholds at zero), as used by the
// cross-check. `stride` picks every stride-th boundary for the output trace.
inline BruteTrace brute_force_rectifier(const wptsim::RectifierConfig& cfg,
                                        int cycles, int steps_per_cycle,
                                        int stride, double v0) {
    struct Br {
        explicit Br(int s) : sign(s) {}
        int sign;
        bool on = false;
        std::optional<double> close_at, open_at;
        double prev_u = 0.0;
        bool have_prev = false;
        double q_fwd = 0.0, q_rev = 0.0, q_prev = 0.0;
    };
    const double pi = 3.14159265358979323846;
    const double w = 2.0 * pi * cfg.f0;
    const double dt = 1.0 / (cfg.f0 * steps_per_cycle);
    const double rt = cfg.r_src_ac + cfg.r_on;

    auto src = [&](double t) { return cfg.v_ac_amp * std::sin(w * t); };
    auto bi = [&](const Br& b, double t, double vo) {
        double vs = b.sign * src(t);
        if (b.on) return (vs - vo) / rt;
        double u0 = vs - vo;
        if (u0 > cfg.v_diode) {
            double i = (u0 - cfg.v_diode) / rt;
            if (i > 0.0) return i;
        }
        return 0.0;
    };
    auto u_of = [&](const Br& b, double t, double vo) {
        double vs = b.sign * src(t);
        return vs - bi(b, t, vo) * cfg.r_src_ac - vo;
    };

    Br bp{+1}, bn{-1};
    double vo = v0;
    double t = 0.0;
    BruteTrace out;
    long total = static_cast<long>(cycles) * steps_per_cycle;
    out.t.reserve(total / stride + 1);
    out.v_out.reserve(total / stride + 1);

    for (long k = 0; k < total; ++k) {
        for (Br* b : {&bp, &bn}) {
            if (b->close_at && *b->close_at <= t && !b->on) {
                b->on = true;
                b->close_at.reset();
            }
            if (b->open_at && *b->open_at <= t) {
                b->on = false;
                b->open_at.reset();
            }
        }

        double ip = bi(bp, t, vo);
        double im = bi(bn, t, vo);
        double i_rect = ip + im;
        double i_load = vo / cfg.r_load;
        double i_ctrl = cfg.p_ctrl / std::max(vo, 0.3);
        if (bp.on) { (ip >= 0.0 ? bp.q_fwd : bp.q_rev) += std::abs(ip) * dt; }
        if (bn.on) { (im >= 0.0 ? bn.q_fwd : bn.q_rev) += std::abs(im) * dt; }
        vo += (i_rect - i_load - i_ctrl) / cfg.c_filter * dt;
        if (vo < 0.0) vo = 0.0;
        t += dt;

        for (Br* pb : {&bp, &bn}) {
            Br& b = *pb;
            double u = u_of(b, t, vo);
            if (b.have_prev && u != b.prev_u) {
                if (!b.on && !b.close_at && b.prev_u < 0.0 && 0.0 <= u)
                    b.close_at = t + cfg.t_cmp_on;
                if (b.on && !b.open_at && b.prev_u > 0.0 && 0.0 >= u)
                    b.open_at = t + cfg.t_cmp_off;
            }
            b.prev_u = u;
            b.have_prev = true;
            if (b.on && b.q_rev > 0.2 * b.q_fwd + 0.05 * b.q_prev) {
                b.on = false;
                b.open_at.reset();
            }
        }

        if ((k + 1) % stride == 0) {
            out.t.push_back(t);
            out.v_out.push_back(vo);
        }
        if ((k + 1) % steps_per_cycle == 0) {
            for (Br* pb : {&bp, &bn}) {
                pb->q_prev = pb->q_fwd;
                pb->q_fwd = 0.0;
                pb->q_rev = 0.0;
            }
        }
    }
    return out;
}

} // namespace oracle
