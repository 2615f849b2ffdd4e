#include "wptsim/delay_comp.hpp"

#include <algorithm>
#include <cmath>

#include "wptsim/rectifier_sim.hpp"

namespace wptsim {

namespace {
inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }
} // namespace

void accumulate(EdgeState& e, const CompParams& c, double v_s) {
    double eps = c.ramp_rate * c.t_zcd;
    double d = v_s + sgn(v_s) * eps;
    e.v_c += (1.0 + c.mismatch) * d;
    e.v_c = std::clamp(e.v_c, -c.v_rail, c.v_rail);
}

bool safety_check(EdgeState& e, const CompParams& c, bool conducted) {
    if (conducted) {
        e.no_sample = 0;
        return false;
    }
    if (++e.no_sample >= c.reset_cycles) {
        e.v_c = 0.0;
        e.no_sample = 0;
        return true;
    }
    return false;
}

bool sample_settled(const CompParams& c, double v_s, double slope) {
    if (std::abs(v_s) < c.tol_v) return true;
    return slope != 0.0 && std::abs(v_s / slope) < c.tol_t;
}

ConvergeResult converge(const RectifierConfig& cfg, const CompParams& comp,
                        std::array<double, 2> v_c_init,
                        int warm_cycles, int max_cycles) {
    CompParams frozen = comp;
    frozen.enabled = false;
    Rectifier sim(cfg, frozen);
    sim.run_cycles(warm_cycles);

    for (int i = 0; i < 4; ++i) {
        sim.edge(i).v_c = v_c_init[i % 2];
        sim.edge(i).no_sample = 0;
    }
    sim.set_comp_enabled(comp.enabled);

    size_t n0 = sim.per_cycle().size();
    sim.run_cycles(max_cycles);

    ConvergeResult out;
    const auto& pcs = sim.per_cycle();
    int run = 0;
    for (size_t i = n0; i < pcs.size(); ++i) {
        const PerCycle& p = pcs[i];
        int cyc = static_cast<int>(i - n0) + 1;
        for (int e = 0; e < 4; ++e) {
            if (!p.samples[e]) continue;
            const EdgeSample& s = *p.samples[e];
            double resid = s.slope != 0.0 ? std::abs(s.v_s / s.slope) : 0.0;
            out.trajectory.push_back({cyc, e, s.v_s, p.v_c[e], resid});
        }
        run = p.settled ? run + 1 : 0;
        if (run == 3 && out.cycles_to_settle < 0) {
            out.cycles_to_settle = cyc - 2;
            out.residual_delay = std::max({pcs[i].residual, pcs[i - 1].residual,
                                           pcs[i - 2].residual});
        }
    }
    for (int i = 0; i < 4; ++i) out.v_c_star[i] = sim.edge(i).v_c;
    out.diverged = out.cycles_to_settle < 0;
    return out;
}

} // namespace wptsim
