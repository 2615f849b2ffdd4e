#include "wptsim/tx_controller.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace wptsim {

namespace {
constexpr size_t kHistoryCap = 512;
constexpr int kRailAlarmCount = 3;
} // namespace

void validate(const ControllerConfig& cfg) {
    std::vector<std::string> errs;
    auto need = [&](bool ok, const char* msg) {
        if (!ok) errs.emplace_back(msg);
    };
    need(cfg.v_tx_lo > 0.0, "v_tx_lo must be positive");
    need(cfg.v_tx_hi >= cfg.v_tx_lo, "v_tx sweep range must be ordered");
    need(cfg.sweep_points >= 1, "sweep_points must be at least 1");
    need(cfg.phase_deadband_deg > 0.0, "phase_deadband must be positive");
    need(cfg.gain_v_per_deg != 0.0, "gain must be nonzero");
    need(cfg.max_step_v > 0.0, "max_step must be positive");
    need(cfg.v_tx_min > 0.0 && cfg.v_tx_max > cfg.v_tx_min,
         "v_tx command range must be positive and ordered");
    need(cfg.settle_cycles >= 1, "settle_cycles must be at least 1");
    if (!errs.empty()) {
        std::string all = errs.front();
        for (size_t i = 1; i < errs.size(); ++i) all += "; " + errs[i];
        throw ConfigError(all);
    }
}

Calibration calibrate(const LinkParams& lk, const LoadModel& lm,
                      const ControllerConfig& cfg) {
    validate(cfg);
    if (lm.kind != LoadModel::Kind::constant_power)
        throw ConfigError("calibration requires a constant_power load model");
    Calibration cal;
    int n = cfg.sweep_points;
    for (int i = 0; i < n; ++i) {
        double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        double vt = cfg.v_tx_lo * std::pow(cfg.v_tx_hi / cfg.v_tx_lo, f);
        try {
            PhasorSolution s = solve_operating_point(lk, lm, vt);
            cal.rows.push_back(
                {vt, s.r_rx, std::abs(s.v_trans), s.phase_deg, pre(s), pte(s)});
        } catch (const InfeasibleError&) {
            ++cal.skipped;
        }
    }
    if (cal.rows.empty())
        throw SolverError("calibration sweep found no feasible operating point");

    int imin = 0, imax = 0;
    for (size_t i = 1; i < cal.rows.size(); ++i) {
        if (cal.rows[i].v_trans < cal.rows[imin].v_trans) imin = static_cast<int>(i);
        if (cal.rows[i].pre > cal.rows[imax].pre) imax = static_cast<int>(i);
    }
    cal.idx_min_vtrans = imin;
    cal.idx_max_pre = imax;
    cal.degenerate = cal.rows.size() < 8;
    cal.boundary = imin == 0 || imin == static_cast<int>(cal.rows.size()) - 1;
    if (!cal.degenerate && std::abs(imin - imax) > 1)
        throw SolverError(
            "calibration inconsistency: the transmit-coil voltage minimum does "
            "not coincide with the radiated-efficiency maximum");
    cal.delta_phi_opt = cal.rows[imin].phase_deg;
    cal.v_tx_opt = cal.rows[imin].v_tx;
    return cal;
}

PhaseMeasurement measure_phase(const std::vector<double>& t,
                               const std::vector<double>& v_tx,
                               const std::vector<double>& i_tx, double f0) {
    size_t n = t.size();
    if (n < 8 || v_tx.size() != n || i_tx.size() != n)
        throw ConfigError("measure_phase needs equal-length sampled waveforms");
    if (f0 <= 0.0) throw ConfigError("measure_phase needs a positive carrier frequency");
    double period = 1.0 / f0;
    double span = t.back() - t.front();
    if (span < 4.0 * period * (1.0 - 1e-9))
        throw SolverError("measure_phase needs at least 4 carrier cycles of samples");

    auto crossings = [&](const std::vector<double>& y) {
        std::vector<double> c;
        for (size_t k = 1; k < y.size(); ++k) {
            if (y[k - 1] < 0.0 && y[k] >= 0.0) {
                double fr = -y[k - 1] / (y[k] - y[k - 1]);
                c.push_back(t[k - 1] + fr * (t[k] - t[k - 1]));
            }
        }
        return c;
    };
    std::vector<double> cv = crossings(v_tx);
    std::vector<double> ci = crossings(i_tx);
    if (cv.size() < 2 || ci.size() < 2)
        throw SolverError("measure_phase found no zero crossings (flat waveform)");

    double acc = 0.0;
    int m = 0;
    for (double tv : cv) {
        auto it = std::lower_bound(ci.begin(), ci.end(), tv);
        double best;
        if (it == ci.begin()) best = *it;
        else if (it == ci.end()) best = *(it - 1);
        else best = (*it - tv < tv - *(it - 1)) ? *it : *(it - 1);
        double d = tv - best; // i_tx leading the voltage counts positive
        if (std::abs(d) <= 0.5 * period) {
            acc += d;
            ++m;
        }
    }
    if (m < 2) throw SolverError("measure_phase could not pair zero crossings");
    double dt = span / static_cast<double>(n - 1);
    PhaseMeasurement out;
    out.phase_deg = acc / m * 360.0 * f0;
    out.sigma_deg = 360.0 * f0 * dt / (2.0 * std::sqrt(static_cast<double>(m)));
    out.pairs = m;
    return out;
}

ControllerState start_controller(const LinkParams& lk, const LoadModel& lm,
                                 const ControllerConfig& cfg) {
    Calibration cal = calibrate(lk, lm, cfg);
    ControllerState st;
    st.mode = ControllerMode::regulating;
    st.delta_phi_opt = cal.delta_phi_opt;
    st.v_tx = std::clamp(cal.v_tx_opt, cfg.v_tx_min, cfg.v_tx_max);
    return st;
}

ControllerState regulate_step(ControllerState st, double measured_phase_deg,
                              const ControllerConfig& cfg) {
    if (st.mode != ControllerMode::regulating)
        throw SolverError("regulate_step needs a calibrated controller");
    double err = measured_phase_deg - st.delta_phi_opt;
    ++st.steps;
    if (std::abs(err) > cfg.phase_deadband_deg) {
        double step = std::clamp(err * cfg.gain_v_per_deg, -cfg.max_step_v,
                                 cfg.max_step_v);
        double want = st.v_tx + step;
        double clamped = std::clamp(want, cfg.v_tx_min, cfg.v_tx_max);
        st.rail_count = want != clamped ? st.rail_count + 1 : 0;
        if (st.rail_count >= kRailAlarmCount) st.alarm = true;
        st.v_tx = clamped;
    } else {
        st.rail_count = 0;
    }
    st.history.push_back({static_cast<double>(st.steps), measured_phase_deg, st.v_tx});
    if (st.history.size() > kHistoryCap)
        st.history.erase(st.history.begin());
    return st;
}

std::vector<RegulationStep> run_regulation(const LinkParams& lk,
                                           const LoadModel& lm,
                                           const ControllerConfig& cfg,
                                           ControllerState& st, int max_steps,
                                           int samples_per_cycle,
                                           int cycles_per_window) {
    if (st.mode != ControllerMode::regulating)
        throw SolverError("run_regulation needs a calibrated controller");
    std::vector<RegulationStep> log;
    double period = 1.0 / lk.f0;
    double w = lk.omega();
    int nsamp = samples_per_cycle * cycles_per_window + 1;
    std::vector<double> ts(nsamp), vw(nsamp), iw(nsamp);
    // Plant response at the commanded drive. When the demand is infeasible
    // the load collapses to the power fold instead of holding p0; the loop
    // keeps running on that brownout point and the rail alarm ends it.
    auto plant = [&](double v) {
        try {
            return solve_operating_point(lk, lm, v);
        } catch (const InfeasibleError&) {
            return solve_brownout_point(lk, lm, v);
        }
    };
    for (int s = 0; s < max_steps; ++s) {
        PhasorSolution sol = plant(st.v_tx);
        double amp_i = std::abs(sol.i_tx);
        double ph = std::arg(sol.i_tx);
        for (int k = 0; k < nsamp; ++k) {
            double tt = k * period / samples_per_cycle;
            ts[k] = tt;
            vw[k] = st.v_tx * std::sin(w * tt);
            iw[k] = amp_i * std::sin(w * tt + ph);
        }
        PhaseMeasurement pm = measure_phase(ts, vw, iw, lk.f0);
        st = regulate_step(st, pm.phase_deg, cfg);
        log.push_back({s, pm.phase_deg, st.v_tx, sol.p_rad, sol.p_out});
        if (st.alarm) break;
    }
    return log;
}

} // namespace wptsim
