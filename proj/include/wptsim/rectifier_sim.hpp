#pragma once
#include <array>
#include <cmath>
#include <optional>
#include <utility>
#include <vector>

#include "wptsim/delay_comp.hpp"
#include "wptsim/errors.hpp"

namespace wptsim {

// Behavioral full-wave active rectifier: two comparator-driven switches
// (one per half-wave) with body-diode fallback, filter cap, resistive load,
// and a constant control-power draw from the output node.
struct RectifierConfig {
    double f0 = 40.68e6;
    double v_ac_amp = 2.36;   // EMF amplitude behind r_src_ac
    double r_src_ac = 158.4;  // AC-side source resistance
    double r_on = 16.6;
    double v_diode = 0.40;
    double t_cmp_on = 1e-9;
    double t_cmp_off = 1e-9;
    double c_filter = 20e-9;
    double r_load = 700.0;
    double p_ctrl = 160e-6;   // comparator/logic supply drawn from v_out
    double dt_max = 0.0;      // integration step cap; 0 = period/2000
    double v_ac_env_tau = 600e-9; // amplitude-step envelope; 0 = instant

    double period() const { return 1.0 / f0; }
    double omega() const { return 2.0 * 3.14159265358979323846 * f0; }
    int steps_per_cycle() const {
        double cap = dt_max > 0.0 ? dt_max : period() / 2000.0;
        int n = static_cast<int>(std::ceil(period() / cap - 1e-9));
        return n < 200 ? 200 : n;
    }
    double dt() const { return period() / steps_per_cycle(); }
};

void validate(const RectifierConfig& cfg);

struct Disturbance {
    double t;
    enum class Field { r_load, v_ac_amp } field;
    double value;
};

struct PerCycle {
    int cycle;
    double mean_v;
    double vcr;       // mean v_out over the traced AC-port peak this cycle
    double pce;
    double q_cond;    // conduction charge delivered to the DC node
    bool settled;
    double residual;  // worst |v_s/slope| across the four edges
    std::array<std::optional<EdgeSample>, 4> samples; // on/P off/P on/N off/N
    std::array<double, 4> v_c{};                      // accumulators at cycle end
};

struct WaveSample {
    double t, v_port, v_out, i_load, i_ac;
    bool sw_p, sw_n;
};

struct TraceRecord {
    double f0 = 0.0;
    double dt = 0.0;
    std::vector<WaveSample> wave;
    std::vector<PerCycle> cycles;
};

// Static charge-balance estimate of the DC bus voltage, used to start runs
// near the operating point instead of from a cold output node.
double v_steady_estimate(const RectifierConfig& cfg);

class Rectifier {
  public:
    Rectifier(const RectifierConfig& cfg, const CompParams& comp,
              std::array<double, 2> v_c_init = {0.0, 0.0},
              std::optional<double> warm_v_out = std::nullopt);

    void run_cycles(int n, const std::vector<Disturbance>& dist = {},
                    TraceRecord* trace = nullptr);

    const std::vector<PerCycle>& per_cycle() const { return per_cycle_; }
    double v_out() const { return v_out_; }
    double t() const { return t_; }
    int cycle() const { return cycle_; }
    double amp() const { return a_; }

    // 0 on/P, 1 off/P, 2 on/N, 3 off/N
    EdgeState& edge(int i);
    const EdgeState& edge(int i) const;

    void set_comp_enabled(bool on) { comp_.enabled = on; }
    const CompParams& comp() const { return comp_; }

    double charge_residual() const;

  private:
    struct Branch {
        explicit Branch(int s) : sign(s) {}
        int sign;
        bool on = false;
        EdgeState e_on, e_off;
        std::optional<double> close_at, open_at;
        double prev_u = 0.0;
        bool have_prev_u = false;
        double i_pk_run = 0.0;
        double q_fwd = 0.0, q_rev = 0.0, q_prev = 0.0;
    };

    double src(double t) const { return a_ * std::sin(cfg_.omega() * t); }
    double branch_i(const Branch& b, double t, double vo) const;
    double u_of(const Branch& b, double t, double vo) const;
    void open_switch(Branch& b, double t, double vo, bool feed);
    void close_switch(Branch& b, double t, double vo);
    void end_cycle();

    RectifierConfig cfg_;
    CompParams comp_;
    Branch bp_{+1}, bn_{-1};
    double v_out_;
    double v_start_;
    double t_ = 0.0;
    int cycle_ = 0;
    double a_, a_target_;
    double r_load_;
    double off_line_;

    // whole-run charge audit
    double q_rect_ = 0.0, q_load_ = 0.0, q_ctrl_ = 0.0;

    // per-cycle accumulators
    double cyc_vint_ = 0.0, cyc_ein_ = 0.0, cyc_eout_ = 0.0, cyc_q_ = 0.0;
    double cyc_vp_pk_ = 0.0;
    std::array<std::optional<EdgeSample>, 4> cyc_samples_{};

    std::vector<PerCycle> per_cycle_;
};

// comp == nullptr runs with compensation disabled (offsets all zero); the
// rectifier's own conduction guards stay active either way.
TraceRecord simulate(const RectifierConfig& cfg, const CompParams* comp,
                     double duration,
                     const std::vector<Disturbance>& dist = {});

// Mean DC output over the trailing steady cycles divided by the traced
// AC-port peak. Steady state: cycle-to-cycle mean change < 0.1% for at
// least 3 consecutive cycles; averaged over at most the last 8.
double measure_vcr(const TraceRecord& trace);
double measure_pce(const TraceRecord& trace);

// |V1|/|I1| at the AC port from a single-bin Fourier projection over the
// trailing integer cycle count.
double measure_equivalent_resistance(const TraceRecord& trace);

// PCE with compensation frozen and both comparator delays forced to each
// listed residual value; raw OFF sensing (no delay line).
std::vector<std::pair<double, double>>
delay_loss_curve(const RectifierConfig& cfg, const std::vector<double>& delays);

struct SteadyMetrics {
    double vcr, pce, mean_v;
};

// Convenience wrapper: warm up, measure, return the trio.
SteadyMetrics rectifier_steady(const RectifierConfig& cfg, const CompParams& comp,
                               int warm_cycles = 80, int meas_cycles = 8);

} // namespace wptsim
