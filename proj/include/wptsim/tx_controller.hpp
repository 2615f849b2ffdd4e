#pragma once
#include <vector>

#include "wptsim/link_model.hpp"

namespace wptsim {

struct ControllerConfig {
    double v_tx_lo = 0.02;  // calibration sweep range, V
    double v_tx_hi = 1.0;
    int sweep_points = 64;
    double phase_deadband_deg = 0.15;
    double gain_v_per_deg = 0.01;
    double max_step_v = 0.05;
    double v_tx_min = 0.05;  // runtime command range
    double v_tx_max = 2.0;
    int settle_cycles = 100;  // carrier cycles per control interval
};

void validate(const ControllerConfig& cfg);

struct CalPoint {
    double v_tx;
    double r_rx;
    double v_trans;  // magnitude
    double phase_deg;
    double pre;
    double pte;
};

// V_TX sweep against a constant-power load. Each feasible point records the
// TX coil voltage magnitude, phase, PRE and PTE; the result carries the
// phase at the |v_trans| minimum. The sweep asserts at runtime that this
// point also maximizes PRE to within one grid step; a violation is an
// internal consistency failure, not a tolerable outcome.
struct Calibration {
    std::vector<CalPoint> rows;  // feasible points, ascending v_tx
    int idx_min_vtrans = -1;
    int idx_max_pre = -1;
    double delta_phi_opt = 0.0;
    double v_tx_opt = 0.0;
    bool boundary = false;    // optimum pinned to a sweep edge: range too narrow
    bool degenerate = false;  // fewer than 8 feasible points
    int skipped = 0;          // infeasible sweep points (callers should warn)
};

Calibration calibrate(const LinkParams& lk, const LoadModel& lm,
                      const ControllerConfig& cfg);

struct PhaseMeasurement {
    double phase_deg;  // positive when i_tx leads v_tx
    double sigma_deg;  // quantization floor of the estimate
    int pairs;         // matched crossing pairs averaged
};

// Zero-crossing timestamp comparison between the two sampled TX-port
// waveforms; needs at least four carrier cycles of samples.
PhaseMeasurement measure_phase(const std::vector<double>& t,
                               const std::vector<double>& v_tx,
                               const std::vector<double>& i_tx, double f0);

enum class ControllerMode { calibrating, regulating };

struct HistoryPoint {
    double t;  // control-interval index
    double phase_deg;
    double v_tx;
};

struct ControllerState {
    ControllerMode mode = ControllerMode::calibrating;
    double delta_phi_opt = 0.0;
    double v_tx = 0.0;
    int steps = 0;
    int rail_count = 0;
    bool alarm = false;  // persistent railing: load outside the servo range
    std::vector<HistoryPoint> history;  // bounded, newest last
};

// Run the startup calibration and arm regulation at the swept optimum.
ControllerState start_controller(const LinkParams& lk, const LoadModel& lm,
                                 const ControllerConfig& cfg);

// One proportional update from a phase measurement. Inside the deadband the
// command is left alone; outside, v_tx moves by clamp(gain*error, max_step)
// and is kept within the command range. Value in, value out.
ControllerState regulate_step(ControllerState st, double measured_phase_deg,
                              const ControllerConfig& cfg);

struct RegulationStep {
    int step;
    double phase_deg;  // measured before the update
    double v_tx;       // command after the update
    double p_rad;
    double p_out;
};

// Closed loop against the phasor plant: each control interval solves the
// constant-power operating point at the commanded v_tx and hands the
// controller nothing but the synthesized TX-port waveforms.
std::vector<RegulationStep> run_regulation(const LinkParams& lk,
                                           const LoadModel& lm,
                                           const ControllerConfig& cfg,
                                           ControllerState& st, int max_steps,
                                           int samples_per_cycle = 2000,
                                           int cycles_per_window = 6);

} // namespace wptsim
