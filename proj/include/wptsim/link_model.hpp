#pragma once
#include <complex>
#include <string>

#include "wptsim/errors.hpp"

namespace wptsim {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Two-coil resonant link: series-resonant TX (source, C_tx, coil), parallel
// RX tank (L_rx, C_rx) loaded by r_rx. r_rad is a tissue-equivalent series
// resistance on the TX coil; radiated/absorbed power is accounted there.
struct LinkParams {
    double f0    = 40.68e6;
    double l_tx  = 616e-9;
    double l_rx  = 100e-9;
    double k     = 0.10;
    double r_ltx = 0.0;
    double r_rad = 0.0;
    double r_lrx = 0.0;
    double c_tx  = 0.0;
    double c_rx  = 0.0;
    double r_src = 1.0;

    double omega() const { return 2.0 * kPi * f0; }
    double mutual() const;
};

// Shipped defaults. Only f0 and l_tx are anchored externally; the rest is a
// documented plausible implant link (Q_tx 80, Q_rx 15, r_rad = 0.5 r_ltx).
LinkParams default_link();

double resonant_cap(double f0, double l);
// |w0^2 L C - 1|, zero at exact resonance.
double resonance_residual(double f0, double l, double c);

void validate(const LinkParams& lk); // throws ConfigError

struct PhasorSolution {
    cplx i_tx;      // TX mesh current = coil current
    cplx i_rx;      // RX mesh current
    cplx v_rx;      // across the RX tank load
    cplx v_trans;   // across the physical TX coil branch (L_tx + its losses)
    double p_in;    // delivered by the source EMF (includes r_src loss)
    double p_rad;   // 0.5 |i_tx|^2 r_rad
    double p_out;   // dissipated in r_rx
    double phase_deg; // of i_tx relative to v_tx, (-90, 90) near resonance
    double r_rx;    // load the solution was computed at
};

PhasorSolution solve_phasor(const LinkParams& lk, double r_rx, double v_tx_amp);

// Efficiency orientation: larger is better for both. pte is in (0,1); pre
// may exceed 1 because r_rad is only one of several loss paths.
double pte(const PhasorSolution& s);
double pre(const PhasorSolution& s);

enum class Metric { PRE, PTE };

struct LoadOpt {
    double r_rx;
    double value;
    bool boundary; // optimum pinned at a sweep bound: not an interior max
};

// Coarse 64-point log bracket, then golden section to 0.1 ohm or 1e-4 rel.
LoadOpt optimal_load(const LinkParams& lk, Metric metric,
                     double r_lo, double r_hi);

// 1 - p_rad(PRE-opt)/p_rad(PTE-opt) with both points rescaled to the same
// delivered power. The circuit is linear, so the ratio is independent of
// p_out_target; the argument only gates feasibility.
double radiated_power_reduction(const LinkParams& lk, double p_out_target);

double phase_vtx_itx(const LinkParams& lk, double r_rx);

struct LoadModel {
    enum class Kind { resistive, constant_power };
    Kind kind    = Kind::resistive;
    double r_l   = 700.0;  // resistive
    double p0    = 1e-3;   // constant power draw, W
    double ratio = 1.0;    // SCPC conversion ratio
    double alpha = 0.5;    // AC mapping factor, (0, 1]
};

void validate(const LoadModel& lm);

// Equivalent AC tank resistance presented by the rectifier + SCPC + load
// chain. resistive: alpha * r_l / ratio^2. constant_power:
// alpha * v_rx_amp^2 / p0 -- the SCPC ratio cancels because power is
// invariant through the lossless converter (the DC node presents v^2/P
// whatever the ratio); with the ideal full-wave v_dc = v_rx_amp and
// alpha = 0.5, the tank-side dissipation 0.5 v^2 / r_rx is exactly p0.
double rectifier_input_resistance(const LoadModel& lm, double v_rx_amp);

// Self-consistent operating point: the r_rx used in the phasor solve equals
// the one the load model implies at the solved |v_rx|. Constant-power loads
// generally admit two fixed points; the high-r_rx root (falling side of
// delivered power, the stable one) is returned. Throws InfeasibleError when
// the drive cannot supply p0.
PhasorSolution solve_operating_point(const LinkParams& lk, const LoadModel& lm,
                                     double v_tx_amp);

// Power-fold point: the load at which the two constant-power fixed points
// merge. Models the collapsed plant when p0 exceeds capability at this
// drive; delivered power there falls short of the demand.
PhasorSolution solve_brownout_point(const LinkParams& lk, const LoadModel& lm,
                                    double v_tx_amp);

} // namespace wptsim
