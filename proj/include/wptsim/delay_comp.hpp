#pragma once
#include <array>
#include <vector>

namespace wptsim {

struct RectifierConfig;

enum class OffMode { delay_line, raw };

struct CompParams {
    bool enabled = true;
    OffMode off_mode = OffMode::delay_line;
    double v_rail = 1.5;        // compensation voltage clamp, +-V
    double ramp_rate = 2e6;     // i_src / c_s, V/s of the correction ramp
    double t_zcd = 200e-12;     // zero-cross detector delay
    double mismatch = 0.0;      // relative current-source mismatch
    int reset_cycles = 3;       // no-conduction cycles before safety reset
    double tol_v = 1e-3;        // settled when |v_s| below this...
    double tol_t = 100e-12;     // ...or residual delay below this
    double off_margin = 80e-12; // open this much before the crossing
    double off_delay_line = -1.0; // < 0: period - t_cmp_off - off_margin
};

struct EdgeSample {
    double v_s;    // error voltage at the switching instant
    double slope;  // local waveform slope there, V/s
    int cycle;
};

// One compensator (the rectifier carries four: ON/OFF per branch).
struct EdgeState {
    double v_c = 0.0;
    int no_sample = 0;
    bool sampled = false;      // an error sample was fed this cycle
    double trig_slope = 0.0;   // waveform slope at the last trigger crossing
    EdgeSample last{0.0, 0.0, -1};
    bool have_last = false;
};

// Sample-and-accumulate charge transfer. Polarity detection picks the ramp
// direction; both capacitors ramp until the sampling cap crosses zero; the
// ZCD fires t_zcd late, so the transfer overshoots by eps = ramp_rate*t_zcd
// in the ramp direction:  v_c' = clamp(v_c + (1+mismatch)*(v_s + sgn(v_s)*eps)).
void accumulate(EdgeState& e, const CompParams& c, double v_s);

// Per-cycle no-conduction bookkeeping. Returns true when the reset fired
// (the caller must also cancel any switch event scheduled under the stale
// v_c, or it poisons the recovery).
bool safety_check(EdgeState& e, const CompParams& c, bool conducted);

bool sample_settled(const CompParams& c, double v_s, double slope);

struct TrajPoint {
    int cycle;      // 1-based, counted from compensation enable
    int edge;       // 0 on/P, 1 off/P, 2 on/N, 3 off/N
    double v_s;
    double v_c;
    double residual; // |v_s / slope|
};

struct ConvergeResult {
    std::array<double, 4> v_c_star{}; // on/P, off/P, on/N, off/N
    int cycles_to_settle = -1;        // first cycle of the settled run, 1-based
    double residual_delay = 0.0;      // worst residual across the settled run
    bool diverged = false;
    std::vector<TrajPoint> trajectory;
};

// Closed-loop settling protocol: bring the rectifier to periodic steady
// state with accumulation frozen (guards active, v_c = 0), inject the
// initial per-edge offsets, enable accumulation, and count cycles until
// three consecutive cycles satisfy the settle tolerance. Divergence is
// declared after max_cycles and the full trajectory is returned for
// diagnosis.
ConvergeResult converge(const RectifierConfig& cfg, const CompParams& comp,
                        std::array<double, 2> v_c_init,
                        int warm_cycles = 16, int max_cycles = 64);

} // namespace wptsim
