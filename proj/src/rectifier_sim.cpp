#include "wptsim/rectifier_sim.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wptsim {

namespace {

constexpr double kVCtrlFloor = 0.3; // comparator supply UVLO clamp

} // namespace

void validate(const RectifierConfig& cfg) {
    std::vector<std::string> errs;
    auto need = [&](bool ok, const char* msg) {
        if (!ok) errs.emplace_back(msg);
    };
    need(cfg.f0 > 0.0, "f0 must be positive");
    need(cfg.v_ac_amp > 0.0, "v_ac_amp must be positive");
    need(cfg.r_src_ac > 0.0, "r_src_ac must be positive");
    need(cfg.r_on >= 0.0, "r_on must be non-negative");
    need(cfg.v_diode >= 0.0, "v_diode must be non-negative");
    need(cfg.t_cmp_on >= 0.0, "t_cmp_on must be non-negative");
    need(cfg.t_cmp_off >= 0.0, "t_cmp_off must be non-negative");
    need(cfg.c_filter > 0.0, "c_filter must be positive");
    need(cfg.r_load > 0.0, "r_load must be positive");
    need(cfg.p_ctrl >= 0.0, "p_ctrl must be non-negative");
    need(cfg.dt_max >= 0.0, "dt_max must be non-negative");
    need(cfg.v_ac_env_tau >= 0.0, "v_ac_env_tau must be non-negative");
    if (!errs.empty()) {
        std::string all = errs.front();
        for (size_t i = 1; i < errs.size(); ++i) all += "; " + errs[i];
        throw ConfigError(all);
    }
}

double v_steady_estimate(const RectifierConfig& cfg) {
    const double pi = std::numbers::pi;
    double a = cfg.v_ac_amp;
    double rt = cfg.r_src_ac + cfg.r_on;
    auto imbalance = [&](double v) {
        double th = std::asin(std::min(v / a, 1.0));
        double i_in = (2.0 * a * std::cos(th) - v * (pi - 2.0 * th)) / (pi * rt);
        return i_in - v / cfg.r_load - cfg.p_ctrl / std::max(v, kVCtrlFloor);
    };
    double lo = -1.0, hi = 0.0;
    for (int j = 96; j >= 1; --j) {
        double v = a * j / 100.0;
        if (imbalance(v) > 0.0) {
            lo = v;
            hi = a * (j + 1) / 100.0;
            break;
        }
    }
    if (lo < 0.0) return 1e-3;
    for (int it = 0; it < 60; ++it) {
        double mid = 0.5 * (lo + hi);
        (imbalance(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Rectifier::Rectifier(const RectifierConfig& cfg, const CompParams& comp,
                     std::array<double, 2> v_c_init,
                     std::optional<double> warm_v_out)
    : cfg_(cfg), comp_(comp) {
    validate(cfg_);
    bp_.e_on.v_c = v_c_init[0];
    bp_.e_off.v_c = v_c_init[1];
    bn_.e_on.v_c = v_c_init[0];
    bn_.e_off.v_c = v_c_init[1];
    v_out_ = warm_v_out ? *warm_v_out : v_steady_estimate(cfg_);
    v_start_ = v_out_;
    a_ = a_target_ = cfg_.v_ac_amp;
    r_load_ = cfg_.r_load;
    off_line_ = comp_.off_delay_line >= 0.0
                    ? comp_.off_delay_line
                    : cfg_.period() - cfg_.t_cmp_off - comp_.off_margin;
}

EdgeState& Rectifier::edge(int i) {
    switch (i) {
    case 0: return bp_.e_on;
    case 1: return bp_.e_off;
    case 2: return bn_.e_on;
    case 3: return bn_.e_off;
    default: throw std::out_of_range("edge index");
    }
}

const EdgeState& Rectifier::edge(int i) const {
    return const_cast<Rectifier*>(this)->edge(i);
}

double Rectifier::branch_i(const Branch& b, double t, double vo) const {
    double vs = b.sign * src(t);
    if (b.on) return (vs - vo) / (cfg_.r_src_ac + cfg_.r_on);
    double u0 = vs - vo;
    if (u0 > cfg_.v_diode) {
        double i = (u0 - cfg_.v_diode) / (cfg_.r_src_ac + cfg_.r_on);
        if (i > 0.0) return i;
    }
    return 0.0;
}

double Rectifier::u_of(const Branch& b, double t, double vo) const {
    double vs = b.sign * src(t);
    return vs - branch_i(b, t, vo) * cfg_.r_src_ac - vo;
}

void Rectifier::open_switch(Branch& b, double t, double vo, bool feed) {
    double dt = cfg_.dt();
    double u = 0.0, slope = 0.0;
    if (comp_.off_mode == OffMode::raw) {
        u = u_of(b, t, vo);
        double up = u_of(b, t - dt, vo);
        slope = (u - up) / dt;
    }
    b.on = false;
    b.open_at.reset();
    if (comp_.off_mode != OffMode::raw) {
        u = u_of(b, t, vo);
        double vs1 = b.sign * src(t) - vo;
        double vs0 = b.sign * src(t - dt) - vo;
        slope = (vs1 - vs0) / dt;
    }
    if (feed) {
        EdgeSample s{u, slope, cycle_};
        cyc_samples_[b.sign > 0 ? 1 : 3] = s;
        b.e_off.last = s;
        b.e_off.have_last = true;
        b.e_off.sampled = true;
        if (comp_.enabled) accumulate(b.e_off, comp_, u);
    }
    b.i_pk_run = 0.0;
}

void Rectifier::close_switch(Branch& b, double t, double vo) {
    double dt = cfg_.dt();
    double u = u_of(b, t, vo);
    double up = u_of(b, t - dt, vo);
    double slope = (u - up) / dt;
    b.on = true;
    b.close_at.reset();
    EdgeSample s{u, slope, cycle_};
    cyc_samples_[b.sign > 0 ? 0 : 2] = s;
    b.e_on.last = s;
    b.e_on.have_last = true;
    b.e_on.sampled = true;
    if (comp_.enabled) accumulate(b.e_on, comp_, u);
}

void Rectifier::run_cycles(int n, const std::vector<Disturbance>& dist,
                           TraceRecord* trace) {
    std::vector<Disturbance> ds = dist;
    std::stable_sort(ds.begin(), ds.end(),
                     [](const Disturbance& x, const Disturbance& y) { return x.t < y.t; });
    size_t di = 0;

    const double dt = cfg_.dt();
    const int spc = cfg_.steps_per_cycle();

    struct Ev {
        double t;
        Branch* b;          // null for disturbances and the end marker
        int kind;           // 0 close, 1 open, 2 disturbance, 3 end
        const Disturbance* d;
    };
    std::vector<Ev> evs;

    for (int c = 0; c < n; ++c) {
        for (int k = 0; k < spc; ++k) {
            double t0 = t_;
            double t1 = t0 + dt;

            evs.clear();
            for (Branch* b : {&bp_, &bn_}) {
                if (b->close_at && *b->close_at <= t1)
                    evs.push_back({*b->close_at, b, 0, nullptr});
                if (b->open_at && *b->open_at <= t1)
                    evs.push_back({*b->open_at, b, 1, nullptr});
            }
            while (di < ds.size() && ds[di].t <= t1) {
                evs.push_back({ds[di].t, nullptr, 2, &ds[di]});
                ++di;
            }
            std::stable_sort(evs.begin(), evs.end(),
                             [](const Ev& x, const Ev& y) { return x.t < y.t; });
            evs.push_back({t1, nullptr, 3, nullptr});

            double seg = t0;
            double vo = v_out_;
            for (const Ev& ev : evs) {
                double h = ev.t - seg;
                if (h > 0.0) {
                    double ip = branch_i(bp_, seg, vo);
                    double im = branch_i(bn_, seg, vo);
                    double iac = ip - im;
                    double i_rect = ip + im;
                    double i_load = vo / r_load_;
                    double i_ctrl = cfg_.p_ctrl / std::max(vo, kVCtrlFloor);
                    q_rect_ += i_rect * h;
                    q_load_ += i_load * h;
                    q_ctrl_ += i_ctrl * h;
                    double vp = src(seg) - iac * cfg_.r_src_ac;
                    cyc_ein_ += vp * iac * h;
                    cyc_eout_ += vo * i_load * h;
                    cyc_q_ += i_rect * h;
                    cyc_vp_pk_ = std::max(cyc_vp_pk_, std::abs(vp));
                    if (bp_.on) {
                        if (ip >= 0.0) bp_.q_fwd += ip * h;
                        else bp_.q_rev += -ip * h;
                    }
                    if (bn_.on) {
                        if (im >= 0.0) bn_.q_fwd += im * h;
                        else bn_.q_rev += -im * h;
                    }
                    vo += (i_rect - i_load - i_ctrl) / cfg_.c_filter * h;
                    if (vo < 0.0) vo = 0.0;
                    cyc_vint_ += vo * h;
                    seg = ev.t;
                }
                if (ev.kind == 3) break;
                if (ev.kind == 2) {
                    if (ev.d->field == Disturbance::Field::r_load) {
                        r_load_ = ev.d->value;
                    } else {
                        a_target_ = ev.d->value;
                        if (cfg_.v_ac_env_tau <= 0.0) a_ = ev.d->value;
                    }
                    continue;
                }
                if (ev.kind == 0 && !ev.b->on) {
                    close_switch(*ev.b, ev.t, vo);
                } else if (ev.kind == 1 && ev.b->on) {
                    open_switch(*ev.b, ev.t, vo, true);
                } else if (ev.kind == 1) {
                    ev.b->open_at.reset();
                }
            }
            v_out_ = vo;
            t_ = t1;

            if (a_ != a_target_ && cfg_.v_ac_env_tau > 0.0) {
                double f = 1.0 - std::exp(-dt / cfg_.v_ac_env_tau);
                a_ += (a_target_ - a_) * f;
                if (std::abs(a_ - a_target_) < 1e-9) a_ = a_target_;
            }

            for (Branch* pb : {&bp_, &bn_}) {
                Branch& b = *pb;
                double u = u_of(b, t_, vo);
                if (b.have_prev_u && u != b.prev_u) {
                    double up = b.prev_u;
                    double l_on = -b.e_on.v_c;
                    if (!b.on && !b.close_at && up < l_on && l_on <= u) {
                        double fr = (l_on - up) / (u - up);
                        b.close_at = t_ - dt + fr * dt + cfg_.t_cmp_on;
                        b.e_on.trig_slope = (u - up) / dt;
                    }
                    double l_off = -b.e_off.v_c;
                    if (comp_.off_mode == OffMode::delay_line) {
                        if (!b.on && !b.open_at && up > l_off && l_off >= u) {
                            double fr = (up - l_off) / (up - u);
                            b.open_at = t_ - dt + fr * dt + off_line_ + cfg_.t_cmp_off;
                            b.e_off.trig_slope = (u - up) / dt;
                        }
                    } else {
                        if (b.on && !b.open_at && up > l_off && l_off >= u) {
                            double fr = (up - l_off) / (up - u);
                            b.open_at = t_ - dt + fr * dt + cfg_.t_cmp_off;
                            b.e_off.trig_slope = (u - up) / dt;
                        }
                    }
                }
                b.prev_u = u;
                b.have_prev_u = true;
                if (b.on) {
                    double i = branch_i(b, t_, vo);
                    b.i_pk_run = std::max(b.i_pk_run, i);
                    if (comp_.off_mode == OffMode::delay_line && !b.open_at &&
                        b.i_pk_run > 0.0 && i < 0.2 * b.i_pk_run) {
                        open_switch(b, t_, vo, false);
                    } else if (b.q_rev > 0.2 * b.q_fwd + 0.05 * b.q_prev) {
                        open_switch(b, t_, vo, false);
                    }
                }
            }

            if (trace) {
                double ip = branch_i(bp_, t_, vo);
                double im = branch_i(bn_, t_, vo);
                double iac = ip - im;
                trace->wave.push_back({t_, src(t_) - iac * cfg_.r_src_ac, vo,
                                       vo / r_load_, iac, bp_.on, bn_.on});
            }
        }
        end_cycle();
    }
}

void Rectifier::end_cycle() {
    double mean_v = cyc_vint_ / cfg_.period();
    bool settled = true;
    double residual = 0.0;
    for (int e = 0; e < 4; ++e) {
        if (!cyc_samples_[e]) {
            settled = false;
            continue;
        }
        double v_s = cyc_samples_[e]->v_s;
        double slope = cyc_samples_[e]->slope;
        double r = slope != 0.0 ? std::abs(v_s / slope)
                                : std::numeric_limits<double>::infinity();
        residual = std::max(residual, r);
        if (!sample_settled(comp_, v_s, slope)) settled = false;
    }
    PerCycle pc;
    pc.cycle = cycle_;
    pc.mean_v = mean_v;
    pc.vcr = cyc_vp_pk_ > 0.0 ? mean_v / cyc_vp_pk_ : 0.0;
    pc.pce = cyc_ein_ > 0.0 ? cyc_eout_ / cyc_ein_ : 0.0;
    pc.q_cond = cyc_q_;
    pc.settled = settled;
    pc.residual = residual;
    pc.samples = cyc_samples_;
    pc.v_c = {bp_.e_on.v_c, bp_.e_off.v_c, bn_.e_on.v_c, bn_.e_off.v_c};
    per_cycle_.push_back(std::move(pc));

    for (Branch* pb : {&bp_, &bn_}) {
        Branch& b = *pb;
        if (safety_check(b.e_on, comp_, b.e_on.sampled)) b.close_at.reset();
        if (safety_check(b.e_off, comp_, b.e_off.sampled)) b.open_at.reset();
        b.e_on.sampled = false;
        b.e_off.sampled = false;
        b.q_prev = b.q_fwd;
        b.q_fwd = 0.0;
        b.q_rev = 0.0;
    }

    cyc_vint_ = cyc_ein_ = cyc_eout_ = cyc_q_ = 0.0;
    cyc_vp_pk_ = 0.0;
    cyc_samples_ = {};
    ++cycle_;
}

double Rectifier::charge_residual() const {
    double lhs = q_rect_;
    double rhs = q_load_ + q_ctrl_ + cfg_.c_filter * (v_out_ - v_start_);
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-30);
}

TraceRecord simulate(const RectifierConfig& cfg, const CompParams* comp,
                     double duration, const std::vector<Disturbance>& dist) {
    CompParams cp;
    if (comp) {
        cp = *comp;
    } else {
        cp.enabled = false;
    }
    Rectifier sim(cfg, cp);
    TraceRecord trace;
    trace.f0 = cfg.f0;
    trace.dt = cfg.dt();
    int n = static_cast<int>(std::ceil(duration * cfg.f0 - 1e-9));
    if (n < 1) n = 1;
    sim.run_cycles(n, dist, &trace);
    trace.cycles = sim.per_cycle();
    return trace;
}

namespace {

std::pair<size_t, size_t> steady_window(const TraceRecord& trace) {
    const auto& cyc = trace.cycles;
    if (cyc.size() < 3)
        throw SolverError("trace too short for a steady-state measurement");
    size_t run = 1;
    for (size_t i = cyc.size() - 1; i > 0; --i) {
        double prev = cyc[i - 1].mean_v;
        double rel = std::abs(cyc[i].mean_v - prev) / std::max(std::abs(prev), 1e-12);
        if (rel < 1e-3) ++run;
        else break;
    }
    if (run < 3)
        throw SolverError("output did not reach steady state within the trace");
    size_t take = std::min<size_t>(run, 8);
    return {cyc.size() - take, cyc.size()};
}

} // namespace

double measure_vcr(const TraceRecord& trace) {
    auto [b, e] = steady_window(trace);
    double s = 0.0;
    for (size_t i = b; i < e; ++i) s += trace.cycles[i].vcr;
    return s / static_cast<double>(e - b);
}

double measure_pce(const TraceRecord& trace) {
    auto [b, e] = steady_window(trace);
    double s = 0.0;
    for (size_t i = b; i < e; ++i) s += trace.cycles[i].pce;
    return s / static_cast<double>(e - b);
}

double measure_equivalent_resistance(const TraceRecord& trace) {
    if (trace.f0 <= 0.0 || trace.dt <= 0.0 || trace.wave.empty())
        throw SolverError("equivalent-resistance measurement needs a waveform trace");
    int per = static_cast<int>(std::llround(1.0 / (trace.f0 * trace.dt)));
    if (per < 2) throw SolverError("trace step too coarse for a Fourier projection");
    size_t ncyc = trace.wave.size() / static_cast<size_t>(per);
    if (ncyc < 2)
        throw SolverError("equivalent-resistance measurement needs at least 2 traced cycles");
    ncyc = std::min<size_t>(ncyc, 32);
    size_t count = ncyc * static_cast<size_t>(per);
    size_t start = trace.wave.size() - count;
    double w = 2.0 * std::numbers::pi * trace.f0;
    std::complex<double> v1{0.0, 0.0}, i1{0.0, 0.0};
    for (size_t k = start; k < trace.wave.size(); ++k) {
        const WaveSample& s = trace.wave[k];
        std::complex<double> ph = std::exp(std::complex<double>(0.0, -w * s.t));
        v1 += s.v_port * ph;
        i1 += s.i_ac * ph;
    }
    double den = std::abs(i1);
    if (den <= 0.0) throw SolverError("no fundamental current in the trace");
    return std::abs(v1) / den;
}

std::vector<std::pair<double, double>>
delay_loss_curve(const RectifierConfig& cfg, const std::vector<double>& delays) {
    std::vector<std::pair<double, double>> out;
    out.reserve(delays.size());
    for (double d : delays) {
        RectifierConfig c = cfg;
        c.t_cmp_on = d;
        c.t_cmp_off = d;
        CompParams comp;
        comp.enabled = false;
        comp.off_mode = OffMode::raw;
        SteadyMetrics m = rectifier_steady(c, comp, 500, 16);
        out.emplace_back(d, m.pce);
    }
    return out;
}

SteadyMetrics rectifier_steady(const RectifierConfig& cfg, const CompParams& comp,
                               int warm_cycles, int meas_cycles) {
    Rectifier sim(cfg, comp);
    sim.run_cycles(warm_cycles);
    size_t n0 = sim.per_cycle().size();
    sim.run_cycles(meas_cycles);
    SteadyMetrics m{0.0, 0.0, 0.0};
    for (size_t i = n0; i < sim.per_cycle().size(); ++i) {
        m.vcr += sim.per_cycle()[i].vcr;
        m.pce += sim.per_cycle()[i].pce;
        m.mean_v += sim.per_cycle()[i].mean_v;
    }
    m.vcr /= meas_cycles;
    m.pce /= meas_cycles;
    m.mean_v /= meas_cycles;
    return m;
}

} // namespace wptsim
