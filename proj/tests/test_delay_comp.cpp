#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "wptsim/delay_comp.hpp"
#include "wptsim/rectifier_sim.hpp"

using namespace wptsim;

TEST_CASE("accumulate transfers the sampled error exactly when the detector is ideal") {
    CompParams c;
    c.t_zcd = 0.0;
    EdgeState e;
    e.v_c = 0.2;
    accumulate(e, c, -0.013);
    CHECK(e.v_c == doctest::Approx(0.187).epsilon(1e-12));
    accumulate(e, c, 0.0);
    CHECK(e.v_c == doctest::Approx(0.187).epsilon(1e-12));
}

TEST_CASE("accumulate overshoots by the detector delay in the ramp direction") {
    CompParams c;
    c.ramp_rate = 2e6;
    c.t_zcd = 0.5e-9; // 1 mV equivalent
    EdgeState e;
    e.v_c = 10e-3;
    accumulate(e, c, -3e-3);
    CHECK(e.v_c == doctest::Approx(6e-3).epsilon(1e-9));
    e.v_c = 10e-3;
    accumulate(e, c, 3e-3);
    CHECK(e.v_c == doctest::Approx(14e-3).epsilon(1e-9));
}

TEST_CASE("accumulate clamps at the rails") {
    CompParams c;
    c.t_zcd = 0.0;
    EdgeState e;
    e.v_c = 1.4;
    accumulate(e, c, 0.5);
    CHECK(e.v_c == 1.5);
    e.v_c = -1.4;
    accumulate(e, c, -0.5);
    CHECK(e.v_c == -1.5);
}

TEST_CASE("mismatch scales the transferred charge") {
    CompParams c;
    c.t_zcd = 0.0;
    c.mismatch = 0.07;
    EdgeState e;
    accumulate(e, c, 10e-3);
    CHECK(e.v_c == doctest::Approx(10.7e-3).epsilon(1e-9));
}

TEST_CASE("safety counter resets the accumulator at the configured threshold") {
    CompParams c;
    c.reset_cycles = 4;
    EdgeState e;
    e.v_c = 0.42;

    SUBCASE("conduction just before the threshold clears the count") {
        for (int i = 0; i < 3; ++i) CHECK(!safety_check(e, c, false));
        CHECK(!safety_check(e, c, true));
        CHECK(e.v_c == 0.42);
        CHECK(e.no_sample == 0);
    }
    SUBCASE("four missed cycles zero the correction") {
        for (int i = 0; i < 3; ++i) CHECK(!safety_check(e, c, false));
        CHECK(safety_check(e, c, false));
        CHECK(e.v_c == 0.0);
        CHECK(e.no_sample == 0);
    }
}

TEST_CASE("settle predicate accepts either a small error or a small delay") {
    CompParams c;
    CHECK(sample_settled(c, 0.5e-3, 0.0));
    CHECK(sample_settled(c, 5e-3, 1e8));      // 50 ps residual
    CHECK(!sample_settled(c, 5e-3, 1e7));     // 500 ps residual
    CHECK(!sample_settled(c, 5e-3, 0.0));     // no slope, large error
}

TEST_CASE("worst-case protocol corner settles within eight cycles") {
    RectifierConfig cfg;
    cfg.r_load = 904.0;
    cfg.t_cmp_on = 2e-9;
    cfg.t_cmp_off = 2e-9;
    CompParams comp;
    ConvergeResult r = converge(cfg, comp, {-1.5, -1.5}, 16, 40);
    CHECK(!r.diverged);
    CHECK(r.cycles_to_settle == 8);
    CHECK(r.residual_delay < 100e-12);
}

TEST_CASE("a sample of protocol corners stays within the budget") {
    struct Corner {
        double r, tc, on0, off0;
    };
    const Corner corners[] = {
        {120.0, 2e-9, 1.5, 1.5},   {120.0, 0.5e-9, -1.5, 1.5},
        {1000.0, 2e-9, -1.5, -1.5}, {700.0, 1e-9, 1.5, -1.5},
        {316.0, 1e-9, 0.0, 0.0},
    };
    for (const Corner& c : corners) {
        RectifierConfig cfg;
        cfg.r_load = c.r;
        cfg.t_cmp_on = c.tc;
        cfg.t_cmp_off = c.tc;
        CompParams comp;
        ConvergeResult r = converge(cfg, comp, {c.on0, c.off0}, 16, 40);
        CAPTURE(c.r);
        CAPTURE(c.tc);
        CHECK(!r.diverged);
        CHECK(r.cycles_to_settle <= 8);
    }
}

TEST_CASE("zero comparator delay from zero offsets needs one cycle") {
    RectifierConfig cfg;
    cfg.t_cmp_on = 0.0;
    cfg.t_cmp_off = 0.0;
    CompParams comp;
    ConvergeResult r = converge(cfg, comp, {0.0, 0.0}, 16, 40);
    CHECK(r.cycles_to_settle == 1);
}

TEST_CASE("converged corrections sit at the delay-cancelling fixed points") {
    RectifierConfig cfg;
    CompParams comp;
    Rectifier s(cfg, comp);
    s.run_cycles(88);
    CHECK(s.edge(0).v_c == doctest::Approx(0.5253).epsilon(5e-3));
    CHECK(s.edge(2).v_c == doctest::Approx(0.5253).epsilon(5e-3));
    CHECK(s.edge(1).v_c == doctest::Approx(0.0386).epsilon(2e-2));
    CHECK(s.edge(3).v_c == doctest::Approx(0.0386).epsilon(2e-2));

    // ON correction tracks slope * t_cmp_on
    double slope = s.edge(0).last.slope;
    CHECK(s.edge(0).v_c == doctest::Approx(slope * cfg.t_cmp_on).epsilon(0.12));
}

TEST_CASE("line-side OFF correction does not depend on the comparator delay") {
    double vc[2];
    int i = 0;
    for (double tco : {0.5e-9, 2e-9}) {
        RectifierConfig cfg;
        cfg.t_cmp_off = tco;
        CompParams comp;
        Rectifier s(cfg, comp);
        s.run_cycles(88);
        vc[i++] = s.edge(1).v_c;
    }
    CHECK(vc[0] == doctest::Approx(0.0386).epsilon(2e-2));
    CHECK(vc[1] == doctest::Approx(vc[0]).epsilon(1e-2));
}

TEST_CASE("line-side OFF sensing sees a much faster edge than the switch voltage") {
    RectifierConfig cfg;
    CompParams line;
    Rectifier s1(cfg, line);
    s1.run_cycles(88);
    double slope_line = std::abs(s1.edge(1).last.slope);

    CompParams raw;
    raw.off_mode = OffMode::raw;
    Rectifier s2(cfg, raw);
    s2.run_cycles(80);
    size_t n0 = s2.per_cycle().size();
    s2.run_cycles(8);
    double vcr = 0.0, pce = 0.0;
    for (size_t i = n0; i < s2.per_cycle().size(); ++i) {
        vcr += s2.per_cycle()[i].vcr;
        pce += s2.per_cycle()[i].pce;
    }
    double slope_raw = std::abs(s2.edge(1).last.slope);

    CHECK(slope_line == doctest::Approx(0.4838e9).epsilon(2e-2));
    CHECK(slope_raw == doctest::Approx(0.0458e9).epsilon(5e-2));
    CHECK(slope_line / slope_raw > 5.0);
    CHECK(slope_raw < 0.1 * cfg.v_ac_amp * cfg.omega());

    // raw sensing still compensates, with a small penalty
    CHECK(vcr / 8.0 == doctest::Approx(0.9395).epsilon(1e-3));
    CHECK(pce / 8.0 == doctest::Approx(0.8981).epsilon(1e-3));
}

TEST_CASE("load steps recompensate within the same cycle") {
    struct Step {
        double r0, r1, worst_ps;
    };
    const Step steps[] = {
        {700.0, 120.0, 22.8},
        {1000.0, 120.0, 27.9},
        {120.0, 1000.0, 9.7},
        {700.0, 1000.0, 1.7},
    };
    for (const Step& st : steps) {
        RectifierConfig cfg;
        cfg.r_load = st.r0;
        CompParams comp;
        Rectifier s(cfg, comp);
        s.run_cycles(80);
        size_t n0 = s.per_cycle().size();
        std::vector<Disturbance> d{{s.t(), Disturbance::Field::r_load, st.r1}};
        s.run_cycles(12, d);
        int unsettled = 0;
        double worst = 0.0;
        for (size_t i = n0; i < s.per_cycle().size(); ++i) {
            if (!s.per_cycle()[i].settled) ++unsettled;
            worst = std::max(worst, s.per_cycle()[i].residual);
        }
        CAPTURE(st.r0);
        CAPTURE(st.r1);
        CHECK(unsettled == 0);
        CHECK(worst * 1e12 == doctest::Approx(st.worst_ps).epsilon(0.15));
        CHECK(worst < 100e-12);
    }
}

TEST_CASE("enveloped amplitude steps stay compensated throughout") {
    for (double f : {1.2, 0.8}) {
        RectifierConfig cfg;
        CompParams comp;
        Rectifier s(cfg, comp);
        s.run_cycles(80);
        size_t n0 = s.per_cycle().size();
        std::vector<Disturbance> d{{s.t(), Disturbance::Field::v_ac_amp, cfg.v_ac_amp * f}};
        s.run_cycles(60, d);
        int unsettled = 0;
        double worst = 0.0;
        for (size_t i = n0; i < s.per_cycle().size(); ++i) {
            if (!s.per_cycle()[i].settled) ++unsettled;
            worst = std::max(worst, s.per_cycle()[i].residual);
        }
        CAPTURE(f);
        CHECK(unsettled == 0);
        CHECK(worst < 30e-12);
    }
}

TEST_CASE("an instantaneous amplitude step re-settles within the protocol budget") {
    RectifierConfig cfg;
    cfg.v_ac_env_tau = 0.0;
    CompParams comp;
    Rectifier s(cfg, comp);
    s.run_cycles(80);
    size_t n0 = s.per_cycle().size();
    std::vector<Disturbance> d{{s.t(), Disturbance::Field::v_ac_amp, cfg.v_ac_amp * 1.2}};
    s.run_cycles(12, d);
    int last_unsettled = -1;
    for (size_t i = n0; i < s.per_cycle().size(); ++i)
        if (!s.per_cycle()[i].settled) last_unsettled = static_cast<int>(i - n0);
    CHECK(last_unsettled < 8);
}

TEST_CASE("gross charge-transfer mismatch is reported as divergence") {
    RectifierConfig cfg;
    CompParams comp;
    comp.mismatch = 3.0;
    ConvergeResult r = converge(cfg, comp, {0.3, 0.3}, 16, 40);
    CHECK(r.diverged);
    CHECK(r.cycles_to_settle == -1);
    CHECK(!r.trajectory.empty());
}

TEST_CASE("converge returns a well-formed trajectory") {
    RectifierConfig cfg;
    CompParams comp;
    ConvergeResult r = converge(cfg, comp, {-1.5, 1.5}, 16, 40);
    REQUIRE(!r.trajectory.empty());
    CHECK(!r.diverged);
    int prev_cycle = 0;
    for (const TrajPoint& p : r.trajectory) {
        CHECK(p.cycle >= prev_cycle);
        CHECK(p.cycle >= 1);
        CHECK(p.edge >= 0);
        CHECK(p.edge <= 3);
        CHECK(p.v_c <= 1.5);
        CHECK(p.v_c >= -1.5);
        CHECK(p.residual >= 0.0);
        prev_cycle = p.cycle;
    }
    // every edge eventually reports
    bool seen[4] = {false, false, false, false};
    for (const TrajPoint& p : r.trajectory) seen[p.edge] = true;
    for (bool s : seen) CHECK(s);
}
