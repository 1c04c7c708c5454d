#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "doctest.h"
#include "pestdet/error.hpp"
#include "pestdet/power.hpp"

using namespace pestdet;

namespace {

Scenario shipped(const std::string& name) {
    return load_scenario(std::string(PESTDET_DATA_DIR "/scenarios/") + name + ".json");
}

double daily(Scenario s, double period, PayloadPolicy policy) {
    s.duty.wake_period_s = period;
    s.duty.payload_policy = policy;
    return daily_energy(s.phase, s.duty, s.battery).daily_j;
}

void near(double got, double want, double rel) {
    CHECK(std::fabs(got - want) <= rel * want);
}

} // namespace

TEST_CASE("single wake") {
    PhaseEnergy pe;
    pe.compute_mj = 4.85;
    CHECK(wake_cycle_energy(pe, 17) == doctest::Approx(21.85));
    CHECK(wake_cycle_energy(PhaseEnergy{0, 0, 0, 0}, 0) == 0.0);
    CHECK(wake_cycle_energy(PhaseEnergy{}, 12700) == doctest::Approx(12700.0));
    CHECK(wake_cycle_energy(PhaseEnergy{1, 2, 0.5, 3}, 10) == doctest::Approx(11.0));
    CHECK_THROWS_AS(wake_cycle_energy(PhaseEnergy{-1, 0, 1, 0}, 0), Error);
    CHECK(0.033 * 0.147 * 1e3 == doctest::Approx(4.85).epsilon(0.001));
}

TEST_CASE("daily energy, GAP9 rows") {
    const Scenario vj = shipped("gap9_viola_jones");
    const Scenario cnn = shipped("gap9_mbnv3_ssd");
    const auto C = PayloadPolicy::CountersEveryWake;
    const auto I = PayloadPolicy::ImagePerDetection;
    near(daily(vj, 30, C), 66.9, 0.03);
    near(daily(cnn, 30, C), 74.4, 0.01);
    near(daily(vj, 900, C), 5.8, 0.01);
    near(daily(cnn, 900, C), 5.9, 0.04);
    near(daily(vj, 30, I), 437.5, 0.01);
    near(daily(cnn, 30, I), 445.0, 0.01);
    near(daily(vj, 900, I), 423.3, 0.01);
    near(daily(cnn, 900, I), 423.4, 0.01);

    const EnergyLedger l = daily_energy(vj.phase, vj.duty, vj.battery);
    CHECK(l.daily_j == doctest::Approx(l.total_j()));
    CHECK(l.compute_j == doctest::Approx(96 * 4.61e-3));
    CHECK(l.radio_j == doctest::Approx(96 * 17e-3));
    CHECK(l.sleep_j == doctest::Approx(43e-6 * (86400 - 96 * vj.duty.active_s)));
    CHECK(l.lifetime_days == doctest::Approx(13320.0 / l.daily_j));
}

TEST_CASE("daily energy, GAP8 rows") {
    const Scenario vj = shipped("gap8_viola_jones");
    const auto C = PayloadPolicy::CountersEveryWake;
    const auto I = PayloadPolicy::ImagePerDetection;
    near(daily(vj, 30, C), 143.1, 0.01);
    near(daily(vj, 900, C), 7.7, 0.01);
    near(daily(vj, 30, I), 513.2, 0.01);
    near(daily(vj, 900, I), 424.8, 0.01);
}

TEST_CASE("lifetime") {
    const Battery b;
    CHECK(b.joules() == doctest::Approx(13320.0));
    CHECK(lifetime(b, 66.9).days == 199);
    CHECK(lifetime(b, 5.8).days == 2296);
    CHECK(lifetime(b, 5.9).days == 2257);
    CHECK(lifetime(b, 5.8).fractional_days == doctest::Approx(13320.0 / 5.8));
    CHECK(lifetime(b, 13320.0).days == 1);
    CHECK_THROWS_AS(lifetime(b, 0.0), Error);
    CHECK_THROWS_AS(lifetime(Battery{-1, 3.7, 1}, 1.0), Error);
}

TEST_CASE("simulation matches the closed form") {
    for (const std::string name : {"gap9_viola_jones", "gap9_mbnv3_ssd", "gap8_viola_jones"})
        for (const double period : {30.0, 900.0, 3600.0})
            for (const auto policy :
                 {PayloadPolicy::CountersEveryWake, PayloadPolicy::ImagePerDetection}) {
                Scenario s = shipped(name);
                s.duty.wake_period_s = period;
                s.duty.payload_policy = policy;
                s.battery.capacity_mah = 10000;
                const SimResult r =
                    simulate(s.phase, s.duty, s.battery, uniform_trace(33, 30), 30);
                CHECK_FALSE(r.exhausted);
                CHECK(r.simulated_s == doctest::Approx(30 * 86400.0));
                const double closed = daily_energy(s.phase, s.duty, s.battery).daily_j;
                near(r.ledger.daily_j, closed, 1e-3);
                CHECK(r.timeline.size() == size_t(std::llround(30 * 86400.0 / period)));
                uint64_t det = 0;
                for (const auto& w : r.timeline)
                    det += w.detections;
                CHECK(det == 990);
            }
}

TEST_CASE("wake boundaries") {
    Scenario s = shipped("gap9_viola_jones");
    s.duty.payload_policy = PayloadPolicy::ImagePerDetection;
    const double p = s.duty.wake_period_s;
    const SimResult r =
        simulate(s.phase, s.duty, s.battery, {0.0, p, p, std::nextafter(p, 1e9), 2 * p}, 1);
    REQUIRE(r.timeline.size() >= 3);
    CHECK(r.timeline[0].detections == 3);
    CHECK(r.timeline[1].detections == 2);
    CHECK(r.timeline[2].detections == 0);
    CHECK(r.timeline[0].payload_bytes == 3 * 12700);
    CHECK(r.timeline[0].time_s == p);

    const SimResult empty = simulate(s.phase, s.duty, s.battery, {}, 1);
    CHECK(empty.timeline.size() == 96);
    CHECK(empty.ledger.radio_j == 0.0);
    for (const auto& w : empty.timeline)
        CHECK(w.payload_bytes == 0);

    CHECK_THROWS_AS(simulate(s.phase, s.duty, s.battery, {5.0, 4.0}, 1), Error);
    try {
        simulate(s.phase, s.duty, s.battery, {1.0, 5.0, 4.0}, 1);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::UnsortedTrace);
    }
    // arrivals after the horizon are never counted
    const SimResult late = simulate(s.phase, s.duty, s.battery, {86400.0 + 1}, 1);
    CHECK(late.ledger.radio_j == 0.0);
}

TEST_CASE("battery runs out") {
    Scenario s = shipped("gap9_mbnv3_ssd");
    s.duty.payload_policy = PayloadPolicy::ImagePerDetection;
    const SimResult r = simulate(s.phase, s.duty, s.battery, uniform_trace(33, 60), 60);
    CHECK(r.exhausted);
    const double day = r.exhausted_at_s / 86400;
    const double closed = lifetime(s.battery, daily_energy(s.phase, s.duty).daily_j).fractional_days;
    CHECK(std::fabs(day - closed) < 0.1);
    CHECK(day > 31.0);
    CHECK(day < 32.0);
    CHECK(r.timeline.back().battery_j == 0.0);
    CHECK(r.ledger.total_j() == doctest::Approx(s.battery.joules()).epsilon(0.002));
    for (size_t i = 1; i < r.timeline.size(); ++i)
        CHECK(r.timeline[i].battery_j <= r.timeline[i - 1].battery_j);
}

TEST_CASE("monotone in the knobs") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 500; ++t) {
        PhaseEnergy pe{u(rng) * 2, u(rng) * 40, 0.5 + u(rng), u(rng) * 5};
        DutyCycleConfig c;
        c.wake_period_s = 10 + u(rng) * 3600;
        c.active_s = u(rng) * 5;
        c.sleep_power_uw = u(rng) * 100;
        c.payload_policy = t % 2 ? PayloadPolicy::ImagePerDetection : PayloadPolicy::CountersEveryWake;
        const double base = daily_energy(pe, c).daily_j;

        PhaseEnergy more = pe;
        more.compute_mj += 1;
        CHECK(daily_energy(more, c).daily_j > base);
        DutyCycleConfig slower = c;
        slower.wake_period_s *= 2;
        CHECK(daily_energy(pe, slower).daily_j <= base);
        DutyCycleConfig leaky = c;
        leaky.sleep_power_uw += 10;
        CHECK(daily_energy(pe, leaky).daily_j > base);
        DutyCycleConfig busy = c;
        busy.detections_per_day += 5;
        CHECK(daily_energy(pe, busy).daily_j >= base);

        Battery b;
        b.capacity_mah = 100 + u(rng) * 5000;
        Battery bigger = b;
        bigger.capacity_mah *= 1.5;
        CHECK(lifetime(bigger, base).fractional_days > lifetime(b, base).fractional_days);
    }
}

TEST_CASE("scenario files") {
    for (const std::string name : {"gap9_viola_jones", "gap9_mbnv3_ssd", "gap8_viola_jones"}) {
        const Scenario s = shipped(name);
        CHECK(s.name == name);
        const std::string text = scenario_to_json(s);
        CHECK(scenario_to_json(scenario_from_json(text)) == text);
    }
    CHECK(shipped("gap9_viola_jones").duty.sleep_power_uw == 43.0);
    CHECK(shipped("gap9_mbnv3_ssd").phase.wake_overhead_mj == 2.7);
    CHECK_THROWS_AS(scenario_from_json("{\"format\":\"pestdet-scenario\",\"version\":1,"
                                       "\"duty_cycle\":{\"wake_period_s\":-5}}"),
                    Error);
    CHECK_THROWS_AS(scenario_from_json("[1,2]"), Error);
}

TEST_CASE("trace files and uniform traces") {
    const auto v = uniform_trace(4, 2);
    REQUIRE(v.size() == 8);
    CHECK(v[0] == doctest::Approx(10800.0));
    CHECK(v[7] == doctest::Approx(162000.0));
    CHECK(uniform_trace(0, 10).empty());

    const std::string path = "pestdet_trace_test.txt";
    {
        std::ofstream f(path);
        f << "# arrivals\n1.5\n\n  30\n900\n";
    }
    CHECK(read_trace(path) == std::vector<double>{1.5, 30, 900});
    {
        std::ofstream f(path);
        f << "1.5 2\n";
    }
    CHECK_THROWS_AS(read_trace(path), Error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_trace("/nonexistent/trace.txt"), Error);
}
