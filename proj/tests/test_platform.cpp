#include <random>

#include "doctest.h"
#include "pestdet/error.hpp"
#include "pestdet/platform.hpp"

using namespace pestdet;

TEST_CASE("builtin platforms") {
    const PlatformModel g9 = builtin_platform("gap9");
    const PlatformModel g8 = builtin_platform("gap8");
    REQUIRE(g9.find_engine(EngineKind::ConvAccelerator) != nullptr);
    CHECK(g9.find_engine(EngineKind::ConvAccelerator)->peak_mac_per_cycle == 150.0);
    CHECK(g8.find_engine(EngineKind::ConvAccelerator) == nullptr);
    CHECK(g8.find_engine(EngineKind::WorkerCores) != nullptr);
    CHECK(g9.sleep_power_uw == 43.0);
    CHECK_THROWS_AS(builtin_platform("gap10"), Error);

    for (const auto* p : {&g9, &g8}) {
        CHECK(p->tiers.size() == 4);
        for (size_t i = 1; i < p->tiers.size(); ++i)
            CHECK(p->tiers[i].capacity > p->tiers[i - 1].capacity);
    }
    for (const auto& t : g9.tiers) {
        CHECK(t.capacity >= g8.tier(t.name).capacity);
        CHECK(t.row_overhead <= g8.tier(t.name).row_overhead);
    }
    CHECK(g9.tier(kTierL2).capacity == 1572864);
    CHECK(g9.tier_index(kTierExtRam) == 2);
    CHECK_THROWS_AS(g9.tier("L3"), Error);
}

TEST_CASE("shipped platform files equal the builtins") {
    for (const std::string name : {"gap9", "gap8"}) {
        const PlatformModel file =
            load_platform(std::string(PESTDET_DATA_DIR "/platforms/") + name + ".json");
        CHECK(file == builtin_platform(name));
        CHECK(platform_from_json(platform_to_json(file)) == file);
        CHECK(resolve_platform(name, "") == file);
        CHECK(resolve_platform(name, "/nonexistent:" PESTDET_DATA_DIR "/platforms") == file);
    }
    CHECK_THROWS_AS(resolve_platform("gap7", PESTDET_DATA_DIR "/platforms"), Error);
}

TEST_CASE("validation") {
    PlatformModel p = builtin_platform("gap9");
    p.tiers[1].read_bandwidth = 0;
    CHECK_THROWS_AS(p.validate(), Error);
    p = builtin_platform("gap9");
    p.tiers.erase(p.tiers.begin() + 2);
    CHECK_THROWS_AS(p.validate(), Error);
    p = builtin_platform("gap9");
    p.clock_hz = -1;
    CHECK_THROWS_AS(p.validate(), Error);
}

TEST_CASE("transfer cycles") {
    PlatformModel p = builtin_platform("gap8");
    CHECK(transfer_cycles(p, kTierExtRam, kTierL2, 1000, 1) == doctest::Approx(1046.0));
    CHECK(transfer_cycles(p, kTierExtRam, kTierL2, 1000, 100) == doctest::Approx(5600.0));
    CHECK(transfer_cycles(p, kTierL2, kTierExtRam, 1000, 100) == doctest::Approx(5600.0));
    CHECK(transfer_cycles(p, kTierL1, kTierL2, 800, 1) == doctest::Approx(1000.0));
    CHECK_THROWS_AS(transfer_cycles(p, kTierL2, kTierL1, 0, 1), Error);
    CHECK_THROWS_AS(transfer_cycles(p, kTierL2, kTierL1, 10, 3), Error);

    p.tiers[2].row_overhead = 0;
    CHECK(transfer_cycles(p, kTierExtRam, kTierL2, 1000, 1) == doctest::Approx(1000.0));
    CHECK(transfer_cycles(p, kTierExtRam, kTierL2, 1000, 100) ==
          doctest::Approx(transfer_cycles(p, kTierExtRam, kTierL2, 1000, 1)));

    const PlatformModel g9 = builtin_platform("gap9");
    std::mt19937_64 rng(3);
    for (int t = 0; t < 2000; ++t) {
        const uint64_t rows = 1 + rng() % 64;
        const uint64_t a = rows * (1 + rng() % 500), b = rows * (1 + rng() % 500);
        for (const auto& from : {kTierFlash, kTierExtRam, kTierL2}) {
            const double ta = transfer_cycles(g9, from, kTierL1, a, rows);
            const double tb = transfer_cycles(g9, from, kTierL1, b, rows);
            const double tab = transfer_cycles(g9, from, kTierL1, a + b, rows);
            CHECK(tab == doctest::Approx(ta + tb - rows * g9.tier(from).row_overhead));
            if (a < b)
                CHECK(ta < tb);
            CHECK(transfer_cycles(g9, from, kTierL1, a, 1) <= ta);
            CHECK(ta <= transfer_cycles(builtin_platform("gap8"), from, kTierL1, a, rows));
        }
    }
}
