#include <vector>

#include "doctest.h"
#include "support.hpp"

#include "cseg/schedule.hpp"

using namespace cseg;

namespace {

// Straight transcription of "halve once the best value is `patience` epochs
// stale", kept separate from the production counter.
std::vector<std::size_t> reference_halvings(const std::vector<double>& metrics, std::size_t patience, double threshold) {
    std::vector<std::size_t> out;
    double best = metrics.at(0);
    std::size_t anchor = 0;
    for (std::size_t e = 1; e < metrics.size(); ++e) {
        if (metrics[e] > best + threshold) {
            best = metrics[e];
            anchor = e;
        } else if (e - anchor >= patience) {
            out.push_back(e);
            anchor = e;
        }
    }
    return out;
}

std::vector<std::size_t> run_plateau(const std::vector<double>& metrics, std::size_t patience, double threshold) {
    LrSchedule s = LrSchedule::plateau(1.0, patience, threshold);
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < metrics.size(); ++e) {
        const double before = s.lr();
        if (s.step(e, metrics[e]) < before) out.push_back(e);
    }
    return out;
}

}  // namespace

TEST_SUITE("schedule") {

TEST_CASE("milestones halve exactly once each") {
    LrSchedule s = LrSchedule::milestone(1e-3, {50, 75});
    for (std::size_t e = 0; e < 50; ++e) CHECK(s.step(e, 0.0) == 1e-3);
    CHECK(s.step(50, 0.0) == 5e-4);
    for (std::size_t e = 51; e < 75; ++e) CHECK(s.step(e, 0.0) == 5e-4);
    CHECK(s.step(75, 0.0) == 2.5e-4);
    CHECK(s.step(76, 0.0) == 2.5e-4);
    CHECK(s.halvings() == 2);
}

TEST_CASE("plateau never halves on a strictly improving metric") {
    LrSchedule s = LrSchedule::plateau(5e-4, 20);
    for (std::size_t e = 0; e < 200; ++e) s.step(e, 0.001 * static_cast<double>(e));
    CHECK(s.halvings() == 0);
    CHECK(s.lr() == 5e-4);
}

TEST_CASE("plateau: constant from epoch 3 halves first at epoch 23") {
    std::vector<double> m{0.1, 0.2, 0.3};
    m.resize(70, 0.4);
    const auto h = run_plateau(m, 20, 1e-4);
    REQUIRE(h.size() == 3);
    CHECK(h[0] == 23);
    CHECK(h[1] == 43);
    CHECK(h[2] == 63);
}

TEST_CASE("plateau: gains below the threshold do not count") {
    std::vector<double> m(30);
    for (std::size_t e = 0; e < m.size(); ++e) m[e] = 0.5 + 0.5e-4 * static_cast<double>(e % 2);
    CHECK(run_plateau(m, 20, 1e-4) == std::vector<std::size_t>{20});
}

TEST_CASE("plateau matches the reference counter on random metric streams") {
    Rng rng(13);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> m(150);
        double level = 0.0;
        for (double& v : m) {
            if (rng.uniform() < 0.1) level += rng.uniform(0.0, 0.05);
            v = level - rng.uniform(0.0, 0.02) * (rng.uniform() < 0.5);
        }
        const std::size_t patience = 1 + rng.index(25);
        CHECK(run_plateau(m, patience, 1e-4) == reference_halvings(m, patience, 1e-4));
    }
}

TEST_CASE("schedules reject non-positive rates") {
    CHECK_THROWS(LrSchedule::milestone(0.0, {}));
    CHECK_THROWS(LrSchedule::plateau(-1.0, 20));
}

}  // TEST_SUITE
