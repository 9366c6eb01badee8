#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "cseg/losses.hpp"

using namespace cseg;

namespace {

// 1 x 2 x H x W probabilities with the given foreground channel.
Tensor probs_from_fg(std::size_t h, std::size_t w, const std::vector<double>& fg) {
    Tensor p({1, 2, h, w});
    for (std::size_t k = 0; k < fg.size(); ++k) {
        p[k] = 1.0 - fg[k];
        p[h * w + k] = fg[k];
    }
    return p;
}

double penalty_at(double t, const SizeBand& band) {
    Tape tape;
    return tape.value(size_penalty(tape, tape.constant(Tensor::scalar(t)), band)).item();
}

double penalty_slope(double t, const SizeBand& band) {
    Tape tape;
    Var x = tape.leaf(Tensor::scalar(t));
    tape.backward(size_penalty(tape, x, band));
    return tape.grad(x).item();
}

}  // namespace

TEST_SUITE("losses") {

TEST_CASE("cross_entropy examples") {
    Mask m(2, 2);
    m(0, 1) = 1;
    m(1, 1) = 1;
    {
        Tape t;
        CHECK(t.value(cross_entropy(t, t.constant(probs_from_fg(2, 2, {0, 1, 0, 1})), m)).item() == 0.0);
    }
    {
        Tape t;
        Rng rng(1);
        Mask r = testing::random_mask(5, 7, rng);
        const double v = t.value(cross_entropy(t, t.constant(probs_from_fg(5, 7, std::vector<double>(35, 0.5))), r)).item();
        CHECK(v == doctest::Approx(35 * std::log(2.0)).epsilon(1e-14));
    }
    {
        Tape t;
        Mask one(1, 1);
        one(0, 0) = 1;
        const double v = t.value(cross_entropy(t, t.constant(probs_from_fg(1, 1, {0.25})), one)).item();
        CHECK(v == doctest::Approx(-std::log(0.25)).epsilon(1e-14));
        CHECK(v == doctest::Approx(1.3863).epsilon(1e-4));
    }
    {
        Tape t;
        CHECK_THROWS_AS(cross_entropy(t, t.constant(probs_from_fg(2, 2, {0, 0, 0, 0})), Mask(2, 3)), ShapeError);
    }
}

TEST_CASE("cross_entropy is non-negative and saturates at the clamp") {
    Rng rng(3);
    for (int k = 0; k < 50; ++k) {
        std::vector<double> fg(16);
        for (double& v : fg) v = rng.uniform();
        Tape t;
        CHECK(t.value(cross_entropy(t, t.constant(probs_from_fg(4, 4, fg)), testing::random_mask(4, 4, rng))).item() >= 0.0);
    }
    Mask one(1, 1);
    one(0, 0) = 1;
    Tape t;
    const double v = t.value(cross_entropy(t, t.constant(probs_from_fg(1, 1, {0.0})), one)).item();
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(-std::log(ops::kLogClamp)));
}

TEST_CASE("foreground_cross_entropy ignores background pseudo-pixels") {
    Mask pseudo(1, 3);
    pseudo(0, 0) = 1;
    Tape t;
    const double v = t.value(foreground_cross_entropy(t, t.constant(probs_from_fg(1, 3, {0.5, 0.9, 0.1})), pseudo)).item();
    CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-14));

    Tape u;
    CHECK(u.value(foreground_cross_entropy(u, u.constant(probs_from_fg(1, 3, {0.5, 0.9, 0.1})), Mask(1, 3))).item() == 0.0);
}

TEST_CASE("foreground_cross_entropy equals the direct sum over foreground pixels") {
    Rng rng(12);
    for (int k = 0; k < 20; ++k) {
        std::vector<double> fg(36);
        for (double& v : fg) v = rng.uniform(0.01, 0.99);
        Mask pseudo = testing::random_mask(6, 6, rng);
        double direct = 0.0;
        for (std::size_t p = 0; p < 36; ++p)
            if (pseudo.labels[p]) direct -= std::log(fg[p]);
        Tape t;
        CHECK(t.value(foreground_cross_entropy(t, t.constant(probs_from_fg(6, 6, fg)), pseudo)).item() ==
              doctest::Approx(direct).epsilon(1e-13));
    }
}

TEST_CASE("size_mse examples") {
    auto mse = [](double estimate, double target) {
        Tape t;
        return t.value(size_mse(t, t.constant(Tensor({1, 1}, estimate)), target)).item();
    };
    CHECK(mse(100, 100) == 0.0);
    CHECK(mse(0, 10) == 100.0);
    CHECK(mse(-5, 5) == 100.0);

    Mask m(4, 4);
    for (int k = 0; k < 10; ++k) m.labels[k] = 1;
    Tape t;
    CHECK(t.value(size_mse(t, t.constant(Tensor({1, 1}, 0.0)), m)).item() == 100.0);
}

TEST_CASE("size band construction") {
    const SizeBand b = SizeBand::around(100, 0.1, SizeSource::regressor);
    CHECK(b.lower == doctest::Approx(90));
    CHECK(b.upper == doctest::Approx(110));
    CHECK(b.source == SizeSource::regressor);
    const SizeBand clamped = SizeBand::around(-20, 0.1, SizeSource::regressor);
    CHECK(clamped.lower == 0.0);
    CHECK(clamped.upper == 0.0);
    const SizeBand wide = SizeBand::around(40, 0.99, SizeSource::oracle);
    CHECK(wide.lower == doctest::Approx(0.4));
    CHECK(wide.upper == doctest::Approx(79.6));
    CHECK_THROWS(SizeBand::around(10, 1.0, SizeSource::oracle));

    Rng rng(5);
    for (int k = 0; k < 20; ++k) {
        const double r = rng.uniform(1, 500), g = rng.uniform(0.01, 0.9);
        const SizeBand s = SizeBand::around(r, g, SizeSource::oracle);
        CHECK(s.lower <= s.upper);
        CHECK(s.upper == doctest::Approx(s.lower * (1 + g) / (1 - g)).epsilon(1e-12));
    }
}

TEST_CASE("size_penalty examples") {
    const SizeBand band = SizeBand::around(100, 0.1, SizeSource::oracle);
    CHECK(penalty_at(100, band) == 0.0);
    CHECK(penalty_at(80, band) == doctest::Approx(100));
    CHECK(penalty_at(115, band) == doctest::Approx(25));
    CHECK(penalty_at(band.lower, band) == 0.0);
    CHECK(penalty_at(band.upper, band) == 0.0);
    CHECK(penalty_slope(band.lower, band) == 0.0);
    CHECK(penalty_slope(band.upper, band) == 0.0);
    CHECK(penalty_slope(80, band) == doctest::Approx(2 * (80 - band.lower)));
    CHECK(penalty_slope(115, band) == doctest::Approx(2 * (115 - band.upper)));
    CHECK(size_penalty_value(80, band) == penalty_at(80, band));
}

TEST_CASE("size_penalty is zero exactly on the band, convex and monotone outside") {
    Rng rng(17);
    for (int k = 0; k < 30; ++k) {
        const SizeBand band = SizeBand::around(rng.uniform(5, 400), rng.uniform(0.02, 0.5), SizeSource::oracle);
        for (int j = 0; j < 10; ++j) {
            const double inside = rng.uniform(band.lower, band.upper);
            CHECK(penalty_at(inside, band) == 0.0);
            const double below = band.lower - rng.uniform(1e-3, 50), above = band.upper + rng.uniform(1e-3, 50);
            CHECK(penalty_at(below, band) > 0.0);
            CHECK(penalty_at(above, band) > 0.0);
            CHECK(penalty_at(below - 1.0, band) > penalty_at(below, band));
            CHECK(penalty_at(above + 1.0, band) > penalty_at(above, band));
            // Midpoint convexity.
            const double a = rng.uniform(band.lower - 60, band.upper + 60), b = rng.uniform(band.lower - 60, band.upper + 60);
            CHECK(penalty_at(0.5 * (a + b), band) <= 0.5 * (penalty_at(a, band) + penalty_at(b, band)) + 1e-9);
        }
    }
}

TEST_CASE("combined_objective") {
    const std::vector<double> labeled{2.0}, penalties{1.0, 3.0};
    CHECK(combined_objective(labeled, penalties, 0.5) == 4.0);
    CHECK(combined_objective(labeled, penalties, 0.0) == 2.0);
    CHECK(combined_objective(labeled, std::vector<double>{}, 0.7) == 2.0);
    CHECK_THROWS(combined_objective(labeled, penalties, -0.1));

    Tape t;
    const std::vector<Var> ly{t.constant(Tensor::scalar(2.0))};
    const std::vector<Var> lu{t.constant(Tensor::scalar(1.0)), t.constant(Tensor::scalar(3.0))};
    CHECK(t.value(combined_objective(t, ly, lu, 0.5)).item() == 4.0);
    CHECK(t.value(combined_objective(t, ly, lu, 0.0)).item() == 2.0);
    CHECK(t.value(combined_objective(t, ly, std::vector<Var>{}, 0.5)).item() == 2.0);
    CHECK_THROWS(combined_objective(t, ly, lu, -1.0));
}

}  // TEST_SUITE
