#include <cmath>

#include "doctest.h"
#include "support.hpp"

#include "cseg/optim.hpp"

using namespace cseg;

TEST_SUITE("grad-core") {

TEST_CASE("sgd: plain step, zero gradient, momentum unrolling") {
    std::vector<Tensor> p{Tensor({1}, 5.0)};
    auto s = OptimizerState::sgd(1.0, 0.0, 0.0);
    sgd_step(s, p, std::vector<Tensor>{Tensor({1}, 1.0)});
    CHECK(p[0][0] == 4.0);

    auto z = OptimizerState::sgd(0.1, 0.9, 0.0);
    sgd_step(z, p, std::vector<Tensor>{Tensor({1}, 0.0)});
    CHECK(p[0][0] == 4.0);

    std::vector<Tensor> q{Tensor({1}, 0.0)};
    auto m = OptimizerState::sgd(0.1, 0.9, 0.0);
    for (int i = 0; i < 2; ++i) sgd_step(m, q, std::vector<Tensor>{Tensor({1}, 1.0)});
    CHECK(q[0][0] == doctest::Approx(-0.29).epsilon(1e-14));
}

TEST_CASE("sgd: weight decay enters the velocity") {
    std::vector<Tensor> p{Tensor({1}, 2.0)};
    auto s = OptimizerState::sgd(0.5, 0.0, 0.1);
    sgd_step(s, p, std::vector<Tensor>{Tensor({1}, 1.0)});
    CHECK(p[0][0] == doctest::Approx(2.0 - 0.5 * (1.0 + 0.2)).epsilon(1e-15));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
    std::vector<Tensor> p{Tensor({3}, std::vector<double>{1, -2, 3})};
    auto s = OptimizerState::adam(0.1, 0.9, 0.99);
    adam_step(s, p, std::vector<Tensor>{Tensor({3}, 0.0)});
    CHECK(p[0] == Tensor({3}, std::vector<double>{1, -2, 3}));
}

TEST_CASE("adam: first step moves by lr * sign(g)") {
    for (double g : {1e-3, 0.5, -7.0, 1e4}) {
        std::vector<Tensor> p{Tensor({1}, 0.0)};
        auto s = OptimizerState::adam(0.01, 0.9, 0.99);
        adam_step(s, p, std::vector<Tensor>{Tensor({1}, g)});
        CHECK(p[0][0] == doctest::Approx(g > 0 ? -0.01 : 0.01).epsilon(1e-4));
    }
}

TEST_CASE("adam: matches a scripted reference trace") {
    const double lr = 0.05, b1 = 0.9, b2 = 0.99, eps = 1e-8, g = 0.3;
    double theta = 1.0, m = 0.0, v = 0.0;
    std::vector<Tensor> p{Tensor({1}, 1.0)};
    auto s = OptimizerState::adam(lr, b1, b2, eps);
    for (int t = 1; t <= 10; ++t) {
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
        theta -= lr * mh / (std::sqrt(vh) + eps);
        adam_step(s, p, std::vector<Tensor>{Tensor({1}, g)});
        CHECK(std::abs(p[0][0] - theta) < 1e-12);
    }
    CHECK(s.step == 10);
}

TEST_CASE("optimizer steps are deterministic and shape-checked") {
    Rng rng(4);
    std::vector<Tensor> a{testing::random_tensor({2, 3}, rng)}, b = a;
    std::vector<Tensor> g{testing::random_tensor({2, 3}, rng)};
    auto sa = OptimizerState::adam(0.01, 0.9, 0.99), sb = sa;
    for (int i = 0; i < 3; ++i) {
        optimizer_step(sa, a, g);
        optimizer_step(sb, b, g);
    }
    CHECK(a == b);
    CHECK(sa.first == sb.first);

    CHECK_THROWS_AS(adam_step(sa, a, std::vector<Tensor>{Tensor({3, 2})}), ShapeError);
    auto sgd = OptimizerState::sgd(0.1, 0.9, 0.0);
    CHECK_THROWS(adam_step(sgd, a, g));
    CHECK_THROWS(sgd_step(sa, a, g));
}

}  // TEST_SUITE
