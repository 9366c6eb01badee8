#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "support.hpp"

#include "cseg/synthdata.hpp"

using namespace cseg;

namespace {

// Independent point-in-ellipse test via the quadratic form
// [dx dy] R diag(1/a^2, 1/b^2) R^T [dx dy]^T <= 1.
std::size_t oracle_count(std::size_t h, std::size_t w, double cy, double cx, double a, double b, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    const double A = c * c / (a * a) + s * s / (b * b);
    const double B = 2 * c * s * (1 / (a * a) - 1 / (b * b));
    const double C = s * s / (a * a) + c * c / (b * b);
    std::size_t n = 0;
    for (std::size_t r = 0; r < h; ++r)
        for (std::size_t k = 0; k < w; ++k) {
            const double dx = k + 0.5 - cx, dy = r + 0.5 - cy;
            n += A * dx * dx + B * dx * dy + C * dy * dy <= 1.0 + 1e-12;
        }
    return n;
}

// Ramanujan's approximation, plenty for a discretisation bound.
double perimeter(double a, double b) {
    return std::numbers::pi * (3 * (a + b) - std::sqrt((3 * a + b) * (a + 3 * b)));
}

std::filesystem::path golden_dir() { return CSEG_GOLDEN_DIR; }

}  // namespace

TEST_SUITE("synthdata") {

TEST_CASE("noiseless image takes exactly two values") {
    GeneratorConfig cfg;
    cfg.noise = 0.0;
    cfg.contrast_jitter = 0.0;
    cfg.background_jitter = 0.0;
    for (std::uint64_t i = 0; i < 10; ++i) {
        const Sample s = generate_sample(3, i, cfg);
        for (std::size_t k = 0; k < s.image.pixels.size(); ++k) {
            CHECK(s.image.pixels[k] == doctest::Approx(s.mask.labels[k] ? 0.7 : 0.3).epsilon(1e-15));
        }
    }
}

TEST_CASE("images lie in [0, 1] and masks are binary above min_size") {
    GeneratorConfig cfg;
    cfg.noise = 0.4;
    for (std::uint64_t i = 0; i < 30; ++i) {
        const Sample s = generate_sample(11, i, cfg);
        for (double v : s.image.pixels) CHECK((v >= 0.0 && v <= 1.0));
        for (auto v : s.mask.labels) CHECK(v <= 1);
        CHECK(s.mask.foreground_count() >= cfg.min_size);
    }
}

TEST_CASE("sample counts respect the axis range") {
    const GeneratorConfig cfg;
    const double lo = std::numbers::pi * cfg.axis_min * cfg.axis_min - 4 * perimeter(cfg.axis_min, cfg.axis_min);
    const double hi = std::numbers::pi * cfg.axis_max * cfg.axis_max + 4 * perimeter(cfg.axis_max, cfg.axis_max);
    for (std::uint64_t i = 0; i < 100; ++i) {
        const double n = static_cast<double>(generate_sample(5, i, cfg).mask.foreground_count());
        CHECK(n >= lo);
        CHECK(n <= hi);
    }
}

TEST_CASE("rasterization matches an independent oracle") {
    Rng rng(21);
    for (int k = 0; k < 100; ++k) {
        const double a = rng.uniform(2, 9), b = rng.uniform(2, 9), angle = rng.uniform(0, std::numbers::pi);
        const double cy = rng.uniform(10, 22), cx = rng.uniform(10, 22);
        const std::size_t n = rasterize_ellipse(32, 32, cy, cx, a, b, angle).foreground_count();
        CHECK(n == oracle_count(32, 32, cy, cx, a, b, angle));
        CHECK(std::abs(static_cast<double>(n) - std::numbers::pi * a * b) <= perimeter(a, b));
    }
}

TEST_CASE("generation is a pure function of seed and index") {
    GeneratorConfig cfg;
    cfg.contrast_jitter = 0.5;
    cfg.background_jitter = 0.1;
    const Sample a = generate_sample(9, 17, cfg);
    for (std::uint64_t i = 0; i < 17; ++i) generate_sample(9, i, cfg);
    const Sample b = generate_sample(9, 17, cfg);
    CHECK(a.image == b.image);
    CHECK(a.mask == b.mask);
    CHECK_FALSE(generate_sample(10, 17, cfg).image == a.image);
}

TEST_CASE("generator config validation") {
    GeneratorConfig cfg;
    cfg.axis_max = 17;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(generate_sample(0, 0, cfg), std::invalid_argument);
    cfg = {};
    cfg.axis_min = 0;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.height = 30;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.contrast_jitter = 1.5;
    CHECK_THROWS(cfg.validate());
    cfg = {};
    cfg.min_size = 1000;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("contrast jitter only lowers the contrast") {
    GeneratorConfig cfg;
    cfg.noise = 0.0;
    cfg.contrast_jitter = 0.5;
    cfg.background_jitter = 0.0;
    std::set<double> levels;
    for (std::uint64_t i = 0; i < 20; ++i) {
        const Sample s = generate_sample(2, i, cfg);
        for (std::size_t k = 0; k < s.image.pixels.size(); ++k) {
            if (!s.mask.labels[k]) {
                CHECK(s.image.pixels[k] == 0.3);
                continue;
            }
            CHECK(s.image.pixels[k] >= 0.3 + 0.2 - 1e-12);
            CHECK(s.image.pixels[k] <= 0.7 + 1e-12);
            levels.insert(s.image.pixels[k]);
        }
    }
    CHECK(levels.size() == 20);
}

TEST_CASE("membership is a disjoint, deterministic, nested partition") {
    const SplitMembership m = make_membership(100, 5, 25, 7);
    CHECK(m.labeled.size() == 5);
    CHECK(m.validation.size() == 25);
    CHECK(m.unlabeled.size() == 70);
    std::set<std::size_t> all(m.labeled.begin(), m.labeled.end());
    all.insert(m.unlabeled.begin(), m.unlabeled.end());
    all.insert(m.validation.begin(), m.validation.end());
    CHECK(all.size() == 100);
    CHECK(*all.rbegin() == 99);
    CHECK(make_membership(100, 5, 25, 7) == m);

    for (std::size_t n : {10, 20, 30, 40}) {
        const SplitMembership big = make_membership(100, n, 25, 7);
        CHECK(big.validation == m.validation);
        CHECK(std::equal(m.labeled.begin(), m.labeled.end(), big.labeled.begin()));
    }
    CHECK(make_membership(100, 75, 25, 7).unlabeled.empty());
    CHECK_THROWS_AS(make_membership(100, 80, 25, 7), std::invalid_argument);
}

TEST_CASE("membership golden file") {
    const SplitMembership m = make_membership(100, 5, 25, 7);
    const nlohmann::json current = {{"labeled", m.labeled}, {"unlabeled", m.unlabeled}, {"validation", m.validation}};
    const auto path = golden_dir() / "split_100_5_25_seed7.json";
    if (std::getenv("CSEG_WRITE_GOLDEN")) {
        std::ofstream(path) << current.dump() << "\n";
    }
    std::ifstream in(path);
    REQUIRE(in);
    CHECK(nlohmann::json::parse(in) == current);
}

TEST_CASE("split contents follow membership") {
    const DatasetSplit split = make_split(40, 5, 10, 3);
    CHECK(split.labeled().size() == 5);
    CHECK(split.unlabeled().size() == 25);
    CHECK(split.regressor_validation().size() == 2);
    CHECK(split.segmenter_validation().size() == 8);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(split.labeled()[i].id == split.membership().labeled[i]);
        CHECK(split.labeled()[i].mask == generate_sample(3, split.labeled()[i].id, {}).mask);
    }
    const DatasetSplit full = make_split(100, 5, 25, 7);
    CHECK(full.regressor_validation().size() == 5);
    CHECK(full.segmenter_validation().size() == 20);
}

TEST_CASE("split views gate unlabeled masks") {
    const DatasetSplit split = make_split(20, 2, 4, 1);
    SplitView standard(split, AccessMode::standard);
    CHECK_THROWS_AS(standard.unlabeled_size(0), AccessDenied);
    CHECK(standard.audit().unlabeled_size_reads == 0);

    SplitView oracle(split, AccessMode::oracle);
    const double n = oracle.unlabeled_size(3);
    CHECK(oracle.audit().unlabeled_size_reads == 1);
    CHECK(oracle.audit().unlabeled_pixel_reads == 0);
    CHECK(n == static_cast<double>(generate_sample(1, split.unlabeled()[3].id, {}).mask.foreground_count()));

    oracle.reveal_unlabeled_mask(3);
    CHECK(oracle.audit().unlabeled_pixel_reads == 1);
}

TEST_CASE("augmentation") {
    const Sample s = generate_sample(4, 0, {});
    Rng rng(8);
    const auto variants = augment(s, rng);
    REQUIRE(variants.size() == 10);
    CHECK(variants[0].image == s.image);
    CHECK(variants[0].mask == s.mask);
    for (std::size_t i = 0; i < 4; ++i) CHECK(variants[i].size_target == static_cast<double>(s.mask.foreground_count()));
    for (const auto& v : variants) {
        CHECK(v.size_target == static_cast<double>(v.mask.foreground_count()));
        for (double p : v.image.pixels) CHECK((p >= 0.0 && p <= 1.0));
    }
    CHECK(flip_horizontal(flip_horizontal(s)).image == s.image);
    CHECK(flip_vertical(s).mask(0, 5) == s.mask(31, 5));
    CHECK(flip_horizontal(s).mask(7, 0) == s.mask(7, 31));

    Rng again(8);
    const auto repeat = augment(s, again);
    for (std::size_t i = 0; i < 10; ++i) CHECK(repeat[i].image == variants[i].image);
}

TEST_CASE("zero rotation is the identity") {
    const Sample s = generate_sample(4, 1, {});
    const Sample r = rotate(s, 0.0);
    CHECK(r.mask == s.mask);
    CHECK(testing::max_abs_diff(Tensor({s.image.pixels.size()}, r.image.pixels), Tensor({s.image.pixels.size()}, s.image.pixels)) <= 1e-15);
}

TEST_CASE("rotating a centered disk keeps its size within the perimeter") {
    Sample disk{Image(32, 32), rasterize_ellipse(32, 32, 16, 16, 6, 6, 0)};
    const double before = static_cast<double>(disk.mask.foreground_count());
    for (double deg : {30.0, -30.0, 45.0, 10.0}) {
        const double after = static_cast<double>(rotate(disk, deg).mask.foreground_count());
        CHECK(std::abs(after - before) <= 2 * std::numbers::pi * 6);
    }
}

TEST_CASE("pgm round trip") {
    const auto dir = std::filesystem::temp_directory_path() / "cseg_pgm_test";
    std::filesystem::create_directories(dir);
    const Sample s = generate_sample(6, 2, {});
    write_pgm(dir / "i.pgm", s.image);
    write_pgm(dir / "m.pgm", s.mask);
    CHECK(read_pgm_mask(dir / "m.pgm") == s.mask);
    const Image back = read_pgm(dir / "i.pgm");
    for (std::size_t k = 0; k < back.pixels.size(); ++k) CHECK(std::abs(back.pixels[k] - s.image.pixels[k]) <= 0.5 / 255 + 1e-12);
    CHECK_THROWS(read_pgm_mask(dir / "i.pgm"));
    CHECK_THROWS(read_pgm(dir / "missing.pgm"));
    std::filesystem::remove_all(dir);
}

TEST_CASE("dataset dump writes every sample and a manifest") {
    const auto dir = std::filesystem::temp_directory_path() / "cseg_dump_test";
    std::filesystem::remove_all(dir);
    const DatasetSplit split = make_split(20, 3, 5, 2);
    dump_dataset(dir, split, 2, "{\"k\":1}");
    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir)) files += e.path().extension() == ".pgm";
    CHECK(files == 40);
    std::ifstream in(dir / "manifest.json");
    const auto j = nlohmann::json::parse(in);
    CHECK(j["seed"] == 2);
    CHECK(j["config"]["k"] == 1);
    CHECK(j["membership"]["labeled"].size() == 3);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
