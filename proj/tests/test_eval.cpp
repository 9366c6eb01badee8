#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "support.hpp"

#include "cseg/eval.hpp"
#include "cseg/trainer.hpp"

using namespace cseg;

namespace {

double set_dice(const Mask& a, const Mask& b) {
    std::set<std::size_t> sa, sb, inter;
    for (std::size_t k = 0; k < a.labels.size(); ++k) {
        if (a.labels[k]) sa.insert(k);
        if (b.labels[k]) sb.insert(k);
    }
    for (std::size_t k : sa)
        if (sb.count(k)) inter.insert(k);
    if (sa.empty() && sb.empty()) return 1.0;
    return 2.0 * static_cast<double>(inter.size()) / static_cast<double>(sa.size() + sb.size());
}

TrainingTrace trace_of(const std::vector<double>& dsc) {
    TrainingTrace t;
    for (std::size_t e = 0; e < dsc.size(); ++e) t.records.push_back({e, 0.0, 0.0, 0.0, dsc[e], 1e-3});
    return t;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("dice examples") {
    Mask a(10, 20), b(10, 20);
    for (std::size_t k = 0; k < 100; ++k) a.labels[k] = 1;
    for (std::size_t k = 0; k < 50; ++k) b.labels[k] = 1;
    CHECK(dice(a, b).value == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK(dice(a, a).value == 1.0);
    Mask c(10, 20);
    for (std::size_t k = 150; k < 200; ++k) c.labels[k] = 1;
    CHECK(dice(a, c).value == 0.0);
    CHECK(dice(Mask(4, 4), Mask(4, 4)).value == 1.0);
    CHECK_THROWS_AS(dice(Mask(4, 4), Mask(4, 5)), ShapeError);
}

TEST_CASE("dice matches the set oracle on random pairs") {
    Rng rng(99);
    for (int k = 0; k < 200; ++k) {
        const std::size_t h = 1 + rng.index(20), w = 1 + rng.index(20);
        const double pa = rng.uniform(), pb = rng.uniform();
        const Mask a = testing::random_mask(h, w, rng, k % 10 == 0 ? 0.0 : pa);
        const Mask b = testing::random_mask(h, w, rng, k % 15 == 0 ? 0.0 : pb);
        const double d = dice(a, b).value;
        CHECK(d == set_dice(a, b));
        CHECK(d == dice(b, a).value);
        CHECK(dice(a, a).value == 1.0);
        CHECK((d >= 0.0 && d <= 1.0));
    }
}

TEST_CASE("aggregate_last_k") {
    const MeanStd flat = aggregate_last_k(trace_of({0.1, 0.7, 0.7, 0.7}), 3);
    CHECK(flat.mean == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(flat.std <= 1e-15);
    const MeanStd two = aggregate_last_k(trace_of({0.3, 0.6, 0.8}), 2);
    CHECK(std::abs(two.mean - 0.7) <= 1e-12);
    CHECK(std::abs(two.std - 0.1) <= 1e-12);
    CHECK_THROWS(aggregate_last_k(trace_of({0.1}), 2));
    CHECK_THROWS(aggregate_last_k(trace_of({0.1}), 0));
}

TEST_CASE("aggregate_last_k matches a two-pass computation") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> v(20 + rng.index(80));
        for (double& x : v) x = rng.uniform();
        const std::size_t k = 1 + rng.index(v.size());
        double mean = 0.0;
        for (std::size_t i = v.size() - k; i < v.size(); ++i) mean += v[i];
        mean /= static_cast<double>(k);
        double var = 0.0;
        for (std::size_t i = v.size() - k; i < v.size(); ++i) var += (v[i] - mean) * (v[i] - mean);
        const MeanStd got = aggregate_last_k(trace_of(v), k);
        CHECK(std::abs(got.mean - mean) <= 1e-12);
        CHECK(std::abs(got.std - std::sqrt(var / static_cast<double>(k))) <= 1e-12);
    }
}

TEST_CASE("table format") {
    std::ostringstream empty;
    write_table(empty, {});
    CHECK(empty.str() == "n,arm,mean_dsc,std_dsc,seed,config_hash\n");

    std::ostringstream out;
    write_table(out, {{5, "fs", 0.248, 0.049, 0, "abc"}});
    CHECK(out.str() == "n,arm,mean_dsc,std_dsc,seed,config_hash\n5,fs,24.8,4.9,0,abc\n");
}

TEST_CASE("table rows sort by n then arm and round trip") {
    const std::vector<ResultRow> rows{{10, "oracle", 0.81234, 0.0123, 1, "h"},
                                      {5, "fs", 0.5, 0.02, 1, "h"},
                                      {5, "curriculum", 0.75, 0.0, 1, "h"}};
    std::stringstream s;
    write_table(s, rows);
    const auto back = parse_table(s);
    REQUIRE(back.size() == 3);
    CHECK(back[0].arm == "curriculum");
    CHECK(back[1].arm == "fs");
    CHECK(back[2].n_labeled == 10);
    CHECK(std::abs(back[2].mean_dsc - 0.812) <= 1e-12);
    CHECK(std::abs(back[2].std_dsc - 0.012) <= 1e-12);

    std::stringstream bad("n,arm\n");
    CHECK_THROWS(parse_table(bad));
}

TEST_CASE("curves") {
    std::ostringstream empty;
    write_curves(empty, {});
    CHECK(empty.str() == "arm,epoch,val_dsc\n");

    const std::map<std::string, TrainingTrace> traces{{"fs", trace_of({0.1, 0.2})}, {"oracle", trace_of({0.3, 0.4, 0.123456789})}};
    std::ostringstream out;
    write_curves(out, traces);
    const std::string text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 6);
    CHECK(text.find("oracle,2,0.123456789\n") != std::string::npos);
}

TEST_CASE("trace csv round trip is exact") {
    TrainingTrace t;
    Rng rng(1);
    for (std::size_t e = 0; e < 10; ++e) t.records.push_back({e, rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()});
    std::stringstream s;
    write_trace(s, t);
    CHECK(parse_trace(s) == t);
}

TEST_CASE("emitters write files and checksums are stable") {
    const auto dir = std::filesystem::temp_directory_path() / "cseg_eval_test";
    std::filesystem::remove_all(dir);
    emit_table({{5, "fs", 0.248, 0.049, 0, "abc"}}, dir / "sub" / "table.csv");
    const std::string sum = file_checksum(dir / "sub" / "table.csv");
    emit_table({{5, "fs", 0.248, 0.049, 0, "abc"}}, dir / "again.csv");
    CHECK(file_checksum(dir / "again.csv") == sum);
    CHECK(sum.size() == 16);
    CHECK_THROWS(file_checksum(dir / "missing.csv"));
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
