#include <doctest.h>

#include <cmath>
#include <random>

#include "dmd/kernels.hpp"
#include "dmd/stackdist.hpp"

using namespace dmd;

namespace {

MemoryTrace trace_of(const std::vector<uint64_t>& ids) {
    MemoryTrace t;
    for (uint64_t id : ids) t.events.push_back(DatumId::make(Region::input_a, id));
    return t;
}

MemoryTrace random_trace(std::mt19937& rng, uint64_t alphabet, size_t len) {
    std::uniform_int_distribution<uint64_t> pick(0, alphabet - 1);
    std::vector<uint64_t> ids(len);
    for (auto& id : ids) id = pick(rng);
    return trace_of(ids);
}

}  // namespace

TEST_CASE("worked example: a b b c a") {
    auto d = reuse_histogram(trace_of({0, 1, 1, 2, 0}));
    CHECK(d.cold == 3);
    CHECK(d.total_accesses == 5);
    REQUIRE(d.counts.size() == 2);
    CHECK(d.counts.at(1) == 1);  // second b
    CHECK(d.counts.at(3) == 1);  // second a
}

TEST_CASE("immediate reuse and cyclic patterns") {
    auto aaa = reuse_histogram(trace_of({7, 7, 7}));
    CHECK(aaa.cold == 1);
    CHECK(aaa.counts.at(1) == 2);

    // abc abc abc: every reuse sees the full alphabet
    auto abc = reuse_histogram(trace_of({0, 1, 2, 0, 1, 2, 0, 1, 2}));
    CHECK(abc.cold == 3);
    CHECK(abc.counts.at(3) == 6);
    CHECK(abc.consistent());
}

TEST_CASE("fast path matches the quadratic oracle") {
    auto same = [](const MemoryTrace& t) {
        auto fast = reuse_histogram(t);
        auto slow = reuse_histogram_naive(t);
        CHECK(fast == slow);
        CHECK(fast.consistent());
    };
    same(trace_of({0, 1, 1, 2, 0}));
    same(rmm_trace(8));
    same(rmm_managed_trace(8));
    same(strassen_trace(4));

    std::mt19937 rng(20240501);
    for (int i = 0; i < 100; ++i) {
        std::uniform_int_distribution<uint64_t> alpha(1, 64);
        std::uniform_int_distribution<size_t> len(1, 10000);
        same(random_trace(rng, alpha(rng), len(rng)));
    }
}

TEST_CASE("miss ratio curve formula") {
    ReuseDistribution d;
    d.counts = {{1, 1}, {3, 1}};
    d.cold = 3;
    d.total_accesses = 5;
    auto curve = miss_ratio_curve(d, {1, 2, 3, 4});
    CHECK(curve.points[0].second == doctest::Approx(4.0 / 5.0));
    CHECK(curve.points[1].second == doctest::Approx(4.0 / 5.0));
    CHECK(curve.points[2].second == doctest::Approx(3.0 / 5.0));
    CHECK(curve.points[3].second == doctest::Approx(3.0 / 5.0));

    // beyond the largest distance only cold misses remain
    CHECK(miss_count(d, 100) == d.cold);

    ReuseDistribution unit;
    unit.counts = {{1, 9}};
    unit.cold = 1;
    unit.total_accesses = 10;
    CHECK(miss_ratio_curve(unit, {1}).points[0].second == doctest::Approx(0.1));

    ReuseDistribution empty;
    CHECK(miss_ratio_curve(empty, {1, 2}).points.empty());
}

TEST_CASE("monotonicity of the curve") {
    std::mt19937 rng(77);
    auto t = random_trace(rng, 32, 5000);
    auto d = reuse_histogram(t);
    std::vector<uint64_t> sizes;
    for (uint64_t c = 1; c <= 64; ++c) sizes.push_back(c);
    auto curve = miss_ratio_curve(d, sizes);
    for (size_t i = 1; i < curve.points.size(); ++i)
        CHECK(curve.points[i].second <= curve.points[i - 1].second + 1e-12);
}

TEST_CASE("LRU simulator agrees with the curve exactly") {
    auto check_all = [](const MemoryTrace& t, uint64_t cmax) {
        auto d = reuse_histogram(t);
        for (uint64_t c = 1; c <= cmax; ++c) {
            CAPTURE(c);
            CHECK(lru_simulate(t, c) == miss_count(d, c));
        }
    };
    check_all(trace_of({0, 1, 1, 2, 0}), 4);
    CHECK(lru_simulate(trace_of({0, 1, 1, 2, 0}), 1) == 4);

    check_all(rmm_trace(4), 32);

    std::mt19937 rng(123);
    for (int i = 0; i < 20; ++i) check_all(random_trace(rng, 48, 4000), 32);

    // capacity at or above the footprint leaves only compulsory misses
    auto t = rmm_trace(4);
    auto d = reuse_histogram(t);
    CHECK(lru_simulate(t, footprint(t).total_distinct) == d.cold);
}

TEST_CASE("naive input-A reuses all land at distance 2n") {
    // row sweep: n distinct A-row elements plus n B-window elements,
    // both endpoints included
    for (uint32_t n : {4u, 8u}) {
        auto t = naive_trace(n);
        ReuseHistogramBuilder b;
        bool all_2n = true;
        for (DatumId d : t.events) {
            auto dist = b.step(d);
            if (d.region() == Region::input_a && dist && *dist != 2 * n) all_2n = false;
        }
        CAPTURE(n);
        CHECK(all_2n);
    }
}

TEST_CASE("mass conservation and cold counts") {
    for (uint32_t n : {2u, 4u, 8u}) {
        auto t = rmm_trace(n);
        auto d = reuse_histogram(t);
        CHECK(d.consistent());
        CHECK(d.total_accesses == t.size());
        CHECK(d.cold == footprint(t).total_distinct);
    }
}

TEST_CASE("order-statistic work stays O(M log M)") {
    auto t = rmm_trace(16);  // M = 23808
    ReuseHistogramBuilder b;
    for (DatumId d : t.events) b.step(d);
    double m = double(t.size());
    // generous constant: every access costs a handful of tree walks
    CHECK(double(b.tree_ops()) <= 8 * m * std::log2(m));
}

TEST_CASE("csv and json export") {
    ReuseDistribution d;
    d.counts = {{1, 1}, {3, 1}};
    d.cold = 3;
    d.total_accesses = 5;
    CHECK(distribution_csv(d) == "distance,count\n1,1\n3,1\ncold,3\ntotal,5\n");
    CHECK(distribution_json(d) ==
          R"({"counts":{"1":1,"3":1},"cold":3,"total":5})");
    auto back = distribution_from_csv(distribution_csv(d));
    CHECK(back == d);

    MissRatioCurve c;
    c.points = {{1, 0.8}, {3, 0.6}};
    CHECK(mrc_csv(c) == "cache_size,miss_ratio\n1,0.8\n3,0.6\n");
}
