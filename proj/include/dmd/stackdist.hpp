#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dmd/trace.hpp"

namespace dmd {

// Multiset of reuse distances. Distance convention: the number of distinct
// data touched in the closed window between an access and the previous access
// to the same datum, both endpoints included — so an immediate re-access has
// distance 1. First accesses are counted separately as cold.
struct ReuseDistribution {
    std::map<uint64_t, uint64_t> counts;
    uint64_t cold = 0;
    uint64_t total_accesses = 0;

    uint64_t reuses() const { return total_accesses - cold; }
    uint64_t max_distance() const { return counts.empty() ? 0 : counts.rbegin()->first; }
    bool consistent() const;

    bool operator==(const ReuseDistribution&) const = default;
};

struct MissRatioCurve {
    std::vector<std::pair<uint64_t, double>> points;  // (cache size, miss ratio)
};

// Streaming histogram builder: last-access table + Fenwick tree over trace
// positions, compacted when the position space fills up. O(log M) per access.
class ReuseHistogramBuilder : public TraceSink {
public:
    ReuseHistogramBuilder();

    // Consumes one access; returns its reuse distance, or nullopt when cold.
    std::optional<uint64_t> step(DatumId d);
    void access(DatumId d) override { step(d); }
    ReuseDistribution take();

    uint64_t tree_ops() const { return tree_ops_; }  // Fenwick node visits

private:
    void compact();
    uint64_t slot_of(DatumId d);

    std::map<uint64_t, uint64_t> counts_;
    uint64_t cold_ = 0;
    uint64_t total_ = 0;

    // dense per-region slot maps, grown on demand
    std::vector<int64_t> region_slots_[3];
    std::vector<int64_t> last_pos_;   // slot -> position in tree, -1 if none yet
    std::vector<uint32_t> pos_slot_;  // position -> slot
    std::vector<uint64_t> tree_;
    uint64_t cursor_ = 0;  // next free position
    uint64_t live_ = 0;
    uint64_t tree_ops_ = 0;

    void tree_add(uint64_t i, int64_t v);
    uint64_t tree_prefix(uint64_t i);
};

ReuseDistribution reuse_histogram(const MemoryTrace& t);

// Streams a kernel's events straight into the histogram builder without
// materializing the trace (the big sweep sizes run through here).
struct KernelDistribution {
    ReuseDistribution dist;
    uint64_t peak_live = 0;
    uint64_t logical_data = 0;
};
KernelDistribution kernel_histogram(Kernel k, uint32_t n, uint32_t tile = 0,
                                    const TraceSemantics& s = TraceSemantics{});

// Brute-force oracle: rescans the window for every access. O(M * footprint).
ReuseDistribution reuse_histogram_naive(const MemoryTrace& t);

MissRatioCurve miss_ratio_curve(const ReuseDistribution& dist,
                                const std::vector<uint64_t>& sizes);

// Number of misses in the distribution's terms: |{rd > c}| + cold.
uint64_t miss_count(const ReuseDistribution& dist, uint64_t c);

// Independent fully-associative LRU simulator (list + hash), for validating
// the curve. Returns the miss count at capacity c.
uint64_t lru_simulate(const MemoryTrace& t, uint64_t c);

// distance,count CSV with cold/total trailer rows; JSON mirror.
std::string distribution_csv(const ReuseDistribution& d);
std::string distribution_json(const ReuseDistribution& d);
ReuseDistribution distribution_from_csv(const std::string& text);
std::string mrc_csv(const MissRatioCurve& c);

}  // namespace dmd
