#include "dmd/stackdist.hpp"

#include "dmd/kernels.hpp"

#include <algorithm>
#include <list>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dmd {

bool ReuseDistribution::consistent() const {
    uint64_t mass = cold;
    for (auto& [d, c] : counts) {
        if (d == 0) return false;
        mass += c;
    }
    return mass == total_accesses;
}

// ---------------------------------------------------------------------------
// fast path
// ---------------------------------------------------------------------------

namespace {
constexpr uint64_t kInitialCap = 1 << 12;
}

ReuseHistogramBuilder::ReuseHistogramBuilder() {
    tree_.assign(kInitialCap + 1, 0);
    pos_slot_.assign(kInitialCap, 0);
}

void ReuseHistogramBuilder::tree_add(uint64_t i, int64_t v) {
    for (uint64_t x = i + 1; x < tree_.size(); x += x & (~x + 1)) {
        tree_[x] += uint64_t(v);
        ++tree_ops_;
    }
}

uint64_t ReuseHistogramBuilder::tree_prefix(uint64_t i) {
    uint64_t s = 0;
    for (uint64_t x = i + 1; x > 0; x -= x & (~x + 1)) {
        s += tree_[x];
        ++tree_ops_;
    }
    return s;
}

uint64_t ReuseHistogramBuilder::slot_of(DatumId d) {
    auto& slots = region_slots_[int(d.region())];
    uint64_t idx = d.index();
    if (idx >= slots.size()) slots.resize(std::max<uint64_t>(idx + 1, slots.size() * 2 + 16), -1);
    if (slots[idx] < 0) {
        slots[idx] = int64_t(last_pos_.size());
        last_pos_.push_back(-1);
    }
    return uint64_t(slots[idx]);
}

void ReuseHistogramBuilder::compact() {
    // Rebuild the position space keeping only live last-access marks, in
    // order; grow capacity if more than half the space is live.
    uint64_t cap = tree_.size() - 1;
    if (live_ * 2 > cap) cap *= 2;
    std::vector<uint32_t> new_pos_slot(cap);
    uint64_t w = 0;
    for (uint64_t p = 0; p < cursor_; ++p) {
        uint32_t s = pos_slot_[p];
        if (last_pos_[s] == int64_t(p)) {
            new_pos_slot[w] = s;
            last_pos_[s] = int64_t(w);
            ++w;
        }
    }
    pos_slot_ = std::move(new_pos_slot);
    cursor_ = w;
    tree_.assign(cap + 1, 0);
    for (uint64_t p = 0; p < w; ++p) tree_add(p, 1);
}

std::optional<uint64_t> ReuseHistogramBuilder::step(DatumId d) {
    ++total_;
    if (cursor_ >= pos_slot_.size()) compact();
    uint64_t slot = slot_of(d);
    int64_t prev = last_pos_[slot];
    std::optional<uint64_t> dist;
    if (prev < 0) {
        ++cold_;
    } else {
        // distinct data strictly after prev = live marks in (prev, cursor),
        // plus the datum itself
        uint64_t after = tree_prefix(cursor_ - 1) - tree_prefix(uint64_t(prev));
        dist = after + 1;
        ++counts_[after + 1];
        tree_add(uint64_t(prev), -1);
        --live_;
    }
    last_pos_[slot] = int64_t(cursor_);
    pos_slot_[cursor_] = uint32_t(slot);
    tree_add(cursor_, 1);
    ++live_;
    ++cursor_;
    return dist;
}

ReuseDistribution ReuseHistogramBuilder::take() {
    ReuseDistribution r;
    r.counts = std::move(counts_);
    r.cold = cold_;
    r.total_accesses = total_;
    return r;
}

ReuseDistribution reuse_histogram(const MemoryTrace& t) {
    ReuseHistogramBuilder b;
    for (DatumId d : t.events) b.access(d);
    return b.take();
}

KernelDistribution kernel_histogram(Kernel k, uint32_t n, uint32_t tile,
                                    const TraceSemantics& s) {
    ReuseHistogramBuilder b;
    Arena arena = emit_kernel(k, n, tile, s, b);
    KernelDistribution out;
    out.dist = b.take();
    uint64_t inputs = 2ull * n * n;
    if (k == Kernel::naive || k == Kernel::tiled) {
        out.logical_data = inputs + (s.accumulator_in_register ? 0 : uint64_t(n) * n);
        out.peak_live = out.logical_data;
    } else {
        out.logical_data = inputs + arena.allocations();
        out.peak_live = inputs + arena.high_water();
    }
    return out;
}

// ---------------------------------------------------------------------------
// quadratic oracle
// ---------------------------------------------------------------------------

ReuseDistribution reuse_histogram_naive(const MemoryTrace& t) {
    ReuseDistribution r;
    r.total_accesses = t.events.size();
    std::unordered_map<uint64_t, size_t> last;
    std::unordered_set<uint64_t> window;
    for (size_t i = 0; i < t.events.size(); ++i) {
        uint64_t w = t.events[i].word;
        auto it = last.find(w);
        if (it == last.end()) {
            ++r.cold;
        } else {
            window.clear();
            for (size_t p = it->second; p <= i; ++p) window.insert(t.events[p].word);
            ++r.counts[window.size()];
        }
        last[w] = i;
    }
    return r;
}

// ---------------------------------------------------------------------------
// miss ratio / LRU
// ---------------------------------------------------------------------------

uint64_t miss_count(const ReuseDistribution& dist, uint64_t c) {
    uint64_t m = dist.cold;
    for (auto it = dist.counts.upper_bound(c); it != dist.counts.end(); ++it) m += it->second;
    return m;
}

MissRatioCurve miss_ratio_curve(const ReuseDistribution& dist,
                                const std::vector<uint64_t>& sizes) {
    MissRatioCurve curve;
    if (dist.total_accesses == 0) return curve;
    for (uint64_t c : sizes)
        curve.points.emplace_back(c, double(miss_count(dist, c)) / double(dist.total_accesses));
    return curve;
}

uint64_t lru_simulate(const MemoryTrace& t, uint64_t c) {
    if (c == 0) throw std::invalid_argument("cache size must be >= 1");
    std::list<uint64_t> stack;  // front = MRU
    std::unordered_map<uint64_t, std::list<uint64_t>::iterator> where;
    uint64_t misses = 0;
    for (DatumId d : t.events) {
        auto it = where.find(d.word);
        if (it != where.end()) {
            stack.splice(stack.begin(), stack, it->second);
        } else {
            ++misses;
            if (where.size() == c) {
                where.erase(stack.back());
                stack.pop_back();
            }
            stack.push_front(d.word);
            where[d.word] = stack.begin();
        }
    }
    return misses;
}

// ---------------------------------------------------------------------------
// export
// ---------------------------------------------------------------------------

std::string distribution_csv(const ReuseDistribution& d) {
    std::ostringstream os;
    os << "distance,count\n";
    for (auto& [dist, cnt] : d.counts) os << dist << "," << cnt << "\n";
    os << "cold," << d.cold << "\n";
    os << "total," << d.total_accesses << "\n";
    return os.str();
}

std::string distribution_json(const ReuseDistribution& d) {
    std::ostringstream os;
    os << "{\"counts\":{";
    bool first = true;
    for (auto& [dist, cnt] : d.counts) {
        if (!first) os << ",";
        first = false;
        os << "\"" << dist << "\":" << cnt;
    }
    os << "},\"cold\":" << d.cold << ",\"total\":" << d.total_accesses << "}";
    return os.str();
}

ReuseDistribution distribution_from_csv(const std::string& text) {
    ReuseDistribution d;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty() || line == "distance,count") continue;
        auto comma = line.find(',');
        if (comma == std::string::npos) throw std::invalid_argument("bad csv line: " + line);
        std::string key = line.substr(0, comma);
        uint64_t val = std::stoull(line.substr(comma + 1));
        if (key == "cold")
            d.cold = val;
        else if (key == "total")
            d.total_accesses = val;
        else
            d.counts[std::stoull(key)] = val;
    }
    return d;
}

std::string mrc_csv(const MissRatioCurve& c) {
    std::ostringstream os;
    os << "cache_size,miss_ratio\n";
    char buf[64];
    for (auto& [size, ratio] : c.points) {
        snprintf(buf, sizeof buf, "%.6g", ratio);
        os << size << "," << buf << "\n";
    }
    return os.str();
}

}  // namespace dmd
