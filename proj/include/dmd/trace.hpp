#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dmd {

// One datum = one matrix element. Ids are dense within a region; the word
// packs the region into the top two bits so a trace event is a single u64
// (this is also the on-disk binary encoding).
enum class Region : uint8_t { input_a = 0, input_b = 1, temp = 2 };

struct DatumId {
    uint64_t word = 0;

    static constexpr uint64_t index_mask = (uint64_t(1) << 62) - 1;

    static DatumId make(Region r, uint64_t index) {
        return DatumId{(uint64_t(r) << 62) | (index & index_mask)};
    }
    Region region() const { return Region(word >> 62); }
    uint64_t index() const { return word & index_mask; }

    bool operator==(const DatumId&) const = default;
};

inline char region_char(Region r) {
    switch (r) {
        case Region::input_a: return 'A';
        case Region::input_b: return 'B';
        default: return 'T';
    }
}

enum class AdditionOrder : uint8_t { row_major };
enum class BaseCaseOrder : uint8_t { ab_then_c };

struct TraceSemantics {
    bool accumulator_in_register = true;  // naive/tiled: C element kept in a register
    AdditionOrder addition_order = AdditionOrder::row_major;
    BaseCaseOrder base_case_order = BaseCaseOrder::ab_then_c;

    bool operator==(const TraceSemantics&) const = default;
};

enum class Kernel : uint8_t { naive, tiled, rmm, rmm_managed, strassen, strassen_managed };

const char* kernel_name(Kernel k);
Kernel kernel_from_name(const std::string& name);
bool kernel_is_managed(Kernel k);

// Streaming consumer of trace events. alloc/free notifications carry the
// arena side channel so validators can check allocation safety; most sinks
// only care about access().
class TraceSink {
public:
    virtual ~TraceSink() = default;
    virtual void access(DatumId d) = 0;
    virtual void on_alloc(DatumId) {}
    virtual void on_free(DatumId) {}
};

// Element-granular id allocator. Unmanaged mode mints strictly increasing
// ids; managed mode recycles the most recently freed id first.
class Arena {
public:
    explicit Arena(bool managed) : managed_(managed) {}

    uint64_t alloc() {
        ++allocations_;
        ++live_;
        if (live_ > high_water_) high_water_ = live_;
        if (managed_ && !free_list_.empty()) {
            uint64_t id = free_list_.back();
            free_list_.pop_back();
            return id;
        }
        return next_id_++;
    }
    void release(uint64_t id) {
        if (!managed_) return;
        free_list_.push_back(id);
        --live_;
    }

    bool managed() const { return managed_; }
    uint64_t minted() const { return next_id_; }
    uint64_t allocations() const { return allocations_; }
    uint64_t high_water() const { return high_water_; }

private:
    bool managed_;
    uint64_t next_id_ = 0;
    uint64_t allocations_ = 0;
    uint64_t live_ = 0;
    uint64_t high_water_ = 0;
    std::vector<uint64_t> free_list_;
};

// Materialized trace plus the generator-side metadata that a raw event list
// cannot carry (logical datum count and peak liveness under reclamation).
struct MemoryTrace {
    std::vector<DatumId> events;
    uint32_t n = 0;
    uint32_t tile = 0;  // 0 unless kernel == tiled
    Kernel kernel = Kernel::naive;
    TraceSemantics semantics;

    // Filled by the generators; zero for hand-built / file-loaded traces.
    uint64_t logical_data = 0;  // inputs + every allocation (reuses count as new data)
    uint64_t peak_live = 0;     // max simultaneously live data (inputs always live)

    size_t size() const { return events.size(); }
};

}  // namespace dmd
