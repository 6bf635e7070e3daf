#pragma once

#include <cstdint>

#include "dmd/trace.hpp"

namespace dmd {

// Trace generators for the six matrix-multiplication variants. All matrices
// are square with power-of-two dimension; one datum per element, values are
// never computed. Generation is deterministic: identical arguments produce
// identical event streams.

void emit_naive(uint32_t n, const TraceSemantics& s, TraceSink& sink);
void emit_tiled(uint32_t n, uint32_t d, const TraceSemantics& s, TraceSink& sink);
Arena emit_rmm(uint32_t n, const TraceSemantics& s, TraceSink& sink, bool managed);
Arena emit_strassen(uint32_t n, const TraceSemantics& s, TraceSink& sink, bool managed);

// Dispatch on kernel kind; returns the arena used for temporaries so callers
// can read footprint metadata (allocations, high water).
Arena emit_kernel(Kernel k, uint32_t n, uint32_t tile, const TraceSemantics& s, TraceSink& sink);

MemoryTrace make_trace(Kernel k, uint32_t n, uint32_t tile = 0,
                       const TraceSemantics& s = TraceSemantics{});

inline MemoryTrace naive_trace(uint32_t n, const TraceSemantics& s = {}) {
    return make_trace(Kernel::naive, n, 0, s);
}
inline MemoryTrace tiled_trace(uint32_t n, uint32_t d, const TraceSemantics& s = {}) {
    return make_trace(Kernel::tiled, n, d, s);
}
inline MemoryTrace rmm_trace(uint32_t n, const TraceSemantics& s = {}) {
    return make_trace(Kernel::rmm, n, 0, s);
}
inline MemoryTrace rmm_managed_trace(uint32_t n, const TraceSemantics& s = {}) {
    return make_trace(Kernel::rmm_managed, n, 0, s);
}
inline MemoryTrace strassen_trace(uint32_t n, const TraceSemantics& s = {}) {
    return make_trace(Kernel::strassen, n, 0, s);
}
inline MemoryTrace strassen_managed_trace(uint32_t n, const TraceSemantics& s = {}) {
    return make_trace(Kernel::strassen_managed, n, 0, s);
}

struct Footprint {
    uint64_t peak_live = 0;
    uint64_t total_distinct = 0;  // logical data when known, else distinct ids
};

// Uses generator metadata when present; for raw traces both numbers fall back
// to the distinct-id count (exact for unmanaged traces, and equal to peak
// liveness for LIFO-managed ones).
Footprint footprint(const MemoryTrace& t);

uint64_t distinct_ids(const MemoryTrace& t);

// Checks that no event touches an id outside its alloc..free lifetime and
// that frees are sane. Generators emit alloc/free through the sink channel;
// run_validated regenerates a kernel against the checker.
struct ValidationResult {
    bool ok = true;
    std::string error;
};
ValidationResult validate_kernel(Kernel k, uint32_t n, uint32_t tile = 0,
                                 const TraceSemantics& s = TraceSemantics{});

bool is_pow2(uint64_t v);

}  // namespace dmd
