#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dmd/stackdist.hpp"
#include "dmd/trace.hpp"

namespace dmd::rmm_model {

// Fully analytical reuse-distance distribution for recursive MM, computed as
// a walk over the recursion tree's structural classes instead of a trace:
// per level l (sub-matrix dimension), a fixed pair of temporary-distance
// grids (first/second member of an addition group), one input-A distance
// function F over an l x 2l pattern grid, and one input-B distance function
// G over a 2l x 2l pattern grid, each carrying a closed-form multiplicity.
//
// Every constant below was resolved against the trace oracle at n in {2,4,8}
// and held out-validated at n in {16,32,64} (exact multiset equality).

uint64_t temp_count(uint32_t n);                  // T_n = n^2 (2n - 1)
uint64_t temp_count_sum_form(uint32_t n);         // Sigma 8^(log n - i) 4^i cross-check
uint64_t strassen_temp_count(uint32_t n);         // TS_n = 17/3 (n^lg7 - n^2)
uint64_t strassen_temp_count_sum_form(uint32_t n);
uint64_t node_count(uint32_t n, uint32_t x);      // #LX = n^3 / x^3
uint64_t reuse_count(uint32_t n, uint32_t m);     // RC(n,m) = n / 2m, m <= n/2

// Total data touched by one complete l x l call: own temporaries + both
// input views.
inline uint64_t call_data(uint64_t l) { return 2 * l * l * l + l * l; }

// Resolved per-level constants in corner/shift form: the corner values of
// the two temporary grids plus their half-split drops. Derived quantities
// (see dt_entry); kept together as the calibration record.
struct CalibrationTable {
    uint64_t d1(uint32_t l) const;     // DT1(1,1)
    uint64_t d2(uint32_t l) const;     // DT1(l/2, l/2+1)
    uint64_t d3(uint32_t l) const;     // DT2(1,1)
    uint64_t d4(uint32_t l) const;     // DT2(l/2, l/2+1)
    uint64_t phi(uint32_t l) const;    // DT1 top/bottom half drop, column 1
    uint64_t delta(uint32_t l) const;  // DT1 half drop, column l/2+1
    uint64_t gamma(uint32_t l) const;  // DT2 half drop, column 1
    uint64_t omega(uint32_t l) const;  // DT2 half drop, column l/2+1
    uint64_t extent(uint32_t l) const; // fitted D_N: 2l^3 + 3l^2/4 + 1
};

// Reuse distance of element (i,j) of the result written by an l x l call
// that is the first (which=1) or second (which=2) member of its parent's
// addition group. 1-based indices.
uint64_t dt_entry(int which, uint32_t l, uint32_t i, uint32_t j);

struct DtMatrix {
    uint32_t level = 0;
    int which = 1;
    std::vector<uint64_t> entries;  // row-major level x level
    uint64_t at(uint32_t i, uint32_t j) const { return entries[size_t(i - 1) * level + (j - 1)]; }
};
DtMatrix dt_matrix(uint32_t l, int which);

// Reuse-distance decomposition for input elements at level-l reuses.
// F covers matrix A with pattern indices i in 1..l, j in 1..2l (columns
// beyond l are the second-member pair); G covers matrix B with i,j in 1..2l.
// f_T/g_T count temporaries in the reuse window, f_ab/g_ab count input
// elements (self included); F = f_T + f_ab and G = g_T + g_ab with the
// modular column remap applied to the f_ab/g_T argument.
uint64_t f_T(uint32_t i, uint32_t j, uint32_t l);
uint64_t f_ab(uint32_t i, uint32_t j, uint32_t l);   // j in 1..l
uint64_t g_T(uint32_t i, uint32_t j, uint32_t l);    // j in 1..l, i in 1..2l
uint64_t g_ab(uint32_t i, uint32_t j, uint32_t l);
uint64_t F(uint32_t i, uint32_t j, uint32_t l);
uint64_t G(uint32_t i, uint32_t j, uint32_t l);

// Recursion-base pattern grids of the input components net of their leading
// full-view terms (f_ab - 4l^2 at l = 2, g_ab - 6l^2 at l = 1).
int64_t f_ab_prime(uint32_t i, uint32_t j);
int64_t g_ab_prime(uint32_t i, uint32_t j);

// The full distribution of rmm_trace(n) without generating a trace.
// O(n^2 log n) formula evaluations.
ReuseDistribution compute_rmm_rdd(uint32_t n);

// Structural tag of one access class; used for divergence reporting.
struct ClassTag {
    enum class Kind : uint8_t { dt, f, g } kind;
    int which = 0;        // dt only
    uint32_t level = 0;
    uint32_t i = 0, j = 0;
    std::string str() const;
};

struct VerificationReport {
    bool equal = false;
    uint32_t n = 0;
    uint64_t model_total = 0, oracle_total = 0;
    uint64_t model_cold = 0, oracle_cold = 0;
    std::optional<uint64_t> first_diverging_distance;
    std::vector<ClassTag> wrong_classes;  // capped
    std::string describe() const;
};

// Compares compute_rmm_rdd(n) against the stack-distance oracle run on an
// instrumented trace; on mismatch pinpoints the structural classes whose
// predicted distances are wrong.
VerificationReport verify_model(uint32_t n);

// Instrumented generation: per-class measured distances (each class of the
// trace has a single exact distance; `uniform` is false if the trace ever
// disagrees with that). Exposed for tests and calibration tooling.
struct MeasuredClasses {
    bool uniform = true;
    std::vector<std::pair<ClassTag, uint64_t>> distances;
};
MeasuredClasses measure_classes(uint32_t n);

}  // namespace dmd::rmm_model
