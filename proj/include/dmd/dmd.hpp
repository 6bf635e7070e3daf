#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dmd/stackdist.hpp"
#include "dmd/trace.hpp"

namespace dmd {

// Per-access cost as a function of reuse distance (LRU stack position).
// Either the geometric sqrt(d) stack or a finite staircase of
// (capacity, latency) levels; positions beyond the last level pay the last
// latency.
struct CostModel {
    enum class Kind : uint8_t { geometric_sqrt, staircase };
    struct Level {
        uint64_t capacity;
        double latency;
    };

    Kind kind = Kind::geometric_sqrt;
    std::vector<Level> levels;

    static CostModel sqrt_cost() { return CostModel{}; }
    static CostModel staircase(std::vector<Level> levels);

    double operator()(uint64_t distance) const;
};

CostModel staircase_from_json(const std::string& json_text);
CostModel load_staircase(const std::string& path);

enum class ColdPolicy : uint8_t { exclude, charge_footprint };

// Sum of cost(d) over all reuses; cold accesses add cold * cost(footprint)
// under charge_footprint.
double dmd_value(const ReuseDistribution& dist, const CostModel& cost,
                 ColdPolicy policy = ColdPolicy::exclude, uint64_t data_footprint = 0);

struct DmdReport {
    std::string kernel;
    uint32_t n = 0;
    uint32_t tile = 0;
    double dmd = 0;
    uint64_t reuses = 0;         // R
    uint64_t data_footprint = 0; // g
    uint64_t max_distance = 0;
    uint64_t cold = 0;
    uint64_t total_accesses = 0;
    ColdPolicy cold_policy = ColdPolicy::exclude;
    std::string cost_kind = "sqrt";
    // reference asymptotic window for this kernel, when one applies
    double bound_low = 0;
    double bound_high = 0;
    std::string json() const;
};

DmdReport make_report(const std::string& kernel, uint32_t n, uint32_t tile,
                      const ReuseDistribution& dist, uint64_t data_footprint,
                      const CostModel& cost, ColdPolicy policy);

// Fills bound_low/bound_high from the closed-form evaluators matching the
// report's kernel (upper-only bounds leave bound_low at 0).
void attach_reference_bounds(DmdReport& r);

// R <= DMD <= R*sqrt(g) with the sqrt cost and excluded colds, plus the
// feasibility check that no distance exceeds the data footprint.
bool dmd_bounds_check(const DmdReport& r);

// Closed-form evaluators.
double naive_dmd_formula(uint32_t n);                       // exact four-term expression
std::pair<double, double> tiled_dmd_bounds(uint32_t n, uint32_t d);
std::pair<double, double> rmm_dmd_bounds(uint32_t n);       // 12.82/13.46 * n^3.5
double rmm_managed_dmd_upper(uint32_t n);                   // 11.85 * n^(10/3)
double strassen_dmd_upper(uint32_t n);                      // 6.51 * n^(2 + lg7/2)
double strassen_managed_dmd_upper(uint32_t n);              // 15.36 * n^3.23

struct ExponentFit {
    std::vector<std::pair<double, double>> samples;  // (n, dmd)
    double exponent = 0;
    double coefficient = 0;
    double residual = 0;  // max relative deviation from the fitted power law
};
// Needs at least 4 distinct sizes spanning at least 3 octaves.
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& samples);

std::vector<std::pair<uint64_t, double>> latency_curve(const CostModel& cost, uint64_t max_pos);

}  // namespace dmd
