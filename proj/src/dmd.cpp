#include "dmd/dmd.hpp"

#include "dmd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dmd {

CostModel CostModel::staircase(std::vector<Level> levels) {
    if (levels.empty()) throw std::invalid_argument("staircase needs at least one level");
    for (size_t i = 1; i < levels.size(); ++i)
        if (levels[i].capacity <= levels[i - 1].capacity)
            throw std::invalid_argument("staircase capacities must be strictly increasing");
    CostModel m;
    m.kind = Kind::staircase;
    m.levels = std::move(levels);
    return m;
}

double CostModel::operator()(uint64_t distance) const {
    if (kind == Kind::geometric_sqrt) return std::sqrt(double(distance));
    for (const Level& l : levels)
        if (distance <= l.capacity) return l.latency;
    return levels.back().latency;
}

CostModel staircase_from_json(const std::string& json_text) {
    auto j = nlohmann::json::parse(json_text);
    std::vector<CostModel::Level> levels;
    for (auto& item : j)
        levels.push_back({item.at("capacity").get<uint64_t>(), item.at("latency").get<double>()});
    return CostModel::staircase(std::move(levels));
}

CostModel load_staircase(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cost file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return staircase_from_json(ss.str());
}

double dmd_value(const ReuseDistribution& dist, const CostModel& cost, ColdPolicy policy,
                 uint64_t data_footprint) {
    double sum = 0;
    for (auto& [d, c] : dist.counts) sum += double(c) * cost(d);
    if (policy == ColdPolicy::charge_footprint) sum += double(dist.cold) * cost(data_footprint);
    return sum;
}

DmdReport make_report(const std::string& kernel, uint32_t n, uint32_t tile,
                      const ReuseDistribution& dist, uint64_t data_footprint,
                      const CostModel& cost, ColdPolicy policy) {
    DmdReport r;
    r.kernel = kernel;
    r.n = n;
    r.tile = tile;
    r.dmd = dmd_value(dist, cost, policy, data_footprint);
    r.reuses = dist.reuses();
    r.data_footprint = data_footprint;
    r.max_distance = dist.max_distance();
    r.cold = dist.cold;
    r.total_accesses = dist.total_accesses;
    r.cold_policy = policy;
    r.cost_kind = cost.kind == CostModel::Kind::geometric_sqrt ? "sqrt" : "staircase";
    return r;
}

std::string DmdReport::json() const {
    nlohmann::json j{
        {"kernel", kernel},
        {"n", n},
        {"tile", tile},
        {"dmd", dmd},
        {"reuses", reuses},
        {"footprint", data_footprint},
        {"max_distance", max_distance},
        {"cold", cold},
        {"total_accesses", total_accesses},
        {"cold_policy", cold_policy == ColdPolicy::exclude ? "exclude" : "charge_footprint"},
        {"cost", cost_kind},
    };
    if (bound_high > 0) {
        if (bound_low > 0) j["bound_low"] = bound_low;
        j["bound_high"] = bound_high;
    }
    return j.dump(2);
}

void attach_reference_bounds(DmdReport& r) {
    if (r.n < 2) return;
    if (r.kernel == "naive") {
        r.bound_low = r.bound_high = naive_dmd_formula(r.n);
    } else if (r.kernel == "tiled" && r.tile > 0) {
        std::tie(r.bound_low, r.bound_high) = tiled_dmd_bounds(r.n, r.tile);
    } else if (r.kernel == "rmm") {
        std::tie(r.bound_low, r.bound_high) = rmm_dmd_bounds(r.n);
    } else if (r.kernel == "rmm_managed") {
        r.bound_high = rmm_managed_dmd_upper(r.n);
    } else if (r.kernel == "strassen") {
        r.bound_high = strassen_dmd_upper(r.n);
    } else if (r.kernel == "strassen_managed") {
        r.bound_high = strassen_managed_dmd_upper(r.n);
    }
}

bool dmd_bounds_check(const DmdReport& r) {
    if (r.cost_kind != "sqrt" || r.cold_policy != ColdPolicy::exclude) return false;
    if (r.max_distance > r.data_footprint) return false;  // impossible distribution
    const double eps = 1e-9 * std::max(1.0, r.dmd);
    double lo = double(r.reuses);
    double hi = double(r.reuses) * std::sqrt(double(r.data_footprint));
    return lo <= r.dmd + eps && r.dmd <= hi + eps;
}

// ---------------------------------------------------------------------------
// closed forms
// ---------------------------------------------------------------------------

double naive_dmd_formula(uint32_t n) {
    if (n < 2) throw std::invalid_argument("formula defined for n >= 2");
    double nd = n;
    double n3 = nd * nd * nd;
    double sum = n3 * std::sqrt(2 * nd);
    sum += (n3 - 2 * nd * nd + nd) * std::sqrt(nd * nd + 2 * nd);
    for (uint32_t i = 1; i <= n - 1; ++i) sum += 2 * nd * std::sqrt(nd * nd + nd + i);
    sum += nd * std::sqrt(nd * nd + nd);
    return sum;
}

std::pair<double, double> tiled_dmd_bounds(uint32_t n, uint32_t d) {
    if (d == 0 || n % d != 0) throw std::invalid_argument("tile must divide n");
    double nd = n, dd = d;
    double n4 = nd * nd * nd * nd, n3 = nd * nd * nd;
    double lo = n4 / dd + n3 * dd;
    double hi = 2 * std::sqrt(3.0) * n4 / dd + std::sqrt(2.0) * n3 * dd;
    return {lo, hi};
}

namespace {
double pown(uint32_t n, double e) { return std::pow(double(n), e); }
void check_bound_n(uint32_t n) {
    if (n < 2 || !is_pow2(n)) throw std::invalid_argument("n must be a power of two >= 2");
}
}  // namespace

std::pair<double, double> rmm_dmd_bounds(uint32_t n) {
    check_bound_n(n);
    return {12.82 * pown(n, 3.5), 13.46 * pown(n, 3.5)};
}
double rmm_managed_dmd_upper(uint32_t n) {
    check_bound_n(n);
    return 11.85 * pown(n, 10.0 / 3.0);
}
double strassen_dmd_upper(uint32_t n) {
    check_bound_n(n);
    return 6.51 * pown(n, 2.0 + std::log2(7.0) / 2.0);
}
double strassen_managed_dmd_upper(uint32_t n) {
    check_bound_n(n);
    return 15.36 * pown(n, 3.23);
}

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& samples) {
    if (samples.size() < 4) throw std::invalid_argument("need at least 4 samples");
    double lo = samples[0].first, hi = samples[0].first;
    for (auto& [n, _] : samples) {
        lo = std::min(lo, n);
        hi = std::max(hi, n);
    }
    if (hi < 8 * lo) throw std::invalid_argument("samples must span at least 3 octaves");
    ExponentFit fit;
    fit.samples = samples;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [n, v] : samples) {
        double x = std::log(n), y = std::log(v);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double m = double(samples.size());
    fit.exponent = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    fit.coefficient = std::exp((sy - fit.exponent * sx) / m);
    for (auto& [n, v] : samples) {
        double pred = fit.coefficient * std::pow(n, fit.exponent);
        fit.residual = std::max(fit.residual, std::abs(v - pred) / pred);
    }
    return fit;
}

std::vector<std::pair<uint64_t, double>> latency_curve(const CostModel& cost, uint64_t max_pos) {
    std::vector<std::pair<uint64_t, double>> out;
    out.reserve(max_pos);
    for (uint64_t p = 1; p <= max_pos; ++p) out.emplace_back(p, cost(p));
    return out;
}

}  // namespace dmd
