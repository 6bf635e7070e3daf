#include "dmd/rmm_model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "dmd/kernels.hpp"

namespace dmd::rmm_model {

namespace {

uint32_t ilog2(uint64_t v) {
    uint32_t k = 0;
    while ((uint64_t(1) << (k + 1)) <= v) ++k;
    return k;
}

uint64_t sq(uint64_t v) { return v * v; }

void require_pow2(uint32_t n) {
    if (!is_pow2(n)) throw std::invalid_argument("n must be a power of two");
}

}  // namespace

uint64_t temp_count(uint32_t n) {
    require_pow2(n);
    return uint64_t(n) * n * (2 * uint64_t(n) - 1);
}

uint64_t temp_count_sum_form(uint32_t n) {
    require_pow2(n);
    uint32_t k = ilog2(n);
    uint64_t sum = 0;
    for (uint32_t i = 0; i <= k; ++i) {
        uint64_t eights = 1;
        for (uint32_t t = 0; t < k - i; ++t) eights *= 8;
        sum += eights * sq(uint64_t(1) << i);
    }
    return sum;
}

uint64_t strassen_temp_count(uint32_t n) {
    require_pow2(n);
    uint64_t p = 1;
    for (uint32_t t = 0; t < ilog2(n); ++t) p *= 7;  // n^(lg 7)
    return 17 * (p - uint64_t(n) * n) / 3;
}

uint64_t strassen_temp_count_sum_form(uint32_t n) {
    require_pow2(n);
    uint32_t k = ilog2(n);
    uint64_t sum = 0;
    for (uint32_t i = 1; i <= k; ++i) {
        uint64_t sevens = 1;
        for (uint32_t t = 0; t < k - i; ++t) sevens *= 7;
        sum += 17 * sq(uint64_t(1) << i) / 4 * sevens;
    }
    return sum;
}

uint64_t node_count(uint32_t n, uint32_t x) {
    require_pow2(n);
    require_pow2(x);
    if (x > n) throw std::invalid_argument("x must not exceed n");
    uint64_t q = uint64_t(n) / x;
    return q * q * q;
}

uint64_t reuse_count(uint32_t n, uint32_t m) {
    require_pow2(n);
    require_pow2(m);
    if (2 * uint64_t(m) > n) throw std::invalid_argument("no level-m reuse exists for m > n/2");
    return uint64_t(n) / (2 * m);
}

// ---------------------------------------------------------------------------
// temporary grids
// ---------------------------------------------------------------------------

uint64_t dt_entry(int which, uint32_t l, uint32_t i, uint32_t j) {
    require_pow2(l);
    if (which != 1 && which != 2) throw std::invalid_argument("which must be 1 or 2");
    if (i < 1 || i > l || j < 1 || j > l) throw std::invalid_argument("index out of range");
    if (l == 1) return which == 1 ? 4 : 2;

    uint64_t s = l / 2;
    bool gi = i > s, gj = j > s;
    int g = 2 * int(gi) + int(gj) + 1;  // quadrant 11,12,21,22 -> 1..4
    uint64_t r = (uint64_t(i) - 1) % s + 1;
    uint64_t c = (uint64_t(j) - 1) % s + 1;
    uint64_t pq = (r - 1) * s + (c - 1);
    uint64_t rest = s * s - pq - 1;  // elements after this one in its addition group

    // data the call still touches after writing (i,j): the rest of the
    // current group, then the remaining children and groups
    static constexpr uint64_t kInFactor[4] = {8, 6, 4, 0};  // later input views, in s^2
    uint64_t suffix = 3 * rest + uint64_t(4 - g) * (2 * temp_count(uint32_t(s)) + s * s) +
                      kInFactor[g - 1] * s * s;

    // result cells both row-major-before (i,j) and already written
    uint64_t before_written = pq;
    if (g == 2) before_written += r * s;
    if (g == 3) before_written += 2 * s * s;
    if (g == 4) before_written += 2 * s * s + r * s;

    uint64_t p = (uint64_t(i) - 1) * l + (j - 1);  // parent-group elements already consumed
    if (which == 1) return 1 + suffix + call_data(l) + before_written + p;
    return 2 + suffix + before_written + 2 * p;
}

DtMatrix dt_matrix(uint32_t l, int which) {
    DtMatrix m;
    m.level = l;
    m.which = which;
    m.entries.resize(size_t(l) * l);
    for (uint32_t i = 1; i <= l; ++i)
        for (uint32_t j = 1; j <= l; ++j)
            m.entries[size_t(i - 1) * l + (j - 1)] = dt_entry(which, l, i, j);
    return m;
}

uint64_t CalibrationTable::d1(uint32_t l) const { return dt_entry(1, l, 1, 1); }
uint64_t CalibrationTable::d2(uint32_t l) const { return dt_entry(1, l, l / 2, l / 2 + 1); }
uint64_t CalibrationTable::d3(uint32_t l) const { return dt_entry(2, l, 1, 1); }
uint64_t CalibrationTable::d4(uint32_t l) const { return dt_entry(2, l, l / 2, l / 2 + 1); }
uint64_t CalibrationTable::phi(uint32_t l) const { return d1(l) - dt_entry(1, l, l / 2 + 1, 1); }
uint64_t CalibrationTable::delta(uint32_t l) const {
    return d2(l) - dt_entry(1, l, l, l / 2 + 1);
}
uint64_t CalibrationTable::gamma(uint32_t l) const { return d3(l) - dt_entry(2, l, l / 2 + 1, 1); }
uint64_t CalibrationTable::omega(uint32_t l) const {
    return d4(l) - dt_entry(2, l, l / 2 + 1, l / 2 + 1);
}
uint64_t CalibrationTable::extent(uint32_t l) const {
    uint64_t ll = l;
    return 2 * ll * ll * ll + 3 * ll * ll / 4 + 1;
}

// ---------------------------------------------------------------------------
// input reuse windows
// ---------------------------------------------------------------------------

namespace {

// Cardinalities of the window fringe sets for one input element: data the
// enclosing call touches after the element's last read (X) or before its
// first read (Y), split into inner temporaries, the call's own result cells,
// and the A/B view projections. Walked bottom-up along the element's
// quadrant chain.
struct Cards {
    uint64_t inner = 0, own = 0, a = 0, b = 0;
};

enum class Fringe { x_of_a, y_of_a, x_of_b, y_of_b };

Cards fringe_cards(Fringe kind, uint32_t a_pos, uint32_t b_pos, uint32_t l) {
    Cards st;
    switch (kind) {
        case Fringe::x_of_a: st = {0, 1, 0, 1}; break;
        case Fringe::y_of_a: st = {0, 0, 0, 0}; break;
        case Fringe::x_of_b: st = {0, 1, 0, 0}; break;
        case Fringe::y_of_b: st = {0, 0, 1, 0}; break;
    }
    uint64_t ii = a_pos - 1, jj = b_pos - 1;
    for (uint64_t m = 1; m < l; m *= 2) {
        int q = 2 * int((ii / m) & 1) + int((jj / m) & 1) + 1;  // 11,12,21,22 -> 1..4
        uint64_t m2 = m * m;
        uint64_t T = temp_count(uint32_t(m));
        Cards next;
        switch (kind) {
            case Fringe::x_of_a:
                switch (q) {
                    case 1: next = {st.inner + m2 + 5 * T, 3 * m2, st.a + 3 * m2, 4 * m2}; break;
                    case 2: next = {st.inner + 2 * m2 + 4 * T, 3 * m2, st.a + 2 * m2, 4 * m2}; break;
                    case 3: next = {st.inner + m2 + T, m2, st.a + m2, st.b + m2}; break;
                    default: next = {st.inner + 2 * m2, m2, st.a, st.b}; break;
                }
                break;
            case Fringe::y_of_a:
                switch (q) {
                    case 1: next = {st.inner + st.own, 0, st.a, st.b}; break;
                    case 2: next = {T + st.inner + st.own, 0, m2 + st.a, m2 + st.b}; break;
                    case 3: next = {4 * T + st.inner + st.own, 2 * m2, 2 * m2 + st.a, 4 * m2}; break;
                    default: next = {5 * T + st.inner + st.own, 2 * m2, 3 * m2 + st.a, 4 * m2}; break;
                }
                break;
            case Fringe::x_of_b:
                switch (q) {
                    case 1: next = {st.inner + m2 + 3 * T, 2 * m2, 2 * m2, 3 * m2 + st.b}; break;
                    case 3: next = {st.inner + 2 * m2 + 2 * T, 2 * m2, 2 * m2, 2 * m2 + st.b}; break;
                    case 2: next = {st.inner + m2 + T, m2, m2 + st.a, m2 + st.b}; break;
                    default: next = {st.inner + 2 * m2, m2, st.a, st.b}; break;
                }
                break;
            case Fringe::y_of_b:
                switch (q) {
                    case 1: next = {st.inner + st.own, 0, st.a, st.b}; break;
                    case 3: next = {T + st.inner + st.own, 0, m2 + st.a, m2 + st.b}; break;
                    case 2: next = {2 * T + st.inner + st.own, m2, 2 * m2, 2 * m2 + st.b}; break;
                    default: next = {3 * T + st.inner + st.own, m2, 2 * m2, 3 * m2 + st.b}; break;
                }
                break;
        }
        st = next;
    }
    return st;
}

void check_f_args(uint32_t i, uint32_t j, uint32_t l, uint32_t jmax) {
    if (!is_pow2(l)) throw std::invalid_argument("level must be a power of two");
    if (i < 1 || j < 1 || j > jmax) throw std::invalid_argument("pattern index out of range");
}

}  // namespace

uint64_t f_T(uint32_t i, uint32_t j, uint32_t l) {
    check_f_args(i, j, l, 2 * l);
    if (i > l) throw std::invalid_argument("pattern index out of range");
    uint32_t b = (j - 1) % l + 1;
    Cards x = fringe_cards(Fringe::x_of_a, i, b, l);
    Cards y = fringe_cards(Fringe::y_of_a, i, b, l);
    uint64_t ll = uint64_t(l) * l;
    return x.inner + y.inner + y.own + temp_count(l) + (j <= l ? 2 : 3) * ll;
}

uint64_t f_ab(uint32_t i, uint32_t j, uint32_t l) {
    check_f_args(i, j, l, l);
    if (i > l) throw std::invalid_argument("pattern index out of range");
    Cards x = fringe_cards(Fringe::x_of_a, i, j, l);
    Cards y = fringe_cards(Fringe::y_of_a, i, j, l);
    return 1 + x.a + x.b + y.a + y.b + 2 * uint64_t(l) * l;
}

uint64_t F(uint32_t i, uint32_t j, uint32_t l) {
    return f_T(i, j, l) + f_ab(i, (j - 1) % l + 1, l);
}

uint64_t g_T(uint32_t i, uint32_t j, uint32_t l) {
    check_f_args(i, j, l, l);
    if (i > 2 * l) throw std::invalid_argument("pattern index out of range");
    bool gi = i > l;
    uint32_t a = (i - 1) % l + 1;
    Cards x = fringe_cards(Fringe::x_of_b, a, j, l);
    Cards y = fringe_cards(Fringe::y_of_b, a, j, l);
    return x.inner + y.inner + y.own + 3 * temp_count(l) + (3 + uint64_t(gi)) * uint64_t(l) * l;
}

uint64_t g_ab(uint32_t i, uint32_t j, uint32_t l) {
    check_f_args(i, j, l, 2 * l);
    if (i > 2 * l) throw std::invalid_argument("pattern index out of range");
    bool gi = i > l, gj = j > l;
    uint32_t a = (i - 1) % l + 1, b = (j - 1) % l + 1;
    Cards x = fringe_cards(Fringe::x_of_b, a, b, l);
    Cards y = fringe_cards(Fringe::y_of_b, a, b, l);
    uint64_t across = gj ? x.a : y.a;
    return 1 + x.b + y.b + across + (5 + uint64_t(gi != gj)) * uint64_t(l) * l;
}

uint64_t G(uint32_t i, uint32_t j, uint32_t l) {
    return g_T(i, (j - 1) % l + 1, l) + g_ab(i, j, l);
}

int64_t f_ab_prime(uint32_t i, uint32_t j) { return int64_t(f_ab(i, j, 2)) - 16; }
int64_t g_ab_prime(uint32_t i, uint32_t j) { return int64_t(g_ab(i, j, 1)) - 6; }

// ---------------------------------------------------------------------------
// full distribution
// ---------------------------------------------------------------------------

ReuseDistribution compute_rmm_rdd(uint32_t n) {
    require_pow2(n);
    uint64_t nn = n;
    ReuseDistribution out;
    for (uint64_t l = 1; 2 * l <= nn; l *= 2) {
        uint64_t dt_mult = nn * nn * nn / (2 * l * l * l);  // #Ll / 2
        uint64_t f_mult = dt_mult / 2;                      // (n/2l)(n^2/2l^2)
        uint64_t g_mult = dt_mult / 4;                      // (n/2l)(n^2/4l^2)
        for (uint32_t i = 1; i <= l; ++i)
            for (uint32_t j = 1; j <= l; ++j) {
                out.counts[dt_entry(1, uint32_t(l), i, j)] += dt_mult;
                out.counts[dt_entry(2, uint32_t(l), i, j)] += dt_mult;
            }
        for (uint32_t i = 1; i <= l; ++i)
            for (uint32_t j = 1; j <= 2 * l; ++j) out.counts[F(i, j, uint32_t(l))] += f_mult;
        for (uint32_t i = 1; i <= 2 * l; ++i)
            for (uint32_t j = 1; j <= 2 * l; ++j) out.counts[G(i, j, uint32_t(l))] += g_mult;
    }
    out.cold = temp_count(n) + 2 * nn * nn;
    out.total_accesses = 6 * nn * nn * nn - 3 * nn * nn;
    return out;
}

// ---------------------------------------------------------------------------
// instrumented trace and verification
// ---------------------------------------------------------------------------

std::string ClassTag::str() const {
    std::ostringstream os;
    switch (kind) {
        case Kind::dt: os << "DT" << which << " level=" << level; break;
        case Kind::f: os << "F level=" << level; break;
        case Kind::g: os << "G level=" << level; break;
    }
    os << " (" << i << "," << j << ")";
    return os.str();
}

namespace {

struct TaggedEvent {
    DatumId d;
    bool tagged = false;
    ClassTag tag{};
};

// Independent instrumented RMM walk (same semantics as kernels::emit_rmm;
// the equivalence is asserted in tests). Tags every temp read with its tree
// position; input-read tags are derived from coordinates by the consumer.
template <typename Emit>
class InstrumentedRmm {
public:
    InstrumentedRmm(uint32_t n, Emit& emit) : n_(n), emit_(emit) {}

    void run() { multiply(0, 0, 0, 0, n_); }

private:
    uint32_t n_;
    Emit& emit_;
    uint64_t next_id_ = 0;

    std::vector<uint64_t> multiply(uint32_t ar, uint32_t ac, uint32_t br, uint32_t bc,
                                   uint32_t sz) {
        std::vector<uint64_t> C(size_t(sz) * sz);
        for (auto& id : C) id = next_id_++;
        if (sz == 1) {
            emit_(TaggedEvent{DatumId::make(Region::input_a, uint64_t(ar) * n_ + ac)});
            emit_(TaggedEvent{DatumId::make(Region::input_b, uint64_t(br) * n_ + bc)});
            emit_(TaggedEvent{DatumId::make(Region::temp, C[0])});
            return C;
        }
        uint32_t h = sz / 2;
        struct Child { uint32_t ar, ac, br, bc; };
        const Child kids[8] = {
            {0, 0, 0, 0}, {0, h, h, 0}, {0, 0, 0, h}, {0, h, h, h},
            {h, 0, 0, 0}, {h, h, h, 0}, {h, 0, 0, h}, {h, h, h, h},
        };
        for (uint32_t g = 0; g < 4; ++g) {
            const Child& a = kids[2 * g];
            const Child& b = kids[2 * g + 1];
            auto t1 = multiply(ar + a.ar, ac + a.ac, br + a.br, bc + a.bc, h);
            auto t2 = multiply(ar + b.ar, ac + b.ac, br + b.br, bc + b.bc, h);
            uint32_t qr = (g / 2) * h, qc = (g % 2) * h;
            for (uint32_t r = 0; r < h; ++r)
                for (uint32_t c = 0; c < h; ++c) {
                    TaggedEvent e1{DatumId::make(Region::temp, t1[size_t(r) * h + c]), true,
                                   {ClassTag::Kind::dt, 1, h, r + 1, c + 1}};
                    TaggedEvent e2{DatumId::make(Region::temp, t2[size_t(r) * h + c]), true,
                                   {ClassTag::Kind::dt, 2, h, r + 1, c + 1}};
                    emit_(e1);
                    emit_(e2);
                    emit_(TaggedEvent{DatumId::make(Region::temp,
                                                    C[size_t(qr + r) * sz + (qc + c)])});
                }
        }
        return C;
    }
};

struct ClassKey {
    uint8_t kind;
    uint8_t which;
    uint32_t level, i, j;
    auto operator<=>(const ClassKey&) const = default;
};

ClassKey key_of(const ClassTag& t) {
    return ClassKey{uint8_t(t.kind), uint8_t(t.which), t.level, t.i, t.j};
}

struct ClassScan {
    std::map<ClassKey, uint64_t> measured;
    bool uniform = true;
    ReuseDistribution oracle;
};

// One streaming pass: oracle histogram plus per-class measured distances.
ClassScan scan_classes(uint32_t n) {
    ClassScan out;
    ReuseHistogramBuilder builder;
    std::vector<uint32_t> a_seen(size_t(n) * n, 0), b_seen(size_t(n) * n, 0);

    auto emit = [&](const TaggedEvent& e) {
        auto dist = builder.step(e.d);
        ClassTag tag;
        bool tagged = e.tagged;
        tag = e.tag;
        if (e.d.region() != Region::temp) {
            auto& seen = e.d.region() == Region::input_a ? a_seen : b_seen;
            uint32_t t = seen[e.d.index()]++;
            if (t > 0) {
                uint32_t level = t & (~t + 1);  // ruler sequence of reuse levels
                uint32_t r = uint32_t(e.d.index() / n), c = uint32_t(e.d.index() % n);
                if (e.d.region() == Region::input_a)
                    tag = {ClassTag::Kind::f, 0, level, r % level + 1, c % (2 * level) + 1};
                else
                    tag = {ClassTag::Kind::g, 0, level, r % (2 * level) + 1, c % (2 * level) + 1};
                tagged = true;
            }
        }
        if (!dist) return;
        if (!tagged) return;  // only the root result cells are untagged, and they are cold
        auto [it, fresh] = out.measured.emplace(key_of(tag), *dist);
        if (!fresh && it->second != *dist) out.uniform = false;
    };
    InstrumentedRmm walker(n, emit);
    walker.run();
    out.oracle = builder.take();
    return out;
}

uint64_t predict(const ClassKey& k) {
    switch (ClassTag::Kind(k.kind)) {
        case ClassTag::Kind::dt: return dt_entry(k.which, k.level, k.i, k.j);
        case ClassTag::Kind::f: return F(k.i, k.j, k.level);
        default: return G(k.i, k.j, k.level);
    }
}

}  // namespace

MeasuredClasses measure_classes(uint32_t n) {
    require_pow2(n);
    ClassScan scan = scan_classes(n);
    MeasuredClasses out;
    out.uniform = scan.uniform;
    for (auto& [k, d] : scan.measured) {
        ClassTag t{ClassTag::Kind(k.kind), k.which, k.level, k.i, k.j};
        out.distances.emplace_back(t, d);
    }
    return out;
}

VerificationReport verify_model(uint32_t n) {
    require_pow2(n);
    VerificationReport rep;
    rep.n = n;

    ReuseDistribution model = compute_rmm_rdd(n);
    ClassScan scan = scan_classes(n);

    rep.model_total = model.total_accesses;
    rep.oracle_total = scan.oracle.total_accesses;
    rep.model_cold = model.cold;
    rep.oracle_cold = scan.oracle.cold;
    rep.equal = (model.counts == scan.oracle.counts) && rep.model_cold == rep.oracle_cold &&
                rep.model_total == rep.oracle_total && scan.uniform;
    if (rep.equal) return rep;

    // lowest distance whose multiplicity differs
    auto mi = model.counts.begin();
    auto oi = scan.oracle.counts.begin();
    while (mi != model.counts.end() || oi != scan.oracle.counts.end()) {
        if (oi == scan.oracle.counts.end() || (mi != model.counts.end() && mi->first < oi->first)) {
            rep.first_diverging_distance = mi->first;
            break;
        }
        if (mi == model.counts.end() || oi->first < mi->first) {
            rep.first_diverging_distance = oi->first;
            break;
        }
        if (mi->second != oi->second) {
            rep.first_diverging_distance = mi->first;
            break;
        }
        ++mi, ++oi;
    }
    for (auto& [k, measured] : scan.measured) {
        if (predict(k) != measured) {
            rep.wrong_classes.push_back({ClassTag::Kind(k.kind), k.which, k.level, k.i, k.j});
            if (rep.wrong_classes.size() >= 16) break;
        }
    }
    return rep;
}

std::string VerificationReport::describe() const {
    std::ostringstream os;
    os << "model vs oracle at n=" << n << ": " << (equal ? "identical" : "DIVERGENT") << "\n";
    os << "  totals " << model_total << "/" << oracle_total << ", cold " << model_cold << "/"
       << oracle_cold << "\n";
    if (first_diverging_distance)
        os << "  first diverging distance: " << *first_diverging_distance << "\n";
    for (auto& t : wrong_classes) os << "  wrong class: " << t.str() << "\n";
    return os.str();
}

}  // namespace dmd::rmm_model
