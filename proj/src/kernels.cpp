#include "dmd/kernels.hpp"

#include <unordered_set>

namespace dmd {

bool is_pow2(uint64_t v) { return v != 0 && (v & (v - 1)) == 0; }

const char* kernel_name(Kernel k) {
    switch (k) {
        case Kernel::naive: return "naive";
        case Kernel::tiled: return "tiled";
        case Kernel::rmm: return "rmm";
        case Kernel::rmm_managed: return "rmm_managed";
        case Kernel::strassen: return "strassen";
        case Kernel::strassen_managed: return "strassen_managed";
    }
    return "?";
}

Kernel kernel_from_name(const std::string& name) {
    for (Kernel k : {Kernel::naive, Kernel::tiled, Kernel::rmm, Kernel::rmm_managed,
                     Kernel::strassen, Kernel::strassen_managed}) {
        if (name == kernel_name(k)) return k;
    }
    throw std::invalid_argument("unknown kernel: " + name);
}

bool kernel_is_managed(Kernel k) {
    return k == Kernel::rmm_managed || k == Kernel::strassen_managed;
}

static void require_pow2(uint32_t n, const char* what) {
    if (!is_pow2(n)) throw std::invalid_argument(std::string(what) + " must be a power of two");
}

// ---------------------------------------------------------------------------
// naive / tiled
// ---------------------------------------------------------------------------

namespace {

struct LoopEmitter {
    uint32_t n;
    const TraceSemantics& s;
    TraceSink& sink;

    void iteration(uint32_t i, uint32_t j, uint32_t k) const {
        sink.access(DatumId::make(Region::input_a, uint64_t(i) * n + k));
        sink.access(DatumId::make(Region::input_b, uint64_t(k) * n + j));
        if (!s.accumulator_in_register) {
            DatumId c = DatumId::make(Region::temp, uint64_t(i) * n + j);
            sink.access(c);
            sink.access(c);
        }
    }
};

}  // namespace

static void announce_c_cells(uint32_t n, const TraceSemantics& s, TraceSink& sink) {
    if (s.accumulator_in_register) return;
    for (uint64_t i = 0; i < uint64_t(n) * n; ++i)
        sink.on_alloc(DatumId::make(Region::temp, i));
}

void emit_naive(uint32_t n, const TraceSemantics& s, TraceSink& sink) {
    require_pow2(n, "n");
    announce_c_cells(n, s, sink);
    LoopEmitter e{n, s, sink};
    for (uint32_t i = 0; i < n; ++i)
        for (uint32_t j = 0; j < n; ++j)
            for (uint32_t k = 0; k < n; ++k) e.iteration(i, j, k);
}

void emit_tiled(uint32_t n, uint32_t d, const TraceSemantics& s, TraceSink& sink) {
    require_pow2(n, "n");
    require_pow2(d, "tile");
    if (d > n || n % d != 0) throw std::invalid_argument("tile must divide n");
    announce_c_cells(n, s, sink);
    LoopEmitter e{n, s, sink};
    for (uint32_t jj = 0; jj < n; jj += d)
        for (uint32_t kk = 0; kk < n; kk += d)
            for (uint32_t i = 0; i < n; ++i)
                for (uint32_t j = jj; j < jj + d; ++j)
                    for (uint32_t k = kk; k < kk + d; ++k) e.iteration(i, j, k);
}

// ---------------------------------------------------------------------------
// recursive MM
// ---------------------------------------------------------------------------

namespace {

struct TempMat {
    std::vector<uint64_t> ids;  // row-major, sz*sz
};

struct RmmEmitter {
    uint32_t n;
    TraceSink& sink;
    Arena arena;

    explicit RmmEmitter(uint32_t n_, TraceSink& sink_, bool managed)
        : n(n_), sink(sink_), arena(managed) {}

    TempMat alloc_mat(uint32_t sz) {
        TempMat m;
        m.ids.resize(size_t(sz) * sz);
        for (auto& id : m.ids) {
            id = arena.alloc();
            sink.on_alloc(DatumId::make(Region::temp, id));
        }
        return m;
    }
    void free_mat(TempMat& m) {
        for (uint64_t id : m.ids) {
            sink.on_free(DatumId::make(Region::temp, id));
            arena.release(id);
        }
        m.ids.clear();
    }
    void read_a(uint32_t r, uint32_t c) { sink.access(DatumId::make(Region::input_a, uint64_t(r) * n + c)); }
    void read_b(uint32_t r, uint32_t c) { sink.access(DatumId::make(Region::input_b, uint64_t(r) * n + c)); }
    void touch(uint64_t id) { sink.access(DatumId::make(Region::temp, id)); }

    // A-view at (ar,ac), B-view at (br,bc), both sz x sz. Returns result temp.
    TempMat multiply(uint32_t ar, uint32_t ac, uint32_t br, uint32_t bc, uint32_t sz) {
        TempMat C = alloc_mat(sz);
        if (sz == 1) {
            read_a(ar, ac);
            read_b(br, bc);
            touch(C.ids[0]);
            return C;
        }
        uint32_t h = sz / 2;
        // addition groups in quadrant order C11, C12, C21, C22
        struct Child { uint32_t da_r, da_c, db_r, db_c; };
        const Child kids[8] = {
            {0, 0, 0, 0}, {0, h, h, 0},  // C11 = A11*B11 + A12*B21
            {0, 0, 0, h}, {0, h, h, h},  // C12 = A11*B12 + A12*B22
            {h, 0, 0, 0}, {h, h, h, 0},  // C21 = A21*B11 + A22*B21
            {h, 0, 0, h}, {h, h, h, h},  // C22 = A21*B12 + A22*B22
        };
        for (uint32_t g = 0; g < 4; ++g) {
            const Child& x = kids[2 * g];
            const Child& y = kids[2 * g + 1];
            TempMat t1 = multiply(ar + x.da_r, ac + x.da_c, br + x.db_r, bc + x.db_c, h);
            TempMat t2 = multiply(ar + y.da_r, ac + y.da_c, br + y.db_r, bc + y.db_c, h);
            uint32_t qr = (g / 2) * h, qc = (g % 2) * h;
            for (uint32_t r = 0; r < h; ++r) {
                for (uint32_t c = 0; c < h; ++c) {
                    touch(t1.ids[size_t(r) * h + c]);
                    touch(t2.ids[size_t(r) * h + c]);
                    touch(C.ids[size_t(qr + r) * sz + (qc + c)]);
                }
            }
            free_mat(t1);
            free_mat(t2);
        }
        return C;
    }
};

}  // namespace

Arena emit_rmm(uint32_t n, const TraceSemantics&, TraceSink& sink, bool managed) {
    require_pow2(n, "n");
    RmmEmitter e(n, sink, managed);
    e.multiply(0, 0, 0, 0, n);
    return e.arena;
}

// ---------------------------------------------------------------------------
// Strassen
// ---------------------------------------------------------------------------

namespace {

// An operand is either a view into A/B or a gather of temp ids.
struct Operand {
    Region region = Region::temp;
    uint32_t r0 = 0, c0 = 0;     // for input views
    std::vector<uint64_t> ids;    // for temps, row-major sz*sz

    static Operand view(Region reg, uint32_t r, uint32_t c) { return Operand{reg, r, c, {}}; }
    static Operand temp(std::vector<uint64_t> ids_) { return Operand{Region::temp, 0, 0, std::move(ids_)}; }
    bool is_view() const { return region != Region::temp; }
};

struct StrassenEmitter {
    uint32_t n;
    TraceSink& sink;
    Arena arena;

    StrassenEmitter(uint32_t n_, TraceSink& sink_, bool managed)
        : n(n_), sink(sink_), arena(managed) {}

    std::vector<uint64_t> alloc_cells(uint32_t sz) {
        std::vector<uint64_t> ids(size_t(sz) * sz);
        for (auto& id : ids) {
            id = arena.alloc();
            sink.on_alloc(DatumId::make(Region::temp, id));
        }
        return ids;
    }
    void free_cells(std::vector<uint64_t>& ids) {
        for (uint64_t id : ids) {
            sink.on_free(DatumId::make(Region::temp, id));
            arena.release(id);
        }
        ids.clear();
    }
    void read(const Operand& op, uint32_t r, uint32_t c, uint32_t sz) {
        if (op.is_view())
            sink.access(DatumId::make(op.region, uint64_t(op.r0 + r) * n + (op.c0 + c)));
        else
            sink.access(DatumId::make(Region::temp, op.ids[size_t(r) * sz + c]));
    }
    // dst = x (+|-) y, elementwise; reads interleave with the destination write
    void binop(const Operand& x, const Operand& y, std::vector<uint64_t>& dst, uint32_t sz) {
        for (uint32_t r = 0; r < sz; ++r)
            for (uint32_t c = 0; c < sz; ++c) {
                read(x, r, c, sz);
                read(y, r, c, sz);
                sink.access(DatumId::make(Region::temp, dst[size_t(r) * sz + c]));
            }
    }
    Operand quadrant(const Operand& op, uint32_t qr, uint32_t qc, uint32_t sz) const {
        uint32_t h = sz / 2;
        if (op.is_view()) return Operand::view(op.region, op.r0 + qr * h, op.c0 + qc * h);
        std::vector<uint64_t> ids(size_t(h) * h);
        for (uint32_t r = 0; r < h; ++r)
            for (uint32_t c = 0; c < h; ++c)
                ids[size_t(r) * h + c] = op.ids[size_t(qr * h + r) * sz + (qc * h + c)];
        return Operand::temp(std::move(ids));
    }

    // dest: parent-provided result buffer (sz*sz), empty only at the root,
    // where the combining additions accumulate into the M temporaries.
    void multiply(const Operand& a, const Operand& b, std::vector<uint64_t>* dest, uint32_t sz) {
        if (sz == 1) {
            read(a, 0, 0, 1);
            read(b, 0, 0, 1);
            sink.access(DatumId::make(Region::temp, (*dest)[0]));
            return;
        }
        uint32_t h = sz / 2;
        Operand A11 = quadrant(a, 0, 0, sz), A12 = quadrant(a, 0, 1, sz);
        Operand A21 = quadrant(a, 1, 0, sz), A22 = quadrant(a, 1, 1, sz);
        Operand B11 = quadrant(b, 0, 0, sz), B12 = quadrant(b, 0, 1, sz);
        Operand B21 = quadrant(b, 1, 0, sz), B22 = quadrant(b, 1, 1, sz);

        // Seven products; operand sums/differences are fresh temporaries
        // allocated immediately before use and freed after their one reading
        // recursive call returns.
        std::vector<uint64_t> M[7];
        auto make_sum = [&](const Operand& x, const Operand& y) {
            std::vector<uint64_t> s = alloc_cells(h);
            binop(x, y, s, h);
            return s;
        };
        auto run = [&](int mi, Operand left, Operand right) {
            M[mi] = alloc_cells(h);
            multiply(left, right, &M[mi], h);
        };

        {  // M1 = (A11+A22)(B11+B22)
            auto s1 = make_sum(A11, A22);
            auto s2 = make_sum(B11, B22);
            run(0, Operand::temp(s1), Operand::temp(s2));
            free_cells(s1);
            free_cells(s2);
        }
        {  // M2 = (A21+A22) B11
            auto s = make_sum(A21, A22);
            run(1, Operand::temp(s), B11);
            free_cells(s);
        }
        {  // M3 = A11 (B12-B22)
            auto s = make_sum(B12, B22);
            run(2, A11, Operand::temp(s));
            free_cells(s);
        }
        {  // M4 = A22 (B21-B11)
            auto s = make_sum(B21, B11);
            run(3, A22, Operand::temp(s));
            free_cells(s);
        }
        {  // M5 = (A11+A12) B22
            auto s = make_sum(A11, A12);
            run(4, Operand::temp(s), B22);
            free_cells(s);
        }
        {  // M6 = (A21-A11)(B11+B12)
            auto s1 = make_sum(A21, A11);
            auto s2 = make_sum(B11, B12);
            run(5, Operand::temp(s1), Operand::temp(s2));
            free_cells(s1);
            free_cells(s2);
        }
        {  // M7 = (A12-A22)(B21+B22)
            auto s1 = make_sum(A12, A22);
            auto s2 = make_sum(B21, B22);
            run(6, Operand::temp(s1), Operand::temp(s2));
            free_cells(s1);
            free_cells(s2);
        }

        auto mop = [&](int mi) { return Operand::temp(M[mi]); };
        if (dest) {
            auto dq = [&](uint32_t qr, uint32_t qc) {
                std::vector<uint64_t> ids(size_t(h) * h);
                for (uint32_t r = 0; r < h; ++r)
                    for (uint32_t c = 0; c < h; ++c)
                        ids[size_t(r) * h + c] = (*dest)[size_t(qr * h + r) * sz + (qc * h + c)];
                return ids;
            };
            std::vector<uint64_t> C11 = dq(0, 0), C12 = dq(0, 1), C21 = dq(1, 0), C22 = dq(1, 1);
            // C11 = M1 + M4 - M5 + M7
            binop(mop(0), mop(3), C11, h);
            binop(Operand::temp(C11), mop(4), C11, h);
            binop(Operand::temp(C11), mop(6), C11, h);
            free_cells(M[6]);
            // C12 = M3 + M5
            binop(mop(2), mop(4), C12, h);
            free_cells(M[4]);
            // C21 = M2 + M4
            binop(mop(1), mop(3), C21, h);
            free_cells(M[3]);
            // C22 = M1 - M2 + M3 + M6
            binop(mop(0), mop(1), C22, h);
            binop(Operand::temp(C22), mop(2), C22, h);
            binop(Operand::temp(C22), mop(5), C22, h);
            free_cells(M[0]);
            free_cells(M[1]);
            free_cells(M[2]);
            free_cells(M[5]);
        } else {
            // Root call: fold in place into the M storage so the algorithm's
            // data is exactly inputs + temporaries. C22 first (into M6, reading
            // the original M1..M3), then C11 -> M1, C12 -> M3, C21 -> M2.
            binop(mop(5), mop(0), M[5], h);
            binop(Operand::temp(M[5]), mop(1), M[5], h);
            binop(Operand::temp(M[5]), mop(2), M[5], h);
            binop(mop(0), mop(3), M[0], h);
            binop(Operand::temp(M[0]), mop(4), M[0], h);
            binop(Operand::temp(M[0]), mop(6), M[0], h);
            free_cells(M[6]);
            binop(mop(2), mop(4), M[2], h);
            free_cells(M[4]);
            binop(mop(1), mop(3), M[1], h);
            free_cells(M[3]);
        }
    }
};

}  // namespace

Arena emit_strassen(uint32_t n, const TraceSemantics&, TraceSink& sink, bool managed) {
    require_pow2(n, "n");
    StrassenEmitter e(n, sink, managed);
    if (n == 1) {
        // degenerate: single scalar product into a fresh temp
        auto c = e.alloc_cells(1);
        e.multiply(Operand::view(Region::input_a, 0, 0), Operand::view(Region::input_b, 0, 0),
                   &c, 1);
    } else {
        e.multiply(Operand::view(Region::input_a, 0, 0), Operand::view(Region::input_b, 0, 0),
                   nullptr, n);
    }
    return e.arena;
}

// ---------------------------------------------------------------------------
// dispatch, footprint, validation
// ---------------------------------------------------------------------------

Arena emit_kernel(Kernel k, uint32_t n, uint32_t tile, const TraceSemantics& s, TraceSink& sink) {
    switch (k) {
        case Kernel::naive:
            emit_naive(n, s, sink);
            return Arena(false);
        case Kernel::tiled:
            emit_tiled(n, tile, s, sink);
            return Arena(false);
        case Kernel::rmm:
        case Kernel::rmm_managed:
            return emit_rmm(n, s, sink, k == Kernel::rmm_managed);
        case Kernel::strassen:
        case Kernel::strassen_managed:
            return emit_strassen(n, s, sink, k == Kernel::strassen_managed);
    }
    throw std::invalid_argument("bad kernel");
}

namespace {

class CollectSink : public TraceSink {
public:
    std::vector<DatumId> events;
    void access(DatumId d) override { events.push_back(d); }
};

}  // namespace

MemoryTrace make_trace(Kernel k, uint32_t n, uint32_t tile, const TraceSemantics& s) {
    CollectSink sink;
    Arena arena = emit_kernel(k, n, tile, s, sink);
    MemoryTrace t;
    t.events = std::move(sink.events);
    t.n = n;
    t.tile = (k == Kernel::tiled) ? tile : 0;
    t.kernel = k;
    t.semantics = s;
    uint64_t inputs = 2ull * n * n;
    t.logical_data = inputs + arena.allocations();
    t.peak_live = inputs + arena.high_water();
    if (k == Kernel::naive || k == Kernel::tiled) {
        // no arena involved; C elements (if traced) are fixed temp ids
        t.logical_data = inputs + (s.accumulator_in_register ? 0 : uint64_t(n) * n);
        t.peak_live = t.logical_data;
    }
    return t;
}

uint64_t distinct_ids(const MemoryTrace& t) {
    std::unordered_set<uint64_t> seen;
    seen.reserve(t.events.size() / 4 + 8);
    for (DatumId d : t.events) seen.insert(d.word);
    return seen.size();
}

Footprint footprint(const MemoryTrace& t) {
    if (t.logical_data != 0) return Footprint{t.peak_live, t.logical_data};
    uint64_t d = distinct_ids(t);
    return Footprint{d, d};
}

namespace {

class ValidatingSink : public TraceSink {
public:
    ValidationResult result;

    void access(DatumId d) override {
        if (!result.ok) return;
        if (d.region() != Region::temp) return;
        if (!live_.count(d.index())) {
            result.ok = false;
            result.error = "access to unallocated temp id " + std::to_string(d.index());
        }
    }
    void on_alloc(DatumId d) override {
        if (!result.ok) return;
        if (!live_.insert(d.index()).second) {
            result.ok = false;
            result.error = "double allocation of id " + std::to_string(d.index());
        }
    }
    void on_free(DatumId d) override {
        if (!result.ok) return;
        if (!live_.erase(d.index())) {
            result.ok = false;
            result.error = "free of non-live id " + std::to_string(d.index());
        }
    }

private:
    std::unordered_set<uint64_t> live_;
};

}  // namespace

ValidationResult validate_kernel(Kernel k, uint32_t n, uint32_t tile, const TraceSemantics& s) {
    ValidatingSink sink;
    emit_kernel(k, n, tile, s, sink);
    return sink.result;
}

}  // namespace dmd
