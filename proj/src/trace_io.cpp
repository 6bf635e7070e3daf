#include "dmd/trace_io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace dmd {

namespace {

constexpr char kMagicText[] = "dmdtrace v1";
constexpr char kMagicBinary[] = "dmdtrace-bin v1";

std::string header_line(const char* magic, const MemoryTrace& t) {
    std::ostringstream os;
    os << magic << " kernel=" << kernel_name(t.kernel) << " n=" << t.n << " d=" << t.tile;
    return os.str();
}

void parse_header(const std::string& line, const char* magic, MemoryTrace& t) {
    std::istringstream is(line.substr(std::strlen(magic)));
    std::string field;
    while (is >> field) {
        auto eq = field.find('=');
        if (eq == std::string::npos) throw std::runtime_error("bad trace header field: " + field);
        std::string key = field.substr(0, eq), val = field.substr(eq + 1);
        if (key == "kernel")
            t.kernel = kernel_from_name(val);
        else if (key == "n")
            t.n = uint32_t(std::stoul(val));
        else if (key == "d")
            t.tile = uint32_t(std::stoul(val));
    }
}

Region region_of(char c) {
    switch (c) {
        case 'A': return Region::input_a;
        case 'B': return Region::input_b;
        case 'T': return Region::temp;
        default: throw std::runtime_error(std::string("bad region char: ") + c);
    }
}

}  // namespace

void save_trace_text(const MemoryTrace& t, std::ostream& os) {
    os << header_line(kMagicText, t) << "\n";
    for (DatumId d : t.events) os << region_char(d.region()) << d.index() << "\n";
}

void save_trace_binary(const MemoryTrace& t, std::ostream& os) {
    os << header_line(kMagicBinary, t) << "\n";
    for (DatumId d : t.events) {
        uint64_t w = d.word;  // stored little-endian
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = (w >> (8 * i)) & 0xff;
        os.write(reinterpret_cast<const char*>(buf), 8);
    }
}

void save_trace(const MemoryTrace& t, const std::string& path, bool binary) {
    std::ofstream os(path, binary ? std::ios::binary : std::ios::out);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    binary ? save_trace_binary(t, os) : save_trace_text(t, os);
}

MemoryTrace load_trace_stream(std::istream& is) {
    MemoryTrace t;
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("empty trace file");
    if (line.rfind(kMagicBinary, 0) == 0) {
        parse_header(line, kMagicBinary, t);
        unsigned char buf[8];
        while (is.read(reinterpret_cast<char*>(buf), 8)) {
            uint64_t w = 0;
            for (int i = 0; i < 8; ++i) w |= uint64_t(buf[i]) << (8 * i);
            t.events.push_back(DatumId{w});
        }
    } else if (line.rfind(kMagicText, 0) == 0) {
        parse_header(line, kMagicText, t);
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            try {
                t.events.push_back(DatumId::make(region_of(line[0]), std::stoull(line.substr(1))));
            } catch (const std::exception&) {
                throw std::runtime_error("bad trace event line: " + line);
            }
        }
    } else {
        throw std::runtime_error("not a dmdtrace file");
    }
    return t;
}

MemoryTrace load_trace(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open trace: " + path);
    return load_trace_stream(is);
}

}  // namespace dmd
