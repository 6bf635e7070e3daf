#pragma once

#include <iosfwd>
#include <string>

#include "dmd/trace.hpp"

namespace dmd {

// Text form: header "dmdtrace v1 kernel=<k> n=<n> d=<d>" then one event per
// line as <region-char><id> (A5, B12, T7). Binary form: the same header line
// followed by raw little-endian 64-bit words, top two bits region.

void save_trace_text(const MemoryTrace& t, std::ostream& os);
void save_trace_binary(const MemoryTrace& t, std::ostream& os);
void save_trace(const MemoryTrace& t, const std::string& path, bool binary);

MemoryTrace load_trace(const std::string& path);
MemoryTrace load_trace_stream(std::istream& is);

}  // namespace dmd
