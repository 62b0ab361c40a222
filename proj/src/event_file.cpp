// SPDX-License-Identifier: Apache-2.0
#include "sser/event_file.hpp"

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "sser/common.hpp"

namespace sser {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'T', '1'};
constexpr std::size_t kHeaderBytes = 16;
constexpr std::size_t kRecordBytes = 13;

void put_u16(unsigned char* p, std::uint16_t v) {
    p[0] = v & 0xff;
    p[1] = (v >> 8) & 0xff;
}
void put_u64(unsigned char* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = (v >> (8 * i)) & 0xff;
}
std::uint16_t get_u16(const unsigned char* p) {
    return std::uint16_t(p[0] | (std::uint16_t(p[1]) << 8));
}
std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

EventSequence read_evtbin(std::istream& in) {
    std::array<unsigned char, kHeaderBytes> hdr{};
    in.read(reinterpret_cast<char*>(hdr.data()), kHeaderBytes);
    if (in.gcount() == 0) return EventSequence{};  // empty file => empty sequence
    if (in.gcount() != std::streamsize(kHeaderBytes))
        fail("parse", "truncated header at byte offset " + std::to_string(in.gcount()));
    if (std::memcmp(hdr.data(), kMagic, 4) != 0) fail("parse", "bad magic at byte offset 0");

    EventSequence seq;
    seq.width = get_u16(hdr.data() + 4);
    seq.height = get_u16(hdr.data() + 6);
    const std::uint64_t count = get_u64(hdr.data() + 8);
    seq.events.reserve(count);

    std::array<unsigned char, kRecordBytes> rec{};
    for (std::uint64_t i = 0; i < count; ++i) {
        in.read(reinterpret_cast<char*>(rec.data()), kRecordBytes);
        if (in.gcount() != std::streamsize(kRecordBytes))
            fail("parse", "truncated record " + std::to_string(i) + " at byte offset " +
                              std::to_string(kHeaderBytes + i * kRecordBytes));
        Event e;
        e.t = get_u64(rec.data());
        e.x = get_u16(rec.data() + 8);
        e.y = get_u16(rec.data() + 10);
        e.p = std::int8_t(rec[12]);
        if (e.x >= seq.width || e.y >= seq.height)
            fail("validation", "record " + std::to_string(i) + " out of bounds: (" +
                                   std::to_string(e.x) + "," + std::to_string(e.y) + ")");
        if (e.p != 1 && e.p != -1)
            fail("validation", "record " + std::to_string(i) + " has polarity " + std::to_string(e.p));
        if (!seq.events.empty() && e.t < seq.events.back().t)
            fail("validation", "record " + std::to_string(i) + " breaks timestamp order");
        seq.events.push_back(e);
    }
    validate_sequence(seq);
    return seq;
}

void write_evtbin(std::ostream& out, const EventSequence& seq) {
    std::array<unsigned char, kHeaderBytes> hdr{};
    std::memcpy(hdr.data(), kMagic, 4);
    put_u16(hdr.data() + 4, seq.width);
    put_u16(hdr.data() + 6, seq.height);
    put_u64(hdr.data() + 8, seq.events.size());
    out.write(reinterpret_cast<const char*>(hdr.data()), kHeaderBytes);

    std::array<unsigned char, kRecordBytes> rec{};
    for (const Event& e : seq.events) {
        put_u64(rec.data(), e.t);
        put_u16(rec.data() + 8, e.x);
        put_u16(rec.data() + 10, e.y);
        rec[12] = static_cast<unsigned char>(e.p);
        out.write(reinterpret_cast<const char*>(rec.data()), kRecordBytes);
    }
    if (!out) fail("io", "write failed");
}

EventSequence read_csv(std::istream& in) {
    EventSequence seq;
    std::string line;
    std::size_t lineno = 0;
    bool have_header = false;
    bool have_dims = false;
    // Dimensions ride in an optional "# sensor WxH" comment; without it they
    // are inferred as max coordinate + 1.
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            unsigned w = 0, h = 0;
            if (std::sscanf(line.c_str(), "# sensor %ux%u", &w, &h) == 2 && w > 0 && h > 0 &&
                w <= 0xffff && h <= 0xffff) {
                seq.width = std::uint16_t(w);
                seq.height = std::uint16_t(h);
                have_dims = true;
            }
            continue;
        }
        if (!have_header) {
            if (line != "t,x,y,p")
                fail("parse", "line 1: expected header \"t,x,y,p\", got \"" + line + "\"");
            have_header = true;
            continue;
        }
        Event e;
        unsigned long long t = 0;
        long x = 0, y = 0, p = 0;
        char c1 = 0, c2 = 0, c3 = 0;
        std::istringstream ls(line);
        if (!(ls >> t >> c1 >> x >> c2 >> y >> c3 >> p) || c1 != ',' || c2 != ',' || c3 != ',')
            fail("parse", "line " + std::to_string(lineno) + ": malformed record \"" + line + "\"");
        if (x < 0 || x > 0xffff || y < 0 || y > 0xffff)
            fail("validation", "line " + std::to_string(lineno) + ": coordinate out of range");
        if (p != 1 && p != -1)
            fail("validation", "line " + std::to_string(lineno) + ": polarity must be -1 or 1");
        e.t = t;
        e.x = std::uint16_t(x);
        e.y = std::uint16_t(y);
        e.p = std::int8_t(p);
        if (!seq.events.empty() && e.t < seq.events.back().t)
            fail("validation", "line " + std::to_string(lineno) + ": breaks timestamp order");
        if (have_dims && (e.x >= seq.width || e.y >= seq.height))
            fail("validation", "line " + std::to_string(lineno) + ": coordinate out of sensor bounds");
        seq.events.push_back(e);
        if (!have_dims) {
            if (e.x >= seq.width) seq.width = std::uint16_t(e.x + 1);
            if (e.y >= seq.height) seq.height = std::uint16_t(e.y + 1);
        }
    }
    validate_sequence(seq);
    return seq;
}

void write_csv(std::ostream& out, const EventSequence& seq) {
    out << "# sensor " << seq.width << 'x' << seq.height << '\n';
    out << "t,x,y,p\n";
    for (const Event& e : seq.events)
        out << e.t << ',' << e.x << ',' << e.y << ',' << int(e.p) << '\n';
    if (!out) fail("io", "write failed");
}

}  // namespace

EventSequence read_events(std::istream& in, EventFileFormat fmt) {
    return fmt == EventFileFormat::EvtBin ? read_evtbin(in) : read_csv(in);
}

void write_events(std::ostream& out, const EventSequence& seq, EventFileFormat fmt) {
    if (fmt == EventFileFormat::EvtBin)
        write_evtbin(out, seq);
    else
        write_csv(out, seq);
}

EventFileFormat format_for_path(const std::string& path) {
    if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0)
        return EventFileFormat::Csv;
    return EventFileFormat::EvtBin;
}

EventSequence read_events_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("io", "cannot open " + path);
    return read_events(in, format_for_path(path));
}

void write_events_file(const std::string& path, const EventSequence& seq) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("io", "cannot open " + path + " for writing");
    write_events(out, seq, format_for_path(path));
}

}  // namespace sser
