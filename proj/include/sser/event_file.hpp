// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <string>

#include "sser/events.hpp"

namespace sser {

enum class EventFileFormat : std::uint8_t { EvtBin = 0, Csv = 1 };

// EVT-bin layout (little-endian):
//   header, 16 bytes: magic "EVT1", u16 width, u16 height, u64 event count
//   then one 13-byte record per event: u64 t (microseconds), u16 x, u16 y,
//   i8 p (-1 or +1)
//
// CSV layout: header line "t,x,y,p", one event per line, decimal integers.
//
// Readers validate bounds, timestamp order and same-pixel ties; parse errors
// carry the byte offset (EVT-bin) or line number (CSV).
EventSequence read_events(std::istream& in, EventFileFormat fmt);
void write_events(std::ostream& out, const EventSequence& seq, EventFileFormat fmt);

// File helpers; format by extension (".csv" => CSV, anything else EVT-bin).
EventSequence read_events_file(const std::string& path);
void write_events_file(const std::string& path, const EventSequence& seq);
EventFileFormat format_for_path(const std::string& path);

}  // namespace sser
