#pragma once

#include <iosfwd>
#include <string>

#include "cema/params.hpp"

namespace cema {

// Flat binary checkpoint: (layout, values) with bit-exact round-trip.
//
//   magic "CEP1"
//   u64 segment count
//   per segment: u64 name length, name bytes, u64 value count
//   raw IEEE-754 doubles, layout order
//
// Integers and doubles are stored little-endian.

void write_checkpoint(std::ostream& os, const ParamVector& params);
void write_checkpoint_file(const std::string& path, const ParamVector& params);

ParamVector read_checkpoint(std::istream& is);
ParamVector read_checkpoint_file(const std::string& path);

} // namespace cema
