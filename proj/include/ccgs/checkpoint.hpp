#pragma once

#include <string>

#include "ccgs/optim.hpp"

namespace ccgs {

// Checkpoint file: magic "CCGS", u32 format version, u32 parameter count,
// per-parameter records (u32 name length, UTF-8 name, u32 rank, u32 dims,
// row-major little-endian 32-bit floats), u64 optimizer step, u32 state record
// count, then the AdamW moments in the same record layout under "<name>/m" and
// "<name>/v". Parameters are stored 32-bit-representable, so the round trip is
// byte-exact.

void save_checkpoint(const std::string& path, const ParameterSet& params);

/// Replaces the contents of `params`. Throws FormatError on anything that is
/// not a well-formed checkpoint.
void load_checkpoint(const std::string& path, ParameterSet& params);

} // namespace ccgs
