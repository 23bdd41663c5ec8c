#pragma once

#include <string>

#include "condlr/nn.hpp"

namespace condlr {

// Versioned binary network container (magic "CLRC", little-endian payloads).
// Stores the layer list with shapes, activation tags, row-major weights and,
// for factorized layers, the (U, S, V, tau, s_band, eps_band) state. The
// exact layout is documented in the README.
void save_checkpoint(const std::string& path, const Network& net);
Network load_checkpoint(const std::string& path);

} // namespace condlr
