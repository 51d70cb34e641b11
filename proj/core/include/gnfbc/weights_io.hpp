#pragma once

#include <string>

#include "gnfbc/layers.hpp"

namespace gnfbc {

/// Binary model dump: magic "GNFBC1", layer specs, then every tensor
/// row-major as little-endian 64-bit floats. Round-trips bit-exactly.
void save_weights(const ModelStack& stack, const std::string& path);
ModelStack load_weights(const std::string& path);

} // namespace gnfbc
