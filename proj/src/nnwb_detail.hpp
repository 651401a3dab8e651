#pragma once

#include <cstdint>
#include <functional>

#include "infernet/convnet.hpp"

namespace infernet::detail {

using ByteSink = std::function<void(const std::uint8_t*, std::size_t)>;

// Emits the NNWB encoding of `bundle` up to (not including) the checksum.
void stream_bundle(const WeightBundle& bundle, const ByteSink& sink);

std::uint64_t bundle_checksum(const WeightBundle& bundle);

}  // namespace infernet::detail
