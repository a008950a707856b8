#pragma once

#include <cstdint>
#include <memory>

#include "wldecode/layers.hpp"

namespace wld {

// Four-block convolutional decoder: a temporal 1x10 conv plus a full-height
// spatial conv open the stack, then three widening blocks (25/50/100/200
// maps), each closed by a 1x3 max-pool and dropout.
std::unique_ptr<Sequential> build_deepconvnet(std::uint64_t seed);

// Two-block depthwise-separable decoder: an 8-filter 1x50 temporal conv and
// a depth-2 spatial depthwise conv, then a separable conv; average-pools of
// 4 and 8 with 0.25 dropout.
std::unique_ptr<Sequential> build_eegnet(std::uint64_t seed);

// Three parallel temporal filter banks (kernels 1x5, 1x10, 1x20), each with
// a full-height spatial conv, concatenated into a dense classifier.
std::unique_ptr<Sequential> build_mfb_cnn(std::uint64_t seed);

}  // namespace wld
