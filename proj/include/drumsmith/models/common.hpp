#pragma once

#include <span>

#include "drumsmith/nn/layers.hpp"
#include "drumsmith/pianoroll.hpp"

namespace drumsmith {

// [B, 352, 256]
nn::Var<float> ma_to_var(std::span<const MASample> mas);

// [B, 352, 16], binary 0/1 as float
nn::Var<float> pa_to_var(std::span<const PASample> pas);

}  // namespace drumsmith
