#pragma once

#include <cstdint>

#include "senc/model.hpp"

namespace senc {

// Ten-class 8x8 grayscale task. Each class owns several fixed random
// template variants scaled to a common norm (so class identity cannot leak
// through input magnitude); a sample is one variant plus pixel noise.
// Labels cycle 0..9 so every draw is balanced.
dataset make_desk_dataset(std::size_t n, std::uint64_t seed);

// conv(1->8, 3x3) relu conv(8->16, 3x3) relu flatten dense(1024->10)
// softmax, He-initialized; both conv layers are protection candidates.
model make_desk_model(std::uint64_t init_seed);

// Variant task whose class templates are drawn from a different universe;
// used as the surrogate corpus for transfer experiments.
dataset make_surrogate_dataset(std::size_t n, std::uint64_t seed);

// Two linearly separable 2d blobs lifted onto a 1x2x2 grid; sanity-check
// fodder for the trainer.
dataset make_two_blob_dataset(std::size_t n, std::uint64_t seed);
model make_two_blob_model(std::uint64_t init_seed);

}  // namespace senc
