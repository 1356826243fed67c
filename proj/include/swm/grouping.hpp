#pragma once

#include <string>
#include <utility>
#include <vector>

#include "swm/core.hpp"

namespace swm {

/// Temporal layout of the 4x-compressing video VAE.
///  - causal: frame 0 forms its own latent, then groups of 4 (T = 4L - 3).
///  - uniform: groups of 4 throughout (T = 4L).
enum class LatentGrouping { causal, uniform };

inline std::string to_string(LatentGrouping g) {
  return g == LatentGrouping::causal ? "causal" : "uniform";
}

/// Pixel frames per chunk for a chunk of `latents` latents.
inline int frames_for_latents(LatentGrouping g, int latents) {
  if (latents <= 0) throw ValidationError("grouping: latent count must be > 0");
  return g == LatentGrouping::causal ? 4 * latents - 3 : 4 * latents;
}

/// Latents needed to cover `frames` pixel frames. Throws when the frame
/// count is not representable under the grouping.
inline int latents_for_frames(LatentGrouping g, int frames) {
  if (frames <= 0) throw ValidationError("grouping: frame count must be > 0");
  if (g == LatentGrouping::causal) {
    if ((frames - 1) % 4 != 0)
      throw ValidationError("grouping: causal layout needs frames == 1 (mod 4)");
    return 1 + (frames - 1) / 4;
  }
  if (frames % 4 != 0) throw ValidationError("grouping: uniform layout needs frames == 0 (mod 4)");
  return frames / 4;
}

/// Half-open pixel-frame range [begin, end) encoded by latent `index`.
inline std::pair<int, int> latent_frame_range(LatentGrouping g, int index) {
  if (index < 0) throw ValidationError("grouping: latent index must be >= 0");
  if (g == LatentGrouping::causal) {
    if (index == 0) return {0, 1};
    return {1 + 4 * (index - 1), 1 + 4 * index};
  }
  return {4 * index, 4 * (index + 1)};
}

}  // namespace swm
