#pragma once

// Panning clips with graded per-pixel flicker. Labels fall linearly with the
// flicker amplitude, so a stability-aware model can order them perfectly.
// Amplitudes stay at or below 0.05 on a sharp texture: beyond that, per-pixel
// noise outweighs the texture and block matching loses the pan.

#include <string>
#include <vector>

#include "revq/synthetic.hpp"
#include "revq/training.hpp"

namespace fixture {

inline std::vector<double> graded_amplitudes(int count, double max_amplitude) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(max_amplitude * i / (count - 1));
  return out;
}

inline double label_for(double amplitude, double max_amplitude) { return 5.0 - 4.0 * amplitude / max_amplitude; }

inline std::vector<revq::TrainExample> flicker_examples(const revq::ModelConfig& config,
                                                        const std::vector<double>& amplitudes, double max_amplitude,
                                                        int width, int height, int frames, std::uint64_t seed) {
  std::vector<revq::TrainExample> out;
  for (std::size_t i = 0; i < amplitudes.size(); ++i) {
    const revq::Video v = revq::synth::panning_video({.width = width,
                                                      .height = height,
                                                      .frames = frames,
                                                      .vx = 1 + static_cast<int>(i % 2),
                                                      .vy = static_cast<int>(i % 3) - 1,
                                                      .flicker_amplitude = amplitudes[i],
                                                      .seed = revq::mix_seed(seed, i),
                                                      .blur_radius = 1});
    revq::TrainExample e;
    e.features = revq::extract_features(v, "clip" + std::to_string(i), config, revq::mix_seed(seed, 100 + i));
    e.scene_id = "scene" + std::to_string(i % 4);
    e.oa_mos = label_for(amplitudes[i], max_amplitude);
    e.ts_mos = e.oa_mos;
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace fixture
