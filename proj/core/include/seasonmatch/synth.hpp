#pragma once

#include <filesystem>

#include "seasonmatch/types.hpp"

namespace seasonmatch {

// Generates an aligned multi-condition corpus. Every condition renders
// the same procedurally generated scenes under its own appearance
// transform (brightness, hue rotation, additive noise, whitening).
// Frame i of every traverse is an overlapping crop from one long
// procedural strip, so neighbouring indices look similar the way
// consecutive video frames do. Bit-deterministic for a fixed config.
AlignedCorpus synth_corpus(const SynthConfig& cfg);

// Renders one base scene (before condition transforms); exposed for
// tests that need raw-pixel baselines.
Image synth_base_scene(const SynthConfig& cfg, int place);

}  // namespace seasonmatch
