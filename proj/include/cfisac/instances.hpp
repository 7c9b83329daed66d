#pragma once

#include "cfisac/beamforming.hpp"
#include "cfisac/power_vector.hpp"
#include "cfisac/scenario.hpp"

namespace cfisac {

struct SmallInstanceLimits {
  int max_tx = 3, max_k = 3, max_s = 3, max_m = 4, max_tau = 5;
};

/// A randomly drawn toy system with an arbitrary (structurally valid) plan,
/// random precoders and combiners, and random feasible power. Used for
/// oracle cross-checks where generality matters more than realism.
struct SmallInstance {
  Scenario scenario;
  AssignmentPlan plan;
  PrecoderSet precoders;
  CombinerSet combiners;
  SymbolBlock symbols;
  PowerVector power;
};

SmallInstance random_small_instance(RandomStream& rng, const SmallInstanceLimits& limits = {});

}  // namespace cfisac
