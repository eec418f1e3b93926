#pragma once

#include "roomlayout/instance_cluster.hpp"
#include "roomlayout/layout_engine.hpp"
#include "roomlayout/objectives.hpp"
#include "roomlayout/scene_synth.hpp"
#include "roomlayout/surface_fit.hpp"

namespace roomlayout {

// Every tunable of the engine in one place; defaults follow the published
// training setup where one exists.
struct EngineConfig {
  LossConfig loss;
  ClusterConfig cluster;
  RansacConfig ransac;
  ResolveConfig resolve;
  CornerConfig corners;
  OptimizeConfig optimize;
  SynthOptions synth;
  std::uint64_t seed = 0;

  // Propagates the global seed into the stochastic stages.
  void apply_seed() {
    cluster.seed = seed;
    ransac.seed = seed;
  }

  void validate() const {
    loss.validate();
    cluster.validate();
    ransac.validate();
    if (!(resolve.min_region_fraction >= 0.0 && resolve.min_region_fraction < 1.0)) {
      fail(ErrorCode::InvalidArgument, "min_region_fraction must lie in [0, 1)");
    }
    if (!(corners.junction_radius_px > 0.0) || !(corners.min_determinant > 0.0) ||
        !(corners.min_inverse_depth >= 0.0)) {
      fail(ErrorCode::InvalidArgument, "corner thresholds must be positive");
    }
    if (optimize.steps < 0 || !(optimize.learning_rate > 0.0) || !(optimize.grow >= 1.0) ||
        !(optimize.shrink > 0.0 && optimize.shrink < 1.0) || optimize.max_backtracks < 0) {
      fail(ErrorCode::InvalidArgument, "invalid optimizer settings");
    }
  }

  PipelineConfig pipeline() const { return {cluster, resolve, corners}; }
};

}  // namespace roomlayout
