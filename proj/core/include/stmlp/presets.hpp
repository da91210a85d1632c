#pragma once

#include "stmlp/model.hpp"
#include "stmlp/optim.hpp"

namespace stmlp {

/// Everything a training run needs. The named presets are the single source
/// of the benchmark hyperparameters; command-line overrides apply on top of
/// a preset.
struct RunConfig {
  ModelConfig model;
  OptimizerKind optimizer = OptimizerKind::adam;
  OptimHyper hyper;
  LrSchedule schedule;
  std::size_t batch_size = 32;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  bool subtract_root = false;
  std::size_t root_joint = 0;
};

/// Traffic-control gestures: Ranger, batch 1024, 70 epochs, lr 0.001 flat
/// for 50 epochs then cosine to 0.0001.
RunConfig tcg_run();

/// In-cabin activities: Adam, batch 2048, 80 epochs, lr 0.001 with cosine
/// decay to a tenth. Class count defaults to the coarse-task protocol's 12.
RunConfig drive_act_run(std::size_t classes = 12);

}  // namespace stmlp
