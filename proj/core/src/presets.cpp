#include "stmlp/presets.hpp"

namespace stmlp {

RunConfig tcg_run() {
  RunConfig run;
  run.model = tcg_config();
  run.optimizer = OptimizerKind::ranger;
  run.schedule = {ScheduleKind::flat_then_cosine, 1e-3, 1e-4, 50, 70};
  run.batch_size = 1024;
  run.epochs = 70;
  return run;
}

RunConfig drive_act_run(std::size_t classes) {
  RunConfig run;
  run.model = drive_act_config(classes);
  run.optimizer = OptimizerKind::adam;
  run.schedule = {ScheduleKind::cosine, 1e-3, 1e-4, 0, 80};
  run.batch_size = 2048;
  run.epochs = 80;
  return run;
}

}  // namespace stmlp
