#pragma once

#include "gazedec/config.hpp"

namespace gazedec::cli {

int cmd_synth(const ExperimentConfig& cfg);
int cmd_train(const ExperimentConfig& cfg);
int cmd_calibrate(const ExperimentConfig& cfg);
int cmd_eval(const ExperimentConfig& cfg);
int cmd_grid(const ExperimentConfig& cfg);
int cmd_analyze(const ExperimentConfig& cfg);
int cmd_crossval(const ExperimentConfig& cfg);

}  // namespace gazedec::cli
