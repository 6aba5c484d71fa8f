#pragma once

// Umbrella header: the full multi-task text-encoder toolkit.

#include "mtdnn/checkpoint.hpp"
#include "mtdnn/config.hpp"
#include "mtdnn/data.hpp"
#include "mtdnn/encoder.hpp"
#include "mtdnn/error.hpp"
#include "mtdnn/eval.hpp"
#include "mtdnn/grad_check.hpp"
#include "mtdnn/heads.hpp"
#include "mtdnn/metrics.hpp"
#include "mtdnn/model.hpp"
#include "mtdnn/objectives.hpp"
#include "mtdnn/optimizer.hpp"
#include "mtdnn/rng.hpp"
#include "mtdnn/task.hpp"
#include "mtdnn/tensor.hpp"
#include "mtdnn/trainer.hpp"
