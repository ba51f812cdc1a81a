#pragma once

// Umbrella header: ternary label model, dataset merging, masked metrics,
// the differentiable soft-F1 loss, balancing, and the toy trainer.

#include "aumeta/balance.hpp"
#include "aumeta/database.hpp"
#include "aumeta/errors.hpp"
#include "aumeta/grid.hpp"
#include "aumeta/io.hpp"
#include "aumeta/labels.hpp"
#include "aumeta/metrics.hpp"
#include "aumeta/rng.hpp"
#include "aumeta/soft_f1.hpp"
#include "aumeta/trainer.hpp"
