#pragma once

// Umbrella header.

#include "baselines.hpp"
#include "config.hpp"
#include "csv.hpp"
#include "dataset.hpp"
#include "driver.hpp"
#include "errors.hpp"
#include "evaluation.hpp"
#include "extraction.hpp"
#include "io.hpp"
#include "model.hpp"
#include "parallel.hpp"
#include "smoothed_hinge.hpp"
#include "solver_theta.hpp"
#include "solver_u.hpp"
#include "solver_w.hpp"
#include "stopping.hpp"
#include "synthetic.hpp"
#include "types.hpp"
