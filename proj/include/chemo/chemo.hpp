#pragma once

// Umbrella header.

#include "chemo/diagnostics.hpp"
#include "chemo/elliptic.hpp"
#include "chemo/errors.hpp"
#include "chemo/field_io.hpp"
#include "chemo/grid.hpp"
#include "chemo/linear_solvers.hpp"
#include "chemo/motility.hpp"
#include "chemo/runner.hpp"
#include "chemo/scenario.hpp"
#include "chemo/stepper.hpp"
#include "chemo/verify.hpp"
