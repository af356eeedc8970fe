#pragma once

#include "phlim/cartesian_grid.hpp"
#include "phlim/detection.hpp"
#include "phlim/errors.hpp"
#include "phlim/interp.hpp"
#include "phlim/io.hpp"
#include "phlim/kvec.hpp"
#include "phlim/observables.hpp"
#include "phlim/pipeline.hpp"
#include "phlim/quadrature.hpp"
#include "phlim/restframe.hpp"
#include "phlim/spherical_grid.hpp"
#include "phlim/spherical_harmonics.hpp"
#include "phlim/states.hpp"
#include "phlim/units.hpp"
#include "phlim/version.hpp"
