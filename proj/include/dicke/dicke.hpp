#pragma once

#include "dicke/config.hpp"
#include "dicke/model.hpp"
#include "dicke/presets.hpp"
#include "dicke/qpt.hpp"
#include "dicke/solver.hpp"
#include "dicke/sweep.hpp"
#include "dicke/tomography.hpp"
#include "dicke/util.hpp"
#include "dicke/variational.hpp"
