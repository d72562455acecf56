#pragma once

#include "sfstab/core.hpp"
#include "sfstab/space_form.hpp"
#include "sfstab/hyperplane.hpp"
#include "sfstab/isometry.hpp"
#include "sfstab/numerics.hpp"
#include "sfstab/direction_grid.hpp"
#include "sfstab/surface.hpp"
#include "sfstab/curvature.hpp"
#include "sfstab/moving_planes.hpp"
#include "sfstab/stability.hpp"
#include "sfstab/estimates.hpp"
#include "sfstab/experiment.hpp"
