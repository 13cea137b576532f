#pragma once

// Umbrella header.

#include "erligme/types.hpp"
#include "erligme/linops.hpp"
#include "erligme/image_ops.hpp"
#include "erligme/transforms.hpp"
#include "erligme/prox.hpp"
#include "erligme/models.hpp"
#include "erligme/solver.hpp"
#include "erligme/tasks.hpp"
#include "erligme/io.hpp"
#include "erligme/config.hpp"
#include "erligme/selftest.hpp"
