#pragma once

#include "mgt/error.hpp"
#include "mgt/mesh_fem.hpp"
#include "mgt/state_space.hpp"
#include "mgt/propagate.hpp"
#include "mgt/lq_oracle.hpp"
#include "mgt/riccati.hpp"
#include "mgt/feedback.hpp"
#include "mgt/io.hpp"
#include "mgt/validation.hpp"
