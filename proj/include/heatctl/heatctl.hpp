#pragma once

#include "heatctl/errors.hpp"
#include "heatctl/mesh.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/assembly.hpp"
#include "heatctl/problem.hpp"
#include "heatctl/state.hpp"
#include "heatctl/adjoint.hpp"
#include "heatctl/control.hpp"
#include "heatctl/analysis.hpp"
