#pragma once

#include "smale/assembly.hpp"
#include "smale/branch.hpp"
#include "smale/config.hpp"
#include "smale/conjugate.hpp"
#include "smale/errors.hpp"
#include "smale/expression.hpp"
#include "smale/mesh.hpp"
#include "smale/metric.hpp"
#include "smale/parallel.hpp"
#include "smale/pipeline.hpp"
#include "smale/problem.hpp"
#include "smale/spectral.hpp"
