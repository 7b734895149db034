#pragma once

#include "sparseiter/analysis.hpp"
#include "sparseiter/core.hpp"
#include "sparseiter/dictionaries.hpp"
#include "sparseiter/errors.hpp"
#include "sparseiter/harness.hpp"
#include "sparseiter/io.hpp"
#include "sparseiter/rng.hpp"
#include "sparseiter/solvers.hpp"
#include "sparseiter/types.hpp"
