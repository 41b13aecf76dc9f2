#pragma once

#include "coefficients.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "fractal.hpp"
#include "graph.hpp"
#include "kernels.hpp"
#include "keyvalue.hpp"
#include "laplacian.hpp"
#include "rng.hpp"
#include "simulator.hpp"
