#pragma once

#include "errors.hpp"
#include "rng.hpp"
#include "numerics.hpp"
#include "linalg.hpp"
#include "parallel.hpp"
#include "surmise.hpp"
#include "ensembles.hpp"
#include "ratios.hpp"
#include "models.hpp"
#include "entropy.hpp"
#include "fit.hpp"
#include "io.hpp"
