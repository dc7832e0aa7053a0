#pragma once

#include "cascade.hpp"
#include "doa.hpp"
#include "harness.hpp"
#include "io.hpp"
#include "likelihood.hpp"
#include "numeric.hpp"
#include "rng.hpp"
#include "signal.hpp"
#include "subspace.hpp"
#include "types.hpp"
