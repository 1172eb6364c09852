#pragma once

#include "symperc/analytic.hpp"
#include "symperc/harness.hpp"
#include "symperc/process.hpp"
#include "symperc/sampler.hpp"
#include "symperc/serialize.hpp"
#include "symperc/solver.hpp"
#include "symperc/structure.hpp"
#include "symperc/version.hpp"
