#pragma once

#include "olstec/error.hpp"
#include "olstec/io.hpp"
#include "olstec/matrix.hpp"
#include "olstec/metrics.hpp"
#include "olstec/random.hpp"
#include "olstec/rls_row.hpp"
#include "olstec/runner.hpp"
#include "olstec/sgd.hpp"
#include "olstec/spd_solve.hpp"
#include "olstec/synth.hpp"
#include "olstec/tensor_core.hpp"
#include "olstec/tracker.hpp"
