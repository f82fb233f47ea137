#pragma once

#include "cubqmc/baselines.hpp"
#include "cubqmc/cone.hpp"
#include "cubqmc/control_variates.hpp"
#include "cubqmc/engine.hpp"
#include "cubqmc/errors.hpp"
#include "cubqmc/experiments.hpp"
#include "cubqmc/integrand.hpp"
#include "cubqmc/ledger.hpp"
#include "cubqmc/models/asian.hpp"
#include "cubqmc/models/mvn.hpp"
#include "cubqmc/models/sobol_indices.hpp"
#include "cubqmc/models/test_functions.hpp"
#include "cubqmc/selftest.hpp"
#include "cubqmc/sequences.hpp"
#include "cubqmc/special_functions.hpp"
#include "cubqmc/tolerance.hpp"
#include "cubqmc/transforms.hpp"
