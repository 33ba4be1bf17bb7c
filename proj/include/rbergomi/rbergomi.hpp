#pragma once

#include "rbergomi/asgq.hpp"
#include "rbergomi/black_scholes.hpp"
#include "rbergomi/brownian_bridge.hpp"
#include "rbergomi/cholesky.hpp"
#include "rbergomi/convolution.hpp"
#include "rbergomi/errors.hpp"
#include "rbergomi/estimators.hpp"
#include "rbergomi/exact_scheme.hpp"
#include "rbergomi/experiments.hpp"
#include "rbergomi/gauss_hermite.hpp"
#include "rbergomi/hybrid_scheme.hpp"
#include "rbergomi/lattice.hpp"
#include "rbergomi/model.hpp"
#include "rbergomi/normal.hpp"
#include "rbergomi/payoff.hpp"
#include "rbergomi/richardson.hpp"
#include "rbergomi/sampling.hpp"
