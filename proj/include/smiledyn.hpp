#pragma once

#include "smiledyn/date.hpp"
#include "smiledyn/error.hpp"
#include "smiledyn/estimators.hpp"
#include "smiledyn/factor_model.hpp"
#include "smiledyn/market_data.hpp"
#include "smiledyn/random.hpp"
#include "smiledyn/regression.hpp"
#include "smiledyn/simulator.hpp"
#include "smiledyn/skew_term.hpp"
#include "smiledyn/smile.hpp"
#include "smiledyn/smile_dynamics.hpp"
#include "smiledyn/table.hpp"
