#pragma once

#include "tariffkit/errors.hpp"
#include "tariffkit/distributions.hpp"
#include "tariffkit/market_model.hpp"
#include "tariffkit/tariff.hpp"
#include "tariffkit/choice.hpp"
#include "tariffkit/synthetic.hpp"
#include "tariffkit/estimation.hpp"
#include "tariffkit/profit.hpp"
#include "tariffkit/counterfactual.hpp"
#include "tariffkit/io.hpp"
