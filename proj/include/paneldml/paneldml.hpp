#pragma once

// Umbrella header for the panel-dml library.

#include "paneldml/boosting.hpp"
#include "paneldml/crossfit.hpp"
#include "paneldml/design.hpp"
#include "paneldml/dgp.hpp"
#include "paneldml/errors.hpp"
#include "paneldml/estimators.hpp"
#include "paneldml/experiment.hpp"
#include "paneldml/ols.hpp"
#include "paneldml/panel.hpp"
#include "paneldml/report.hpp"
#include "paneldml/rng.hpp"
#include "paneldml/transforms.hpp"
