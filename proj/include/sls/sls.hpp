#pragma once

#include "sls/bench.hpp"
#include "sls/config.hpp"
#include "sls/dataset_io.hpp"
#include "sls/error.hpp"
#include "sls/estimator.hpp"
#include "sls/link.hpp"
#include "sls/model.hpp"
#include "sls/plot.hpp"
#include "sls/quadrature.hpp"
#include "sls/report.hpp"
#include "sls/rng.hpp"
#include "sls/synth.hpp"
#include "sls/verify.hpp"
