#pragma once

#include "imblab/analysis.hpp"
#include "imblab/common.hpp"
#include "imblab/dataio.hpp"
#include "imblab/dataset.hpp"
#include "imblab/gbdt.hpp"
#include "imblab/linear_model.hpp"
#include "imblab/metrics.hpp"
#include "imblab/mlp.hpp"
#include "imblab/reweight.hpp"
#include "imblab/stats.hpp"
#include "imblab/sweep.hpp"
#include "imblab/tradeoff.hpp"
