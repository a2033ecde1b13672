#pragma once

#include "dendrevo/config.hpp"
#include "dendrevo/csv.hpp"
#include "dendrevo/error.hpp"
#include "dendrevo/evaluator.hpp"
#include "dendrevo/evolution.hpp"
#include "dendrevo/experiment.hpp"
#include "dendrevo/gate.hpp"
#include "dendrevo/network.hpp"
#include "dendrevo/nk_landscape.hpp"
#include "dendrevo/random.hpp"
#include "dendrevo/stats.hpp"
#include "dendrevo/svg.hpp"
#include "dendrevo/text.hpp"
