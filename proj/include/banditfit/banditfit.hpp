#pragma once

#include "banditfit/types.hpp"
#include "banditfit/core_model.hpp"
#include "banditfit/features.hpp"
#include "banditfit/isotonic.hpp"
#include "banditfit/surrogate.hpp"
#include "banditfit/box_minimizer.hpp"
#include "banditfit/parallel.hpp"
#include "banditfit/recovery.hpp"
#include "banditfit/dloc.hpp"
#include "banditfit/simulator.hpp"
#include "banditfit/metrics.hpp"
#include "banditfit/model.hpp"
#include "banditfit/benchmark.hpp"
