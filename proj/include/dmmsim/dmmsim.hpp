#pragma once

#include "dmmsim/types.hpp"
#include "dmmsim/trace.hpp"
#include "dmmsim/generator.hpp"
#include "dmmsim/freelist.hpp"
#include "dmmsim/allocator.hpp"
#include "dmmsim/metrics.hpp"
#include "dmmsim/manager.hpp"
#include "dmmsim/presets.hpp"
#include "dmmsim/simulator.hpp"
#include "dmmsim/search.hpp"
