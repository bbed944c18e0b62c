#pragma once

#include "mapda/array.hpp"
#include "mapda/assembly.hpp"
#include "mapda/baselines.hpp"
#include "mapda/common.hpp"
#include "mapda/delivery.hpp"
#include "mapda/knapsack.hpp"
#include "mapda/placement.hpp"
#include "mapda/subsets.hpp"
