#pragma once

#include "esf/baseline.hpp"
#include "esf/bench.hpp"
#include "esf/config.hpp"
#include "esf/dissection.hpp"
#include "esf/dp.hpp"
#include "esf/io.hpp"
#include "esf/model.hpp"
#include "esf/oracle.hpp"
#include "esf/preprocess.hpp"
#include "esf/prize.hpp"
#include "esf/reductions.hpp"
#include "esf/steiner_forest.hpp"
#include "esf/structure.hpp"
#include "esf/svg.hpp"
#include "esf/util.hpp"
