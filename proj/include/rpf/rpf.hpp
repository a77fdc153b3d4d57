#pragma once

#include "rpf/basis.hpp"
#include "rpf/common.hpp"
#include "rpf/evaluation.hpp"
#include "rpf/events.hpp"
#include "rpf/inference.hpp"
#include "rpf/kernel.hpp"
#include "rpf/model.hpp"
#include "rpf/network.hpp"
#include "rpf/prediction.hpp"
#include "rpf/simulator.hpp"
#include "rpf/snapshot.hpp"
#include "rpf/special.hpp"
