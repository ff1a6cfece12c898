#pragma once

#include "itinera/core.hpp"
#include "itinera/json_io.hpp"
#include "itinera/kb.hpp"
#include "itinera/synth.hpp"
#include "itinera/plan.hpp"
#include "itinera/slots.hpp"
#include "itinera/validator.hpp"
#include "itinera/planner.hpp"
#include "itinera/dialogue.hpp"
#include "itinera/dataset.hpp"
#include "itinera/bench.hpp"
#include "itinera/service.hpp"
