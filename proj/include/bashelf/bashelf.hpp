#pragma once

#include "bashelf/analysis.hpp"
#include "bashelf/calibration.hpp"
#include "bashelf/commands.hpp"
#include "bashelf/config.hpp"
#include "bashelf/dynamics.hpp"
#include "bashelf/error.hpp"
#include "bashelf/levels.hpp"
#include "bashelf/parallel.hpp"
#include "bashelf/protocol.hpp"
#include "bashelf/random.hpp"
#include "bashelf/readout.hpp"
