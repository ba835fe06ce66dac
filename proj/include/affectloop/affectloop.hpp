#pragma once

#include "affectloop/av_core.hpp"
#include "affectloop/clears.hpp"
#include "affectloop/config.hpp"
#include "affectloop/eet.hpp"
#include "affectloop/error.hpp"
#include "affectloop/gameplay.hpp"
#include "affectloop/glados.hpp"
#include "affectloop/piers.hpp"
#include "affectloop/random.hpp"
#include "affectloop/simulator.hpp"
#include "affectloop/text.hpp"
#include "affectloop/worldgen.hpp"
