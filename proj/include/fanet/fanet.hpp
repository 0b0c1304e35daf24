#pragma once

#include "fanet/beamforming.hpp"
#include "fanet/channel.hpp"
#include "fanet/config.hpp"
#include "fanet/errors.hpp"
#include "fanet/geometry.hpp"
#include "fanet/graph.hpp"
#include "fanet/harness.hpp"
#include "fanet/random.hpp"
#include "fanet/routing.hpp"
#include "fanet/stats.hpp"
#include "fanet/tracking.hpp"
#include "fanet/uncertainty.hpp"
