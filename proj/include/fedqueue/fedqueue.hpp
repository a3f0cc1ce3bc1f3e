#pragma once

#include "fedqueue/baselines.hpp"
#include "fedqueue/config.hpp"
#include "fedqueue/engine.hpp"
#include "fedqueue/errors.hpp"
#include "fedqueue/io.hpp"
#include "fedqueue/learn.hpp"
#include "fedqueue/metrics.hpp"
#include "fedqueue/predictor.hpp"
#include "fedqueue/protocol.hpp"
#include "fedqueue/queue_sim.hpp"
#include "fedqueue/rng.hpp"
#include "fedqueue/sim.hpp"
