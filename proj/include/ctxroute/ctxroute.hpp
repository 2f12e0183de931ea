#pragma once

// Umbrella header. Include individual headers for faster builds.

#include "ctxroute/agent_loop.hpp"
#include "ctxroute/agent_step.hpp"
#include "ctxroute/assets.hpp"
#include "ctxroute/backend.hpp"
#include "ctxroute/config.hpp"
#include "ctxroute/errors.hpp"
#include "ctxroute/http_backend.hpp"
#include "ctxroute/judge.hpp"
#include "ctxroute/live_tools.hpp"
#include "ctxroute/message.hpp"
#include "ctxroute/metrics.hpp"
#include "ctxroute/rational.hpp"
#include "ctxroute/reporting.hpp"
#include "ctxroute/run_record.hpp"
#include "ctxroute/runner.hpp"
#include "ctxroute/sim.hpp"
#include "ctxroute/strategy.hpp"
#include "ctxroute/token_counter.hpp"
#include "ctxroute/tools.hpp"
#include "ctxroute/trajectory.hpp"
#include "ctxroute/util.hpp"
#include "ctxroute/version.hpp"
