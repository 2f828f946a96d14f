#pragma once

#include "entroguide/agent.hpp"
#include "entroguide/bench.hpp"
#include "entroguide/checkers.hpp"
#include "entroguide/config.hpp"
#include "entroguide/engine.hpp"
#include "entroguide/entropy.hpp"
#include "entroguide/metrics.hpp"
#include "entroguide/policy.hpp"
#include "entroguide/remote.hpp"
#include "entroguide/routing.hpp"
#include "entroguide/store.hpp"
#include "entroguide/task.hpp"
#include "entroguide/text.hpp"
#include "entroguide/types.hpp"
