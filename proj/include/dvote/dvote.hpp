#pragma once

// Umbrella header for the dvote library.

#include "dvote/answer.hpp"
#include "dvote/consistency.hpp"
#include "dvote/core.hpp"
#include "dvote/decode.hpp"
#include "dvote/denoiser.hpp"
#include "dvote/distributions.hpp"
#include "dvote/engine.hpp"
#include "dvote/errors.hpp"
#include "dvote/log.hpp"
#include "dvote/markov.hpp"
#include "dvote/remote.hpp"
#include "dvote/report.hpp"
#include "dvote/rng.hpp"
#include "dvote/runner.hpp"
#include "dvote/tasks.hpp"
