#pragma once

#include "hypro/config.hpp"
#include "hypro/core.hpp"
#include "hypro/energy.hpp"
#include "hypro/error.hpp"
#include "hypro/inference.hpp"
#include "hypro/intensity.hpp"
#include "hypro/io.hpp"
#include "hypro/metrics.hpp"
#include "hypro/nce.hpp"
#include "hypro/optim.hpp"
#include "hypro/parallel.hpp"
#include "hypro/pipeline.hpp"
#include "hypro/rng.hpp"
#include "hypro/synth.hpp"
#include "hypro/thinning.hpp"
#include "hypro/tpp.hpp"
