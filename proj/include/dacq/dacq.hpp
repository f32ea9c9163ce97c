#pragma once

#include "dacq/clusters.hpp"
#include "dacq/constants.hpp"
#include "dacq/dac_sampler.hpp"
#include "dacq/domination.hpp"
#include "dacq/exact.hpp"
#include "dacq/graph.hpp"
#include "dacq/graph_io.hpp"
#include "dacq/io.hpp"
#include "dacq/parallel.hpp"
#include "dacq/params.hpp"
#include "dacq/quasilocality.hpp"
#include "dacq/rc_sampler.hpp"
#include "dacq/rng.hpp"
#include "dacq/stats.hpp"
#include "dacq/verify.hpp"
