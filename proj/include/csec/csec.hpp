#pragma once

// Everything at once: learner, attacks, bounds, kernels and the simulation harness.

#include "attack.hpp"
#include "bounds.hpp"
#include "core.hpp"
#include "corpus.hpp"
#include "csv.hpp"
#include "kernel.hpp"
#include "kernel_pca.hpp"
#include "learner.hpp"
#include "qclp.hpp"
#include "random.hpp"
#include "sim.hpp"
#include "stats.hpp"
