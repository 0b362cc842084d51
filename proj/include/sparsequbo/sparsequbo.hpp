#pragma once

#include "sparsequbo/data_io.hpp"
#include "sparsequbo/dict_learning.hpp"
#include "sparsequbo/experiment.hpp"
#include "sparsequbo/meta_strategies.hpp"
#include "sparsequbo/qubo.hpp"
#include "sparsequbo/qubo_io.hpp"
#include "sparsequbo/sample_set.hpp"
#include "sparsequbo/samplers/brute_force.hpp"
#include "sparsequbo/samplers/nebm.hpp"
#include "sparsequbo/samplers/random_sampler.hpp"
#include "sparsequbo/samplers/simulated_annealing.hpp"
#include "sparsequbo/sparse_coding.hpp"
