#pragma once

#include "rough_ht/lattice.hpp"
#include "rough_ht/measures.hpp"
#include "rough_ht/convolution.hpp"
#include "rough_ht/operators.hpp"
#include "rough_ht/czdecomp.hpp"
#include "rough_ht/stopping.hpp"
#include "rough_ht/kernels.hpp"
#include "rough_ht/squarefn.hpp"
#include "rough_ht/experiment.hpp"
#include "rough_ht/sweep.hpp"
#include "rough_ht/probes.hpp"
#include "rough_ht/lemma_suite.hpp"
