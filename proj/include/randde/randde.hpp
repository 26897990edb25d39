#ifndef RANDDE_RANDDE_HPP
#define RANDDE_RANDDE_HPP

/**
 * @file randde.hpp
 *
 * @brief Umbrella header pulling in the whole library.
 */

#include "baselines.hpp"
#include "count_matrix.hpp"
#include "detector.hpp"
#include "errors.hpp"
#include "gene_test.hpp"
#include "normal.hpp"
#include "randomization_math.hpp"
#include "report_io.hpp"
#include "rng.hpp"
#include "scaling.hpp"
#include "simulator.hpp"

#endif
