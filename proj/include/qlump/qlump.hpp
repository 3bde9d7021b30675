// Umbrella header for the quasi-lumpability toolkit.
#pragma once

#include "qlump/bounds.hpp"
#include "qlump/chain_file.hpp"
#include "qlump/chain_gen.hpp"
#include "qlump/error.hpp"
#include "qlump/lumpability.hpp"
#include "qlump/matrix.hpp"
#include "qlump/partition.hpp"
#include "qlump/rng.hpp"
#include "qlump/simulate.hpp"
#include "qlump/stationary.hpp"
#include "qlump/trace_io.hpp"
