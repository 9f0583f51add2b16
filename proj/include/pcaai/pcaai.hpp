#pragma once

#include "pcaai/analytics.hpp"
#include "pcaai/circuit.hpp"
#include "pcaai/circuit_io.hpp"
#include "pcaai/correction.hpp"
#include "pcaai/custom_float.hpp"
#include "pcaai/energy.hpp"
#include "pcaai/error.hpp"
#include "pcaai/error_analysis.hpp"
#include "pcaai/generate.hpp"
#include "pcaai/inference.hpp"
#include "pcaai/parallel.hpp"
#include "pcaai/replacement.hpp"
#include "pcaai/rng.hpp"
#include "pcaai/structure.hpp"
