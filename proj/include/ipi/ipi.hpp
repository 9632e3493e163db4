#pragma once

#include "ipi/analyzer.hpp"
#include "ipi/error.hpp"
#include "ipi/identifier.hpp"
#include "ipi/legacy.hpp"
#include "ipi/oracle.hpp"
#include "ipi/rng.hpp"
#include "ipi/simulator.hpp"
#include "ipi/trace_model.hpp"
