#pragma once

#include "frim/chart_io.hpp"
#include "frim/diagnostics.hpp"
#include "frim/errors.hpp"
#include "frim/expansion.hpp"
#include "frim/gap.hpp"
#include "frim/lyapunov_perron.hpp"
#include "frim/nonlinearity.hpp"
#include "frim/solver.hpp"
#include "frim/spectral.hpp"
