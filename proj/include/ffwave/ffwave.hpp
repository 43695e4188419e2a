#pragma once

#include "ffwave/errors.hpp"
#include "ffwave/parallel.hpp"
#include "ffwave/interpolation.hpp"
#include "ffwave/energy_grid.hpp"
#include "ffwave/potential.hpp"
#include "ffwave/spectral.hpp"
#include "ffwave/fredholm.hpp"
#include "ffwave/scattering.hpp"
#include "ffwave/wave_operators.hpp"
#include "ffwave/oracles.hpp"
#include "ffwave/config.hpp"
#include "ffwave/report.hpp"
#include "ffwave/scenario.hpp"
