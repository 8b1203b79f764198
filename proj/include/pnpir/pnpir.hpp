#pragma once

// Umbrella header.

#include "pnpir/data_prox.hpp"
#include "pnpir/degrade.hpp"
#include "pnpir/demosaic_init.hpp"
#include "pnpir/denoise.hpp"
#include "pnpir/diagnostics.hpp"
#include "pnpir/errors.hpp"
#include "pnpir/fft.hpp"
#include "pnpir/image.hpp"
#include "pnpir/kernel.hpp"
#include "pnpir/png_io.hpp"
#include "pnpir/ppdn.hpp"
#include "pnpir/report.hpp"
#include "pnpir/rng.hpp"
#include "pnpir/schedule.hpp"
#include "pnpir/solver.hpp"
