#pragma once

#include "uhdtest/battery.hpp"
#include "uhdtest/errors.hpp"
#include "uhdtest/matrix_io.hpp"
#include "uhdtest/mollifier.hpp"
#include "uhdtest/parallel.hpp"
#include "uhdtest/procedure.hpp"
#include "uhdtest/quadrature.hpp"
#include "uhdtest/report.hpp"
#include "uhdtest/rmtlab.hpp"
#include "uhdtest/rng.hpp"
#include "uhdtest/simharness.hpp"
#include "uhdtest/spectra.hpp"
#include "uhdtest/splitkit.hpp"
#include "uhdtest/stats.hpp"
#include "uhdtest/teststat.hpp"
#include "uhdtest/tuning.hpp"
#include "uhdtest/version.hpp"
