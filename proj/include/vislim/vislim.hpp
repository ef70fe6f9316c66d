#pragma once

#include "vislim/error.hpp"
#include "vislim/spectral.hpp"
#include "vislim/snapshot.hpp"
#include "vislim/thermo.hpp"
#include "vislim/helmholtz.hpp"
#include "vislim/linear.hpp"
#include "vislim/energy.hpp"
#include "vislim/trajectory.hpp"
#include "vislim/cns.hpp"
#include "vislim/ins.hpp"
#include "vislim/interpolant.hpp"
#include "vislim/initial_data.hpp"
#include "vislim/transport.hpp"
#include "vislim/transport_cases.hpp"
#include "vislim/diagnostics.hpp"
#include "vislim/config.hpp"
#include "vislim/io.hpp"
#include "vislim/sweep.hpp"
