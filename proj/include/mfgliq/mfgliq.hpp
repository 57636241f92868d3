// SPDX-License-Identifier: MIT
//
// Umbrella header.
#pragma once

#include "mfgliq/error.hpp"
#include "mfgliq/expression.hpp"
#include "mfgliq/model.hpp"
#include "mfgliq/process.hpp"
#include "mfgliq/riccati.hpp"
#include "mfgliq/equilibrium.hpp"
#include "mfgliq/fixedpoint.hpp"
#include "mfgliq/penalize.hpp"
#include "mfgliq/nplayer.hpp"
#include "mfgliq/model_io.hpp"
#include "mfgliq/table.hpp"
#include "mfgliq/cli.hpp"
