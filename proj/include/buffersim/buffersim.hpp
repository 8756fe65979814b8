// Copyright 2026 The buffersim Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Convenience header pulling in the whole engine.
#include "buffersim/linalg.hpp"
#include "buffersim/correlation.hpp"
#include "buffersim/rng.hpp"
#include "buffersim/market.hpp"
#include "buffersim/pension_system.hpp"
#include "buffersim/preferences.hpp"
#include "buffersim/policy.hpp"
#include "buffersim/metrics.hpp"
#include "buffersim/harness.hpp"
#include "buffersim/config.hpp"
#include "buffersim/results_io.hpp"
