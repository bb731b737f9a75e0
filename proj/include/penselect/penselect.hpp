// Copyright (c) 2026 penselect contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef PENSELECT_PENSELECT_HPP
#define PENSELECT_PENSELECT_HPP

#include "penselect/bounds.hpp"
#include "penselect/harness.hpp"
#include "penselect/linalg.hpp"
#include "penselect/models.hpp"
#include "penselect/noise.hpp"
#include "penselect/partition.hpp"
#include "penselect/rng.hpp"
#include "penselect/select.hpp"

#endif  // PENSELECT_PENSELECT_HPP
