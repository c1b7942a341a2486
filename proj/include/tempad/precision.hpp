// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tempad Authors

#pragma once

// Numeric code lives in an inline namespace named after its scalar type so
// a double build can be linked next to the default float build.
#ifdef TEMPAD_DOUBLE_PRECISION
#define TEMPAD_PRECISION_NS f64
#else
#define TEMPAD_PRECISION_NS f32
#endif

namespace tempad::inline TEMPAD_PRECISION_NS {

#ifdef TEMPAD_DOUBLE_PRECISION
using real = double;
#else
using real = float;
#endif

}  // namespace tempad
