// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace anonypipe {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace anonypipe
