// Copyright (c) 2026 The Anonypipe Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace anonypipe {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Degenerate boxes, out-of-bounds crops, patch/box dimension mismatches.
class InvalidGeometryError : public Error {
 public:
  using Error::Error;
};

/// Codec failures and unreadable raster files.
class ImageIoError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent detection / run manifests.
class ManifestError : public Error {
 public:
  using Error::Error;
};

/// Invalid run configuration (bad method parameters, thresholds, paths).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A model backend failed or violated its declared contract.
class BackendError : public Error {
 public:
  using Error::Error;
};

/// Metric preconditions violated (dimension mismatches, undefined ratios,
/// zero-direction vectors, mismatched manifest image sets).
class EvaluationError : public Error {
 public:
  using Error::Error;
};

}  // namespace anonypipe
