#pragma once

#include <stdexcept>
#include <string>

namespace tsm {

// Base class for all domain errors thrown by this library. The CLI maps
// subclasses onto exit codes; see tools/.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Fewer than two distinct support points; no invertible interpolated CDF.
class DegenerateDistribution final : public Error {
public:
  using Error::Error;
};

class InvalidWeight final : public Error {
public:
  using Error::Error;
};

class InvalidProbability final : public Error {
public:
  using Error::Error;
};

// Slide has fewer than 2k tiles for the model evaluating it.
class TooFewTiles final : public Error {
public:
  using Error::Error;
};

// Training or metric computation requires both classes (or labels at all).
class DegenerateLabels final : public Error {
public:
  using Error::Error;
};

class EnsembleMismatch final : public Error {
public:
  using Error::Error;
};

class NoPositives final : public Error {
public:
  using Error::Error;
};

class NoNegatives final : public Error {
public:
  using Error::Error;
};

class NoSamples final : public Error {
public:
  using Error::Error;
};

// omega_c neither given nor derivable from calibration labels.
class MissingPrevalence final : public Error {
public:
  using Error::Error;
};

// Malformed cohort/model/shift/experiment specification.
class InvalidSpec final : public Error {
public:
  using Error::Error;
};

// Calibration sampling plan cannot be satisfied by the cohort composition.
class InfeasiblePlan final : public Error {
public:
  using Error::Error;
};

// Unreadable or structurally invalid data file.
class DataFormatError final : public Error {
public:
  using Error::Error;
};

}  // namespace tsm
