#pragma once

#include <stdexcept>
#include <string>

namespace ellipsekit {

// Error hierarchy. Input-contract violations derive from std::invalid_argument,
// numerical or data failures from std::runtime_error, so callers (and the
// Python bindings) can catch at either granularity.

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotAnEllipse : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Object (or part of it) lies behind the camera's principal plane.
class BehindCamera : public NotAnEllipse {
 public:
  using NotAnEllipse::NotAnEllipse;
};

class NotAnEllipsoid : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, int iterations, double residual)
      : std::runtime_error(what), iterations_(iterations), residual_(residual) {}

  int iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  int iterations_;
  double residual_;
};

class IllConditioned : public std::runtime_error {
 public:
  IllConditioned(const std::string& what, double singular_gap)
      : std::runtime_error(what), singular_gap_(singular_gap) {}

  // Ratio of the second-smallest to the largest singular value.
  double singular_gap() const { return singular_gap_; }

 private:
  double singular_gap_;
};

class UndefinedMetric : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SceneGenerationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace ellipsekit
