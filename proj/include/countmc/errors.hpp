#pragma once

#include <stdexcept>
#include <string>

namespace countmc {

// Bad configuration or invalid inputs: manifest problems, rank-deficient
// model matrix, inconsistent dimensions. CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file; message carries row/column coordinates.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Offset estimation cannot proceed (no gene positive in all samples).
class NormalizationError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Simulation produced a Poisson mean beyond the overflow clamp.
class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The slice sampler's shrink loop exceeded its iteration cap. The engine
// annotates the step name and parameter coordinates before rethrowing.
// CLI maps this to exit code 2.
class SamplerStallError : public std::runtime_error {
 public:
  SamplerStallError(std::string step, long index1, long index2, double x0,
                    double width, long iteration)
      : std::runtime_error(format(step, index1, index2, x0, width, iteration)),
        step_(std::move(step)),
        index1_(index1),
        index2_(index2),
        x0_(x0),
        width_(width),
        iteration_(iteration) {}

  const std::string& step() const { return step_; }
  long index1() const { return index1_; }
  long index2() const { return index2_; }
  double x0() const { return x0_; }
  double width() const { return width_; }
  long iteration() const { return iteration_; }

  SamplerStallError with_coords(std::string step, long index1,
                                long index2) const {
    return SamplerStallError(std::move(step), index1, index2, x0_, width_,
                             iteration_);
  }

 private:
  static std::string format(const std::string& step, long i1, long i2,
                            double x0, double w, long m);

  std::string step_;
  long index1_;
  long index2_;
  double x0_;
  double width_;
  long iteration_;
};

}  // namespace countmc
