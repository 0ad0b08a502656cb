#pragma once

#include <stdexcept>
#include <string>

namespace cusplab {

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(code + ": " + what), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

class PresetRejected : public Error {
 public:
  PresetRejected(const std::string& what, double margin)
      : Error("rejected-preset", what), margin(margin) {}
  double margin;
};

class InfiniteDerivative : public Error {
 public:
  explicit InfiniteDerivative(const std::string& what) : Error("infinite-derivative", what) {}
};

class EmptyCoding : public Error {
 public:
  explicit EmptyCoding(const std::string& what) : Error("empty-coding", what) {}
};

class CodingDefect : public Error {
 public:
  CodingDefect(const std::string& what, std::string first, std::string second)
      : Error("coding-defect", what), first(std::move(first)), second(std::move(second)) {}
  std::string first, second;
};

class OrbitEscape : public Error {
 public:
  explicit OrbitEscape(const std::string& what) : Error("orbit-escape", what) {}
};

class EigenFailure : public Error {
 public:
  EigenFailure(const std::string& what, double residual)
      : Error("eigen-failure", what), residual(residual) {}
  double residual;
};

class DeltaRange : public Error {
 public:
  explicit DeltaRange(const std::string& what) : Error("delta-range", what) {}
};

class InvalidTwist : public Error {
 public:
  explicit InvalidTwist(const std::string& what) : Error("invalid-twist", what) {}
};

class ResolutionExhausted : public Error {
 public:
  explicit ResolutionExhausted(const std::string& what) : Error("resolution-exhausted", what) {}
};

class NormalizationDrift : public Error {
 public:
  NormalizationDrift(const std::string& what, double deviation)
      : Error("normalization-drift", what), deviation(deviation) {}
  double deviation;
};

class ItineraryError : public Error {
 public:
  explicit ItineraryError(const std::string& what) : Error("itinerary", what) {}
};

class PartialSum : public Error {
 public:
  PartialSum(const std::string& what, double discarded)
      : Error("partial-sum", what), discardedBound(discarded) {}
  double discardedBound;
};

class DenseIndexError : public Error {
 public:
  explicit DenseIndexError(const std::string& what) : Error("dense-index", what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error("config", what) {}
};

}  // namespace cusplab
