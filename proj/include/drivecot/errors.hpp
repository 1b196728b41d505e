#pragma once

#include <stdexcept>
#include <string>

namespace drivecot {

// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// core / sequence assembly
class IncompleteCot : public Error { public: using Error::Error; };
class BadTrajectory : public Error { public: using Error::Error; };
class MalformedDelimiters : public Error { public: using Error::Error; };

// kinematics
class DegenerateTrajectory : public Error { public: using Error::Error; };
class EmptyPopulation : public Error { public: using Error::Error; };

// filters / feedback
class NoFailures : public Error { public: using Error::Error; };

// prompt rendering
class MissingPlaceholder : public Error { public: using Error::Error; };

// reward math
class ZeroNorm : public Error { public: using Error::Error; };
class DimMismatch : public Error { public: using Error::Error; };
class LengthMismatch : public Error { public: using Error::Error; };
class BadStage : public Error { public: using Error::Error; };
class GroupTooSmall : public Error { public: using Error::Error; };
class NonFinite : public Error { public: using Error::Error; };
class PositiveLogProb : public Error { public: using Error::Error; };

// evaluation metrics
class HorizonOutOfRange : public Error { public: using Error::Error; };
class MissingObstacleFrame : public Error { public: using Error::Error; };
class TooFewSamples : public Error { public: using Error::Error; };
class NonPSDCovariance : public Error { public: using Error::Error; };

// configuration / CLI
class ConfigError : public Error { public: using Error::Error; };
class DataError : public Error { public: using Error::Error; };

}  // namespace drivecot
