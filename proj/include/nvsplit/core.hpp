#ifndef NVSPLIT_CORE_HPP
#define NVSPLIT_CORE_HPP

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace nvsplit {

// States live on the stack: every vector and matrix has a fixed capacity,
// enough for an n-dimensional state plus one augmentation row.
inline constexpr int kMaxDim = 7;
inline constexpr int kMaxAug = kMaxDim + 1;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxAug, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxAug, kMaxAug>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A computation produced a non-finite or overflowing value.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// The requested scheme cannot be applied to this model (e.g. Milstein with
/// non-commuting Brownian fields).
class UnsupportedModel : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Rate fitting was asked to regress errors sitting at the round-off floor.
class DegenerateData : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    throw DimensionError(std::string(what) + ": expected dimension " +
                         std::to_string(want) + ", got " + std::to_string(got));
  }
}

}  // namespace nvsplit

#endif  // NVSPLIT_CORE_HPP
