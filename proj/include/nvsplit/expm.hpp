#ifndef NVSPLIT_EXPM_HPP
#define NVSPLIT_EXPM_HPP

#include <nvsplit/core.hpp>

#include <Eigen/LU>

#include <array>
#include <cmath>

namespace nvsplit {

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant (Higham 2005). The degree is fixed; only the number of
/// squarings depends on ‖A‖₁.
inline Mat expm(const Mat& a) {
  static constexpr std::array<double, 14> b{
      64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
      129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
      1323241920.0,        40840800.0,          960960.0,           16380.0,
      182.0,               1.0};
  static constexpr double theta13 = 5.371920351148152;

  const auto n = a.rows();
  require_dim(a.cols(), n, "expm");
  if (!a.allFinite()) throw NumericalFailure("expm: non-finite matrix entry");

  const double norm1 = n == 0 ? 0.0 : a.cwiseAbs().colwise().sum().maxCoeff();
  if (norm1 == 0.0) return Mat::Identity(n, n);
  int squarings = 0;
  if (norm1 > theta13) squarings = static_cast<int>(std::ceil(std::log2(norm1 / theta13)));
  const Mat s = a * std::ldexp(1.0, -squarings);

  const Mat id = Mat::Identity(n, n);
  const Mat a2 = s * s;
  const Mat a4 = a2 * a2;
  const Mat a6 = a4 * a2;
  const Mat u = s * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 +
                     b[3] * a2 + b[1] * id);
  const Mat v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 +
                b[0] * id;
  Mat r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

}  // namespace nvsplit

#endif  // NVSPLIT_EXPM_HPP
