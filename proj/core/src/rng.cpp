// Copyright 2026 The gssd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gssd/rng.hpp"

#include <cmath>
#include <vector>

#include "gssd/error.hpp"

namespace gssd {

namespace {

// Rational approximation coefficients from Wichura (1988), AS 241, PPND16.
constexpr double kA[8] = {
    3.3871328727963666080e+0, 1.3314166789178437745e+2,
    1.9715909503065514427e+3, 1.3731693765509461125e+4,
    4.5921953931549871457e+4, 6.7265770927008700853e+4,
    3.3430575583588128105e+4, 2.5090809287301226727e+3};
constexpr double kB[8] = {
    1.0,                      4.2313330701600911252e+1,
    6.8718700749205790830e+2, 5.3941960214247511077e+3,
    2.1213794301586595867e+4, 3.9307895800092710610e+4,
    2.8729085735721942674e+4, 5.2264952788528545610e+3};
constexpr double kC[8] = {
    1.42343711074968357734e+0, 4.63033784615654529590e+0,
    5.76949722146069140550e+0, 3.64784832476320460504e+0,
    1.27045825245236838258e+0, 2.41780725177450611770e-1,
    2.27238449892691845833e-2, 7.74545014278341407640e-4};
constexpr double kD[8] = {
    1.0,                       2.05319162663775882187e+0,
    1.67638483018380384940e+0, 6.89767334985100004550e-1,
    1.48103976427480074590e-1, 1.51986665636164571966e-2,
    5.47593808499534494600e-4, 1.05075007164441684324e-9};
constexpr double kE[8] = {
    6.65790464350110377720e+0, 5.46378491116411436990e+0,
    1.78482653991729133580e+0, 2.96560571828504891230e-1,
    2.65321895265761230930e-2, 1.24266094738807843860e-3,
    2.71155556874348757815e-5, 2.01033439929228813265e-7};
constexpr double kF[8] = {
    1.0,                       5.99832206555887937690e-1,
    1.36929880922735805310e-1, 1.48753612908506148525e-2,
    7.86869131145613259100e-4, 1.84631831751005468180e-5,
    1.42151175831644588870e-7, 2.04426310338993978564e-15};

double poly7(const double (&c)[8], double r) {
  return ((((((c[7] * r + c[6]) * r + c[5]) * r + c[4]) * r + c[3]) * r +
           c[2]) * r + c[1]) * r + c[0];
}

}  // namespace

double inverse_normal_cdf(double u) {
  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidArgument("inverse_normal_cdf: u must lie in (0, 1)");
  }
  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * poly7(kA, r) / poly7(kB, r);
  }
  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double z;
  if (r <= 5.0) {
    r -= 1.6;
    z = poly7(kC, r) / poly7(kD, r);
  } else {
    r -= 5.0;
    z = poly7(kE, r) / poly7(kF, r);
  }
  return q < 0.0 ? -z : z;
}

double RngStream::normal(std::uint64_t index) const {
  return inverse_normal_cdf(uniform(index));
}

std::vector<Eigen::VectorXd> sample_sphere(const RngStream& stream,
                                           Eigen::Index d,
                                           Eigen::Index count) {
  if (d < 1) throw InvalidArgument("sample_sphere: dimension must be >= 1");
  if (count < 1) throw InvalidArgument("sample_sphere: count must be >= 1");
  std::vector<Eigen::VectorXd> dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  for (Eigen::Index l = 0; l < count; ++l) {
    const RngStream sub = stream.child(static_cast<std::uint64_t>(l));
    Eigen::VectorXd u(d);
    std::uint64_t offset = 0;
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < d; ++i) {
        u[i] = sub.normal(offset + static_cast<std::uint64_t>(i));
      }
      norm = u.norm();
      offset += static_cast<std::uint64_t>(d);  // redraw on a zero-norm block
    } while (norm < 1e-100);
    u /= norm;
    dirs.push_back(std::move(u));
  }
  return dirs;
}

Eigen::VectorXd gaussian_noise(const RngStream& stream, Eigen::Index n,
                               double sigma) {
  if (sigma < 0.0) throw InvalidArgument("gaussian_noise: sigma must be >= 0");
  if (n < 0) throw InvalidArgument("gaussian_noise: count must be >= 0");
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    z[i] = sigma * stream.normal(static_cast<std::uint64_t>(i));
  }
  return z;
}

}  // namespace gssd
