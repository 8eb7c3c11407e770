// Copyright (c) 2026 svak authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SVAK_TESTS_EER_ORACLE_H_
#define SVAK_TESTS_EER_ORACLE_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace svak::testing {

// Brute-force EER: evaluate FAR/FRR at every midpoint between consecutive
// distinct pooled scores plus both infinities, by direct counting, then
// interpolate linearly across the first sign change of FAR - FRR.
inline double BruteForceEer(const std::vector<double> &tar, const std::vector<double> &non) {
  std::vector<double> pooled(tar);
  pooled.insert(pooled.end(), non.begin(), non.end());
  std::sort(pooled.begin(), pooled.end());
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());
  std::vector<double> cand = {-std::numeric_limits<double>::infinity()};
  for (std::size_t i = 0; i + 1 < pooled.size(); ++i)
    cand.push_back(0.5 * (pooled[i] + pooled[i + 1]));
  cand.push_back(std::numeric_limits<double>::infinity());
  std::vector<double> far, frr;
  for (double t : cand) {
    double fa = 0, fr = 0;
    for (double s : non) fa += s >= t;
    for (double s : tar) fr += s < t;
    far.push_back(fa / non.size());
    frr.push_back(fr / tar.size());
  }
  for (std::size_t k = 1; k < cand.size(); ++k) {
    const double d0 = far[k - 1] - frr[k - 1];
    const double d1 = far[k] - frr[k];
    if (d1 > 0) continue;
    if (d1 == 0) return far[k];
    const double a = d0 / (d0 - d1);
    return far[k - 1] + a * (far[k] - far[k - 1]);
  }
  return 0.5;  // unreachable: FAR - FRR ends at -1
}

}  // namespace svak::testing

#endif  // SVAK_TESTS_EER_ORACLE_H_
