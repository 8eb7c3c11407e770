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

#ifndef SVAK_METRICS_H_
#define SVAK_METRICS_H_

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace svak {

struct RocPoint {
  double threshold;  // accept when score >= threshold
  double far;        // nontargets >= threshold
  double frr;        // targets < threshold
};

// One point per distinct pooled score plus a final point at +inf, in
// increasing threshold order. FAR falls from 1 to 0, FRR rises from 0 to 1.
std::vector<RocPoint> RocOperatingPoints(std::span<const double> targets,
                                         std::span<const double> nontargets);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
};

// Crossing of FAR and FRR. When no operating point has FAR == FRR the value
// is interpolated linearly between the two points that bracket the sign
// change of FAR - FRR.
EerResult ComputeEer(std::span<const double> targets,
                     std::span<const double> nontargets);

struct MeanCi {
  double mean = 0.0;
  double halfwidth = 0.0;
  std::size_t n = 0;
};

// Student-t interval: mean +- t((1+level)/2, n-1) * s / sqrt(n). Needs n >= 2.
MeanCi ComputeMeanCi(std::span<const double> samples, double level = 0.95);

// Like ComputeMeanCi but also accepts n == 1, which yields the mean only.
struct CellStat {
  double mean = 0.0;
  double halfwidth = 0.0;
  std::size_t n = 0;
  bool has_ci = false;
};
CellStat SummarizeSamples(std::span<const double> samples, double level = 0.95);

// "-9.7 ± 5.2" with `decimals` digits; cells without a CI render the mean
// followed by "(n=1)".
std::string FormatCell(const CellStat &cell, int decimals = 1);

// Number of pairs among (0,1), (0,2), (1,2) whose order agrees between the
// two triples. Ties agree only with ties.
int PairwiseAgreements(const std::array<double, 3> &reference,
                       const std::array<double, 3> &other);

}  // namespace svak

#endif  // SVAK_METRICS_H_
