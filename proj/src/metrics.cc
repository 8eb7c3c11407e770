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

#include "svak/metrics.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "svak/common.h"

namespace svak {

std::vector<RocPoint> RocOperatingPoints(std::span<const double> targets,
                                         std::span<const double> nontargets) {
  if (targets.empty() || nontargets.empty())
    Fail(ErrorCode::kNoData, "EER needs non-empty target and nontarget lists");
  std::vector<double> tar(targets.begin(), targets.end());
  std::vector<double> non(nontargets.begin(), nontargets.end());
  for (double s : tar)
    if (!std::isfinite(s)) Fail(ErrorCode::kNumerical, "non-finite target score");
  for (double s : non)
    if (!std::isfinite(s)) Fail(ErrorCode::kNumerical, "non-finite nontarget score");
  std::sort(tar.begin(), tar.end());
  std::sort(non.begin(), non.end());
  std::vector<double> pooled;
  pooled.reserve(tar.size() + non.size());
  std::merge(tar.begin(), tar.end(), non.begin(), non.end(),
             std::back_inserter(pooled));
  pooled.erase(std::unique(pooled.begin(), pooled.end()), pooled.end());

  const double nt = static_cast<double>(tar.size());
  const double nn = static_cast<double>(non.size());
  std::vector<RocPoint> points;
  points.reserve(pooled.size() + 1);
  std::size_t it = 0, in = 0;  // counts of scores strictly below the threshold
  for (double t : pooled) {
    while (it < tar.size() && tar[it] < t) ++it;
    while (in < non.size() && non[in] < t) ++in;
    points.push_back({t, static_cast<double>(non.size() - in) / nn,
                      static_cast<double>(it) / nt});
  }
  points.push_back({std::numeric_limits<double>::infinity(), 0.0, 1.0});
  return points;
}

EerResult ComputeEer(std::span<const double> targets,
                     std::span<const double> nontargets) {
  const std::vector<RocPoint> pts = RocOperatingPoints(targets, nontargets);
  EerResult r;
  r.n_target = targets.size();
  r.n_nontarget = nontargets.size();
  // pts.front() has FAR = 1 > FRR = 0 and pts.back() has FAR = 0 < FRR = 1.
  for (std::size_t k = 1; k < pts.size(); ++k) {
    const double d = pts[k].far - pts[k].frr;
    if (d > 0.0) continue;
    if (d == 0.0) {
      r.eer = pts[k].far;
      r.threshold = pts[k].threshold;
      return r;
    }
    const RocPoint &a = pts[k - 1], &b = pts[k];
    const double da = a.far - a.frr;
    const double alpha = da / (da - d);
    r.eer = a.far + alpha * (b.far - a.far);
    r.threshold = std::isfinite(b.threshold)
                      ? a.threshold + alpha * (b.threshold - a.threshold)
                      : a.threshold;
    return r;
  }
  Fail(ErrorCode::kNumerical, "ROC has no FAR/FRR crossing");
}

MeanCi ComputeMeanCi(std::span<const double> samples, double level) {
  if (samples.size() < 2)
    Fail(ErrorCode::kInvalidInput, "a confidence interval needs n >= 2");
  if (!(level > 0.0 && level < 1.0))
    Fail(ErrorCode::kInvalidInput, "confidence level must be in (0, 1)");
  const double n = static_cast<double>(samples.size());
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  boost::math::students_t dist(n - 1.0);
  const double t = boost::math::quantile(dist, 0.5 * (1.0 + level));
  return {mean, t * sd / std::sqrt(n), samples.size()};
}

CellStat SummarizeSamples(std::span<const double> samples, double level) {
  if (samples.empty()) Fail(ErrorCode::kNoData, "cannot summarize an empty group");
  CellStat c;
  c.n = samples.size();
  if (samples.size() == 1) {
    c.mean = samples[0];
    return c;
  }
  const MeanCi m = ComputeMeanCi(samples, level);
  c.mean = m.mean;
  c.halfwidth = m.halfwidth;
  c.has_ci = true;
  return c;
}

std::string FormatCell(const CellStat &cell, int decimals) {
  char buf[96];
  // Negative zero after rounding prints as "-0.0"; normalize it.
  auto clean = [decimals](double v) {
    const double scale = std::pow(10.0, decimals);
    const double r = std::round(v * scale) / scale;
    return r == 0.0 ? 0.0 : r;
  };
  if (cell.has_ci)
    std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", decimals, clean(cell.mean),
                  decimals, clean(cell.halfwidth));
  else
    std::snprintf(buf, sizeof(buf), "%.*f (n=%zu)", decimals, clean(cell.mean), cell.n);
  return buf;
}

int PairwiseAgreements(const std::array<double, 3> &reference,
                       const std::array<double, 3> &other) {
  auto sign = [](double a, double b) { return (a > b) - (a < b); };
  int agree = 0;
  for (int i = 0; i < 3; ++i)
    for (int j = i + 1; j < 3; ++j)
      if (sign(reference[i], reference[j]) == sign(other[i], other[j])) ++agree;
  return agree;
}

}  // namespace svak
