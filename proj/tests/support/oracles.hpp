/*
 * Copyright 2026 The semslice Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef SEMSLICE_TESTS_ORACLES_HPP_
#define SEMSLICE_TESTS_ORACLES_HPP_

// Reference implementations that share no code with the library.

#include <algorithm>
#include <cstdint>
#include <iterator>
#include <set>
#include <string>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

namespace semslice::testing {

using BigInt = boost::multiprecision::cpp_int;

inline BigInt Binomial(std::int64_t n, std::int64_t k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  BigInt r = 1;
  for (std::int64_t i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

// Enumerates every table with the observed margins in exact integer
// arithmetic. Weights are C(r1, x) * C(r2, c1 - x), so the two-sided p is
// (sum of weights <= observed weight) / C(n, c1). Both binomials are stepped
// exactly from one x to the next.
inline double FisherOracle(std::int64_t a, std::int64_t b, std::int64_t c,
                           std::int64_t d) {
  const std::int64_t r1 = a + b, r2 = c + d, c1 = a + c, n = a + b + c + d;
  if (n == 0) return 1.0;
  const BigInt observed = Binomial(r1, a) * Binomial(r2, c);
  const std::int64_t lo = std::max<std::int64_t>(0, c1 - r2);
  const std::int64_t hi = std::min(r1, c1);
  BigInt left = Binomial(r1, lo);
  BigInt right = Binomial(r2, c1 - lo);
  BigInt tail = 0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const BigInt w = left * right;
    if (w <= observed) tail += w;
    if (x == hi) break;
    left = left * (r1 - x) / (x + 1);
    const std::int64_t k = c1 - x;
    right = right * k / (r2 - k + 1);
  }
  using Float = boost::multiprecision::cpp_bin_float_100;
  const Float p = Float(tail) / Float(Binomial(n, c1));
  return std::min(1.0, p.convert_to<double>());
}

struct PrfCounts {
  std::int64_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

inline PrfCounts PrfOracle(const std::set<std::string>& predicted,
                           const std::set<std::string>& gold) {
  std::set<std::string> both, only_pred, only_gold;
  std::set_intersection(predicted.begin(), predicted.end(), gold.begin(),
                        gold.end(), std::inserter(both, both.end()));
  std::set_difference(predicted.begin(), predicted.end(), gold.begin(),
                      gold.end(), std::inserter(only_pred, only_pred.end()));
  std::set_difference(gold.begin(), gold.end(), predicted.begin(),
                      predicted.end(), std::inserter(only_gold, only_gold.end()));
  PrfCounts r;
  r.tp = static_cast<std::int64_t>(both.size());
  r.fp = static_cast<std::int64_t>(only_pred.size());
  r.fn = static_cast<std::int64_t>(only_gold.size());
  r.precision = predicted.empty() ? 0.0
                                  : static_cast<double>(r.tp) /
                                        static_cast<double>(predicted.size());
  r.recall = gold.empty() ? 0.0
                          : static_cast<double>(r.tp) /
                                static_cast<double>(gold.size());
  r.f1 = (r.precision + r.recall) > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

}  // namespace semslice::testing

#endif  // SEMSLICE_TESTS_ORACLES_HPP_
