// Copyright 2026 The EmbedForge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "oracles.h"

#include <algorithm>
#include <cmath>

namespace embedforge::oracle {
namespace {

long double log_softmax_at(const std::vector<double>& row, std::size_t at, long double temp) {
  long double denom = 0.0L;
  for (double x : row) denom += std::exp(static_cast<long double>(x) / temp);
  return static_cast<long double>(row[at]) / temp - std::log(denom);
}

std::vector<long double> softmax(const std::vector<double>& row, std::size_t cols,
                                 long double temp) {
  std::vector<long double> p(cols);
  long double z = 0.0L;
  for (std::size_t j = 0; j < cols; ++j) {
    p[j] = std::exp(static_cast<long double>(row[j]) / temp);
    z += p[j];
  }
  for (auto& x : p) x /= z;
  return p;
}

long double dcg(const std::vector<int>& grades, std::size_t k) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < grades.size() && i < k; ++i) {
    const long double gain = std::pow(2.0L, grades[i]) - 1.0L;
    s += gain * std::log(2.0L) / std::log(static_cast<long double>(i) + 2.0L);
  }
  return s;
}

}  // namespace

double info_nce(const Matrix& s, double tau) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < s.size(); ++i) total -= log_softmax_at(s[i], i, tau);
  return static_cast<double>(total / static_cast<long double>(s.size()));
}

double kd(const Matrix& teacher, const Matrix& student, double tau_t, double tau_s) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < teacher.size(); ++i) {
    const std::size_t cols = teacher[i].size();
    const auto p = softmax(teacher[i], cols, tau_t);
    const auto q = softmax(student[i], cols, tau_s);
    for (std::size_t j = 0; j < cols; ++j) {
      if (p[j] > 0.0L) total += p[j] * std::log(p[j] / q[j]);
    }
  }
  return static_cast<double>(total / static_cast<long double>(teacher.size()));
}

double finetune(const Matrix& student, const Matrix* teacher, double tau, double alpha,
                double tau_t) {
  long double ce = 0.0L;
  for (const auto& row : student) ce -= log_softmax_at(row, 0, tau);
  ce /= static_cast<long double>(student.size());
  if (!teacher) return static_cast<double>(ce);
  Matrix cut;
  for (const auto& row : student) {
    cut.emplace_back(row.begin(), row.begin() + static_cast<long>((*teacher)[0].size()));
  }
  return static_cast<double>(ce) + alpha * kd(*teacher, cut, tau_t, tau);
}

long double ideal_dcg_bruteforce(const std::vector<int>& all, std::size_t k) {
  std::vector<int> perm = all;
  std::sort(perm.begin(), perm.end());
  long double best = 0.0L;
  do {
    best = std::max(best, dcg(perm, k));
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

long double dcg_of(const std::vector<int>& ranked, std::size_t k) { return dcg(ranked, k); }

double ndcg_bruteforce(const std::vector<int>& ranked, const std::vector<int>& all,
                       std::size_t k) {
  return static_cast<double>(dcg(ranked, k) / ideal_dcg_bruteforce(all, k));
}

double recall_direct(const std::vector<int>& ranked, const std::vector<int>& all,
                     std::size_t k) {
  const auto relevant = std::count_if(all.begin(), all.end(), [](int g) { return g >= 1; });
  long hit = 0;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) hit += ranked[i] >= 1 ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(relevant);
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  auto ranks = [](const std::vector<double>& x) {
    std::vector<long double> r(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      long double less = 0, equal = 0;
      for (double y : x) {
        less += y < x[i] ? 1 : 0;
        equal += y == x[i] ? 1 : 0;
      }
      r[i] = less + (equal + 1.0L) / 2.0L;
    }
    return r;
  };
  const auto ra = ranks(a), rb = ranks(b);
  const long double n = static_cast<long double>(a.size());
  long double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += ra[i] / n;
    mb += rb[i] / n;
  }
  long double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return static_cast<double>(sab / std::sqrt(saa * sbb));
}

std::uint64_t fnv1a64(const std::string& bytes, std::uint64_t seed) {
  std::uint64_t h = 14695981039346656037ULL ^ seed;
  for (char c : bytes) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

double adam_scalar(double param, const std::vector<double>& grads, double lr) {
  double m = 0.0, v = 0.0;
  for (std::size_t t = 1; t <= grads.size(); ++t) {
    const double g = grads[t - 1];
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mhat = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
    const double vhat = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
    param -= lr * mhat / (std::sqrt(vhat) + 1e-8);
  }
  return param;
}

double mean(const std::vector<double>& xs) {
  long double s = 0.0L;
  for (double x : xs) s += x;
  return static_cast<double>(s / static_cast<long double>(xs.size()));
}

}  // namespace embedforge::oracle
