// Copyright 2026 The taxisense Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <type_traits>
#include <utility>
#include <vector>

namespace taxisense {

template <typename W>
concept EdgeWeight = std::is_same_v<W, double> || std::is_same_v<W, std::int64_t>;

// Dense rows x cols weight matrix. Absent edges hold missing(): -inf for
// double, the lowest representable value for integers.
template <EdgeWeight W>
class WeightMatrix {
 public:
  static constexpr W missing() {
    if constexpr (std::is_floating_point_v<W>) {
      return -std::numeric_limits<W>::infinity();
    } else {
      return std::numeric_limits<W>::lowest();
    }
  }

  WeightMatrix() = default;
  WeightMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), values_(rows * cols, missing()) {}

  WeightMatrix(std::initializer_list<std::initializer_list<W>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    values_.reserve(rows_ * cols_);
    for (const auto& row : rows) {
      if (row.size() != cols_) {
        throw std::invalid_argument("WeightMatrix: ragged initializer");
      }
      values_.insert(values_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  W& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  W operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  bool present(std::size_t r, std::size_t c) const {
    return (*this)(r, c) != missing();
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<W> values_;
};

template <EdgeWeight W>
struct Assignment {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (row, col), row-sorted
  W total{};
};

// Maximum-weight bipartite matching by the Kuhn-Munkres algorithm with
// vertex labels and slack tracking. The smaller side is matched into the
// larger one, which is equivalent to padding the matrix square with
// zero-weight virtual vertices but runs in O(n^2 m) for n <= m. Missing and
// negative edges are never part of the returned matching; zero-weight edges
// may be.
//
// Among equal-weight optima the label-update scan visits rows and columns in
// index order, so the result is a deterministic function of the matrix.
template <EdgeWeight W>
Assignment<W> km_solve(const WeightMatrix<W>& weights) {
  const std::size_t rows = weights.rows();
  const std::size_t cols = weights.cols();
  if constexpr (std::is_floating_point_v<W>) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < cols; ++c) {
        const W w = weights(r, c);
        if (w != WeightMatrix<W>::missing() && !std::isfinite(w)) {
          throw std::invalid_argument("km_solve: non-finite edge weight");
        }
      }
    }
  }

  Assignment<W> result;
  if (rows == 0 || cols == 0) return result;

  // Minimisation form, 1-based, with the short side as "left": cost = -weight
  // for usable edges, 0 for missing or negative ones.
  const bool transposed = rows > cols;
  const std::size_t n = transposed ? cols : rows;
  const std::size_t m = transposed ? rows : cols;
  std::vector<W> cost((n + 1) * (m + 1), W{});
  auto at = [&](std::size_t i, std::size_t j) -> W& { return cost[i * (m + 1) + j]; };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const W w = weights(r, c);
      if (w == WeightMatrix<W>::missing() || !(w > W{})) continue;
      if (transposed) {
        at(c + 1, r + 1) = -w;
      } else {
        at(r + 1, c + 1) = -w;
      }
    }
  }

  const W inf = std::is_floating_point_v<W> ? std::numeric_limits<W>::infinity()
                                            : std::numeric_limits<W>::max() / 4;
  // left_label/right_label are the (negated) vertex labels; match_of[j] is
  // the left vertex currently matched to right vertex j (0 = free).
  std::vector<W> left_label(n + 1, W{}), right_label(m + 1, W{});
  std::vector<std::size_t> match_of(m + 1, 0), way(m + 1, 0);
  std::vector<W> slack(m + 1);
  std::vector<char> used(m + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    match_of[0] = i;
    std::size_t j0 = 0;
    std::fill(slack.begin(), slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = match_of[j0];
      W delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const W reduced = at(i0, j) - left_label[i0] - right_label[j];
        if (reduced < slack[j]) {
          slack[j] = reduced;
          way[j] = j0;
        }
        if (slack[j] < delta) {
          delta = slack[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          left_label[match_of[j]] += delta;
          right_label[j] -= delta;
        } else {
          slack[j] -= delta;
        }
      }
      j0 = j1;
    } while (match_of[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      match_of[j0] = match_of[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  for (std::size_t j = 1; j <= m; ++j) {
    if (match_of[j] == 0) continue;
    const std::size_t r = transposed ? j - 1 : match_of[j] - 1;
    const std::size_t c = transposed ? match_of[j] - 1 : j - 1;
    const W w = weights(r, c);
    if (w == WeightMatrix<W>::missing() || w < W{}) continue;
    result.pairs.emplace_back(r, c);
  }
  std::sort(result.pairs.begin(), result.pairs.end());
  for (const auto& [r, c] : result.pairs) result.total += weights(r, c);
  return result;
}

}  // namespace taxisense
