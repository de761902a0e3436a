// Copyright 2026 The lrmc Authors. All Rights Reserved.
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
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lrmc/core/error.hpp"
#include "lrmc/core/format.hpp"
#include "lrmc/core/matrix.hpp"
#include "lrmc/core/random.hpp"
#include "lrmc/core/types.hpp"

namespace lrmc {

struct Cell {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  auto operator<=>(const Cell&) const = default;
};

/// The observed index set Omega of a d1 x d2 matrix, sampled at rate p.
///
/// Cells are kept sorted row-major; per-row slices are contiguous and a
/// secondary index gives per-column access.
class ObservationMask {
 public:
  ObservationMask() = default;

  ObservationMask(std::size_t d1, std::size_t d2, double p,
                  std::vector<Cell> cells, std::uint64_t seed = 0)
      : d1_(d1), d2_(d2), p_(p), seed_(seed), cells_(std::move(cells)) {
    if (d1 == 0 || d2 == 0) throw parameter_error("ObservationMask: empty dims");
    if (!(p > 0.0 && p <= 1.0)) {
      throw parameter_error("ObservationMask: p must lie in (0, 1]");
    }
    std::sort(cells_.begin(), cells_.end());
    for (std::size_t k = 0; k < cells_.size(); ++k) {
      if (cells_[k].i >= d1 || cells_[k].j >= d2) {
        throw parameter_error("ObservationMask: cell out of bounds");
      }
      if (k > 0 && cells_[k] == cells_[k - 1]) {
        throw parameter_error("ObservationMask: duplicate cell");
      }
    }
    build_index();
  }

  /// Every cell observed, p = 1.
  static ObservationMask full(std::size_t d1, std::size_t d2) {
    std::vector<Cell> cells;
    cells.reserve(d1 * d2);
    for (std::size_t i = 0; i < d1; ++i)
      for (std::size_t j = 0; j < d2; ++j)
        cells.push_back({static_cast<std::uint32_t>(i),
                         static_cast<std::uint32_t>(j)});
    return {d1, d2, 1.0, std::move(cells)};
  }

  std::size_t d1() const noexcept { return d1_; }
  std::size_t d2() const noexcept { return d2_; }
  double p() const noexcept { return p_; }
  std::uint64_t seed() const noexcept { return seed_; }
  std::size_t size() const noexcept { return cells_.size(); }
  std::span<const Cell> cells() const noexcept { return cells_; }

  std::span<const Cell> row_cells(std::size_t i) const noexcept {
    return std::span<const Cell>(cells_).subspan(
        row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]);
  }

  /// Positions (into cells()) of the observed entries of column j, by row.
  std::span<const std::size_t> col_cells(std::size_t j) const noexcept {
    return std::span<const std::size_t>(col_idx_).subspan(
        col_ptr_[j], col_ptr_[j + 1] - col_ptr_[j]);
  }

  bool contains(std::size_t i, std::size_t j) const noexcept {
    if (i >= d1_ || j >= d2_) return false;
    auto row = row_cells(i);
    const Cell key{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)};
    return std::binary_search(row.begin(), row.end(), key);
  }

  const std::vector<std::size_t>& row_index() const noexcept { return row_ptr_; }
  const std::vector<std::size_t>& col_index() const noexcept { return col_ptr_; }

  /// |Omega| below r(d1 + d2), the number of factor degrees of freedom.
  bool underdetermined(std::size_t r) const noexcept {
    return cells_.size() < r * (d1_ + d2_);
  }

  bool operator==(const ObservationMask& o) const noexcept {
    return d1_ == o.d1_ && d2_ == o.d2_ && p_ == o.p_ && cells_ == o.cells_;
  }

 private:
  void build_index() {
    row_ptr_.assign(d1_ + 1, 0);
    col_ptr_.assign(d2_ + 1, 0);
    for (const Cell& c : cells_) {
      ++row_ptr_[c.i + 1];
      ++col_ptr_[c.j + 1];
    }
    for (std::size_t i = 0; i < d1_; ++i) row_ptr_[i + 1] += row_ptr_[i];
    for (std::size_t j = 0; j < d2_; ++j) col_ptr_[j + 1] += col_ptr_[j];
    col_idx_.resize(cells_.size());
    std::vector<std::size_t> fill(col_ptr_.begin(), col_ptr_.end() - 1);
    for (std::size_t k = 0; k < cells_.size(); ++k)
      col_idx_[fill[cells_[k].j]++] = k;
  }

  std::size_t d1_ = 0;
  std::size_t d2_ = 0;
  double p_ = 1.0;
  std::uint64_t seed_ = 0;
  std::vector<Cell> cells_;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::size_t> col_ptr_;
  std::vector<std::size_t> col_idx_;
};

/// Bernoulli(p) mask. Cell (i, j) is kept iff a hash of (seed, i, j) maps
/// below p, so the result does not depend on traversal order.
inline ObservationMask sample_mask(std::size_t d1, std::size_t d2, double p,
                                   std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) {
    throw parameter_error("sample_mask: p must lie in (0, 1], got " +
                          std::to_string(p));
  }
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(p * static_cast<double>(d1 * d2)) + 16);
  for (std::size_t i = 0; i < d1; ++i)
    for (std::size_t j = 0; j < d2; ++j)
      if (to_unit(hash3(seed, i, j)) < p)
        cells.push_back({static_cast<std::uint32_t>(i),
                         static_cast<std::uint32_t>(j)});
  return {d1, d2, p, std::move(cells), seed};
}

namespace detail {
inline void require_dims(const Matrix& m, const ObservationMask& mask,
                         const char* what) {
  if (m.rows() != mask.d1() || m.cols() != mask.d2()) {
    throw parameter_error(std::string(what) + ": dimension mismatch with mask");
  }
}
}  // namespace detail

/// P_Omega(m): keep observed entries, zero the rest.
inline Matrix project(const Matrix& m, const ObservationMask& mask) {
  detail::require_dims(m, mask, "project");
  Matrix out(m.rows(), m.cols());
  for (const Cell& c : mask.cells()) out(c.i, c.j) = m(c.i, c.j);
  return out;
}

/// Leave-one-out index l in 1..d1+d2: a row for l <= d1, else column l - d1.
class LooSelector {
 public:
  enum class Axis { row, column };

  LooSelector(std::size_t l, std::size_t d1, std::size_t d2) : l_(l) {
    if (l < 1 || l > d1 + d2) {
      throw parameter_error("LooSelector: l = " + std::to_string(l) +
                            " outside 1.." + std::to_string(d1 + d2));
    }
    axis_ = l <= d1 ? Axis::row : Axis::column;
    index_ = l <= d1 ? l - 1 : l - d1 - 1;
  }

  std::size_t l() const noexcept { return l_; }
  Axis axis() const noexcept { return axis_; }
  /// Zero-based row or column index.
  std::size_t index() const noexcept { return index_; }

  bool targets(std::size_t i, std::size_t j) const noexcept {
    return axis_ == Axis::row ? i == index_ : j == index_;
  }

  bool operator==(const LooSelector&) const = default;

 private:
  std::size_t l_;
  Axis axis_;
  std::size_t index_;
};

/// (P_{Omega_{-l}} + p P_l)(m): the mask outside the selected row/column,
/// p times the full row/column on it.
inline Matrix loo_project(const Matrix& m, const ObservationMask& mask,
                          const LooSelector& sel, double p) {
  detail::require_dims(m, mask, "loo_project");
  LooSelector checked(sel.l(), mask.d1(), mask.d2());
  Matrix out(m.rows(), m.cols());
  for (const Cell& c : mask.cells())
    if (!checked.targets(c.i, c.j)) out(c.i, c.j) = m(c.i, c.j);
  if (checked.axis() == LooSelector::Axis::row) {
    for (std::size_t j = 0; j < m.cols(); ++j)
      out(checked.index(), j) = p * m(checked.index(), j);
  } else {
    for (std::size_t i = 0; i < m.rows(); ++i)
      out(i, checked.index()) = p * m(i, checked.index());
  }
  return out;
}

/// A diagonal sampling operator A(m)_ij = w_ij m_ij supported on a sorted
/// cell list. Covers p^{-1} P_Omega (w = 1/p on Omega) and the
/// leave-one-out operator p^{-1} P_{Omega_{-l}} + P_l (w = 1 on the
/// selected row/column). Never materialized as a dense matrix.
struct WeightedCells {
  std::size_t d1 = 0;
  std::size_t d2 = 0;
  std::vector<Cell> cells;
  std::vector<double> weights;

  Matrix apply(const Matrix& m) const {
    Matrix out(d1, d2);
    for (std::size_t k = 0; k < cells.size(); ++k)
      out(cells[k].i, cells[k].j) = weights[k] * m(cells[k].i, cells[k].j);
    return out;
  }
};

/// p^{-1} P_Omega
inline WeightedCells sampling_operator(const ObservationMask& mask) {
  WeightedCells op{mask.d1(), mask.d2(),
                   std::vector<Cell>(mask.cells().begin(), mask.cells().end()),
                   {}};
  op.weights.assign(op.cells.size(), 1.0 / mask.p());
  return op;
}

/// p^{-1} P_{Omega_{-l}} + P_l, cells still sorted row-major.
inline WeightedCells loo_operator(const ObservationMask& mask,
                                  const LooSelector& sel) {
  LooSelector checked(sel.l(), mask.d1(), mask.d2());
  const double inv_p = 1.0 / mask.p();
  WeightedCells op{mask.d1(), mask.d2(), {}, {}};
  op.cells.reserve(mask.size() + std::max(mask.d1(), mask.d2()));
  op.weights.reserve(op.cells.capacity());
  auto push = [&](std::size_t i, std::size_t j, double w) {
    op.cells.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
    op.weights.push_back(w);
  };
  for (std::size_t i = 0; i < mask.d1(); ++i) {
    if (checked.axis() == LooSelector::Axis::row && i == checked.index()) {
      for (std::size_t j = 0; j < mask.d2(); ++j) push(i, j, 1.0);
      continue;
    }
    const std::size_t target = checked.axis() == LooSelector::Axis::column
                                   ? checked.index()
                                   : mask.d2();
    bool placed = target == mask.d2();
    for (const Cell& c : mask.row_cells(i)) {
      if (!placed && c.j >= target) {
        push(i, target, 1.0);
        placed = true;
      }
      if (c.j == target) continue;
      push(c.i, c.j, inv_p);
    }
    if (!placed) push(i, target, 1.0);
  }
  return op;
}

/// p^{-1} P_Omega(X Y^T - M*) as a dense matrix; zero off the mask. Only the
/// observed entries of X Y^T are evaluated.
inline Matrix scaled_residual(const FactorPair& f, const Matrix& m_star,
                              const ObservationMask& mask) {
  detail::require_dims(m_star, mask, "scaled_residual");
  if (f.d1() != mask.d1() || f.d2() != mask.d2()) {
    throw parameter_error("scaled_residual: factor dimension mismatch");
  }
  const double inv_p = 1.0 / mask.p();
  Matrix out(mask.d1(), mask.d2());
  for (const Cell& c : mask.cells())
    out(c.i, c.j) = inv_p * (dot(f.x.row(c.i), f.y.row(c.j)) - m_star(c.i, c.j));
  return out;
}

// Mask text format: header "d1 d2 p seed", then one "i j" pair per line.

inline void write_mask(std::ostream& os, const ObservationMask& mask) {
  os << mask.d1() << ' ' << mask.d2() << ' ' << format_double(mask.p()) << ' '
     << mask.seed() << '\n';
  for (const Cell& c : mask.cells()) os << c.i << ' ' << c.j << '\n';
}

inline ObservationMask read_mask(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw parameter_error("read_mask: missing header");
  std::istringstream hs(header);
  std::size_t d1 = 0, d2 = 0;
  double p = 0.0;
  std::uint64_t seed = 0;
  if (!(hs >> d1 >> d2 >> p >> seed)) {
    throw parameter_error("read_mask: malformed header '" + header + "'");
  }
  std::vector<Cell> cells;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    std::uint64_t i = 0, j = 0;
    if (!(ls >> i >> j)) {
      throw parameter_error("read_mask: malformed line " + std::to_string(lineno));
    }
    if (i >= d1 || j >= d2) {
      throw parameter_error("read_mask: cell out of bounds on line " +
                            std::to_string(lineno));
    }
    cells.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
  }
  return {d1, d2, p, std::move(cells), seed};
}

}  // namespace lrmc
