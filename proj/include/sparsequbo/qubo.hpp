#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsequbo/error.hpp"

namespace sparsequbo {

/// Assignment of n binary variables; every entry is 0 or 1.
using BinaryState = std::vector<std::uint8_t>;

/// Spin assignment; every entry is -1 or +1.
using SpinState = std::vector<std::int8_t>;

/// Absolute tolerance used when comparing energies.
inline constexpr double kEnergyTolerance = 1e-9;

struct QuadraticTerm {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;

  friend bool operator==(const QuadraticTerm&, const QuadraticTerm&) = default;
};

struct Neighbor {
  std::size_t index = 0;
  double weight = 0.0;
};

namespace detail {

/// Folds an arbitrary (i, j, v) list into sorted upper-triangular terms.
/// Pairs given in both orders are summed; i == j entries are moved into `linear`.
/// Exact zeros after folding are dropped.
inline std::vector<QuadraticTerm> fold_terms(std::size_t n, std::vector<double>& linear,
                                             std::vector<QuadraticTerm> terms) {
  for (auto& t : terms) {
    if (t.i >= n || t.j >= n) {
      throw DimensionError("quadratic term (" + std::to_string(t.i) + ", " +
                           std::to_string(t.j) + ") out of range for n=" + std::to_string(n));
    }
    if (!std::isfinite(t.value)) {
      throw std::invalid_argument("non-finite quadratic coefficient");
    }
    if (t.i > t.j) std::swap(t.i, t.j);
  }
  std::vector<QuadraticTerm> folded;
  folded.reserve(terms.size());
  for (const auto& t : terms) {
    if (t.i == t.j) {
      linear[t.i] += t.value;
    } else {
      folded.push_back(t);
    }
  }
  std::stable_sort(folded.begin(), folded.end(), [](const auto& a, const auto& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  std::vector<QuadraticTerm> merged;
  merged.reserve(folded.size());
  for (const auto& t : folded) {
    if (!merged.empty() && merged.back().i == t.i && merged.back().j == t.j) {
      merged.back().value += t.value;
    } else {
      merged.push_back(t);
    }
  }
  std::erase_if(merged, [](const QuadraticTerm& t) { return t.value == 0.0; });
  return merged;
}

/// Compressed per-variable adjacency built from upper-triangular terms.
class Adjacency {
 public:
  Adjacency() = default;
  Adjacency(std::size_t n, const std::vector<QuadraticTerm>& terms) : offsets_(n + 1, 0) {
    for (const auto& t : terms) {
      ++offsets_[t.i + 1];
      ++offsets_[t.j + 1];
    }
    for (std::size_t k = 0; k < n; ++k) offsets_[k + 1] += offsets_[k];
    entries_.resize(offsets_[n]);
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& t : terms) {
      entries_[cursor[t.i]++] = {t.j, t.value};
      entries_[cursor[t.j]++] = {t.i, t.value};
    }
  }

  std::span<const Neighbor> row(std::size_t i) const {
    return {entries_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> entries_;
};

inline void check_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("non-finite ") + what);
  }
}

}  // namespace detail

/// Minimise offset + sum_i h_i a_i + sum_{i<j} Q_ij a_i a_j over a in {0,1}^n.
///
/// Immutable after construction. Quadratic terms are kept upper-triangular and
/// sorted; symmetric input is folded by summing (i,j) and (j,i).
class QuboProblem {
 public:
  QuboProblem() = default;

  QuboProblem(std::size_t n, std::vector<double> linear, std::vector<QuadraticTerm> quadratic,
              double offset = 0.0)
      : n_(n), linear_(std::move(linear)), offset_(offset) {
    if (n_ == 0) throw DimensionError("QUBO must have at least one variable");
    if (linear_.size() != n_) {
      throw DimensionError("linear vector has length " + std::to_string(linear_.size()) +
                           ", expected " + std::to_string(n_));
    }
    detail::check_finite(linear_, "linear coefficient");
    if (!std::isfinite(offset_)) throw std::invalid_argument("non-finite offset");
    quadratic_ = detail::fold_terms(n_, linear_, std::move(quadratic));
    detail::check_finite(linear_, "linear coefficient");
    adjacency_ = detail::Adjacency(n_, quadratic_);
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const double> linear() const noexcept { return linear_; }
  double linear(std::size_t i) const { return linear_.at(i); }
  const std::vector<QuadraticTerm>& quadratic() const noexcept { return quadratic_; }
  double offset() const noexcept { return offset_; }

  /// Q_ij for either index order; 0 when the pair has no term.
  double quadratic(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    auto it = std::lower_bound(quadratic_.begin(), quadratic_.end(), std::pair{i, j},
                               [](const QuadraticTerm& t, const std::pair<std::size_t, std::size_t>& k) {
                                 return t.i != k.first ? t.i < k.first : t.j < k.second;
                               });
    return (it != quadratic_.end() && it->i == i && it->j == j) ? it->value : 0.0;
  }

  std::span<const Neighbor> neighbors(std::size_t i) const { return adjacency_.row(i); }

  QuboProblem with_offset(double offset) const {
    QuboProblem copy = *this;
    copy.offset_ = offset;
    return copy;
  }

  friend bool operator==(const QuboProblem& a, const QuboProblem& b) {
    return a.n_ == b.n_ && a.linear_ == b.linear_ && a.quadratic_ == b.quadratic_ &&
           a.offset_ == b.offset_;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> linear_;
  std::vector<QuadraticTerm> quadratic_;
  double offset_ = 0.0;
  detail::Adjacency adjacency_;
};

/// offset + sum_i b_i s_i + sum_{i<j} J_ij s_i s_j over s in {-1,+1}^n.
class IsingProblem {
 public:
  IsingProblem() = default;

  IsingProblem(std::size_t n, std::vector<double> biases, std::vector<QuadraticTerm> couplings,
               double offset = 0.0)
      : n_(n), biases_(std::move(biases)), offset_(offset) {
    if (n_ == 0) throw DimensionError("Ising model must have at least one variable");
    if (biases_.size() != n_) throw DimensionError("bias vector length mismatch");
    detail::check_finite(biases_, "bias");
    if (!std::isfinite(offset_)) throw std::invalid_argument("non-finite offset");
    // Diagonal s_i s_i = 1 is a constant, not a bias.
    std::vector<QuadraticTerm> off_diag;
    for (auto& t : couplings) {
      if (t.i == t.j && t.i < n_) {
        offset_ += t.value;
      } else {
        off_diag.push_back(t);
      }
    }
    couplings_ = detail::fold_terms(n_, biases_, std::move(off_diag));
  }

  std::size_t size() const noexcept { return n_; }
  std::span<const double> biases() const noexcept { return biases_; }
  const std::vector<QuadraticTerm>& couplings() const noexcept { return couplings_; }
  double offset() const noexcept { return offset_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> biases_;
  std::vector<QuadraticTerm> couplings_;
  double offset_ = 0.0;
};

inline void validate_state(const QuboProblem& problem, std::span<const std::uint8_t> state) {
  if (state.size() != problem.size()) {
    throw DimensionError("state has length " + std::to_string(state.size()) +
                         ", problem has " + std::to_string(problem.size()) + " variables");
  }
  for (auto bit : state) {
    if (bit > 1) throw std::invalid_argument("binary state entries must be 0 or 1");
  }
}

inline double energy(const QuboProblem& problem, std::span<const std::uint8_t> state) {
  validate_state(problem, state);
  double e = problem.offset();
  const auto h = problem.linear();
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (state[i]) e += h[i];
  }
  for (const auto& t : problem.quadratic()) {
    if (state[t.i] && state[t.j]) e += t.value;
  }
  return e;
}

/// h_i + sum_{j != i} Q_ij a_j.
inline double local_field(const QuboProblem& problem, std::span<const std::uint8_t> state,
                          std::size_t i) {
  double field = problem.linear()[i];
  for (const auto& nb : problem.neighbors(i)) {
    if (state[nb.index]) field += nb.weight;
  }
  return field;
}

/// energy(flip_i(state)) - energy(state) in O(deg(i)).
inline double delta_energy(const QuboProblem& problem, std::span<const std::uint8_t> state,
                           std::size_t i) {
  validate_state(problem, state);
  if (i >= problem.size()) {
    throw std::out_of_range("flip index " + std::to_string(i) + " out of range for n=" +
                            std::to_string(problem.size()));
  }
  const double field = local_field(problem, state, i);
  return state[i] ? -field : field;
}

inline double energy(const IsingProblem& problem, std::span<const std::int8_t> spins) {
  if (spins.size() != problem.size()) throw DimensionError("spin state length mismatch");
  double e = problem.offset();
  const auto b = problem.biases();
  for (std::size_t i = 0; i < b.size(); ++i) e += b[i] * spins[i];
  for (const auto& t : problem.couplings()) e += t.value * spins[t.i] * spins[t.j];
  return e;
}

/// Substitutes a = (s + 1) / 2.
inline IsingProblem to_ising(const QuboProblem& qubo) {
  const std::size_t n = qubo.size();
  std::vector<double> biases(n);
  double offset = qubo.offset();
  for (std::size_t i = 0; i < n; ++i) {
    biases[i] = qubo.linear()[i] / 2.0;
    offset += qubo.linear()[i] / 2.0;
  }
  std::vector<QuadraticTerm> couplings;
  couplings.reserve(qubo.quadratic().size());
  for (const auto& t : qubo.quadratic()) {
    const double quarter = t.value / 4.0;
    couplings.push_back({t.i, t.j, quarter});
    biases[t.i] += quarter;
    biases[t.j] += quarter;
    offset += quarter;
  }
  return IsingProblem(n, std::move(biases), std::move(couplings), offset);
}

/// Substitutes s = 2a - 1.
inline QuboProblem to_qubo(const IsingProblem& ising) {
  const std::size_t n = ising.size();
  std::vector<double> linear(n);
  double offset = ising.offset();
  for (std::size_t i = 0; i < n; ++i) {
    linear[i] = 2.0 * ising.biases()[i];
    offset -= ising.biases()[i];
  }
  std::vector<QuadraticTerm> quadratic;
  quadratic.reserve(ising.couplings().size());
  for (const auto& t : ising.couplings()) {
    quadratic.push_back({t.i, t.j, 4.0 * t.value});
    linear[t.i] -= 2.0 * t.value;
    linear[t.j] -= 2.0 * t.value;
    offset += t.value;
  }
  return QuboProblem(n, std::move(linear), std::move(quadratic), offset);
}

inline SpinState to_spins(std::span<const std::uint8_t> state) {
  SpinState spins(state.size());
  std::transform(state.begin(), state.end(), spins.begin(),
                 [](std::uint8_t a) { return static_cast<std::int8_t>(a ? 1 : -1); });
  return spins;
}

inline std::size_t popcount(std::span<const std::uint8_t> state) {
  return static_cast<std::size_t>(std::count(state.begin(), state.end(), std::uint8_t{1}));
}

/// Fraction of positions where the two states agree.
inline double overlap(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b) {
  if (a.size() != b.size()) throw DimensionError("overlap of states with different lengths");
  if (a.empty()) return 1.0;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += (a[i] == b[i]);
  return static_cast<double>(same) / static_cast<double>(a.size());
}

inline std::string to_bitstring(std::span<const std::uint8_t> state) {
  std::string s(state.size(), '0');
  for (std::size_t i = 0; i < state.size(); ++i) s[i] = state[i] ? '1' : '0';
  return s;
}

inline BinaryState from_bitstring(const std::string& bits) {
  BinaryState state(bits.size());
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i] != '0' && bits[i] != '1') {
      throw std::invalid_argument("bitstring may only contain '0' and '1'");
    }
    state[i] = bits[i] == '1';
  }
  return state;
}

}  // namespace sparsequbo
