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
#include "sparsequbo/qubo.hpp"

namespace sparsequbo {

/// Grayscale image, row-major, intensities nominally in [0, 1].
struct Image {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), pixels(r * c, fill) {}
  Image(std::size_t r, std::size_t c, std::vector<double> values)
      : rows(r), cols(c), pixels(std::move(values)) {
    if (pixels.size() != rows * cols) throw DimensionError("pixel count does not match shape");
  }

  double& at(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

struct ImagePatch {
  std::vector<double> values;
  std::size_t row = 0;  ///< top-left pixel row in the source image
  std::size_t col = 0;
  std::size_t edge = 0;  ///< square patch edge; 0 when the patch is not image-backed
};

/// p atoms of dimension m stored atom-major. Atoms are deliberately not normalised.
class Dictionary {
 public:
  Dictionary() = default;
  Dictionary(std::size_t m, std::size_t p) : m_(m), p_(p), values_(m * p, 0.0) {
    if (m == 0 || p == 0) throw DimensionError("dictionary needs m >= 1 and p >= 1");
  }
  Dictionary(std::size_t m, std::size_t p, std::vector<double> atom_major)
      : m_(m), p_(p), values_(std::move(atom_major)) {
    if (m == 0 || p == 0) throw DimensionError("dictionary needs m >= 1 and p >= 1");
    if (values_.size() != m * p) throw DimensionError("dictionary payload size mismatch");
    for (double v : values_) {
      if (!std::isfinite(v)) throw std::invalid_argument("non-finite dictionary entry");
    }
  }

  std::size_t dim() const noexcept { return m_; }
  std::size_t atoms() const noexcept { return p_; }

  std::span<const double> atom(std::size_t i) const { return {values_.data() + i * m_, m_}; }
  std::span<double> atom(std::size_t i) { return {values_.data() + i * m_, m_}; }
  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const Dictionary&, const Dictionary&) = default;

 private:
  std::size_t m_ = 0;
  std::size_t p_ = 0;
  std::vector<double> values_;
};

struct SparseCode {
  BinaryState activation;
  double objective_value = 0.0;
  std::size_t sparsity = 0;
};

/// Diagonal weighting of the QUBO built from a patch.
enum class QuboMode {
  /// h_i = -x.D_i + D_i.D_i + lambda, Q_ij = D_i.D_j, offset 0.
  paper,
  /// h_i = -x.D_i + D_i.D_i / 2 + lambda, offset |x|^2 / 2; energy equals the objective.
  exact,
};

inline std::string to_string(QuboMode mode) { return mode == QuboMode::paper ? "paper" : "exact"; }

inline QuboMode parse_qubo_mode(const std::string& text) {
  if (text == "paper") return QuboMode::paper;
  if (text == "exact") return QuboMode::exact;
  throw ConfigError("unknown QUBO mode '" + text + "' (expected paper or exact)");
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

/// Non-overlapping edge x edge patches in row-major patch order, each flattened row-major.
inline std::vector<ImagePatch> patch_image(const Image& image, std::size_t edge) {
  if (edge == 0) throw DimensionError("patch edge must be positive");
  if (image.rows == 0 || image.cols == 0 || image.rows % edge != 0 || image.cols % edge != 0) {
    throw DimensionError("image " + std::to_string(image.rows) + "x" + std::to_string(image.cols) +
                         " is not divisible into " + std::to_string(edge) + "x" +
                         std::to_string(edge) + " patches");
  }
  std::vector<ImagePatch> patches;
  patches.reserve((image.rows / edge) * (image.cols / edge));
  for (std::size_t pr = 0; pr < image.rows; pr += edge) {
    for (std::size_t pc = 0; pc < image.cols; pc += edge) {
      ImagePatch patch{std::vector<double>(edge * edge), pr, pc, edge};
      for (std::size_t r = 0; r < edge; ++r) {
        for (std::size_t c = 0; c < edge; ++c) patch.values[r * edge + c] = image.at(pr + r, pc + c);
      }
      patches.push_back(std::move(patch));
    }
  }
  return patches;
}

/// Index of the patch that contains pixel (row, col).
inline std::size_t patch_index_of(const Image& image, std::size_t edge, std::size_t row,
                                  std::size_t col) {
  return (row / edge) * (image.cols / edge) + col / edge;
}

/// Reassembles patches produced by `patch_image` (or reconstructions carrying the same origins).
inline Image unpatch(std::span<const ImagePatch> patches) {
  if (patches.empty()) throw DimensionError("no patches to reassemble");
  std::size_t rows = 0, cols = 0;
  for (const auto& p : patches) {
    if (p.edge == 0 || p.values.size() != p.edge * p.edge) {
      throw DimensionError("patch is not a square image patch");
    }
    rows = std::max(rows, p.row + p.edge);
    cols = std::max(cols, p.col + p.edge);
  }
  Image image(rows, cols);
  std::vector<std::uint8_t> covered(rows * cols, 0);
  for (const auto& p : patches) {
    for (std::size_t r = 0; r < p.edge; ++r) {
      for (std::size_t c = 0; c < p.edge; ++c) {
        image.at(p.row + r, p.col + c) = p.values[r * p.edge + c];
        ++covered[(p.row + r) * cols + p.col + c];
      }
    }
  }
  for (auto k : covered) {
    if (k != 1) throw DimensionError("patches do not tile the image exactly once");
  }
  return image;
}

namespace detail {

inline void check_patch(std::span<const double> x, const Dictionary& dict) {
  if (x.size() != dict.dim()) {
    throw DimensionError("patch has " + std::to_string(x.size()) +
                         " values, dictionary dimension is " + std::to_string(dict.dim()));
  }
}

inline void check_code(const Dictionary& dict, std::span<const std::uint8_t> a) {
  if (a.size() != dict.atoms()) {
    throw DimensionError("code has length " + std::to_string(a.size()) + ", dictionary has " +
                         std::to_string(dict.atoms()) + " atoms");
  }
}

}  // namespace detail

inline QuboProblem build_qubo(std::span<const double> x, const Dictionary& dict, double lambda,
                              QuboMode mode = QuboMode::paper) {
  detail::check_patch(x, dict);
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw std::invalid_argument("lambda must be a finite non-negative number");
  }
  const std::size_t p = dict.atoms();
  const double self_weight = mode == QuboMode::paper ? 1.0 : 0.5;
  std::vector<double> h(p);
  for (std::size_t i = 0; i < p; ++i) {
    h[i] = -dot(x, dict.atom(i)) + self_weight * dot(dict.atom(i), dict.atom(i)) + lambda;
  }
  std::vector<QuadraticTerm> q;
  q.reserve(p * (p - 1) / 2);
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) q.push_back({i, j, dot(dict.atom(i), dict.atom(j))});
  }
  const double offset = mode == QuboMode::paper ? 0.0 : 0.5 * dot(x, x);
  return QuboProblem(p, std::move(h), std::move(q), offset);
}

inline QuboProblem build_qubo(const ImagePatch& patch, const Dictionary& dict, double lambda,
                              QuboMode mode = QuboMode::paper) {
  return build_qubo(std::span<const double>(patch.values), dict, lambda, mode);
}

/// Sum of the active atoms.
inline std::vector<double> reconstruct_values(const Dictionary& dict,
                                              std::span<const std::uint8_t> a) {
  detail::check_code(dict, a);
  std::vector<double> out(dict.dim(), 0.0);
  for (std::size_t i = 0; i < dict.atoms(); ++i) {
    if (!a[i]) continue;
    const auto atom = dict.atom(i);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += atom[k];
  }
  return out;
}

/// Reconstruction placed at `like`'s origin, so a set of them can be unpatched.
inline ImagePatch reconstruct(const Dictionary& dict, std::span<const std::uint8_t> a,
                              const ImagePatch& like = {}) {
  ImagePatch out{reconstruct_values(dict, a), like.row, like.col, like.edge};
  if (like.edge != 0 && like.edge * like.edge != out.values.size()) {
    throw DimensionError("dictionary dimension does not match the patch shape");
  }
  return out;
}

struct CodeMetrics {
  double recon_error = 0.0;  ///< |x - Da|^2 / 2
  std::size_t sparsity = 0;  ///< number of active atoms
  double objective = 0.0;    ///< recon_error + lambda * sparsity
};

inline CodeMetrics metrics(std::span<const double> x, const Dictionary& dict,
                           std::span<const std::uint8_t> a, double lambda) {
  detail::check_patch(x, dict);
  const auto recon = reconstruct_values(dict, a);
  double sq = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) sq += (x[k] - recon[k]) * (x[k] - recon[k]);
  CodeMetrics m;
  m.recon_error = 0.5 * sq;
  m.sparsity = popcount(a);
  m.objective = m.recon_error + lambda * static_cast<double>(m.sparsity);
  return m;
}

/// |x - Da|^2 / 2 + lambda * |a|_0.
inline double objective(std::span<const double> x, const Dictionary& dict,
                        std::span<const std::uint8_t> a, double lambda) {
  return metrics(x, dict, a, lambda).objective;
}

inline SparseCode make_code(std::span<const double> x, const Dictionary& dict, BinaryState a,
                            double lambda) {
  const auto m = metrics(x, dict, a, lambda);
  return {std::move(a), m.objective, m.sparsity};
}

/// Sparsity as "k / n", e.g. "6 / 64".
inline std::string format_sparsity(std::span<const std::uint8_t> a) {
  return std::to_string(popcount(a)) + " / " + std::to_string(a.size());
}

}  // namespace sparsequbo
