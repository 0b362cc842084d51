#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsequbo/checksum.hpp"
#include "sparsequbo/error.hpp"
#include "sparsequbo/meta_strategies.hpp"
#include "sparsequbo/sample_set.hpp"
#include "sparsequbo/sparse_coding.hpp"

#ifndef SPARSEQUBO_VERSION_STRING
#define SPARSEQUBO_VERSION_STRING "unknown"
#endif

namespace sparsequbo {

inline std::string version_string() { return SPARSEQUBO_VERSION_STRING; }

// ---------------------------------------------------------------------------
// Files

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Writes through a temporary sibling and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

// ---------------------------------------------------------------------------
// IDX (big-endian, unsigned byte payload)

struct IdxTensor {
  std::vector<std::size_t> dims;
  std::vector<std::uint8_t> data;

  std::size_t count() const { return dims.empty() ? 0 : dims.front(); }
};

inline IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw ParseError("IDX: truncated header");
  if (bytes[0] != 0 || bytes[1] != 0 || bytes[2] != 0x08 || bytes[3] < 1 || bytes[3] > 4) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "0x%02X%02X%02X%02X", bytes[0], bytes[1], bytes[2], bytes[3]);
    throw ParseError(std::string("IDX: unknown magic ") + buf);
  }
  const std::size_t ndims = bytes[3];
  const std::size_t header = 4 + 4 * ndims;
  if (bytes.size() < header) throw ParseError("IDX: truncated header");
  IdxTensor t;
  std::size_t total = 1;
  for (std::size_t d = 0; d < ndims; ++d) {
    const auto* p = bytes.data() + 4 + 4 * d;
    const std::size_t dim = (std::size_t{p[0]} << 24) | (std::size_t{p[1]} << 16) |
                            (std::size_t{p[2]} << 8) | std::size_t{p[3]};
    if (dim != 0 && total > (std::size_t{1} << 40) / dim) throw ParseError("IDX: dimension overflow");
    total *= dim;
    t.dims.push_back(dim);
  }
  const std::size_t payload = bytes.size() - header;
  if (payload < total) {
    throw ParseError("IDX: truncated payload (expected " + std::to_string(total) + " bytes, found " +
                     std::to_string(payload) + ")");
  }
  if (payload > total) throw ParseError("IDX: trailing bytes after payload");
  t.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(header), bytes.end());
  return t;
}

inline IdxTensor load_idx(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  try {
    return parse_idx(bytes);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

/// Image `index` of a 3-D (count x rows x cols) tensor, scaled by 1/255.
inline Image idx_image(const IdxTensor& t, std::size_t index) {
  if (t.dims.size() != 3) throw DimensionError("IDX tensor is not a stack of images");
  if (index >= t.dims[0]) {
    throw DimensionError("image index " + std::to_string(index) + " out of range (" +
                         std::to_string(t.dims[0]) + " images)");
  }
  const std::size_t rows = t.dims[1], cols = t.dims[2];
  Image img(rows, cols);
  const std::size_t base = index * rows * cols;
  for (std::size_t k = 0; k < rows * cols; ++k) img.pixels[k] = t.data[base + k] / 255.0;
  return img;
}

// ---------------------------------------------------------------------------
// PGM (binary P5, 8-bit)

inline std::uint8_t quantize_pixel(double v) {
  const double scaled = std::clamp(v, 0.0, 1.0) * 255.0;
  return static_cast<std::uint8_t>(std::lround(scaled));
}

inline std::string encode_pgm(const Image& image) {
  std::string out = "P5\n" + std::to_string(image.cols) + " " + std::to_string(image.rows) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + image.pixels.size());
  for (std::size_t k = 0; k < image.pixels.size(); ++k) {
    out[header + k] = static_cast<char>(quantize_pixel(image.pixels[k]));
  }
  return out;
}

inline Image decode_pgm(std::string_view bytes) {
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos])) &&
           bytes[pos] != '#') {
      ++pos;
    }
    if (start == pos) throw ParseError("PGM: malformed header");
    return std::string(bytes.substr(start, pos - start));
  };
  auto next_number = [&](const char* what) {
    const std::string tok = next_token();
    if (tok.find_first_not_of("0123456789") != std::string::npos || tok.size() > 9) {
      throw ParseError(std::string("PGM: invalid ") + what + " '" + tok + "'");
    }
    return static_cast<std::size_t>(std::stoul(tok));
  };
  if (next_token() != "P5") throw ParseError("PGM: missing P5 magic");
  const std::size_t cols = next_number("width");
  const std::size_t rows = next_number("height");
  const std::size_t maxval = next_number("maxval");
  if (cols == 0 || rows == 0) throw ParseError("PGM: empty image");
  if (maxval == 0 || maxval > 255) throw ParseError("PGM: only 8-bit maxval is supported");
  if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
    throw ParseError("PGM: malformed header");
  }
  ++pos;
  if (bytes.size() - pos != rows * cols) throw ParseError("PGM: payload size does not match header");
  Image img(rows, cols);
  for (std::size_t k = 0; k < rows * cols; ++k) {
    img.pixels[k] = static_cast<unsigned char>(bytes[pos + k]) / static_cast<double>(maxval);
  }
  return img;
}

/// Values are clamped to [0, 1] then scaled to 0..255.
inline void write_pgm(const Image& image, const std::filesystem::path& path) {
  write_file_atomic(path, encode_pgm(image));
}

inline Image read_pgm(const std::filesystem::path& path) {
  try {
    return decode_pgm(read_file_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Dictionary JSON: {"m", "p", "atoms": [p rows of m values], "lambda"?}

inline nlohmann::json dictionary_to_json(const Dictionary& dict, std::optional<double> lambda = {}) {
  nlohmann::json atoms = nlohmann::json::array();
  for (std::size_t i = 0; i < dict.atoms(); ++i) {
    atoms.push_back(std::vector<double>(dict.atom(i).begin(), dict.atom(i).end()));
  }
  nlohmann::json j = {{"m", dict.dim()}, {"p", dict.atoms()}, {"atoms", std::move(atoms)}};
  if (lambda) j["lambda"] = *lambda;
  return j;
}

struct StoredDictionary {
  Dictionary dictionary;
  std::optional<double> lambda;
};

inline StoredDictionary dictionary_from_json(const nlohmann::json& j) {
  try {
    const auto m = j.at("m").get<std::size_t>();
    const auto p = j.at("p").get<std::size_t>();
    const auto& atoms = j.at("atoms");
    if (!atoms.is_array() || atoms.size() != p) throw ParseError("dictionary JSON: expected p atoms");
    std::vector<double> values;
    values.reserve(m * p);
    for (const auto& a : atoms) {
      auto row = a.get<std::vector<double>>();
      if (row.size() != m) throw ParseError("dictionary JSON: atom length differs from m");
      values.insert(values.end(), row.begin(), row.end());
    }
    StoredDictionary out{Dictionary(m, p, std::move(values)), std::nullopt};
    if (j.contains("lambda")) out.lambda = j.at("lambda").get<double>();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("dictionary JSON: ") + e.what());
  }
}

inline StoredDictionary load_dictionary(const std::filesystem::path& path) {
  try {
    return dictionary_from_json(nlohmann::json::parse(read_file_text(path)));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run persistence

struct RunInfo {
  std::string name = "run";
  nlohmann::json config = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
};

/// Collects artifacts for one run directory and writes a manifest of their checksums.
/// Artifacts are deterministic; timing goes only into the manifest's "timing" block.
class RunWriter {
 public:
  explicit RunWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create run directory '" + dir_.string() + "': " + ec.message());
  }

  const std::filesystem::path& directory() const noexcept { return dir_; }

  void write(const std::string& relative, std::string_view content) {
    write_file_atomic(dir_ / relative, content);
    files_.push_back({{"path", relative},
                      {"sha256", sha256_hex(content)},
                      {"bytes", content.size()}});
  }

  void add_timing(const std::string& key, double seconds) { timing_[key] = seconds; }

  nlohmann::json finish(const RunInfo& info) {
    nlohmann::json manifest = {{"name", info.name},
                               {"version", version_string()},
                               {"config", info.config},
                               {"seeds", info.seeds},
                               {"files", files_},
                               {"timing", timing_}};
    write_file_atomic(dir_ / "manifest.json", manifest.dump(2) + "\n");
    return manifest;
  }

 private:
  std::filesystem::path dir_;
  nlohmann::json files_ = nlohmann::json::array();
  nlohmann::json timing_ = nlohmann::json::object();
};

inline nlohmann::json persist_run(const SampleSet& set, const std::filesystem::path& dir,
                                  const RunInfo& info) {
  RunWriter writer(dir);
  writer.write(info.name + "_samples.json", set.to_json().dump(1) + "\n");
  writer.add_timing(info.name, set.metadata().duration_seconds);
  return writer.finish(info);
}

inline nlohmann::json persist_run(const ChainTrace& trace, const std::filesystem::path& dir,
                                  const RunInfo& info) {
  RunWriter writer(dir);
  writer.write(info.name + "_trace.csv", trace.to_csv());
  writer.write(info.name + "_trace.json", trace.to_json().dump(1) + "\n");
  return writer.finish(info);
}

}  // namespace sparsequbo
