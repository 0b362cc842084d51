#pragma once

// Text formats for QuboProblem.
//
// COO:
//   # comment
//   # offset: -12.5          (optional, read back as the constant offset)
//   p qubo <n> <num_linear> <num_quadratic>
//   <i> <j> <value>          (i == j is a linear term)
//
// JSON: {"n": 2, "offset": 0.0, "h": [..], "Q": [[i, j, v], ..]}

#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsequbo/error.hpp"
#include "sparsequbo/format.hpp"
#include "sparsequbo/qubo.hpp"

namespace sparsequbo {

inline void save_qubo_coo(const QuboProblem& problem, std::ostream& out) {
  if (problem.offset() != 0.0) out << "# offset: " << format_full(problem.offset()) << '\n';
  out << "p qubo " << problem.size() << ' ' << problem.size() << ' '
      << problem.quadratic().size() << '\n';
  for (std::size_t i = 0; i < problem.size(); ++i) {
    out << i << ' ' << i << ' ' << format_full(problem.linear()[i]) << '\n';
  }
  for (const auto& t : problem.quadratic()) {
    out << t.i << ' ' << t.j << ' ' << format_full(t.value) << '\n';
  }
}

namespace detail {

inline std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream ss(line);
  std::vector<std::string> tokens;
  for (std::string tok; ss >> tok;) tokens.push_back(tok);
  return tokens;
}

inline std::size_t parse_index(const std::string& tok, std::size_t line) {
  if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
    throw ParseError("invalid index '" + tok + "'", line);
  }
  try {
    return static_cast<std::size_t>(std::stoull(tok));
  } catch (const std::exception&) {
    throw ParseError("index overflow '" + tok + "'", line);
  }
}

inline double parse_value(const std::string& tok, std::size_t line) {
  try {
    const double v = parse_double(tok);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + tok + "'", line);
    return v;
  } catch (const std::invalid_argument&) {
    throw ParseError("invalid number '" + tok + "'", line);
  }
}

}  // namespace detail

inline QuboProblem load_qubo_coo(std::istream& in) {
  bool have_header = false;
  std::size_t n = 0, declared_linear = 0, declared_quadratic = 0;
  double offset = 0.0;
  std::vector<double> linear;
  std::vector<QuadraticTerm> quadratic;
  std::set<std::pair<std::size_t, std::size_t>> seen;
  std::size_t line_no = 0, num_linear = 0;

  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#') {
      auto tokens = detail::split_ws(line.substr(first + 1));
      if (tokens.size() == 2 && tokens[0] == "offset:") {
        offset = detail::parse_value(tokens[1], line_no);
      }
      continue;
    }
    auto tokens = detail::split_ws(line);
    if (tokens[0] == "p") {
      if (have_header) throw ParseError("duplicate header", line_no);
      if (tokens.size() != 5 || tokens[1] != "qubo") {
        throw ParseError("header must be 'p qubo <n> <num_linear> <num_quadratic>'", line_no);
      }
      n = detail::parse_index(tokens[2], line_no);
      declared_linear = detail::parse_index(tokens[3], line_no);
      declared_quadratic = detail::parse_index(tokens[4], line_no);
      if (n == 0) throw ParseError("variable count must be positive", line_no);
      linear.assign(n, 0.0);
      have_header = true;
      continue;
    }
    if (!have_header) throw ParseError("data line before 'p qubo' header", line_no);
    if (tokens.size() != 3) throw ParseError("expected '<i> <j> <value>'", line_no);
    std::size_t i = detail::parse_index(tokens[0], line_no);
    std::size_t j = detail::parse_index(tokens[1], line_no);
    const double v = detail::parse_value(tokens[2], line_no);
    if (i >= n || j >= n) {
      throw ParseError("index out of range for n=" + std::to_string(n), line_no);
    }
    if (i > j) std::swap(i, j);
    if (!seen.emplace(i, j).second) {
      throw ParseError("duplicate entry (" + std::to_string(i) + ", " + std::to_string(j) + ")",
                       line_no);
    }
    if (i == j) {
      linear[i] = v;
      ++num_linear;
    } else {
      quadratic.push_back({i, j, v});
    }
  }
  if (!have_header) throw ParseError("missing 'p qubo' header");
  if (num_linear != declared_linear || quadratic.size() != declared_quadratic) {
    throw ParseError("header declares " + std::to_string(declared_linear) + " linear and " +
                     std::to_string(declared_quadratic) + " quadratic terms, found " +
                     std::to_string(num_linear) + " and " + std::to_string(quadratic.size()));
  }
  return QuboProblem(n, std::move(linear), std::move(quadratic), offset);
}

inline nlohmann::json qubo_to_json(const QuboProblem& problem) {
  nlohmann::json q = nlohmann::json::array();
  for (const auto& t : problem.quadratic()) q.push_back({t.i, t.j, t.value});
  return {{"n", problem.size()},
          {"offset", problem.offset()},
          {"h", std::vector<double>(problem.linear().begin(), problem.linear().end())},
          {"Q", std::move(q)}};
}

inline QuboProblem qubo_from_json(const nlohmann::json& j) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    auto h = j.at("h").get<std::vector<double>>();
    const double offset = j.value("offset", 0.0);
    std::vector<QuadraticTerm> terms;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    if (j.contains("Q")) {
      for (const auto& e : j.at("Q")) {
        if (!e.is_array() || e.size() != 3) throw ParseError("Q entries must be [i, j, v]");
        std::size_t a = e[0].get<std::size_t>(), b = e[1].get<std::size_t>();
        if (a >= n || b >= n) throw ParseError("Q index out of range for n=" + std::to_string(n));
        if (a > b) std::swap(a, b);
        if (a == b || !seen.emplace(a, b).second) {
          throw ParseError("duplicate or diagonal Q entry (" + std::to_string(a) + ", " +
                           std::to_string(b) + ")");
        }
        terms.push_back({a, b, e[2].get<double>()});
      }
    }
    if (h.size() != n) throw ParseError("h has " + std::to_string(h.size()) + " entries, n=" +
                                        std::to_string(n));
    return QuboProblem(n, std::move(h), std::move(terms), offset);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed QUBO JSON: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(e.what());
  }
}

inline bool is_json_path(const std::filesystem::path& path) {
  return path.extension() == ".json";
}

/// Writes COO, or JSON when the path ends in ".json".
inline void save_qubo(const QuboProblem& problem, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  if (is_json_path(path)) {
    out << qubo_to_json(problem).dump(1) << '\n';
  } else {
    save_qubo_coo(problem, out);
  }
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

inline QuboProblem load_qubo(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  if (is_json_path(path)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
    return qubo_from_json(j);
  }
  return load_qubo_coo(in);
}

}  // namespace sparsequbo
