#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sparsequbo/checksum.hpp"
#include "sparsequbo/format.hpp"
#include "sparsequbo/qubo.hpp"

namespace sparsequbo {

struct SampleRecord {
  BinaryState state;
  double energy = 0.0;
  std::size_t count = 0;
  /// Read index at which this state was first observed.
  std::size_t first_read = 0;
};

struct SampleMetadata {
  std::string sampler;
  std::uint64_t seed = 0;
  nlohmann::json parameters = nlohmann::json::object();
  double duration_seconds = 0.0;
};

/// Aggregated sampler output. Records are unique by state and sorted by
/// ascending energy, ties broken by first occurrence in read order.
class SampleSet {
 public:
  class Builder;

  const std::vector<SampleRecord>& records() const noexcept { return records_; }
  const SampleMetadata& metadata() const noexcept { return metadata_; }
  SampleMetadata& metadata() noexcept { return metadata_; }
  bool empty() const noexcept { return records_.empty(); }
  std::size_t num_reads() const noexcept { return num_reads_; }

  /// Lowest-energy record; the earliest read among exact energy ties.
  const SampleRecord& lowest() const {
    if (records_.empty()) throw std::logic_error("empty SampleSet has no lowest record");
    return records_.front();
  }

  /// Reads whose energy is within `tol` of the minimum.
  std::size_t count_within(double tol = kEnergyTolerance) const {
    if (records_.empty()) return 0;
    std::size_t c = 0;
    for (const auto& r : records_) {
      if (r.energy <= records_.front().energy + tol) c += r.count;
    }
    return c;
  }

  /// Reads whose energy is within `tol` of `target`.
  std::size_t count_at(double target, double tol = kEnergyTolerance) const {
    std::size_t c = 0;
    for (const auto& r : records_) {
      if (std::abs(r.energy - target) <= tol) c += r.count;
    }
    return c;
  }

  /// Deterministic content, excluding wall-clock duration.
  nlohmann::json to_json() const {
    nlohmann::json recs = nlohmann::json::array();
    for (const auto& r : records_) {
      recs.push_back({{"state", to_bitstring(r.state)},
                      {"energy", r.energy},
                      {"count", r.count},
                      {"first_read", r.first_read}});
    }
    return {{"sampler", metadata_.sampler},
            {"seed", metadata_.seed},
            {"parameters", metadata_.parameters},
            {"num_reads", num_reads_},
            {"records", std::move(recs)}};
  }

  /// Canonical text for checksums: one line per record with exact energies.
  std::string canonical_text() const {
    std::string out = metadata_.sampler + " " + std::to_string(metadata_.seed) + " " +
                      metadata_.parameters.dump() + "\n";
    for (const auto& r : records_) {
      out += to_bitstring(r.state) + " " + format_full(r.energy) + " " + std::to_string(r.count) +
             " " + std::to_string(r.first_read) + "\n";
    }
    return out;
  }

  std::string checksum() const { return sha256_hex(canonical_text()); }

 private:
  std::vector<SampleRecord> records_;
  SampleMetadata metadata_;
  std::size_t num_reads_ = 0;
};

/// Single-writer accumulator. Every inserted state is re-scored with
/// `energy()`; a caller-supplied energy that disagrees beyond 1e-9 is rejected.
class SampleSet::Builder {
 public:
  explicit Builder(const QuboProblem& problem) : problem_(&problem) {}

  /// Appends the next read and returns its exact energy.
  double add(const BinaryState& state) {
    const double e = energy(*problem_, state);
    insert(state, e);
    return e;
  }

  double add(const BinaryState& state, double claimed_energy) {
    const double e = energy(*problem_, state);
    if (!(std::abs(e - claimed_energy) <= kEnergyTolerance)) {
      throw std::logic_error("sample energy " + format_full(claimed_energy) +
                             " disagrees with recomputed energy " + format_full(e));
    }
    insert(state, e);
    return e;
  }

  std::size_t reads() const noexcept { return next_read_; }

  SampleSet build(SampleMetadata metadata) && {
    SampleSet set;
    set.records_ = std::move(records_);
    std::stable_sort(set.records_.begin(), set.records_.end(),
                     [](const SampleRecord& a, const SampleRecord& b) {
                       return a.energy != b.energy ? a.energy < b.energy
                                                   : a.first_read < b.first_read;
                     });
    set.metadata_ = std::move(metadata);
    set.num_reads_ = next_read_;
    return set;
  }

 private:
  void insert(const BinaryState& state, double e) {
    auto [it, fresh] = index_.try_emplace(state, records_.size());
    if (fresh) {
      records_.push_back({state, e, 1, next_read_});
    } else {
      ++records_[it->second].count;
    }
    ++next_read_;
  }

  const QuboProblem* problem_;
  std::vector<SampleRecord> records_;
  std::map<BinaryState, std::size_t> index_;
  std::size_t next_read_ = 0;
};

}  // namespace sparsequbo
