#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "distsgd/losses.hpp"

namespace distsgd::dataio {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line(line) {}
  long line;
};

/// Densified LIBSVM dataset. dim is the largest feature index seen in the
/// file; labels are remapped to {-1, +1}.
struct Dataset {
  std::vector<losses::Sample> samples;
  int dim = 0;
};

/// Parses `label idx:val ...` lines with 1-based strictly increasing indices.
/// Blank lines and lines starting with '#' are skipped. Files ending in .gz
/// are decompressed transparently.
///
/// Label remapping: with two distinct labels the larger one maps to +1; with
/// more than two, positive_class must name the +1 class (one-vs-rest).
Dataset parse_libsvm(const std::string& path,
                     std::optional<double> positive_class = {});
Dataset parse_libsvm_text(std::istream& in,
                          std::optional<double> positive_class = {});

/// Sparse text form of the dataset (nonzero entries only, %.17g values).
std::string to_libsvm(const Dataset& ds);

enum class Normalize { none, unit_norm, standardize };
Normalize normalize_from_name(const std::string& name);
std::string to_string(Normalize mode);

/// unit_norm rescales each regressor to unit length (zero vectors pass
/// through); standardize centers and scales per feature (zero-variance
/// features pass through untouched).
Dataset normalize(Dataset ds, Normalize mode);

enum class Rule { round_robin, shuffled };
Rule rule_from_name(const std::string& name);
std::string to_string(Rule rule);

/// Per-node sample queues consumed one entry per round. The base assignment
/// is a disjoint cover of the dataset; when a node's share is shorter than
/// rounds_needed its own queue is recycled with a reshuffle per pass and the
/// recycled flag is set.
struct Partition {
  std::vector<std::vector<int>> node_queues;
  bool recycled = false;
};

Partition partition(const Dataset& ds, int n_nodes, Rule rule,
                    long rounds_needed, std::uint64_t seed);

/// FNV-1a over the raw file bytes; recorded in run manifests.
std::uint64_t file_checksum(const std::string& path);

}  // namespace distsgd::dataio
