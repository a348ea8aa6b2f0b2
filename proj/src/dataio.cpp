#include "distsgd/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "distsgd/rng.hpp"

namespace distsgd::dataio {

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string read_gz(const std::string& path) {
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw std::runtime_error("cannot open " + path);
  std::string out;
  char buf[1 << 16];
  int n;
  while ((n = gzread(f, buf, sizeof(buf))) > 0) out.append(buf, n);
  const bool bad = n < 0;
  gzclose(f);
  if (bad) throw std::runtime_error("gzip read failed on " + path);
  return out;
}

double parse_number(const std::string& token, long line, const char* what) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  if (begin != end && *begin == '+') ++begin;  // from_chars rejects leading +
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (begin == end || ec != std::errc() || ptr != end)
    throw ParseError(std::string("non-numeric ") + what + ": '" + token + "'",
                     line);
  return value;
}

struct RawSample {
  double label;
  std::vector<std::pair<int, double>> entries;
};

}  // namespace

Dataset parse_libsvm_text(std::istream& in,
                          std::optional<double> positive_class) {
  std::vector<RawSample> raw;
  std::set<double> labels;
  int dim = 0;
  long line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream fields(line);
    std::string token;
    fields >> token;
    RawSample sample;
    sample.label = parse_number(token, line_no, "label");
    labels.insert(sample.label);
    int prev_index = 0;
    while (fields >> token) {
      const auto colon = token.find(':');
      if (colon == std::string::npos || colon == 0 ||
          colon + 1 == token.size())
        throw ParseError("malformed feature entry '" + token + "'", line_no);
      const double idx_val =
          parse_number(token.substr(0, colon), line_no, "feature index");
      const int index = static_cast<int>(idx_val);
      if (idx_val != index || index < 1)
        throw ParseError("feature index must be a positive integer, got '" +
                             token.substr(0, colon) + "'",
                         line_no);
      if (index <= prev_index)
        throw ParseError("feature indices must be strictly increasing",
                         line_no);
      prev_index = index;
      const double value =
          parse_number(token.substr(colon + 1), line_no, "feature value");
      if (!std::isfinite(value))
        throw ParseError("feature value is not finite", line_no);
      sample.entries.emplace_back(index, value);
      dim = std::max(dim, index);
    }
    raw.push_back(std::move(sample));
  }

  Dataset ds;
  ds.dim = dim;
  if (raw.empty()) return ds;

  double positive;
  if (positive_class.has_value()) {
    positive = *positive_class;
    if (labels.count(positive) == 0)
      throw std::invalid_argument("positive_class value not present in file");
  } else if (labels.size() == 1) {
    // Degenerate single-class file: keep the sign of the lone label.
    positive = *labels.begin() > 0 ? *labels.begin()
                                   : std::numeric_limits<double>::quiet_NaN();
  } else if (labels.size() == 2) {
    positive = *labels.rbegin();  // larger original label maps to +1
  } else if (labels.count(2.0) != 0) {
    positive = 2.0;  // covertype convention: class 2 vs rest
  } else {
    throw std::invalid_argument(
        "file has more than two label values; set positive_class to pick the "
        "+1 class");
  }

  ds.samples.reserve(raw.size());
  for (auto& r : raw) {
    losses::Sample s;
    s.d = r.label == positive ? 1.0 : -1.0;
    s.u = Eigen::VectorXd::Zero(dim);
    for (const auto& [index, value] : r.entries) s.u[index - 1] = value;
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

Dataset parse_libsvm(const std::string& path,
                     std::optional<double> positive_class) {
  if (ends_with(path, ".gz")) {
    std::istringstream in(read_gz(path));
    return parse_libsvm_text(in, positive_class);
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return parse_libsvm_text(in, positive_class);
}

std::string to_libsvm(const Dataset& ds) {
  std::string out;
  char buf[48];
  for (const auto& s : ds.samples) {
    out += s.d > 0 ? "+1" : "-1";
    for (Eigen::Index i = 0; i < s.u.size(); ++i) {
      if (s.u[i] == 0.0) continue;
      std::snprintf(buf, sizeof(buf), " %ld:%.17g", static_cast<long>(i + 1),
                    s.u[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

Normalize normalize_from_name(const std::string& name) {
  if (name == "none") return Normalize::none;
  if (name == "unit_norm") return Normalize::unit_norm;
  if (name == "standardize") return Normalize::standardize;
  throw std::invalid_argument("unknown normalize mode: " + name);
}

std::string to_string(Normalize mode) {
  switch (mode) {
    case Normalize::none: return "none";
    case Normalize::unit_norm: return "unit_norm";
    case Normalize::standardize: return "standardize";
  }
  return "?";
}

Dataset normalize(Dataset ds, Normalize mode) {
  switch (mode) {
    case Normalize::none:
      return ds;
    case Normalize::unit_norm:
      for (auto& s : ds.samples) {
        const double n = s.u.norm();
        if (n > 0.0) s.u /= n;
      }
      return ds;
    case Normalize::standardize: {
      if (ds.samples.empty()) return ds;
      const double count = static_cast<double>(ds.samples.size());
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(ds.dim);
      for (const auto& s : ds.samples) mean += s.u;
      mean /= count;
      Eigen::VectorXd var = Eigen::VectorXd::Zero(ds.dim);
      for (const auto& s : ds.samples)
        var += (s.u - mean).cwiseProduct(s.u - mean);
      var /= count;
      for (auto& s : ds.samples) {
        for (int j = 0; j < ds.dim; ++j) {
          if (var[j] > 0.0) s.u[j] = (s.u[j] - mean[j]) / std::sqrt(var[j]);
        }
      }
      return ds;
    }
  }
  return ds;
}

Rule rule_from_name(const std::string& name) {
  if (name == "round_robin") return Rule::round_robin;
  if (name == "shuffled") return Rule::shuffled;
  throw std::invalid_argument("unknown partition rule: " + name);
}

std::string to_string(Rule rule) {
  return rule == Rule::round_robin ? "round_robin" : "shuffled";
}

namespace {

void shuffle_indices(std::vector<int>& v, rng::Stream& stream) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = stream.next_below(i);
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace

Partition partition(const Dataset& ds, int n_nodes, Rule rule,
                    long rounds_needed, std::uint64_t seed) {
  const auto total = static_cast<long>(ds.samples.size());
  if (total == 0) throw std::invalid_argument("partition: dataset is empty");
  if (n_nodes < 1) throw std::invalid_argument("partition: n_nodes must be >= 1");
  if (total < n_nodes)
    throw std::invalid_argument("partition: fewer samples than nodes");
  if (rounds_needed < 1)
    throw std::invalid_argument("partition: rounds_needed must be >= 1");

  rng::Stream stream(rng::stream_key(seed, 0, rng::Purpose::shuffle));
  std::vector<int> order(total);
  for (long k = 0; k < total; ++k) order[k] = static_cast<int>(k);
  if (rule == Rule::shuffled) shuffle_indices(order, stream);

  Partition part;
  part.node_queues.resize(n_nodes);
  for (long k = 0; k < total; ++k)
    part.node_queues[k % n_nodes].push_back(order[k]);

  for (auto& queue : part.node_queues) {
    if (static_cast<long>(queue.size()) >= rounds_needed) continue;
    part.recycled = true;
    std::vector<int> base = queue;
    while (static_cast<long>(queue.size()) < rounds_needed) {
      shuffle_indices(base, stream);
      for (int idx : base) {
        if (static_cast<long>(queue.size()) >= rounds_needed) break;
        queue.push_back(idx);
      }
    }
  }
  return part;
}

std::uint64_t file_checksum(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize n = in.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      hash ^= static_cast<unsigned char>(buf[i]);
      hash *= 0x100000001b3ULL;
    }
    if (!in) break;
  }
  return hash;
}

}  // namespace distsgd::dataio
