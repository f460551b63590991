#pragma once

// Text serialisation of a fitted forest. Reals are stored as hexadecimal
// floats so a saved model reloads bit for bit.
//
//   stewardsim-forest 1
//   n_features <d>
//   hyper <n_trees> <max_depth> <min_leaf> <mtry> <seed>
//   trees <T>
//   tree <node_count>
//   <feature> <left> <right> <threshold> <value>     (one line per node)
//   ...
//   end

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "stewardsim/error.hpp"
#include "stewardsim/forest.hpp"

namespace stewardsim {

inline constexpr int kForestFormatVersion = 1;

namespace detail {

inline std::string hex_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

inline double parse_hex_double(const std::string& s) {
  std::string_view v = s;
  bool negative = false;
  if (!v.empty() && v.front() == '-') {
    negative = true;
    v.remove_prefix(1);
  }
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out, std::chars_format::hex);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) throw DataError("malformed model value '" + s + "'");
  return negative ? -out : out;
}

}  // namespace detail

inline void save_model(const RiskModel& model, std::ostream& out) {
  const auto& h = model.hyper();
  out << "stewardsim-forest " << kForestFormatVersion << '\n';
  out << "n_features " << model.n_features() << '\n';
  out << "hyper " << h.n_trees << ' ' << h.max_depth << ' ' << h.min_leaf << ' ' << h.mtry << ' ' << h.seed << '\n';
  out << "trees " << model.trees().size() << '\n';
  for (const auto& t : model.trees()) {
    out << "tree " << t.nodes().size() << '\n';
    for (const auto& n : t.nodes()) {
      out << n.feature << ' ' << n.left << ' ' << n.right << ' ' << detail::hex_double(n.threshold) << ' '
          << detail::hex_double(n.value) << '\n';
    }
  }
  out << "end\n";
}

inline RiskModel load_model(std::istream& in) {
  auto expect = [&](const std::string& key) {
    std::string word;
    if (!(in >> word) || word != key) throw DataError("model file: expected '" + key + "'");
  };
  expect("stewardsim-forest");
  int version = 0;
  if (!(in >> version)) throw DataError("model file: missing format version");
  if (version != kForestFormatVersion) {
    throw DataError("model file: unsupported format version " + std::to_string(version));
  }
  std::size_t n_features = 0, n_trees = 0;
  ForestParams h;
  expect("n_features");
  in >> n_features;
  expect("hyper");
  in >> h.n_trees >> h.max_depth >> h.min_leaf >> h.mtry >> h.seed;
  expect("trees");
  in >> n_trees;
  if (!in || n_trees == 0 || n_features == 0) throw DataError("model file: malformed header");
  std::vector<Tree> trees;
  trees.reserve(n_trees);
  for (std::size_t t = 0; t < n_trees; ++t) {
    expect("tree");
    std::size_t count = 0;
    if (!(in >> count) || count == 0) throw DataError("model file: malformed tree header");
    std::vector<TreeNode> nodes(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::string thr, val;
      auto& n = nodes[i];
      if (!(in >> n.feature >> n.left >> n.right >> thr >> val)) throw DataError("model file: truncated tree");
      n.threshold = detail::parse_hex_double(thr);
      n.value = detail::parse_hex_double(val);
      const auto c = static_cast<std::int32_t>(count), self = static_cast<std::int32_t>(i);
      if (n.feature >= 0) {
        // children always follow their parent, which rules out cycles
        const bool ok = static_cast<std::size_t>(n.feature) < n_features && n.left > self && n.left < c &&
                        n.right > self && n.right < c;
        if (!ok) throw DataError("model file: invalid node " + std::to_string(i) + " in tree " + std::to_string(t));
      } else if (n.feature != -1 || n.left != -1 || n.right != -1) {
        throw DataError("model file: invalid leaf " + std::to_string(i) + " in tree " + std::to_string(t));
      }
    }
    trees.emplace_back(std::move(nodes));
  }
  expect("end");
  return RiskModel(h, n_features, std::move(trees));
}

inline void save_model(const RiskModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write model file '" + path + "'");
  save_model(model, out);
}

inline RiskModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open model file '" + path + "'");
  return load_model(in);
}

}  // namespace stewardsim
