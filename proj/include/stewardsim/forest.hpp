#pragma once

// Bagged regression forest for bacterial risk.
//
// Each tree is grown on a bootstrap resample (n draws with replacement; the
// draw multiplicity is carried as an integer weight). At every node `mtry`
// features are sampled without replacement and the split maximising weighted
// variance reduction is chosen among midpoints of consecutive distinct values
// present in the node. Ties go to the lowest feature index, then the lowest
// threshold. Leaves hold the weighted mean outcome of their samples.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "stewardsim/error.hpp"
#include "stewardsim/feature_matrix.hpp"
#include "stewardsim/parallel.hpp"
#include "stewardsim/random.hpp"

namespace stewardsim {

struct ForestParams {
  std::size_t n_trees = 200;
  std::size_t max_depth = 12;
  std::size_t min_leaf = 10;
  std::size_t mtry = 0;  ///< 0 selects ceil(sqrt(n_features))
  std::uint64_t seed = 0;

  std::size_t effective_mtry(std::size_t n_features) const {
    if (mtry != 0) return std::min(mtry, n_features);
    const auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n_features))));
    return std::clamp<std::size_t>(m, 1, n_features);
  }

  void validate() const {
    detail::require_config(n_trees >= 1, "forest.n_trees must be >= 1");
    detail::require_config(max_depth >= 1, "forest.max_depth must be >= 1");
    detail::require_config(min_leaf >= 1, "forest.min_leaf must be >= 1");
  }
};

struct TreeNode {
  std::int32_t feature = -1;  ///< -1 marks a leaf
  std::int32_t left = -1;
  std::int32_t right = -1;
  double threshold = 0.0;  ///< go left iff x[feature] <= threshold
  double value = 0.0;      ///< leaf mean (also kept on internal nodes)

  bool is_leaf() const noexcept { return feature < 0; }
};

class Tree {
 public:
  Tree() = default;
  explicit Tree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> x) const {
    std::int32_t i = 0;
    while (!nodes_[static_cast<std::size_t>(i)].is_leaf()) {
      const auto& n = nodes_[static_cast<std::size_t>(i)];
      i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(i)].value;
  }

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
  }

 private:
  std::vector<TreeNode> nodes_;
};

/// Fitted forest; immutable after construction.
class RiskModel {
 public:
  RiskModel() = default;
  RiskModel(ForestParams hyper, std::size_t n_features, std::vector<Tree> trees)
      : hyper_(hyper), n_features_(n_features), trees_(std::move(trees)) {
    detail::ensure(!trees_.empty(), "risk model needs at least one tree");
  }

  /// Mean of the tree predictions.
  double predict(std::span<const double> x) const {
    detail::require_data(x.size() == n_features_, "covariate length " + std::to_string(x.size()) +
                                                       " does not match model (" + std::to_string(n_features_) + ")");
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.predict(x);
    return sum / static_cast<double>(trees_.size());
  }

  std::vector<double> predict(const FeatureMatrix& x, unsigned threads = 1) const {
    std::vector<double> out(x.rows());
    const std::size_t chunk = 512;
    const std::size_t n_chunks = (x.rows() + chunk - 1) / chunk;
    parallel_for(n_chunks, threads, [&](std::size_t c) {
      const std::size_t end = std::min(x.rows(), (c + 1) * chunk);
      for (std::size_t r = c * chunk; r < end; ++r) out[r] = predict(x.row(r));
    });
    return out;
  }

  const ForestParams& hyper() const noexcept { return hyper_; }
  std::size_t n_features() const noexcept { return n_features_; }
  const std::vector<Tree>& trees() const noexcept { return trees_; }

 private:
  ForestParams hyper_{};
  std::size_t n_features_ = 0;
  std::vector<Tree> trees_;
};

namespace detail {

/// Per-feature sorted distinct values and the rank code of every row.
struct CodedColumn {
  std::vector<double> values;
  std::vector<std::uint32_t> codes;
};

inline std::vector<CodedColumn> code_columns(const FeatureMatrix& x) {
  std::vector<CodedColumn> cols(x.cols());
  std::vector<double> buf(x.rows());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    for (std::size_t r = 0; r < x.rows(); ++r) {
      buf[r] = x(r, f);
      require_data(std::isfinite(buf[r]), "non-finite covariate in training data");
    }
    auto& col = cols[f];
    col.values = buf;
    std::sort(col.values.begin(), col.values.end());
    col.values.erase(std::unique(col.values.begin(), col.values.end()), col.values.end());
    col.codes.resize(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
      col.codes[r] = static_cast<std::uint32_t>(std::lower_bound(col.values.begin(), col.values.end(), buf[r]) -
                                                col.values.begin());
    }
  }
  return cols;
}

struct Sample {
  std::uint32_t row;
  std::uint32_t weight;  ///< bootstrap multiplicity
  double weighted_y;
};

struct SplitChoice {
  bool found = false;
  double score = 0.0;
  std::size_t feature = 0;
  std::uint32_t left_max_code = 0;
  double threshold = 0.0;

  bool better_than(const SplitChoice& o) const {
    if (!o.found) return true;
    if (score != o.score) return score > o.score;
    if (feature != o.feature) return feature < o.feature;
    return threshold < o.threshold;
  }
};

}  // namespace detail

/// Covariates coded once per column: sorted distinct values plus the rank of
/// every row. Forests fitted on any contiguous row range of the same coded
/// data are identical to forests fitted on that range alone, because split
/// thresholds only depend on the values present in a node.
class CodedMatrix {
 public:
  CodedMatrix() = default;
  explicit CodedMatrix(const FeatureMatrix& x) : rows_(x.rows()), cols_(detail::code_columns(x)) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_.size(); }
  const std::vector<detail::CodedColumn>& columns() const noexcept { return cols_; }

 private:
  std::size_t rows_ = 0;
  std::vector<detail::CodedColumn> cols_;
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const CodedMatrix& x, std::span<const double> y, std::size_t begin, std::size_t end,
              const ForestParams& hyper, std::uint64_t tree_seed)
      : cols_(x.columns()),
        x_(x),
        y_(y),
        row_begin_(begin),
        row_end_(end),
        hyper_(hyper),
        rng_(tree_seed),
        mtry_(hyper.effective_mtry(x.cols())),
        min_leaf_(static_cast<double>(hyper.min_leaf)) {
    std::size_t max_distinct = 0;
    for (const auto& c : cols_) max_distinct = std::max(max_distinct, c.values.size());
    hist_w_.assign(max_distinct, 0);
    hist_s_.assign(max_distinct, 0.0);
    feature_order_.resize(cols_.size());
  }

  Tree build() {
    const std::size_t n = row_end_ - row_begin_;
    std::vector<std::uint32_t> counts(n, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[rng_.below(n)];
    samples_.clear();
    for (std::size_t r = 0; r < n; ++r) {
      if (counts[r] > 0) {
        const std::size_t row = row_begin_ + r;
        samples_.push_back({static_cast<std::uint32_t>(row), counts[r], static_cast<double>(counts[r]) * y_[row]});
      }
    }
    nodes_.clear();
    grow(0, samples_.size(), 0);
    return Tree(std::move(nodes_));
  }

 private:
  std::int32_t grow(std::size_t begin, std::size_t end, std::size_t depth) {
    double w = 0.0, s = 0.0, ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      const double yi = y_[samples_[i].row];
      w += samples_[i].weight;
      s += samples_[i].weighted_y;
      ss += samples_[i].weighted_y * yi;
    }
    const auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(TreeNode{});
    nodes_.back().value = s / w;

    const double mean = s / w;
    const bool pure = ss / w - mean * mean <= 1e-14;
    const double min_leaf = static_cast<double>(hyper_.min_leaf);
    if (depth >= hyper_.max_depth || pure || w < 2.0 * min_leaf) return id;

    const SplitChoice split = best_split(begin, end, w, s);
    const double parent_score = s * s / w;
    if (!split.found || split.score - parent_score <= 1e-12 * std::max(1.0, w)) return id;

    const auto& codes = cols_[split.feature].codes;
    auto mid = std::partition(samples_.begin() + static_cast<std::ptrdiff_t>(begin),
                              samples_.begin() + static_cast<std::ptrdiff_t>(end),
                              [&](const Sample& smp) { return codes[smp.row] <= split.left_max_code; });
    const auto cut = static_cast<std::size_t>(mid - samples_.begin());
    ensure(cut > begin && cut < end, "split produced an empty child");

    const std::int32_t l = grow(begin, cut, depth + 1);
    const std::int32_t r = grow(cut, end, depth + 1);
    auto& node = nodes_[static_cast<std::size_t>(id)];
    node.feature = static_cast<std::int32_t>(split.feature);
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  SplitChoice best_split(std::size_t begin, std::size_t end, double w, double s) {
    std::iota(feature_order_.begin(), feature_order_.end(), std::size_t{0});
    // partial Fisher-Yates: the first mtry_ entries are the sampled features
    for (std::size_t i = 0; i < mtry_; ++i) {
      const std::size_t j = i + static_cast<std::size_t>(rng_.below(feature_order_.size() - i));
      std::swap(feature_order_[i], feature_order_[j]);
    }
    SplitChoice best;
    for (std::size_t k = 0; k < mtry_; ++k) {
      scan_feature(feature_order_[k], begin, end, w, s, best);
    }
    return best;
  }

  void consider(std::size_t f, std::uint32_t prev_code, std::uint32_t next_code, double wl, double sl, double w,
                double s, SplitChoice& best) const {
    const double wr = w - wl;
    if (wl < min_leaf_ || wr < min_leaf_) return;
    const double sr = s - sl;
    const double score = sl * sl / wl + sr * sr / wr;
    if (best.found && score < best.score) return;
    SplitChoice cand;
    cand.found = true;
    cand.score = score;
    cand.feature = f;
    cand.left_max_code = prev_code;
    const auto& v = cols_[f].values;
    double t = 0.5 * (v[prev_code] + v[next_code]);
    if (!(t < v[next_code])) t = v[prev_code];
    cand.threshold = t;
    if (cand.better_than(best)) best = cand;
  }

  void scan_feature(std::size_t f, std::size_t begin, std::size_t end, double w, double s, SplitChoice& best) {
    const auto& col = cols_[f];
    const std::size_t distinct = col.values.size();
    if (distinct < 2) return;
    const std::size_t m = end - begin;
    if (distinct <= 4 * m) {
      std::uint32_t lo = static_cast<std::uint32_t>(distinct), hi = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const auto& smp = samples_[i];
        const std::uint32_t c = col.codes[smp.row];
        hist_w_[c] += smp.weight;
        hist_s_[c] += smp.weighted_y;
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      double wl = 0.0, sl = 0.0;
      bool have_prev = false;
      std::uint32_t prev = 0;
      for (std::uint32_t c = lo; c <= hi; ++c) {
        if (hist_w_[c] == 0) continue;
        if (have_prev) consider(f, prev, c, wl, sl, w, s, best);
        wl += hist_w_[c];
        sl += hist_s_[c];
        hist_w_[c] = 0;
        hist_s_[c] = 0.0;
        prev = c;
        have_prev = true;
      }
    } else {
      sorted_.clear();
      for (std::size_t i = begin; i < end; ++i) {
        const auto& smp = samples_[i];
        sorted_.push_back({col.codes[smp.row], static_cast<double>(smp.weight), smp.weighted_y});
      }
      std::sort(sorted_.begin(), sorted_.end(), [](const Coded& a, const Coded& b) { return a.code < b.code; });
      double wl = 0.0, sl = 0.0;
      for (std::size_t i = 0; i < sorted_.size();) {
        const std::uint32_t c = sorted_[i].code;
        if (i > 0) consider(f, sorted_[i - 1].code, c, wl, sl, w, s, best);
        while (i < sorted_.size() && sorted_[i].code == c) {
          wl += sorted_[i].w;
          sl += sorted_[i].ws;
          ++i;
        }
      }
    }
  }

  struct Coded {
    std::uint32_t code;
    double w;
    double ws;
  };

  const std::vector<CodedColumn>& cols_;
  const CodedMatrix& x_;
  std::span<const double> y_;
  std::size_t row_begin_, row_end_;
  const ForestParams& hyper_;
  Rng rng_;
  std::size_t mtry_;
  double min_leaf_;
  std::vector<Sample> samples_;
  std::vector<TreeNode> nodes_;
  std::vector<std::uint32_t> hist_w_;
  std::vector<double> hist_s_;
  std::vector<std::size_t> feature_order_;
  std::vector<Coded> sorted_;
};

}  // namespace detail

/// Fits a forest on rows [begin, end) of `x`, with y indexed like x. Tree t
/// uses the seed derive_seed(hyper.seed, kTree, t), so the result is identical
/// for every thread count.
inline RiskModel fit(const CodedMatrix& x, std::span<const double> y, std::size_t begin, std::size_t end,
                     const ForestParams& hyper, unsigned threads = 1) {
  hyper.validate();
  detail::require_data(end > begin, "cannot fit a forest on an empty training set");
  detail::require_data(end <= x.rows() && x.rows() == y.size(), "training covariates and outcomes differ in length");
  detail::require_data(x.cols() > 0, "training data has no features");
  for (std::size_t r = begin; r < end; ++r) {
    detail::require_data(y[r] >= 0.0 && y[r] <= 1.0, "training outcomes must lie in [0,1]");
  }
  std::vector<Tree> trees(hyper.n_trees);
  parallel_for(hyper.n_trees, threads, [&](std::size_t t) {
    detail::TreeBuilder builder(x, y, begin, end, hyper, derive_seed(hyper.seed, Stream::kTree, t));
    trees[t] = builder.build();
  });
  return RiskModel(hyper, x.cols(), std::move(trees));
}

inline RiskModel fit(const FeatureMatrix& x, std::span<const double> y, const ForestParams& hyper,
                     unsigned threads = 1) {
  hyper.validate();
  detail::require_data(x.rows() > 0, "cannot fit a forest on an empty training set");
  detail::require_data(x.rows() == y.size(), "training covariates and outcomes differ in length");
  return fit(CodedMatrix(x), y, 0, x.rows(), hyper, threads);
}

inline double mean_squared_error(std::span<const double> predicted, std::span<const double> y) {
  double sum = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = predicted[i] - y[i];
    sum += d * d;
  }
  return y.empty() ? 0.0 : sum / static_cast<double>(y.size());
}

/// importance_j = mean over reps of MSE(column j permuted) - MSE(baseline).
/// Only column j is shuffled; a constant column yields exactly zero.
inline std::vector<double> permutation_importance(const RiskModel& model, const FeatureMatrix& x,
                                                  std::span<const double> y, std::size_t reps, std::uint64_t seed,
                                                  unsigned threads = 1) {
  detail::require_data(x.rows() > 0, "permutation importance needs data");
  detail::require_data(x.rows() == y.size(), "covariates and outcomes differ in length");
  detail::require_data(x.cols() == model.n_features(), "data width does not match model");
  detail::require_config(reps >= 1, "permutation importance needs reps >= 1");
  const auto baseline_pred = model.predict(x);
  const double baseline = mean_squared_error(baseline_pred, y);
  std::vector<double> importance(x.cols(), 0.0);
  parallel_for(x.cols(), threads, [&](std::size_t j) {
    FeatureMatrix work = x;
    std::vector<std::size_t> perm(x.rows());
    std::vector<double> pred(x.rows());
    double acc = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      std::iota(perm.begin(), perm.end(), std::size_t{0});
      Rng rng(derive_seed(derive_seed(seed, Stream::kPermutation, j), rep));
      rng.shuffle(std::span<std::size_t>(perm));
      for (std::size_t r = 0; r < x.rows(); ++r) work(r, j) = x(perm[r], j);
      for (std::size_t r = 0; r < x.rows(); ++r) pred[r] = model.predict(work.row(r));
      acc += mean_squared_error(pred, y) - baseline;
    }
    importance[j] = acc / static_cast<double>(reps);
  });
  return importance;
}

}  // namespace stewardsim
