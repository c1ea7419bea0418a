#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "qcomp/baselines.hpp"
#include "qcomp/parallel.hpp"
#include "qcomp/table_io.hpp"

namespace qcomp {

RegressionTree::RegressionTree(std::vector<TreeNode> nodes, int max_depth)
    : nodes_(std::move(nodes)), max_depth_(max_depth) {
  if (nodes_.empty()) throw std::invalid_argument("tree: no nodes");
  for (const auto& node : nodes_) {
    if (node.leaf) continue;
    if (node.left >= nodes_.size() || node.right >= nodes_.size() || node.dim >= kNumFeatures) {
      throw std::invalid_argument("tree: decision node with invalid child or dimension");
    }
  }
}

ActionScores RegressionTree::predict(const Features& x) const {
  std::uint32_t i = 0;
  while (!nodes_[i].leaf) {
    const TreeNode& n = nodes_[i];
    i = x[n.dim] <= static_cast<double>(n.threshold) ? n.left : n.right;
  }
  return nodes_[i].value;
}

std::size_t RegressionTree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.leaf; }));
}

int RegressionTree::depth() const {
  // Iterative DFS; node 0 is the root.
  int best = 0;
  std::vector<std::pair<std::uint32_t, int>> stack = {{0u, 0}};
  while (!stack.empty()) {
    const auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (!nodes_[i].leaf) {
      stack.push_back({nodes_[i].left, d + 1});
      stack.push_back({nodes_[i].right, d + 1});
    }
  }
  return best;
}

namespace {

struct Stats {
  double count = 0.0;
  ActionScores sum{};
  ActionScores sumsq{};

  void add(const ActionScores& y) {
    count += 1.0;
    for (std::size_t a = 0; a < kNumAdvisories; ++a) {
      sum[a] += y[a];
      sumsq[a] += y[a] * y[a];
    }
  }
  void add(const Stats& o) {
    count += o.count;
    for (std::size_t a = 0; a < kNumAdvisories; ++a) {
      sum[a] += o.sum[a];
      sumsq[a] += o.sumsq[a];
    }
  }
  double sse() const {
    if (count == 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t a = 0; a < kNumAdvisories; ++a) s += std::max(0.0, sumsq[a] - sum[a] * sum[a] / count);
    return s;
  }
};

Stats minus(const Stats& a, const Stats& b) {
  Stats r;
  r.count = a.count - b.count;
  for (std::size_t k = 0; k < kNumAdvisories; ++k) {
    r.sum[k] = a.sum[k] - b.sum[k];
    r.sumsq[k] = a.sumsq[k] - b.sumsq[k];
  }
  return r;
}

struct Split {
  bool valid = false;
  std::size_t dim = 0;
  float threshold = 0.0f;
  double sse = std::numeric_limits<double>::infinity();
};

class TreeBuilder {
 public:
  TreeBuilder(std::span<const Features> x, std::span<const ActionScores> y, const TreeFitOptions& opts)
      : x_(x), y_(y), opts_(opts) {}

  std::vector<TreeNode> build() {
    std::vector<std::uint32_t> idx(x_.size());
    std::iota(idx.begin(), idx.end(), 0u);
    grow(idx, 0, idx.size(), 0);
    return std::move(nodes_);
  }

 private:
  std::uint32_t grow(std::vector<std::uint32_t>& idx, std::size_t begin, std::size_t end, int depth) {
    const std::uint32_t me = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();

    Stats total;
    for (std::size_t i = begin; i < end; ++i) total.add(y_[idx[i]]);
    double parent_sse = 0.0;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t a = 0; a < kNumAdvisories; ++a) {
        const double e = y_[idx[i]][a] - total.sum[a] / total.count;
        parent_sse += e * e;
      }
    }

    Split best;
    if (depth < opts_.max_depth && end - begin >= 2 * opts_.min_leaf && parent_sse > 0.0) {
      best = find_split(idx, begin, end, total);
    }
    if (!best.valid || !(best.sse < parent_sse - 1e-12 * std::max(1.0, parent_sse))) {
      TreeNode& leaf = nodes_[me];
      leaf.leaf = true;
      for (std::size_t a = 0; a < kNumAdvisories; ++a) leaf.value[a] = total.sum[a] / total.count;
      return me;
    }

    const auto mid_it = std::stable_partition(idx.begin() + static_cast<std::ptrdiff_t>(begin),
                                              idx.begin() + static_cast<std::ptrdiff_t>(end), [&](std::uint32_t i) {
                                                return x_[i][best.dim] <= static_cast<double>(best.threshold);
                                              });
    const std::size_t mid = static_cast<std::size_t>(mid_it - idx.begin());
    const std::uint32_t left = grow(idx, begin, mid, depth + 1);
    const std::uint32_t right = grow(idx, mid, end, depth + 1);
    TreeNode& node = nodes_[me];
    node.leaf = false;
    node.dim = static_cast<std::uint8_t>(best.dim);
    node.threshold = best.threshold;
    node.left = left;
    node.right = right;
    return me;
  }

  Split find_split(const std::vector<std::uint32_t>& idx, std::size_t begin, std::size_t end, const Stats& total) const {
    std::array<Split, kNumFeatures> per_dim;
    parallel_for(kNumFeatures, opts_.threads, [&](std::size_t d) { per_dim[d] = best_for_dim(idx, begin, end, total, d); });
    Split best;
    for (const Split& s : per_dim) {
      if (s.valid && s.sse < best.sse) best = s;
    }
    return best;
  }

  Split best_for_dim(const std::vector<std::uint32_t>& idx, std::size_t begin, std::size_t end, const Stats& total,
                     std::size_t d) const {
    std::vector<double> distinct;
    distinct.reserve(64);
    for (std::size_t i = begin; i < end; ++i) distinct.push_back(x_[idx[i]][d]);
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    Split best;
    best.dim = d;
    if (distinct.size() < 2) return best;

    std::vector<Stats> bins(distinct.size());
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t s = idx[i];
      const auto b = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), x_[s][d]) - distinct.begin());
      bins[b].add(y_[s]);
    }

    // Boundaries after bin b; thin to quantiles of the sample mass if needed.
    std::vector<std::size_t> boundaries;
    const std::size_t n_bound = distinct.size() - 1;
    if (n_bound <= opts_.max_candidates) {
      boundaries.resize(n_bound);
      std::iota(boundaries.begin(), boundaries.end(), 0u);
    } else {
      double cum = 0.0;
      std::size_t next_q = 1;
      const double n = total.count;
      const double q_count = static_cast<double>(opts_.max_candidates + 1);
      for (std::size_t b = 0; b < n_bound; ++b) {
        cum += bins[b].count;
        if (cum >= n * static_cast<double>(next_q) / q_count) {
          boundaries.push_back(b);
          while (next_q <= opts_.max_candidates && cum >= n * static_cast<double>(next_q) / q_count) ++next_q;
          if (boundaries.size() == opts_.max_candidates) break;
        }
      }
    }

    Stats left;
    std::size_t consumed = 0;
    for (std::size_t b : boundaries) {
      for (; consumed <= b; ++consumed) left.add(bins[consumed]);
      const Stats right = minus(total, left);
      if (left.count < static_cast<double>(opts_.min_leaf) || right.count < static_cast<double>(opts_.min_leaf)) continue;
      const double lo = distinct[b];
      const double hi = distinct[b + 1];
      float t = static_cast<float>(0.5 * (lo + hi));
      if (static_cast<double>(t) >= hi) t = std::nextafter(t, -std::numeric_limits<float>::infinity());
      if (static_cast<double>(t) < lo) continue;  // no f32 value separates the pair
      const double sse = left.sse() + right.sse();
      if (sse < best.sse) {
        best.valid = true;
        best.sse = sse;
        best.threshold = t;
      }
    }
    return best;
  }

  std::span<const Features> x_;
  std::span<const ActionScores> y_;
  const TreeFitOptions& opts_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

RegressionTree fit_tree(std::span<const Features> x, std::span<const ActionScores> y, const TreeFitOptions& opts) {
  if (x.size() != y.size() || x.empty()) throw std::invalid_argument("fit_tree: empty or mismatched data");
  if (opts.max_depth < 0) throw std::invalid_argument("fit_tree: max_depth must be >= 0");
  if (opts.min_leaf < 1 || opts.max_candidates < 1) throw std::invalid_argument("fit_tree: min_leaf and max_candidates must be >= 1");
  TreeBuilder builder(x, y, opts);
  return RegressionTree(builder.build(), opts.max_depth);
}

RegressionTree fit_tree(const ScoreTable& table, const TreeFitOptions& opts) {
  std::vector<Features> x;
  std::vector<ActionScores> y;
  table_dataset(table, x, y);
  return fit_tree(x, y, opts);
}

namespace {
constexpr char kTreeMagic[4] = {'A', 'C', 'D', 'T'};
constexpr std::uint32_t kTreeVersion = 1;
}  // namespace

std::vector<std::uint8_t> encode_tree(const RegressionTree& tree) {
  std::vector<std::uint8_t> out(std::begin(kTreeMagic), std::end(kTreeMagic));
  le::put_u32(out, kTreeVersion);
  le::put_u32(out, static_cast<std::uint32_t>(tree.max_depth()));
  le::put_u32(out, static_cast<std::uint32_t>(tree.nodes().size()));
  for (const TreeNode& n : tree.nodes()) {
    if (n.leaf) {
      out.push_back(0);
      for (double v : n.value) le::put_f32(out, static_cast<float>(v));
    } else {
      out.push_back(1);
      out.push_back(n.dim);
      le::put_f32(out, n.threshold);
      le::put_u32(out, n.left);
      le::put_u32(out, n.right);
    }
  }
  return out;
}

RegressionTree decode_tree(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kTreeMagic, 4) != 0) {
    throw DecodeError(DecodeErrorKind::BadMagic, "decode: missing ACDT magic");
  }
  le::Reader r(bytes.subspan(4));
  if (r.u32() != kTreeVersion) throw DecodeError(DecodeErrorKind::BadVersion, "decode: unsupported tree version");
  const int max_depth = static_cast<int>(r.u32());
  const std::uint32_t count = r.u32();
  std::vector<TreeNode> nodes;
  nodes.reserve(std::min<std::size_t>(count, r.remaining()));
  for (std::uint32_t i = 0; i < count; ++i) {
    TreeNode n;
    const std::uint8_t kind = r.u8();
    if (kind == 0) {
      n.leaf = true;
      for (auto& v : n.value) {
        const float f = r.f32();
        if (!std::isfinite(f)) throw DecodeError(DecodeErrorKind::NonFinite, "decode: non-finite leaf value");
        v = f;
      }
    } else if (kind == 1) {
      n.leaf = false;
      n.dim = r.u8();
      n.threshold = r.f32();
      n.left = r.u32();
      n.right = r.u32();
    } else {
      throw DecodeError(DecodeErrorKind::BadShape, "decode: unknown tree node kind");
    }
    nodes.push_back(n);
  }
  if (r.remaining() != 0) throw DecodeError(DecodeErrorKind::TrailingBytes, "decode: trailing bytes after tree");
  try {
    return RegressionTree(std::move(nodes), max_depth);
  } catch (const std::invalid_argument& e) {
    throw DecodeError(DecodeErrorKind::BadShape, e.what());
  }
}

}  // namespace qcomp
