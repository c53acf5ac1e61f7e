#include "psica/forest.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "psica/parallel.hpp"

namespace psica {

MtryRule parse_mtry(const std::string& text) {
  if (text == "all") return MtryRule::all;
  if (text == "sqrt") return MtryRule::sqrt;
  throw std::invalid_argument("mtry must be 'all' or 'sqrt', got '" + text + "'");
}

std::string to_string(MtryRule rule) { return rule == MtryRule::all ? "all" : "sqrt"; }

std::size_t resolve_mtry(MtryRule rule, std::size_t p) {
  if (p == 0) return 0;
  if (rule == MtryRule::all) return p;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p)))));
}

std::string describe(const SplitRule& rule, const std::vector<FeatureSpec>& schema) {
  const auto& spec = schema.at(rule.feature);
  if (!rule.categorical) return spec.name + " <= " + format_double(rule.threshold);
  std::string out = spec.name + " in {";
  bool first = true;
  for (std::size_t l = 0; l < spec.kind.levels.size(); ++l) {
    if (!((rule.left_levels >> l) & 1ULL)) continue;
    if (!first) out += ",";
    out += spec.kind.levels[l];
    first = false;
  }
  return out + "}";
}

std::size_t RegressionTree::leaf_of(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(n.split->goes_left(x) ? n.left : n.right);
  }
  return i;
}

std::size_t RegressionTree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
}

namespace {

struct Candidate {
  double gain = 0.0;
  SplitRule rule;
  bool found = false;
};

struct Moments {
  double w = 0.0, s = 0.0, ss = 0.0;
  void add(double wt, double y) {
    w += wt;
    s += wt * y;
    ss += wt * y * y;
  }
  double sse() const { return w > 0 ? std::max(0.0, ss - s * s / w) : 0.0; }
};

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& d, std::span<const double> weights, const ForestParams& params, RandomStream& rng)
      : d_(d), w_(weights), params_(params), rng_(rng) {
    mtry_ = params.mtry == 0 ? d.num_features() : std::min(params.mtry, d.num_features());
  }

  RegressionTree build() {
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < d_.size(); ++i)
      if (w_[i] > 0) rows.push_back(i);
    if (rows.empty()) throw std::invalid_argument("fit_tree needs at least one row with positive weight");
    grow(rows, 0);
    return RegressionTree(std::move(nodes_));
  }

 private:
  std::int32_t grow(const std::vector<std::size_t>& rows, std::size_t depth) {
    Moments m;
    for (auto i : rows) m.add(w_[i], d_.effects()[i]);
    auto id = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back({std::nullopt, -1, -1, m.s / m.w, m.w});

    if (m.w < static_cast<double>(params_.min_split)) return id;
    if (params_.max_depth && depth >= *params_.max_depth) return id;
    if (m.w < 2.0 * static_cast<double>(std::max<std::size_t>(params_.min_leaf, 1))) return id;
    const double parent_sse = m.sse();
    if (parent_sse <= 1e-12 * m.ss) return id;

    Candidate best;
    for (auto f : sample_features()) {
      Candidate c = d_.schema()[f].kind.is_categorical() ? best_categorical(rows, f, m) : best_numeric(rows, f, m);
      if (c.found && (!best.found || c.gain > best.gain)) best = c;
    }
    if (!best.found || best.gain <= 1e-12 * std::max(m.ss, 1e-300)) return id;

    std::vector<std::size_t> left, right;
    for (auto i : rows) (best.rule.goes_left(d_.feature(i, best.rule.feature)) ? left : right).push_back(i);
    nodes_[id].split = best.rule;
    auto l = grow(left, depth + 1);
    auto r = grow(right, depth + 1);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Partial Fisher-Yates draw of mtry features, returned in ascending order
  // so that equal-gain ties resolve to the lowest feature index.
  std::vector<std::size_t> sample_features() {
    std::vector<std::size_t> idx(d_.num_features());
    std::iota(idx.begin(), idx.end(), 0);
    if (mtry_ < idx.size()) {
      for (std::size_t j = 0; j < mtry_; ++j) std::swap(idx[j], idx[j + rng_.index(idx.size() - j)]);
      idx.resize(mtry_);
      std::sort(idx.begin(), idx.end());
    }
    return idx;
  }

  double min_leaf() const { return static_cast<double>(std::max<std::size_t>(params_.min_leaf, 1)); }

  static double gain_of(const Moments& l, const Moments& total) {
    double rw = total.w - l.w, rs = total.s - l.s;
    return l.s * l.s / l.w + rs * rs / rw - total.s * total.s / total.w;
  }

  Candidate best_numeric(const std::vector<std::size_t>& rows, std::size_t f, const Moments& total) {
    order_.assign(rows.begin(), rows.end());
    auto col = d_.column(f);
    std::stable_sort(order_.begin(), order_.end(), [&](auto a, auto b) { return col[a] < col[b]; });
    Candidate best;
    Moments left;
    for (std::size_t j = 0; j + 1 < order_.size(); ++j) {
      auto i = order_[j];
      left.add(w_[i], d_.effects()[i]);
      double x = col[i], next = col[order_[j + 1]];
      if (!(x < next)) continue;
      if (left.w < min_leaf() || total.w - left.w < min_leaf()) continue;
      double g = gain_of(left, total);
      if (!best.found || g > best.gain) {
        best.found = true;
        best.gain = g;
        best.rule = SplitRule{f, false, x + (next - x) / 2.0, 0};
      }
    }
    return best;
  }

  Candidate best_categorical(const std::vector<std::size_t>& rows, std::size_t f, const Moments& total) {
    const std::size_t levels = d_.schema()[f].kind.levels.size();
    if (levels > max_split_levels) throw std::invalid_argument("categorical feature has too many levels to split");
    std::vector<Moments> per(levels);
    for (auto i : rows) per[static_cast<std::size_t>(d_.feature(i, f))].add(w_[i], d_.effects()[i]);
    std::vector<std::size_t> present;
    for (std::size_t l = 0; l < levels; ++l)
      if (per[l].w > 0) present.push_back(l);
    Candidate best;
    if (present.size() < 2) return best;

    auto consider = [&](std::uint64_t mask) {
      Moments left;
      for (auto l : present)
        if ((mask >> l) & 1ULL) {
          left.w += per[l].w;
          left.s += per[l].s;
          left.ss += per[l].ss;
        }
      if (left.w < min_leaf() || total.w - left.w < min_leaf()) return;
      double g = gain_of(left, total);
      if (!best.found || g > best.gain || (g == best.gain && mask < best.rule.left_levels)) {
        best.found = true;
        best.gain = g;
        best.rule = SplitRule{f, true, 0.0, mask};
      }
    };

    if (present.size() <= exhaustive_level_limit) {
      // Subsets containing the first present level cover every partition once.
      const std::size_t k = present.size();
      for (std::uint64_t sub = 0; sub < (1ULL << (k - 1)) - 1; ++sub) {
        std::uint64_t mask = 1ULL << present[0];
        for (std::size_t j = 1; j < k; ++j)
          if ((sub >> (j - 1)) & 1ULL) mask |= 1ULL << present[j];
        consider(mask);
      }
    } else {
      std::stable_sort(present.begin(), present.end(),
                       [&](auto a, auto b) { return per[a].s / per[a].w < per[b].s / per[b].w; });
      std::uint64_t mask = 0;
      for (std::size_t j = 0; j + 1 < present.size(); ++j) {
        mask |= 1ULL << present[j];
        consider(mask);
      }
    }
    return best;
  }

  const Dataset& d_;
  std::span<const double> w_;
  const ForestParams& params_;
  RandomStream& rng_;
  std::size_t mtry_ = 0;
  std::vector<RegressionTreeNode> nodes_;
  std::vector<std::size_t> order_;
};

double sample_variance(std::span<const double> y) {
  if (y.size() < 2) return 0.0;
  double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - mean) * (v - mean);
  return ss / static_cast<double>(y.size() - 1);
}

}  // namespace

RegressionTree fit_tree(const Dataset& d, std::span<const double> weights, const ForestParams& params,
                        RandomStream& rng) {
  if (weights.size() != d.size()) throw std::invalid_argument("fit_tree: weights length differs from data");
  return TreeBuilder(d, weights, params, rng).build();
}

ForestModel::ForestModel(std::vector<RegressionTree> trees, std::vector<std::vector<std::uint32_t>> membership,
                         ForestParams params, std::vector<FeatureSpec> schema, double variance_floor)
    : trees_(std::move(trees)),
      membership_(std::move(membership)),
      params_(params),
      schema_(std::move(schema)),
      variance_floor_(variance_floor) {
  if (trees_.empty()) throw std::invalid_argument("forest needs at least one tree");
  if (membership_.size() != trees_.size()) throw std::invalid_argument("forest membership/tree count mismatch");
  const std::size_t n = membership_.front().size();
  for (const auto& counts : membership_) {
    if (counts.size() != n) throw std::invalid_argument("forest membership rows differ in length");
    if (std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}) != n)
      throw std::invalid_argument("bootstrap multiplicities must sum to the training size");
  }
}

std::vector<double> ForestModel::tree_predictions(std::span<const double> x) const {
  validate_row(schema_, x);
  std::vector<double> out(trees_.size());
  for (std::size_t b = 0; b < trees_.size(); ++b) out[b] = trees_[b].predict(x);
  return out;
}

double ForestModel::predict(std::span<const double> x) const {
  auto t = tree_predictions(x);
  return std::accumulate(t.begin(), t.end(), 0.0) / static_cast<double>(t.size());
}

IjComponents ij_components(const ForestModel& f, std::span<const double> x) {
  const auto t = f.tree_predictions(x);
  const std::size_t B = t.size();
  const std::size_t n = f.training_n();
  const double Bd = static_cast<double>(B);
  const double tbar = std::accumulate(t.begin(), t.end(), 0.0) / Bd;
  std::vector<double> tc(B);
  double tss = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    tc[b] = t[b] - tbar;
    tss += tc[b] * tc[b];
  }
  const auto& N = f.membership();
  // Centering N_{b,i} is unnecessary since sum_b tc[b] = 0.
  std::vector<double> cov(n, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    if (tc[b] == 0.0) continue;
    const auto& row = N[b];
    for (std::size_t i = 0; i < n; ++i) cov[i] += static_cast<double>(row[i]) * tc[b];
  }
  IjComponents out;
  for (double c : cov) out.raw += (c / Bd) * (c / Bd);
  out.bias = static_cast<double>(n) / (Bd * Bd) * tss;
  return out;
}

double ForestModel::ij_variance(std::span<const double> x) const {
  auto c = ij_components(*this, x);
  return std::max(c.raw - c.bias, variance_floor_);
}

ForestModel fit_forest(const Dataset& d, const ForestParams& params) {
  if (d.size() < 2) throw std::invalid_argument("fit_forest needs at least two rows");
  if (params.num_trees == 0) throw std::invalid_argument("num_trees must be positive");
  if (params.mtry > d.num_features()) throw std::invalid_argument("mtry exceeds the number of features");
  const std::size_t n = d.size();
  ForestParams fp = params;
  if (fp.min_split == 0) fp.min_split = (n + 9) / 10;
  std::vector<RegressionTree> trees(params.num_trees);
  std::vector<std::vector<std::uint32_t>> membership(params.num_trees, std::vector<std::uint32_t>(n, 0));
  parallel_for(params.num_trees, params.threads, [&](std::size_t b) {
    RandomStream rng(derive_seed(params.seed, {tag(StreamTag::forest_tree), b}));
    auto& counts = membership[b];
    for (auto i : bootstrap_indices(n, rng)) ++counts[i];
    std::vector<double> w(counts.begin(), counts.end());
    trees[b] = fit_tree(d, w, fp, rng);
  });
  const double floor = 1e-12 * sample_variance(d.effects());
  return ForestModel(std::move(trees), std::move(membership), fp, d.schema(), floor);
}

}  // namespace psica
