#include "psica/psica_tree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "psica/chisq.hpp"

namespace psica {

CostMatrix::CostMatrix(std::size_t m, std::vector<double> values) : m_(m), values_(std::move(values)) {
  if (values_.size() != m * m) throw std::invalid_argument("cost matrix must be m x m");
  for (std::size_t k = 0; k < m; ++k)
    for (std::size_t j = 0; j < m; ++j) {
      double c = (*this)(k, j);
      if (!std::isfinite(c) || c < 0) throw std::invalid_argument("costs must be finite and non-negative");
      if (k == j && c != 0.0) throw std::invalid_argument("cost matrix diagonal must be zero");
    }
}

CostMatrix CostMatrix::zero_one(std::size_t m) {
  std::vector<double> v(m * m, 1.0);
  for (std::size_t k = 0; k < m; ++k) v[k * m + k] = 0.0;
  return CostMatrix(m, std::move(v));
}

CostMatrix CostMatrix::parse(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument("cost matrix: cannot parse '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const std::size_t m = rows.size();
  std::vector<double> values;
  for (const auto& r : rows) {
    if (r.size() != m) throw std::invalid_argument("cost matrix must be square");
    values.insert(values.end(), r.begin(), r.end());
  }
  return CostMatrix(m, std::move(values));
}

bool CostMatrix::is_zero_one() const { return *this == zero_one(m_); }

std::string CostMatrix::format() const {
  std::string out;
  for (std::size_t k = 0; k < m_; ++k) {
    for (std::size_t j = 0; j < m_; ++j) out += (j ? "," : "") + format_double((*this)(k, j));
    out += "\n";
  }
  return out;
}

std::vector<double> aggregate_probabilities(std::span<const std::size_t> rows, const ProbabilityMatrix& P) {
  if (rows.empty()) throw std::invalid_argument("cannot aggregate probabilities over an empty node");
  std::vector<double> agg(P.cols(), 0.0);
  for (auto i : rows)
    for (std::size_t k = 0; k < P.cols(); ++k) agg[k] += P(i, k);
  for (auto& a : agg) a /= static_cast<double>(rows.size());
  return agg;
}

TreatmentSet useless_treatments(std::span<const double> agg, double alpha) {
  const std::size_t m = agg.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return agg[a] < agg[b]; });
  // Absorbs round-off in means of probabilities sitting exactly on alpha.
  const double limit = alpha + 1e-12;
  TreatmentSet useless;
  double cumulative = 0.0;
  for (std::size_t j = 0; j + 1 < m; ++j) {
    cumulative += agg[order[j]];
    if (cumulative > limit) break;
    useless.insert(order[j]);
  }
  return useless;
}

std::vector<double> truncated_probabilities(std::span<const double> agg, TreatmentSet useless) {
  double mass = 0.0;
  for (std::size_t k = 0; k < agg.size(); ++k)
    if (!useless.contains(k)) mass += agg[k];
  if (!(mass > 0.0)) throw std::invalid_argument("potential treatments carry no probability mass");
  std::vector<double> out(agg.size(), 0.0);
  for (std::size_t k = 0; k < agg.size(); ++k)
    if (!useless.contains(k)) out[k] = agg[k] / mass;
  return out;
}

NodeSummary summarize(std::span<const double> agg, double size, const CostMatrix& costs, double alpha) {
  const std::size_t m = agg.size();
  if (costs.size() != m) throw std::invalid_argument("cost matrix size differs from the number of treatments");
  NodeSummary s;
  s.size = size;
  s.agg_probs.assign(agg.begin(), agg.end());
  s.useless = useless_treatments(agg, alpha);
  s.potential = s.useless.complement(m);
  s.trunc_probs = truncated_probabilities(agg, s.useless);
  double per_row = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    double inner = 0.0;
    for (std::size_t j = 0; j < m; ++j)
      if (j != k && s.potential.contains(j)) inner += costs(k, j) * s.trunc_probs[j];
    per_row += agg[k] * inner;
  }
  s.loss = size * per_row;
  return s;
}

double node_loss(std::span<const std::size_t> rows, const ProbabilityMatrix& P, const CostMatrix& costs,
                 double alpha) {
  auto agg = aggregate_probabilities(rows, P);
  return summarize(agg, static_cast<double>(rows.size()), costs, alpha).loss;
}

double node_loss_by_rows(std::span<const std::size_t> rows, const ProbabilityMatrix& P, const CostMatrix& costs,
                         double alpha) {
  auto agg = aggregate_probabilities(rows, P);
  auto useless = useless_treatments(agg, alpha);
  auto trunc = truncated_probabilities(agg, useless);
  const std::size_t m = P.cols();
  double loss = 0.0;
  for (auto i : rows)
    for (std::size_t k = 0; k < m; ++k)
      for (std::size_t j = 0; j < m; ++j)
        if (j != k && !useless.contains(j)) loss += costs(k, j) * trunc[j] * P(i, k);
  return loss;
}

double node_loss_zero_one(std::span<const std::size_t> rows, const ProbabilityMatrix& P, double alpha) {
  auto agg = aggregate_probabilities(rows, P);
  auto trunc = truncated_probabilities(agg, useless_treatments(agg, alpha));
  double s = 0.0;
  for (std::size_t k = 0; k < agg.size(); ++k) s += agg[k] * (1.0 - trunc[k]);
  return static_cast<double>(rows.size()) * s;
}

double information_gain(std::span<const std::size_t> parent, std::span<const std::size_t> left,
                        std::span<const std::size_t> right, const ProbabilityMatrix& P, const CostMatrix& costs,
                        double alpha) {
  if (left.empty() || right.empty()) throw std::invalid_argument("information gain needs two non-empty children");
  if (left.size() + right.size() != parent.size())
    throw std::invalid_argument("children must partition the parent node");
  return node_loss(parent, P, costs, alpha) - node_loss(left, P, costs, alpha) - node_loss(right, P, costs, alpha);
}

double inflation_factor(double sum, double sum_sq, double count, double omega_max) {
  static const double uniform_sd = 1.0 / std::sqrt(12.0);
  if (count < 2.0) return omega_max;
  const double var = std::max(0.0, (sum_sq - sum * sum / count) / (count - 1.0));
  const double sd = std::sqrt(var);
  if (sd * omega_max <= uniform_sd) return omega_max;
  return uniform_sd / sd;
}

double inflation_factor(std::span<const std::size_t> rows, const ProbabilityMatrix& P, double omega_max) {
  double s = 0.0, ss = 0.0;
  for (auto i : rows)
    for (std::size_t k = 0; k < P.cols(); ++k) {
      s += P(i, k);
      ss += P(i, k) * P(i, k);
    }
  return inflation_factor(s, ss, static_cast<double>(rows.size() * P.cols()), omega_max);
}

namespace {

double inflated_count(double prob, double size, double omega) {
  const double x = prob * size * omega;
  // Keeps exact integers from rounding up after floating-point noise.
  return std::ceil(x - 1e-9 * std::max(1.0, x));
}

// Mask from children summaries: aggregated probabilities, sizes, omegas.
bool mask_from_parts(std::span<const double> agg_l, double size_l, double omega_l, std::span<const double> agg_r,
                     double size_r, double omega_r, double alpha) {
  std::vector<std::array<double, 2>> table(agg_l.size());
  for (std::size_t k = 0; k < agg_l.size(); ++k)
    table[k] = {inflated_count(agg_l[k], size_l, omega_l), inflated_count(agg_r[k], size_r, omega_r)};
  auto res = chi_square_independence(table);
  if (res.degenerate) return false;
  return res.p_value <= alpha;
}

}  // namespace

bool chi_square_mask(std::span<const std::size_t> left, std::span<const std::size_t> right,
                     const ProbabilityMatrix& P, double alpha, double omega_max) {
  if (left.empty() || right.empty()) throw std::invalid_argument("chi-square mask needs two non-empty children");
  auto agg_l = aggregate_probabilities(left, P);
  auto agg_r = aggregate_probabilities(right, P);
  return mask_from_parts(agg_l, static_cast<double>(left.size()), inflation_factor(left, P, omega_max), agg_r,
                         static_cast<double>(right.size()), inflation_factor(right, P, omega_max), alpha);
}

GrowthMethod parse_growth_method(const std::string& text) {
  if (text == "full" || text == "3") return GrowthMethod::full;
  if (text == "preprune" || text == "4") return GrowthMethod::preprune;
  throw std::invalid_argument("growth method must be 'full' or 'preprune', got '" + text + "'");
}

std::string to_string(GrowthMethod m) { return m == GrowthMethod::full ? "full" : "preprune"; }

PsicaTree::PsicaTree(std::vector<PsicaNode> nodes, std::vector<FeatureSpec> schema,
                     std::vector<std::string> treatments, TreeConfig config)
    : nodes_(std::move(nodes)), schema_(std::move(schema)), treatments_(std::move(treatments)), config_(std::move(config)) {
  if (nodes_.empty()) throw std::invalid_argument("a tree needs at least a root node");
  for (const auto& n : nodes_) {
    if (n.is_leaf()) continue;
    if (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= nodes_.size() ||
        static_cast<std::size_t>(n.right) >= nodes_.size())
      throw std::invalid_argument("tree node has invalid children");
    if (n.split->feature >= schema_.size()) throw std::invalid_argument("split refers to an unknown feature");
  }
}

std::size_t PsicaTree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const auto& n) { return n.is_leaf(); }));
}

std::vector<std::size_t> PsicaTree::leaves() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i)
    if (nodes_[i].is_leaf()) out.push_back(i);
  return out;
}

std::vector<std::size_t> PsicaTree::leaves_in_order() const {
  std::vector<std::size_t> out, stack{0};
  while (!stack.empty()) {
    auto i = stack.back();
    stack.pop_back();
    const auto& n = nodes_[i];
    if (n.is_leaf()) {
      out.push_back(i);
    } else {
      stack.push_back(static_cast<std::size_t>(n.right));
      stack.push_back(static_cast<std::size_t>(n.left));
    }
  }
  return out;
}

double PsicaTree::total_loss() const {
  double s = 0.0;
  for (auto i : leaves()) s += nodes_[i].summary.loss;
  return s;
}

std::size_t PsicaTree::leaf_of(std::span<const double> x) const {
  validate_row(schema_, x);
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(n.split->goes_left(x) ? n.left : n.right);
  }
  return i;
}

LeafLabel PsicaTree::predict_label(std::span<const double> x) const {
  auto leaf = leaf_of(x);
  const auto& s = nodes_[leaf].summary;
  return {leaf, s.potential, s.trunc_probs};
}

namespace {

struct SplitChoice {
  bool found = false;
  double score = 0.0;  // gain, masked for prepruning
  double gain = 0.0;
  SplitRule rule;
};

class PsicaBuilder {
 public:
  PsicaBuilder(const ProbabilityMatrix& P, const Dataset& X, const TreeConfig& config)
      : P_(P), X_(X), cfg_(config), m_(P.cols()) {
    if (P.rows() != X.size()) throw std::invalid_argument("probability matrix and features differ in row count");
    costs_ = config.costs ? *config.costs : CostMatrix::zero_one(m_);
    if (costs_.size() != m_) throw std::invalid_argument("cost matrix size differs from the number of treatments");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    min_leaf_ = config.min_leaf > 0 ? config.min_leaf
                                    : static_cast<std::size_t>(std::ceil(static_cast<double>(P.rows()) / 5.0));
    min_leaf_ = std::max<std::size_t>(min_leaf_, 1);
  }

  std::vector<PsicaNode> build() {
    std::vector<std::size_t> rows(P_.rows());
    std::iota(rows.begin(), rows.end(), 0);
    auto root = summary_of(rows);
    gain_floor_ = cfg_.gain_floor_rel * root.loss;
    grow(rows, 0, std::move(root));
    return std::move(nodes_);
  }

  std::size_t min_leaf() const { return min_leaf_; }

 private:
  NodeSummary summary_of(std::span<const std::size_t> rows) const {
    return summarize(aggregate_probabilities(rows, P_), static_cast<double>(rows.size()), costs_, cfg_.alpha);
  }

  std::int32_t grow(const std::vector<std::size_t>& rows, std::size_t depth, NodeSummary summary) {
    auto id = static_cast<std::int32_t>(nodes_.size());
    PsicaNode node;
    node.depth = depth;
    node.summary = std::move(summary);
    nodes_.push_back(node);

    if (rows.size() < 2 * min_leaf_) return id;
    if (cfg_.max_depth && depth >= *cfg_.max_depth) return id;

    SplitChoice best = best_split(rows, nodes_[id].summary.loss);
    if (!best.found || !(best.score > gain_floor_)) return id;

    std::vector<std::size_t> left, right;
    for (auto i : rows) (best.rule.goes_left(X_.feature(i, best.rule.feature)) ? left : right).push_back(i);
    auto ls = summary_of(left);
    auto rs = summary_of(right);
    nodes_[id].split = best.rule;
    nodes_[id].gain = nodes_[id].summary.loss - ls.loss - rs.loss;
    auto l = grow(left, depth + 1, std::move(ls));
    auto r = grow(right, depth + 1, std::move(rs));
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  // Running sums over a set of rows: per-treatment probability mass plus the
  // pooled sum of squares needed by the inflation factor.
  struct Sums {
    std::vector<double> mass;
    double sq = 0.0;
    double count = 0.0;
    explicit Sums(std::size_t m) : mass(m, 0.0) {}
    void add(const ProbabilityMatrix& P, std::size_t i) {
      for (std::size_t k = 0; k < mass.size(); ++k) {
        mass[k] += P(i, k);
        sq += P(i, k) * P(i, k);
      }
      count += 1.0;
    }
    void add(const Sums& o) {
      for (std::size_t k = 0; k < mass.size(); ++k) mass[k] += o.mass[k];
      sq += o.sq;
      count += o.count;
    }
    Sums minus(const Sums& o) const {
      Sums r(mass.size());
      for (std::size_t k = 0; k < mass.size(); ++k) r.mass[k] = mass[k] - o.mass[k];
      r.sq = sq - o.sq;
      r.count = count - o.count;
      return r;
    }
    std::vector<double> agg() const {
      std::vector<double> a(mass.size());
      for (std::size_t k = 0; k < mass.size(); ++k) a[k] = mass[k] / count;
      return a;
    }
    double pooled_sum() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }
  };

  // Evaluates the candidate whose left side has sums `l`; updates `best`.
  void consider(const Sums& l, const Sums& total, double parent_loss, const SplitRule& rule, SplitChoice& best) {
    if (l.count < static_cast<double>(min_leaf_) || total.count - l.count < static_cast<double>(min_leaf_)) return;
    Sums r = total.minus(l);
    auto agg_l = l.agg();
    auto agg_r = r.agg();
    const double loss_l = summarize(agg_l, l.count, costs_, cfg_.alpha).loss;
    const double loss_r = summarize(agg_r, r.count, costs_, cfg_.alpha).loss;
    const double g = parent_loss - loss_l - loss_r;
    double score = g;
    if (best.found && !(score > best.score)) return;
    if (cfg_.method == GrowthMethod::preprune) {
      const double wl = inflation_factor(l.pooled_sum(), l.sq, l.count * static_cast<double>(m_), cfg_.omega_max);
      const double wr = inflation_factor(r.pooled_sum(), r.sq, r.count * static_cast<double>(m_), cfg_.omega_max);
      if (!mask_from_parts(agg_l, l.count, wl, agg_r, r.count, wr, cfg_.alpha)) score = 0.0;
      if (best.found && !(score > best.score)) return;
    }
    best = SplitChoice{true, score, g, rule};
  }

  SplitChoice best_split(const std::vector<std::size_t>& rows, double parent_loss) {
    Sums total(m_);
    for (auto i : rows) total.add(P_, i);
    SplitChoice best;
    for (std::size_t f = 0; f < X_.num_features(); ++f) {
      if (X_.schema()[f].kind.is_categorical())
        scan_categorical(rows, f, total, parent_loss, best);
      else
        scan_numeric(rows, f, total, parent_loss, best);
    }
    return best;
  }

  void scan_numeric(const std::vector<std::size_t>& rows, std::size_t f, const Sums& total, double parent_loss,
                    SplitChoice& best) {
    order_.assign(rows.begin(), rows.end());
    auto col = X_.column(f);
    std::stable_sort(order_.begin(), order_.end(), [&](auto a, auto b) { return col[a] < col[b]; });
    Sums left(m_);
    for (std::size_t j = 0; j + 1 < order_.size(); ++j) {
      left.add(P_, order_[j]);
      const double x = col[order_[j]], next = col[order_[j + 1]];
      if (!(x < next)) continue;
      consider(left, total, parent_loss, SplitRule{f, false, x + (next - x) / 2.0, 0}, best);
    }
  }

  void scan_categorical(const std::vector<std::size_t>& rows, std::size_t f, const Sums& total, double parent_loss,
                        SplitChoice& best) {
    const std::size_t levels = X_.schema()[f].kind.levels.size();
    if (levels > max_split_levels) throw std::invalid_argument("categorical feature has too many levels to split");
    std::vector<Sums> per(levels, Sums(m_));
    for (auto i : rows) per[static_cast<std::size_t>(X_.feature(i, f))].add(P_, i);
    std::vector<std::size_t> present;
    for (std::size_t l = 0; l < levels; ++l)
      if (per[l].count > 0) present.push_back(l);
    if (present.size() < 2) return;

    auto left_of = [&](std::uint64_t mask) {
      Sums s(m_);
      for (auto l : present)
        if ((mask >> l) & 1ULL) s.add(per[l]);
      return s;
    };

    if (present.size() <= exhaustive_level_limit) {
      const std::size_t k = present.size();
      for (std::uint64_t sub = 0; sub < (1ULL << (k - 1)) - 1; ++sub) {
        std::uint64_t mask = 1ULL << present[0];
        for (std::size_t j = 1; j < k; ++j)
          if ((sub >> (j - 1)) & 1ULL) mask |= 1ULL << present[j];
        consider(left_of(mask), total, parent_loss, SplitRule{f, true, 0.0, mask}, best);
      }
      return;
    }
    // Order levels by their mean probability of the node's most likely
    // treatment, then scan prefixes.
    auto node_agg = total.agg();
    const auto top = static_cast<std::size_t>(std::max_element(node_agg.begin(), node_agg.end()) - node_agg.begin());
    std::stable_sort(present.begin(), present.end(), [&](auto a, auto b) {
      return per[a].mass[top] / per[a].count < per[b].mass[top] / per[b].count;
    });
    std::uint64_t mask = 0;
    for (std::size_t j = 0; j + 1 < present.size(); ++j) {
      mask |= 1ULL << present[j];
      consider(left_of(mask), total, parent_loss, SplitRule{f, true, 0.0, mask}, best);
    }
  }

  const ProbabilityMatrix& P_;
  const Dataset& X_;
  const TreeConfig& cfg_;
  std::size_t m_;
  CostMatrix costs_;
  std::size_t min_leaf_ = 1;
  double gain_floor_ = 0.0;
  std::vector<PsicaNode> nodes_;
  std::vector<std::size_t> order_;
};

// Copies the subtree reachable from the root into a fresh, densely indexed
// node list (pre-order).
std::vector<PsicaNode> compact(const std::vector<PsicaNode>& nodes) {
  std::vector<PsicaNode> out;
  auto copy = [&](auto&& self, std::size_t i) -> std::int32_t {
    auto id = static_cast<std::int32_t>(out.size());
    out.push_back(nodes[i]);
    if (!nodes[i].is_leaf()) {
      auto l = self(self, static_cast<std::size_t>(nodes[i].left));
      auto r = self(self, static_cast<std::size_t>(nodes[i].right));
      out[id].left = l;
      out[id].right = r;
    }
    return id;
  };
  copy(copy, 0);
  return out;
}

void make_leaf(PsicaNode& n) {
  n.split.reset();
  n.left = n.right = -1;
  n.gain = 0.0;
}

bool children_are_leaves(const std::vector<PsicaNode>& nodes, const PsicaNode& n) {
  return !n.is_leaf() && nodes[n.left].is_leaf() && nodes[n.right].is_leaf();
}

// Post-order list of reachable node indices.
std::vector<std::size_t> post_order(const std::vector<PsicaNode>& nodes) {
  std::vector<std::size_t> out;
  auto visit = [&](auto&& self, std::size_t i) -> void {
    if (!nodes[i].is_leaf()) {
      self(self, static_cast<std::size_t>(nodes[i].left));
      self(self, static_cast<std::size_t>(nodes[i].right));
    }
    out.push_back(i);
  };
  visit(visit, 0);
  return out;
}

}  // namespace

PsicaTree grow(const ProbabilityMatrix& P, const Dataset& X, const TreeConfig& config) {
  PsicaBuilder builder(P, X, config);
  auto nodes = builder.build();
  TreeConfig resolved = config;
  resolved.min_leaf = builder.min_leaf();
  return PsicaTree(std::move(nodes), X.schema(), X.treatment_set(), resolved);
}

PsicaTree prune(const PsicaTree& tree, const PrunePolicy& policy) {
  auto nodes = tree.nodes();
  if (policy.collapse_same_label) {
    // Post-order visit lets merges cascade upwards in one pass.
    for (auto i : post_order(nodes)) {
      auto& n = nodes[i];
      if (children_are_leaves(nodes, n) && nodes[n.left].summary.potential == nodes[n.right].summary.potential)
        make_leaf(n);
    }
  }
  if (policy.min_gain) {
    for (auto i : post_order(nodes)) {
      auto& n = nodes[i];
      if (children_are_leaves(nodes, n) && n.gain < *policy.min_gain) make_leaf(n);
    }
  }
  if (policy.max_leaves) {
    const std::size_t budget = std::max<std::size_t>(*policy.max_leaves, 1);
    for (;;) {
      auto order = post_order(nodes);
      std::size_t leaves = 0;
      for (auto i : order) leaves += nodes[i].is_leaf();
      if (leaves <= budget) break;
      std::optional<std::size_t> weakest;
      for (auto i : order)
        if (children_are_leaves(nodes, nodes[i]) && (!weakest || nodes[i].gain < nodes[*weakest].gain)) weakest = i;
      make_leaf(nodes[*weakest]);
    }
  }
  return PsicaTree(compact(nodes), tree.schema(), tree.treatments(), tree.config());
}

}  // namespace psica
