#include "driftscan/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numeric>

#include "driftscan/error.hpp"
#include "driftscan/parallel.hpp"
#include "driftscan/random.hpp"
#include "json.hpp"

namespace driftscan {

void TrainingSet::add(std::span<const double> features, bool positive) {
  if (n_features == 0 && y.empty()) n_features = features.size();
  if (features.size() != n_features) throw InvalidArgument("feature length mismatch");
  x.insert(x.end(), features.begin(), features.end());
  y.push_back(positive ? 1 : 0);
}

double DecisionTree::predict(std::span<const double> features) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const TreeNode& n = nodes[i];
    i = static_cast<std::size_t>(features[static_cast<std::size_t>(n.feature)] <= n.threshold
                                     ? n.left
                                     : n.right);
  }
  return nodes[i].probability;
}

int DecisionTree::depth() const {
  std::vector<int> d(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes[i].is_leaf()) {
      d[static_cast<std::size_t>(nodes[i].left)] = d[i] + 1;
      d[static_cast<std::size_t>(nodes[i].right)] = d[i] + 1;
    }
  }
  return best;
}

namespace {

double weighted_gini(std::int64_t pos_l, std::int64_t n_l, std::int64_t pos_r,
                     std::int64_t n_r) {
  const auto side = [](std::int64_t pos, std::int64_t n) {
    return 2.0 * static_cast<double>(pos) * static_cast<double>(n - pos) /
           static_cast<double>(n);
  };
  return side(pos_l, n_l) + side(pos_r, n_r);
}

// Weighted Gini as the exact fraction num / den (times 2), so candidates
// compare without rounding.
struct GiniFraction {
  __int128 num = 0;
  __int128 den = 1;
  bool operator<(const GiniFraction& o) const { return num * o.den < o.num * den; }
};

GiniFraction gini_fraction(std::int64_t pos_l, std::int64_t n_l, std::int64_t pos_r,
                           std::int64_t n_r) {
  const __int128 left = static_cast<__int128>(pos_l) * (n_l - pos_l);
  const __int128 right = static_cast<__int128>(pos_r) * (n_r - pos_r);
  return {left * n_r + right * n_l, static_cast<__int128>(n_l) * n_r};
}

double midpoint(double a, double b) {
  const double m = a + (b - a) / 2.0;
  return m < b ? m : a;
}

}  // namespace

std::optional<Split> find_best_split(const TrainingSet& data,
                                     std::span<const std::size_t> rows,
                                     std::span<const int> features, int min_leaf) {
  const auto n = static_cast<std::int64_t>(rows.size());
  if (n < 2 * static_cast<std::int64_t>(min_leaf)) return std::nullopt;
  std::int64_t pos_total = 0;
  for (std::size_t r : rows) pos_total += data.y[r];

  std::optional<Split> best;
  GiniFraction best_fraction;
  std::vector<std::pair<double, std::uint8_t>> column(rows.size());
  for (int f : features) {
    for (std::size_t i = 0; i < rows.size(); ++i)
      column[i] = {data.x[rows[i] * data.n_features + static_cast<std::size_t>(f)],
                   data.y[rows[i]]};
    std::sort(column.begin(), column.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::int64_t pos_l = 0;
    for (std::int64_t i = 0; i + 1 < n; ++i) {
      pos_l += column[static_cast<std::size_t>(i)].second;
      const double lo = column[static_cast<std::size_t>(i)].first;
      const double hi = column[static_cast<std::size_t>(i + 1)].first;
      if (!(lo < hi)) continue;
      const std::int64_t n_l = i + 1;
      if (n_l < min_leaf || n - n_l < min_leaf) continue;
      const auto fraction = gini_fraction(pos_l, n_l, pos_total - pos_l, n - n_l);
      if (!best || fraction < best_fraction) {
        best = Split{f, midpoint(lo, hi), weighted_gini(pos_l, n_l, pos_total - pos_l, n - n_l)};
        best_fraction = fraction;
      }
    }
  }
  return best;
}

namespace {

DecisionTree grow_tree(const TrainingSet& data, const ForestConfig& config, int mtry,
                       std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = data.rows();
  std::vector<std::size_t> sample(n);
  for (auto& s : sample) s = static_cast<std::size_t>(rng.below(n));

  DecisionTree tree;
  struct Pending {
    std::size_t node;
    std::size_t begin, end;
    int depth;
  };
  auto make_leaf = [&](std::size_t node, std::size_t begin, std::size_t end) {
    std::size_t pos = 0;
    for (std::size_t i = begin; i < end; ++i) pos += data.y[sample[i]];
    tree.nodes[node].feature = -1;
    tree.nodes[node].probability =
        static_cast<double>(pos) / static_cast<double>(end - begin);
  };

  std::vector<int> order(data.n_features);
  tree.nodes.emplace_back();
  std::vector<Pending> stack{{0, 0, n, 0}};
  while (!stack.empty()) {
    const Pending cur = stack.back();
    stack.pop_back();
    const std::span<const std::size_t> rows(sample.data() + cur.begin, cur.end - cur.begin);
    std::size_t pos = 0;
    for (std::size_t r : rows) pos += data.y[r];
    const bool pure = pos == 0 || pos == rows.size();
    if (pure || (config.max_depth > 0 && cur.depth >= config.max_depth) ||
        rows.size() < 2 * static_cast<std::size_t>(config.min_leaf)) {
      make_leaf(cur.node, cur.begin, cur.end);
      continue;
    }

    // Random feature order; examine the first mtry, then keep drawing until
    // some feature admits a split.
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
      std::swap(order[i], order[i + rng.below(order.size() - i)]);
    std::optional<Split> split =
        find_best_split(data, rows, std::span<const int>(order.data(), static_cast<std::size_t>(mtry)),
                        config.min_leaf);
    for (std::size_t k = static_cast<std::size_t>(mtry); !split && k < order.size(); ++k)
      split = find_best_split(data, rows, std::span<const int>(&order[k], 1), config.min_leaf);
    if (!split) {
      make_leaf(cur.node, cur.begin, cur.end);
      continue;
    }

    const auto f = static_cast<std::size_t>(split->feature);
    const auto mid = std::stable_partition(
        sample.begin() + static_cast<std::ptrdiff_t>(cur.begin),
        sample.begin() + static_cast<std::ptrdiff_t>(cur.end),
        [&](std::size_t r) { return data.x[r * data.n_features + f] <= split->threshold; });
    const auto split_at = static_cast<std::size_t>(mid - sample.begin());

    const auto left = tree.nodes.size();
    tree.nodes.emplace_back();
    const auto right = tree.nodes.size();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[cur.node];
    node.feature = split->feature;
    node.threshold = split->threshold;
    node.left = static_cast<int>(left);
    node.right = static_cast<int>(right);
    // Right first so the left subtree is expanded next.
    stack.push_back({right, split_at, cur.end, cur.depth + 1});
    stack.push_back({left, cur.begin, split_at, cur.depth + 1});
  }
  return tree;
}

}  // namespace

RandomForestModel train_forest(const TrainingSet& data, const ForestConfig& config,
                               std::uint64_t seed) {
  if (data.rows() == 0 || data.n_features == 0)
    throw InvalidArgument("training set is empty");
  if (data.x.size() != data.rows() * data.n_features)
    throw InvalidArgument("training matrix size mismatch");
  const auto positives = std::count(data.y.begin(), data.y.end(), 1);
  if (positives == 0 || static_cast<std::size_t>(positives) == data.rows())
    throw InvalidArgument("training data must contain both classes");
  if (config.n_trees < 1 || config.min_leaf < 1 || config.max_depth < 0 ||
      config.features_per_split < 0)
    throw InvalidArgument("invalid forest configuration");
  for (double v : data.x)
    if (!std::isfinite(v)) throw InvalidArgument("training features must be finite");

  const int p = static_cast<int>(data.n_features);
  int mtry = config.features_per_split > 0
                 ? config.features_per_split
                 : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))));
  if (mtry > p) throw InvalidArgument("features_per_split exceeds the feature count");

  RandomForestModel model;
  model.n_features = data.n_features;
  model.config = config;
  model.seed = seed;
  model.trees.resize(static_cast<std::size_t>(config.n_trees));
  parallel_for(0, model.trees.size(), [&](std::size_t t) {
    model.trees[t] = grow_tree(data, config, mtry, derive_seed(seed, t));
  });
  return model;
}

double predict_proba(const RandomForestModel& model, std::span<const double> features) {
  if (features.size() != model.n_features)
    throw InvalidArgument("expected " + std::to_string(model.n_features) +
                          " features, got " + std::to_string(features.size()));
  if (model.trees.empty()) throw InvalidArgument("model has no trees");
  double sum = 0.0;
  for (const auto& t : model.trees) sum += t.predict(features);
  return std::clamp(sum / static_cast<double>(model.trees.size()), 0.0, 1.0);
}

// Model file:
//   {"schema": "driftscan.random_forest", "version": 1, "n_features": p,
//    "seed": s, "config": {...},
//    "trees": [[node, ...], ...]}
// Internal nodes are [feature, threshold, left, right]; leaves are [probability].
namespace {
constexpr const char* kSchema = "driftscan.random_forest";
constexpr int kVersion = 1;
}  // namespace

std::string serialize_model(const RandomForestModel& model) {
  using nlohmann::json;
  json trees = json::array();
  for (const auto& t : model.trees) {
    json nodes = json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf())
        nodes.push_back(json::array({n.probability}));
      else
        nodes.push_back(json::array({n.feature, n.threshold, n.left, n.right}));
    }
    trees.push_back(std::move(nodes));
  }
  json doc = {
      {"schema", kSchema},
      {"version", kVersion},
      {"n_features", model.n_features},
      {"seed", model.seed},
      {"config",
       {{"n_trees", model.config.n_trees},
        {"max_depth", model.config.max_depth},
        {"features_per_split", model.config.features_per_split},
        {"min_leaf", model.config.min_leaf}}},
      {"trees", std::move(trees)},
  };
  return doc.dump();
}

RandomForestModel deserialize_model(const std::string& text) {
  using nlohmann::json;
  RandomForestModel model;
  try {
    const json doc = json::parse(text);
    if (doc.at("schema").get<std::string>() != kSchema)
      throw SchemaError("not a random forest model");
    if (doc.at("version").get<int>() != kVersion)
      throw SchemaError("unsupported model version");
    model.n_features = doc.at("n_features").get<std::size_t>();
    model.seed = doc.at("seed").get<std::uint64_t>();
    const json& c = doc.at("config");
    model.config.n_trees = c.at("n_trees").get<int>();
    model.config.max_depth = c.at("max_depth").get<int>();
    model.config.features_per_split = c.at("features_per_split").get<int>();
    model.config.min_leaf = c.at("min_leaf").get<int>();
    for (const json& jt : doc.at("trees")) {
      DecisionTree tree;
      for (const json& jn : jt) {
        TreeNode n;
        if (jn.size() == 1) {
          n.probability = jn.at(0).get<double>();
          if (!(n.probability >= 0.0 && n.probability <= 1.0))
            throw SchemaError("leaf probability outside [0, 1]");
        } else if (jn.size() == 4) {
          n.feature = jn.at(0).get<int>();
          n.threshold = jn.at(1).get<double>();
          n.left = jn.at(2).get<int>();
          n.right = jn.at(3).get<int>();
        } else {
          throw SchemaError("malformed tree node");
        }
        tree.nodes.push_back(n);
      }
      if (tree.nodes.empty()) throw SchemaError("empty tree");
      const auto count = static_cast<int>(tree.nodes.size());
      for (int i = 0; i < count; ++i) {
        const TreeNode& n = tree.nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) continue;
        // Preorder layout: children follow their parent, which rules out cycles.
        if (static_cast<std::size_t>(n.feature) >= model.n_features || n.left <= i ||
            n.right <= i || n.left >= count || n.right >= count)
          throw SchemaError("tree node references invalid feature or child");
      }
      model.trees.push_back(std::move(tree));
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("model schema mismatch: ") + e.what());
  }
  if (model.trees.empty()) throw SchemaError("model has no trees");
  return model;
}

void save_model(const RandomForestModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_model(model) << '\n';
  if (!out) throw Error("write failed: " + path.string());
}

RandomForestModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return deserialize_model(std::string((std::istreambuf_iterator<char>(in)),
                                       std::istreambuf_iterator<char>()));
}

}  // namespace driftscan
