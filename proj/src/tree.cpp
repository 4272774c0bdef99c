#include "bubbleglue/tree.hpp"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

namespace bubbleglue {

namespace {
std::vector<int> sorted_unique(std::vector<int> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}
}  // namespace

RootedTree RootedTree::from_parent_map(const std::map<int, std::optional<int>>& nodes) {
  RootedTree t;
  int root_count = 0;
  for (const auto& [id, par] : nodes) {
    t.elements.push_back(id);
    if (par.has_value()) {
      if (!nodes.count(*par)) throw TreeError("parent id not an element");
      if (*par == id) throw TreeError("self-parent");
      t.parent[id] = *par;
    } else {
      t.root = id;
      ++root_count;
    }
  }
  if (root_count != 1) throw TreeError("exactly one root required");
  t.elements = sorted_unique(t.elements);
  // reject cycles
  for (int id : t.elements) {
    int cur = id;
    std::size_t steps = 0;
    while (t.parent.count(cur)) {
      cur = t.parent.at(cur);
      if (++steps > t.elements.size()) throw TreeError("cycle in parent map");
    }
    if (cur != t.root) throw TreeError("disconnected parent map");
  }
  return t;
}

RootedTree RootedTree::from_relation(const std::vector<int>& elems,
                                     const std::vector<std::pair<int, int>>& less) {
  std::vector<int> ids = sorted_unique(elems);
  std::set<std::pair<int, int>> lt(less.begin(), less.end());
  for (const auto& [a, b] : lt) {
    if (a == b) throw TreeError("relation not strict");
    if (!std::binary_search(ids.begin(), ids.end(), a) ||
        !std::binary_search(ids.begin(), ids.end(), b))
      throw TreeError("relation mentions non-element");
    if (lt.count({b, a})) throw TreeError("relation not antisymmetric");
  }
  // transitivity
  for (const auto& [a, b] : lt)
    for (const auto& [c, d] : lt)
      if (b == c && !lt.count({a, d})) throw TreeError("relation not transitive");
  // lower sets linearly ordered
  for (int h : ids) {
    std::vector<int> below;
    for (int i : ids)
      if (lt.count({i, h})) below.push_back(i);
    for (int i1 : below)
      for (int i2 : below)
        if (i1 != i2 && !lt.count({i1, i2}) && !lt.count({i2, i1}))
          throw TreeError("lower set not linearly ordered");
  }
  // unique minimum
  std::vector<int> minimal;
  for (int i : ids) {
    bool is_min = true;
    for (int j : ids)
      if (lt.count({j, i})) is_min = false;
    if (is_min) minimal.push_back(i);
  }
  if (minimal.size() != 1) throw TreeError("no unique minimal element");
  std::map<int, std::optional<int>> nodes;
  for (int h : ids) {
    std::vector<int> below;
    for (int i : ids)
      if (lt.count({i, h})) below.push_back(i);
    if (below.empty()) {
      nodes[h] = std::nullopt;
      continue;
    }
    // maximal element of the (linearly ordered) lower set
    int mx = below.front();
    for (int i : below)
      if (lt.count({mx, i})) mx = i;
    nodes[h] = mx;
  }
  RootedTree t = from_parent_map(nodes);
  // relation must equal the ancestor order of the built tree
  for (int a : ids)
    for (int b : ids)
      if (t.lt(a, b) != (lt.count({a, b}) > 0))
        throw TreeError("relation is not a tree ancestor order");
  return t;
}

bool RootedTree::contains(int i) const {
  return std::binary_search(elements.begin(), elements.end(), i);
}

bool RootedTree::leq(int a, int b) const {
  if (!contains(a) || !contains(b)) throw TreeError("element not in tree");
  int cur = b;
  while (true) {
    if (cur == a) return true;
    auto it = parent.find(cur);
    if (it == parent.end()) return false;
    cur = it->second;
  }
}

std::vector<int> RootedTree::hat() const {
  std::vector<int> r;
  for (int i : elements)
    if (i != root) r.push_back(i);
  return r;
}

int RootedTree::attach(int h) const {
  auto it = parent.find(h);
  if (it == parent.end()) throw TreeError("no parent");
  return it->second;
}

std::vector<int> RootedTree::children(int i) const {
  std::vector<int> r;
  for (const auto& [c, p] : parent)
    if (p == i) r.push_back(c);
  return r;
}

int RootedTree::depth(int i) const {
  int d = 0;
  while (parent.count(i)) {
    i = parent.at(i);
    ++d;
  }
  return d;
}

std::vector<int> RootedTree::strict_descendants(int i) const {
  std::vector<int> r;
  for (int h : elements)
    if (lt(i, h)) r.push_back(h);
  return r;
}

std::vector<int> RootedTree::descendants_closed(int i) const {
  std::vector<int> r = strict_descendants(i);
  r.push_back(i);
  return sorted_unique(r);
}

std::vector<int> RootedTree::not_strictly_above(const std::vector<int>& H) const {
  std::vector<int> r;
  for (int i : elements) {
    bool ok = true;
    for (int h : H) {
      if (!contains(h)) throw TreeError("subset element not in tree");
      if (lt(h, i)) ok = false;
    }
    if (ok) r.push_back(i);
  }
  return r;
}

std::vector<int> RootedTree::not_weakly_above(const std::vector<int>& H) const {
  std::vector<int> r;
  for (int h : H)
    if (!contains(h) || h == root) throw TreeError("subset must avoid the root");
  for (int i : elements) {
    bool ok = true;
    for (int h : H)
      if (leq(h, i)) ok = false;
    if (ok) r.push_back(i);
  }
  return r;
}

std::vector<int> RootedTree::with_root(const std::vector<int>& H) const {
  for (int h : H)
    if (!contains(h) || h == root) throw TreeError("subset must avoid the root");
  std::vector<int> r = H;
  r.push_back(root);
  return sorted_unique(r);
}

RootedTree RootedTree::induced(const std::vector<int>& subset) const {
  std::vector<int> s = sorted_unique(subset);
  if (!std::binary_search(s.begin(), s.end(), root))
    throw TreeError("induced subset must contain the root");
  std::map<int, std::optional<int>> nodes;
  for (int i : s) {
    if (!contains(i)) throw TreeError("subset element not in tree");
    if (i == root) {
      nodes[i] = std::nullopt;
      continue;
    }
    int cur = attach(i);
    while (!std::binary_search(s.begin(), s.end(), cur)) cur = attach(cur);
    nodes[i] = cur;
  }
  return from_parent_map(nodes);
}

int RootedTree::project(int i, const std::vector<int>& subset) const {
  std::vector<int> s = sorted_unique(subset);
  if (!std::binary_search(s.begin(), s.end(), root))
    throw TreeError("projection subset must contain the root");
  int cur = i;
  while (!std::binary_search(s.begin(), s.end(), cur)) cur = attach(cur);
  return cur;
}

void BubbleType::validate(bool require_stability) const {
  for (const auto& [l, i] : mark_node)
    if (!tree.contains(i)) throw TreeError("mark on non-element");
  for (int i : tree.elements) {
    if (!degree.count(i)) throw TreeError("missing degree label");
    if (degree.at(i) < 0) throw TreeError("negative degree");
  }
  if (degree.size() != tree.elements.size()) throw TreeError("degree label off-tree");
  if (require_stability) {
    for (int i : tree.elements) {
      if (degree.at(i) == 0) {
        int special = static_cast<int>(tree.children(i).size()) + marks_at(i);
        if (special < 2) throw TreeError("unstable component");
      }
    }
  }
}

int BubbleType::marks_at(int i) const {
  int c = 0;
  for (const auto& [l, j] : mark_node)
    if (j == i) ++c;
  return c;
}

long long BubbleType::degree_total() const {
  long long s = 0;
  for (const auto& [i, d] : degree) s += d;
  return s;
}

std::map<int, long long> BubbleType::weights() const {
  std::map<int, long long> d;
  // process deepest first
  std::vector<int> order = tree.elements;
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return tree.depth(a) > tree.depth(b); });
  for (int i : order) {
    long long w = degree.at(i) + marks_at(i);
    for (int c : tree.children(i)) w += d.at(c);
    d[i] = w;
  }
  return d;
}

BubbleType BubbleType::collapse(const std::vector<int>& H) const {
  std::vector<int> keep = tree.with_root(H);  // validates H subset of hat()
  BubbleType out;
  out.tree = tree.induced(keep);
  for (const auto& [l, i] : mark_node) out.mark_node[l] = tree.project(i, keep);
  for (int i : keep) out.degree[i] = 0;
  for (int i : tree.elements) out.degree[tree.project(i, keep)] += degree.at(i);
  return out;
}

namespace {
std::string node_signature(const BubbleType& ty, int i) {
  std::vector<int> labels;
  for (const auto& [l, j] : ty.mark_node)
    if (j == i) labels.push_back(l);
  std::sort(labels.begin(), labels.end());
  std::vector<std::string> child_sigs;
  for (int c : ty.tree.children(i)) child_sigs.push_back(node_signature(ty, c));
  std::sort(child_sigs.begin(), child_sigs.end());
  std::ostringstream os;
  os << "(" << ty.degree.at(i) << ";";
  for (int l : labels) os << l << ",";
  os << ";";
  for (const auto& s : child_sigs) os << s;
  os << ")";
  return os.str();
}

}  // namespace

std::string BubbleType::canonical_signature() const {
  return node_signature(*this, tree.root);
}

std::vector<std::map<int, int>> BubbleType::isomorphisms_to(const BubbleType& other) const {
  if (tree.size() > 8 || other.tree.size() > 8)
    throw TreeError("isomorphism search limited to 8 nodes");
  std::vector<std::map<int, int>> out;
  if (tree.size() != other.tree.size()) return out;
  std::set<int> la, lb;
  for (const auto& [l, i] : mark_node) la.insert(l);
  for (const auto& [l, i] : other.mark_node) lb.insert(l);
  if (la != lb) return out;
  if (node_signature(*this, tree.root) != node_signature(other, other.tree.root)) return out;
  // Brute force over bijections (|I| <= 8 so at most 8! candidates).
  std::vector<int> ea = tree.elements;
  std::vector<int> eb = other.tree.elements;
  std::sort(eb.begin(), eb.end());
  do {
    std::map<int, int> phi;
    for (std::size_t k = 0; k < ea.size(); ++k) phi[ea[k]] = eb[k];
    if (phi.at(tree.root) != other.tree.root) continue;
    bool ok = true;
    for (int i : ea) {
      if (degree.at(i) != other.degree.at(phi.at(i))) ok = false;
      if (i != tree.root && phi.at(tree.attach(i)) != other.tree.attach(phi.at(i))) ok = false;
    }
    for (const auto& [l, n] : mark_node)
      if (other.mark_node.at(l) != phi.at(n)) ok = false;
    if (ok) out.push_back(phi);
  } while (std::next_permutation(eb.begin(), eb.end()));
  return out;
}

std::vector<std::map<int, int>> BubbleType::automorphisms() const {
  return isomorphisms_to(*this);
}

bool type_leq(const BubbleType& a, const BubbleType& b) {
  std::set<int> la, lb;
  for (const auto& [l, i] : a.mark_node) la.insert(l);
  for (const auto& [l, i] : b.mark_node) lb.insert(l);
  if (la != lb) throw TreeError("mark label sets differ");
  if (a.degree_total() != b.degree_total()) return false;
  if (b.tree.size() > a.tree.size()) return false;
  std::vector<int> hat = a.tree.hat();
  std::size_t m = hat.size();
  if (m > 20) throw TreeError("type order search limited to 20 internal nodes");
  for (std::size_t mask = 0; mask < (1u << m); ++mask) {
    std::vector<int> H;
    for (std::size_t k = 0; k < m; ++k)
      if (mask & (1u << k)) H.push_back(hat[k]);
    if (H.size() + 1 != b.tree.size()) continue;
    BubbleType c = a.collapse(H);
    if (!c.isomorphisms_to(b).empty()) return true;
  }
  return false;
}

std::vector<RootedTree> enumerate_trees(int n) {
  std::vector<RootedTree> out;
  if (n <= 0) return out;
  std::vector<int> par(n, -1);
  std::function<void(int)> rec = [&](int k) {
    if (k == n) {
      std::map<int, std::optional<int>> nodes;
      nodes[0] = std::nullopt;
      for (int i = 1; i < n; ++i) nodes[i] = par[i];
      out.push_back(RootedTree::from_parent_map(nodes));
      return;
    }
    for (int p = 0; p < k; ++p) {
      par[k] = p;
      rec(k + 1);
    }
  };
  if (n == 1) {
    std::map<int, std::optional<int>> nodes;
    nodes[0] = std::nullopt;
    out.push_back(RootedTree::from_parent_map(nodes));
  } else {
    rec(1);
  }
  return out;
}

}  // namespace bubbleglue
