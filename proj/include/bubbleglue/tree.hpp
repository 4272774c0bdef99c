#pragma once
// Rooted trees, bubble types (tree + marked points + degree labels),
// collapse operations, weights, canonical forms, and the collapse partial order.
// All types are immutable values; all operations are pure.

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace bubbleglue {

class TreeError : public std::runtime_error {
public:
  explicit TreeError(const std::string& m) : std::runtime_error(m) {}
};

// A finite rooted tree on opaque integer ids, stored as a parent map.
// The induced strict partial order is "ancestor <": a < b iff a is a proper
// ancestor of b.  The defining property (any two lower bounds of an element
// are comparable) is automatic for parent-map trees and is validated when a
// tree is built from a raw relation.
struct RootedTree {
  std::vector<int> elements;   // sorted, unique
  std::map<int, int> parent;   // non-root id -> parent id
  int root = 0;

  static RootedTree from_parent_map(const std::map<int, std::optional<int>>& nodes);
  // Build from a strict-order relation set; validates that the relation is a
  // transitively closed strict order whose lower sets are linearly ordered
  // with a unique minimum.
  static RootedTree from_relation(const std::vector<int>& elems,
                                  const std::vector<std::pair<int, int>>& less);

  bool contains(int i) const;
  std::size_t size() const { return elements.size(); }
  // a <= b iff a lies on the root path of b.
  bool leq(int a, int b) const;
  bool lt(int a, int b) const { return a != b && leq(a, b); }

  // Non-minimal elements.
  std::vector<int> hat() const;
  // Parent of h; throws TreeError("no parent") at the root.
  int attach(int h) const;
  std::vector<int> children(int i) const;
  int depth(int i) const;

  // {h : h > i} and its closure {h : h >= i}.
  std::vector<int> strict_descendants(int i) const;
  std::vector<int> descendants_closed(int i) const;
  // {i : i is not strictly above any h in H}; a rooted subtree for any H.
  std::vector<int> not_strictly_above(const std::vector<int>& H) const;
  // {i : i is not above-or-equal any h in H}; requires H subset of hat().
  std::vector<int> not_weakly_above(const std::vector<int>& H) const;
  // H together with the root; requires H subset of hat().
  std::vector<int> with_root(const std::vector<int>& H) const;

  // Induced tree on a subset (must contain the root); parent of i becomes the
  // maximal proper ancestor of i inside the subset.
  RootedTree induced(const std::vector<int>& subset) const;
  // Projection onto a subset containing the root: the maximal element of the
  // subset that is <= i.
  int project(int i, const std::vector<int>& subset) const;

  bool operator==(const RootedTree& o) const {
    return elements == o.elements && parent == o.parent && root == o.root;
  }
};

// Combinatorial skeleton of a bubble map: rooted tree, marked-point
// assignment, nonnegative degree label per node.
struct BubbleType {
  RootedTree tree;
  std::map<int, int> mark_node;  // mark label -> node id
  std::map<int, int> degree;     // node id -> degree >= 0

  void validate(bool require_stability = true) const;

  int marks_at(int i) const;
  long long degree_total() const;

  // d_i = degree_i + #marks at i + sum of d over children.
  std::map<int, long long> weights() const;

  // Collapse everything outside H ∪ {root}: new index set H ∪ {root},
  // marks reassigned by projection, degrees summed over projection fibers.
  // H must be a subset of hat().  collapse({}) is the basic one-node type.
  BubbleType collapse(const std::vector<int>& H) const;

  // Canonical signature: invariant under relabeling of I that fixes marks.
  std::string canonical_signature() const;

  // All tree isomorphisms onto `other` carrying marks to equally labeled
  // marks and preserving degrees.  Brute force; |I| <= 8 enforced.
  std::vector<std::map<int, int>> isomorphisms_to(const BubbleType& other) const;
  std::vector<std::map<int, int>> automorphisms() const;

  bool operator==(const BubbleType& o) const {
    return tree == o.tree && mark_node == o.mark_node && degree == o.degree;
  }
};

// Partial order on types: a <= b iff b is (isomorphic to) a collapse of a.
// More collapsed is greater; requires equal mark label sets.
bool type_leq(const BubbleType& a, const BubbleType& b);

// All labeled rooted trees with `n` nodes (ids 0..n-1, 0 = root); test helper.
std::vector<RootedTree> enumerate_trees(int n);

}  // namespace bubbleglue
