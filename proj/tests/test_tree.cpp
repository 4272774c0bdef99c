#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "bubbleglue/tree.hpp"

using namespace bubbleglue;

namespace {

RootedTree chain3() {
  return RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}, {2, 1}});
}
RootedTree star3() {
  return RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}, {2, 0}, {3, 0}});
}

BubbleType make_type(const RootedTree& t, std::map<int, int> deg,
                     std::map<int, int> marks = {}) {
  BubbleType ty;
  ty.tree = t;
  ty.degree = std::move(deg);
  ty.mark_node = std::move(marks);
  return ty;
}

}  // namespace

TEST_CASE("non-minimal elements") {
  RootedTree single = RootedTree::from_parent_map({{0, std::nullopt}});
  CHECK(single.hat().empty());
  CHECK(chain3().hat() == std::vector<int>{1, 2});
  CHECK(star3().hat() == std::vector<int>{1, 2, 3});
}

TEST_CASE("attaching map") {
  CHECK(chain3().attach(2) == 1);
  CHECK(chain3().attach(1) == 0);
  CHECK(star3().attach(3) == 0);
  CHECK_THROWS_AS(chain3().attach(0), TreeError);
}

TEST_CASE("relation constructor validates and matches") {
  RootedTree t = RootedTree::from_relation({0, 1, 2}, {{0, 1}, {1, 2}, {0, 2}});
  CHECK(t == chain3());
  // missing transitive pair
  CHECK_THROWS_AS(RootedTree::from_relation({0, 1, 2}, {{0, 1}, {1, 2}}), TreeError);
  // two minimal elements
  CHECK_THROWS_AS(RootedTree::from_relation({0, 1, 2}, {{0, 2}, {1, 2}}), TreeError);
}

TEST_CASE("subset operations") {
  RootedTree c = chain3();
  CHECK(c.strict_descendants(0) == std::vector<int>{1, 2});
  CHECK(c.descendants_closed(1) == std::vector<int>{1, 2});
  // {i : i not strictly above any h}: includes h itself
  CHECK(c.not_strictly_above({1}) == std::vector<int>{0, 1});
  // {i : i not above-or-equal any h}
  CHECK(c.not_weakly_above({1}) == std::vector<int>{0});
  CHECK(c.not_strictly_above({}) == c.elements);
  CHECK(c.with_root({2}) == std::vector<int>{0, 2});
  CHECK(star3().not_strictly_above({1}) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("weights") {
  // single node, degree 2, no marks
  RootedTree single = RootedTree::from_parent_map({{0, std::nullopt}});
  auto w1 = make_type(single, {{0, 2}}).weights();
  CHECK(w1.at(0) == 2);
  // two-node chain, degrees {0,1}, one mark on node 1
  RootedTree c2 = RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}});
  auto ty2 = make_type(c2, {{0, 0}, {1, 1}}, {{7, 1}});
  auto w2 = ty2.weights();
  CHECK(w2.at(1) == 2);
  CHECK(w2.at(0) == 2);
  // star, degrees {0,1,1}
  RootedTree s2 = RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}, {2, 0}});
  auto w3 = make_type(s2, {{0, 0}, {1, 1}, {2, 1}}).weights();
  CHECK(w3.at(1) == 1);
  CHECK(w3.at(2) == 1);
  CHECK(w3.at(0) == 2);
}

TEST_CASE("collapse") {
  auto ty = make_type(chain3(), {{0, 0}, {1, 1}, {2, 2}});
  // keep everything
  CHECK(ty.collapse({1, 2}) == ty);
  // collapse all: one node carrying the total degree
  BubbleType basic = ty.collapse({});
  CHECK(basic.tree.size() == 1);
  CHECK(basic.degree.at(0) == 3);
  // collapse node 2 into node 1
  BubbleType mid = ty.collapse({1});
  CHECK(mid.tree.elements == std::vector<int>{0, 1});
  CHECK(mid.degree.at(0) == 0);
  CHECK(mid.degree.at(1) == 3);
  // invalid subset
  CHECK_THROWS_AS(ty.collapse({0}), TreeError);
  // marks project to the collapsed carrier
  auto tym = make_type(chain3(), {{0, 0}, {1, 1}, {2, 2}}, {{5, 2}});
  CHECK(tym.collapse({1}).mark_node.at(5) == 1);
  CHECK(tym.collapse({}).mark_node.at(5) == 0);
}

TEST_CASE("type partial order") {
  auto ty = make_type(chain3(), {{0, 0}, {1, 1}, {2, 2}}, {{1, 2}});
  CHECK(type_leq(ty, ty));
  BubbleType coll = ty.collapse({1});
  CHECK(type_leq(ty, coll));       // more collapsed is greater
  CHECK_FALSE(type_leq(coll, ty));
  // degree-total mismatch
  auto other = make_type(chain3(), {{0, 0}, {1, 1}, {2, 3}}, {{1, 2}});
  CHECK_FALSE(type_leq(ty, other));
}

TEST_CASE("automorphisms fix marks") {
  // star with two equal-degree children: swapping them is an automorphism
  RootedTree s2 = RootedTree::from_parent_map({{0, std::nullopt}, {1, 0}, {2, 0}});
  auto ty = make_type(s2, {{0, 0}, {1, 1}, {2, 1}});
  ty.mark_node = {{1, 0}, {2, 0}};
  CHECK(ty.automorphisms().size() == 2);
  // a mark on one child breaks the symmetry
  auto ty2 = make_type(s2, {{0, 1}, {1, 1}, {2, 1}}, {{1, 1}});
  CHECK(ty2.automorphisms().size() == 1);
}

TEST_CASE("exhaustive small-tree properties") {
  for (int n = 1; n <= 5; ++n) {
    for (const RootedTree& t : enumerate_trees(n)) {
      // parent is the unique maximal strict ancestor; nothing strictly between
      for (int h : t.hat()) {
        int p = t.attach(h);
        CHECK(t.lt(p, h));
        for (int i : t.elements)
          CHECK_FALSE((t.lt(p, i) && t.lt(i, h)));
      }
      // root weight = total degree + number of marks (degrees i, one mark)
      BubbleType ty;
      ty.tree = t;
      long long tot = 0;
      for (int i : t.elements) {
        ty.degree[i] = i + 1;
        tot += i + 1;
      }
      ty.mark_node = {{1, t.root}};
      CHECK(ty.weights().at(t.root) == tot + 1);
      // iterated collapse agrees with direct collapse
      std::vector<int> hat = t.hat();
      for (std::size_t mask = 0; mask < (1u << hat.size()); ++mask) {
        std::vector<int> H1;
        for (std::size_t k = 0; k < hat.size(); ++k)
          if (mask & (1u << k)) H1.push_back(hat[k]);
        BubbleType once = ty.collapse(H1);
        // collapse further to the basic type in two steps vs one
        CHECK(once.collapse({}) == ty.collapse({}));
        // order convention: collapsing can only go up
        CHECK(type_leq(ty, once));
      }
      // canonical signature is invariant under relabeling (shift ids by 10)
      BubbleType shifted;
      std::map<int, std::optional<int>> nodes;
      for (int i : t.elements)
        nodes[i + 10] = t.parent.count(i) ? std::optional<int>(t.parent.at(i) + 10)
                                          : std::nullopt;
      shifted.tree = RootedTree::from_parent_map(nodes);
      for (int i : t.elements) shifted.degree[i + 10] = ty.degree[i];
      shifted.mark_node = {{1, t.root + 10}};
      CHECK(shifted.canonical_signature() == ty.canonical_signature());
    }
  }
}

TEST_CASE("type order is a partial order up to isomorphism") {
  // antisymmetry: a <= b and b <= a implies isomorphic
  auto ty = make_type(chain3(), {{0, 1}, {1, 1}, {2, 1}});
  for (const RootedTree& t : enumerate_trees(3)) {
    BubbleType other;
    other.tree = t;
    for (int i : t.elements) other.degree[i] = 1;
    if (type_leq(ty, other) && type_leq(other, ty))
      CHECK_FALSE(ty.isomorphisms_to(other).empty());
  }
}
