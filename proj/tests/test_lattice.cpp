#include <doctest.h>

#include <set>

#include "catbrw/lattice.hpp"
#include "catbrw/rng.hpp"

using namespace catbrw;

TEST_CASE("neighbors: counts, order and basic cases") {
  // d=1 around the origin: +e1 then -e1
  Neighbors n1 = neighbors(Site::origin(), 1);
  CHECK(n1.count == 2);
  CHECK(n1.sites[0][0] == 1);
  CHECK(n1.sites[1][0] == -1);

  // d=2: 4 sites, each at L1 distance 1
  Neighbors n2 = neighbors(Site::origin(), 2);
  CHECK(n2.count == 4);
  for (const Site& y : n2) CHECK(norm_l1(y) == 1);

  // d=3 from (1,0,0): contains the origin exactly once
  Site x;
  x[0] = 1;
  Neighbors n3 = neighbors(x, 3);
  CHECK(n3.count == 6);
  int origin_hits = 0;
  std::set<Site> distinct;
  for (const Site& y : n3) {
    if (is_origin(y)) ++origin_hits;
    distinct.insert(y);
  }
  CHECK(origin_hits == 1);
  CHECK(distinct.size() == 6);  // no duplicates
}

TEST_CASE("norms") {
  Site a;
  a[0] = 2;
  a[1] = -3;
  CHECK(norm_l1(a) == 5);
  CHECK(norm_linf(a) == 3);
  CHECK(norm_l1(Site::origin()) == 0);
  CHECK(norm_linf(Site::origin()) == 0);
  Site b;
  b[0] = -1;
  CHECK(norm_l1(b) == 1);
  CHECK(norm_linf(b) == 1);
}

TEST_CASE("bipartite parity: every neighbour changes the L1 norm by exactly one") {
  Rng rng(7);
  for (int d = 1; d <= 6; ++d) {
    for (int trial = 0; trial < 200; ++trial) {
      Site x;
      for (int i = 0; i < d; ++i) x[i] = static_cast<int>(rng.uniform_index(21)) - 10;
      int n = norm_l1(x);
      for (const Site& y : neighbors(x, d)) {
        int m = norm_l1(y);
        CHECK((m == n - 1 || m == n + 1));
      }
    }
  }
}

TEST_CASE("box index: encode/decode bijection") {
  SUBCASE("exhaustive at small radius") {
    for (int d = 1; d <= 3; ++d) {
      BoxIndex box(d, 4);
      std::set<std::int64_t> seen;
      for (std::int64_t i = 0; i < box.size(); ++i) {
        Site s = box.decode(i);
        CHECK(box.contains(s));
        CHECK(box.encode(s) == i);
        seen.insert(i);
      }
      CHECK(static_cast<std::int64_t>(seen.size()) == box.size());
    }
  }
  SUBCASE("randomised at large radius") {
    Rng rng(11);
    for (int d = 1; d <= 6; ++d) {
      BoxIndex box(d, 64);
      for (int trial = 0; trial < 500; ++trial) {
        std::int64_t i = static_cast<std::int64_t>(rng.uniform_index(static_cast<std::uint64_t>(box.size())));
        CHECK(box.encode(box.decode(i)) == i);
      }
    }
  }
  SUBCASE("origin index is the centre") {
    BoxIndex box(2, 3);
    CHECK(box.encode(Site::origin()) == box.origin_index());
    CHECK(box.origin_index() == (box.size() - 1) / 2);
  }
}

TEST_CASE("site serialisation round-trips") {
  Site s;
  s[0] = 1;
  s[1] = -2;
  s[2] = 0;
  CHECK(format_site(s, 3) == "1,-2,0");
  CHECK(parse_site("1,-2,0", 3) == s);
  CHECK_THROWS(parse_site("1,2", 3));
  CHECK_THROWS(parse_site("1,2,3,4", 3));
  CHECK_THROWS(parse_site("1,x,3", 3));
}
