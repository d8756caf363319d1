#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "qcap/rng.hpp"

using namespace qcap;

TEST_CASE("same seed reproduces the sequence") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());
}

TEST_CASE("different seeds diverge") {
  Rng a(1), b(2);
  int same = 0;
  for (int i = 0; i < 64; ++i)
    if (a.next() == b.next()) ++same;
  CHECK(same == 0);
}

TEST_CASE("uniform stays in [0, 1)") {
  Rng r(7);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("below is bounded and roughly uniform") {
  Rng r(3);
  const uint64_t n = 6;
  std::vector<int> counts(n, 0);
  const int draws = 60000;
  for (int i = 0; i < draws; ++i) {
    const uint64_t v = r.below(n);
    REQUIRE(v < n);
    counts[v] += 1;
  }
  for (const int c : counts) {
    CHECK(c > draws / 6 - 600);
    CHECK(c < draws / 6 + 600);
  }
}

TEST_CASE("binomial mean is close to n p") {
  Rng r(5);
  const double p = 0.3;
  const uint64_t n = 100;
  double total = 0.0;
  const int reps = 2000;
  for (int i = 0; i < reps; ++i) total += static_cast<double>(r.binomial(n, p));
  const double mean = total / reps;
  // sd of the mean = sqrt(n p (1-p) / reps) ~ 0.10
  CHECK(std::abs(mean - 30.0) < 0.6);
}

TEST_CASE("shuffle permutes without loss") {
  Rng r(9);
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7};
  auto w = v;
  r.shuffle(w);
  auto sorted = w;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == v);
}

TEST_CASE("split children are independent of parent consumption") {
  Rng a(123);
  Rng b(123);
  a.next();
  a.next();  // consuming the parent must not shift the children
  Rng ca = a.split("stream");
  Rng cb = b.split("stream");
  for (int i = 0; i < 20; ++i) CHECK(ca.next() == cb.next());
}

TEST_CASE("split tags and indices give distinct streams") {
  const Rng root(77);
  Rng a = root.split("alpha");
  Rng b = root.split("beta");
  Rng i0 = root.split("item", 0);
  Rng i1 = root.split("item", 1);
  CHECK(a.next() != b.next());
  CHECK(i0.next() != i1.next());
  Rng i0_again = root.split("item", 0);
  Rng i0_ref = root.split("item", 0);
  for (int i = 0; i < 10; ++i) CHECK(i0_again.next() == i0_ref.next());
}
