#include <doctest.h>

#include <cmath>
#include <set>

#include "helpers.hpp"
#include "wittenlab/lattice.hpp"

using namespace wittenlab;
using testing::raised;

TEST_SUITE("lattice") {

TEST_CASE("chain and square counts") {
  const int four[] = {4};
  const auto c = build_lattice(1, four);
  CHECK(c.size() == 4);
  CHECK(c.bonds().size() == 3);

  const int two_by_two[] = {2, 2};
  const auto sq = build_lattice(2, two_by_two);
  CHECK(sq.size() == 4);
  CHECK(sq.bonds().size() == 4);
}

TEST_CASE("degenerate extents are rejected") {
  const int zero[] = {0};
  CHECK(raised([&] { build_lattice(1, zero); }) == ErrorKind::invalid_geometry);
  const int negative[] = {3, -1};
  CHECK(raised([&] { build_lattice(2, negative); }) == ErrorKind::invalid_geometry);
  const int wrong_rank[] = {3, 3};
  CHECK(raised([&] { build_lattice(1, wrong_rank); }) == ErrorKind::invalid_geometry);
}

TEST_CASE("sites are distinct and bonds have length one") {
  const int shape[] = {3, 2, 2};
  const auto lat = build_lattice(3, shape);
  std::set<Site> seen(lat.sites().begin(), lat.sites().end());
  CHECK(seen.size() == lat.size());
  for (const auto& [a, b] : lat.bonds()) {
    CHECK(a < b);
    CHECK(graph_distance(lat, a, b) == 1);
  }
}

TEST_CASE("graph distance") {
  const int four[] = {4};
  const auto c = build_lattice(1, four);
  CHECK(graph_distance(c, 0, 3) == 3);
  CHECK(graph_distance(c, 2, 2) == 0);

  const int two_by_two[] = {2, 2};
  const auto sq = build_lattice(2, two_by_two);
  CHECK(graph_distance(sq, Site{0, 0}, Site{1, 1}) == 2);
  CHECK(raised([&] { graph_distance(c, 0, 4); }) == ErrorKind::unknown_site);
  CHECK(raised([&] { sq.index_of(Site{2, 0}); }) == ErrorKind::unknown_site);
}

TEST_CASE("graph distance is a metric") {
  const int shape[] = {3, 3};
  const auto lat = build_lattice(2, shape);
  const std::size_t n = lat.size();
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(graph_distance(lat, i, i) == 0);
    for (std::size_t j = 0; j < n; ++j) {
      CHECK(graph_distance(lat, i, j) == graph_distance(lat, j, i));
      for (std::size_t k = 0; k < n; ++k) {
        CHECK(graph_distance(lat, i, k) <= graph_distance(lat, i, j) + graph_distance(lat, j, k));
      }
    }
  }
}

TEST_CASE("set distance") {
  const int six[] = {6};
  const auto c = build_lattice(1, six);
  const auto s = make_subset(c, {0, 1});
  CHECK(set_distance(c, 5, s) == 4);
  CHECK(set_distance(c, 1, s) == 0);
  const std::size_t tuple[] = {4, 3};
  CHECK(set_distance(c, tuple, s) == 2);
  CHECK(subset_distance(c, make_subset(c, {4, 5}), s) == 3);
  CHECK(raised([&] { set_distance(c, 2, SiteSubset{}); }) == ErrorKind::empty_support);
}

TEST_CASE("exponential weight") {
  const int six[] = {6};
  const auto c = build_lattice(1, six);
  const auto s = make_subset(c, {0});
  const auto w = exponential_weight(c, 0.3, s);
  CHECK(w.values[0] == doctest::Approx(1.0));
  CHECK(w.values[2] == doctest::Approx(std::exp(0.6)));
  CHECK(w.values[3] / w.values[2] == doctest::Approx(std::exp(0.3)));
  CHECK(w.satisfies_ratio_bound(c));
  CHECK(raised([&] { exponential_weight(c, 0.0, s); }) == ErrorKind::invalid_parameter);
  CHECK(raised([&] { exponential_weight(c, 0.3, SiteSubset{}); }) == ErrorKind::empty_support);

  const std::size_t tuple[] = {5, 2};
  CHECK(tuple_weight(c, 0.3, s, tuple) == doctest::Approx(std::exp(0.6)));
  CHECK(unit_weight(c).satisfies_ratio_bound(c));
}

}
