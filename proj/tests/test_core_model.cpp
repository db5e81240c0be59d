#include <doctest.h>

#include <sstream>

#include "fdadapt/core_model.hpp"
#include "fdadapt/error.hpp"
#include "support.hpp"

using namespace fdadapt;
using testing::make_curve;

TEST_CASE("curve observations validate their invariants") {
  CHECK_NOTHROW(make_curve(1, {0.1, 0.5}, {1.0, 2.0}));
  CHECK_THROWS_AS(make_curve(1, {}, {}), ArgumentError);
  CHECK_THROWS_AS(make_curve(1, {0.1, 0.2}, {1.0}), ArgumentError);
  CHECK_THROWS_AS(make_curve(1, {0.0, 0.2}, {1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(make_curve(1, {0.2, 1.0}, {1.0, 2.0}), DomainError);
  CHECK_THROWS_AS(make_curve(1, {0.3, 0.2}, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(make_curve(1, {0.2, 0.2}, {1.0, 2.0}), ArgumentError);
  CHECK_THROWS_AS(make_curve(1, {0.2}, {std::nan("")}), ArgumentError);
}

TEST_CASE("window returns the points within the closed band") {
  const auto c = make_curve(1, {0.1, 0.2, 0.3, 0.4}, {0, 0, 0, 0});
  const auto [lo, hi] = c.window(0.25, 0.1);
  CHECK(lo == 1);
  CHECK(hi == 3);
  const auto [a, b] = c.window(0.9, 0.05);
  CHECK(a == b);
}

TEST_CASE("design detection and m_hat") {
  std::vector<CurveObservations> common{make_curve(1, {0.1, 0.5, 0.9}, {1, 2, 3}),
                                        make_curve(2, {0.1, 0.5, 0.9}, {4, 5, 6})};
  FunctionalDataset d1(common);
  CHECK(d1.design() == Design::Common);
  CHECK(d1.size() == 2);
  CHECK(d1.m_hat() == 3.0);

  std::vector<CurveObservations> indep{make_curve(1, {0.1, 0.5, 0.9}, {1, 2, 3}),
                                       make_curve(2, {0.2, 0.5, 0.9}, {4, 5, 6})};
  CHECK(FunctionalDataset(indep).design() == Design::Independent);
  CHECK_THROWS_AS(FunctionalDataset(indep, Design::Common), ArgumentError);

  // Detection does not depend on curve order.
  std::vector<CurveObservations> reversed{common[1], common[0]};
  CHECK(FunctionalDataset(reversed).design() == Design::Common);

  CHECK_THROWS_AS(FunctionalDataset({make_curve(1, {0.5}, {1})}), ArgumentError);
}

TEST_CASE("mean_obs_count is the average curve length") {
  std::vector<double> t80(80), t120(120);
  for (std::size_t i = 0; i < 80; ++i) t80[i] = (i + 1.0) / 81.0;
  for (std::size_t i = 0; i < 120; ++i) t120[i] = (i + 1.0) / 121.0;
  FunctionalDataset d({make_curve(1, t80, std::vector<double>(80, 0.0)),
                       make_curve(2, t120, std::vector<double>(120, 0.0))});
  CHECK(mean_obs_count(d) == 100.0);
  CHECK(d.m_hat() == 100.0);
}

TEST_CASE("long CSV parsing") {
  SUBCASE("shared times give a common design") {
    std::istringstream in("curve_id,t,y\n1,0.1,1\n1,0.5,2\n1,0.9,3\n2,0.1,4\n2,0.5,5\n2,0.9,6\n");
    const auto d = parse_long_csv(in);
    CHECK(d.design() == Design::Common);
    CHECK(d.size() == 2);
    CHECK(d.m_hat() == 3.0);
  }
  SUBCASE("rows are sorted by time within a curve") {
    std::istringstream in("curve_id,t,y\n7,0.5,2\n7,0.1,1\n3,0.2,5\n3,0.3,6\n");
    const auto d = parse_long_csv(in);
    CHECK(d.design() == Design::Independent);
    CHECK(d.curve(0).id() == 3);
    CHECK(d.curve(1).times()[0] == 0.1);
    CHECK(d.curve(1).values()[0] == 1.0);
  }
  SUBCASE("NaN values are rejected with their line") {
    std::istringstream in("curve_id,t,y\n1,0.2,1\n1,0.5,NaN\n2,0.1,1\n");
    try {
      parse_long_csv(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
  }
  SUBCASE("malformed rows") {
    std::istringstream in("curve_id,t,y\n1,0.2\n");
    CHECK_THROWS_AS(parse_long_csv(in), ParseError);
    std::istringstream bad_header("id,t,y\n1,0.2,1\n");
    CHECK_THROWS_AS(parse_long_csv(bad_header), ParseError);
    std::istringstream bad_number("curve_id,t,y\n1,abc,1\n");
    CHECK_THROWS_AS(parse_long_csv(bad_number), ParseError);
  }
  SUBCASE("times outside the domain") {
    std::istringstream in("curve_id,t,y\n1,1.5,1\n2,0.5,1\n");
    CHECK_THROWS_AS(parse_long_csv(in), DomainError);
  }
  SUBCASE("empty input") {
    std::istringstream in("");
    CHECK_THROWS_AS(parse_long_csv(in), EmptyDatasetError);
    std::istringstream header_only("curve_id,t,y\n");
    CHECK_THROWS_AS(parse_long_csv(header_only), EmptyDatasetError);
  }
  SUBCASE("affine rescaling of raw times") {
    std::istringstream in("curve_id,t,y\n1,10,1\n1,15,2\n2,12,3\n2,18,4\n");
    IngestOptions opts;
    opts.rescale_from = std::pair{0.0, 20.0};
    const auto d = parse_long_csv(in, opts);
    CHECK(d.curve(0).times()[1] == doctest::Approx(0.75));
    CHECK_FALSE(d.transform().is_identity());
    CHECK(d.transform().to_raw(0.75) == doctest::Approx(15.0));
  }
}

TEST_CASE("write then read round-trips exactly") {
  std::mt19937_64 rng(5);
  std::vector<CurveObservations> curves;
  for (int i = 0; i < 4; ++i) curves.push_back(testing::random_curve(rng, i + 1, 7 + i));
  FunctionalDataset d(curves);
  std::stringstream buf;
  write_long_csv(buf, d);
  const auto back = parse_long_csv(buf);
  CHECK(back == d);
}

TEST_CASE("evaluation grids") {
  const auto g = EvalGrid::uniform(0.0, 1.0, 101);
  CHECK(g.size() == 101);
  CHECK(g[0] == 0.0);
  CHECK(g[100] == 1.0);
  CHECK(g[50] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(g.is_uniform());
  CHECK_THROWS_AS(EvalGrid({0.5}), ArgumentError);
  CHECK_THROWS_AS(EvalGrid({0.5, 0.4}), ArgumentError);
  CHECK_THROWS_AS(EvalGrid({-0.1, 0.4}), DomainError);
}

TEST_CASE("affine_values transforms every value") {
  FunctionalDataset d({make_curve(1, {0.1, 0.5}, {1, 2}), make_curve(2, {0.2, 0.6}, {3, 4})});
  const auto e = d.affine_values(2.0, 1.0);
  CHECK(e.curve(1).values()[1] == 9.0);
  CHECK(e.curve(1).times()[1] == 0.6);
}
