#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include <vequil/interaction.hpp>
#include <vequil/polyhedron.hpp>
#include <vequil/problem.hpp>

using namespace vequil;

namespace {

Eigen::MatrixXd mat(std::initializer_list<std::initializer_list<double>> rows) {
  Eigen::MatrixXd A(rows.size(), rows.begin()->size());
  int i = 0;
  for (const auto& r : rows) {
    int j = 0;
    for (double v : r) A(i, j++) = v;
    ++i;
  }
  return A;
}

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(vals.size());
  int i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("interaction matrix factorization") {
  SECTION("full-rank condenser matrix") {
    auto C = InteractionMatrix::factorize(mat({{2.0, -1.0}, {-1.0, 2.0}}));
    REQUIRE(C.rank() == 2);
    REQUIRE(C.invertible());
    REQUIRE((C.B().transpose() * C.B() - C.C()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("rank-1 touching condenser matrix") {
    auto C = InteractionMatrix::factorize(mat({{1.0, -1.0}, {-1.0, 1.0}}));
    REQUIRE(C.rank() == 1);
    REQUIRE_FALSE(C.invertible());
    // B is one row proportional to (1, -1).
    REQUIRE(C.B().rows() == 1);
    REQUIRE(C.B()(0, 0) == Catch::Approx(-C.B()(0, 1)).margin(1e-12));
    REQUIRE((C.B().transpose() * C.B() - C.C()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("rank-1 all-ones matrix") {
    auto C = InteractionMatrix::factorize(mat({{1.0, 1.0}, {1.0, 1.0}}));
    REQUIRE(C.rank() == 1);
    REQUIRE((C.B().transpose() * C.B() - C.C()).cwiseAbs().maxCoeff() < 1e-12);
  }
  SECTION("zero matrix has rank 0") {
    auto C = InteractionMatrix::factorize(Eigen::MatrixXd::Zero(2, 2));
    REQUIRE(C.rank() == 0);
    REQUIRE(C.B().rows() == 0);
  }
  SECTION("invalid input rejected") {
    REQUIRE_THROWS_AS(InteractionMatrix::factorize(mat({{1.0, 0.5}, {0.4, 1.0}})),
                      std::invalid_argument);  // not symmetric
    REQUIRE_THROWS_AS(InteractionMatrix::factorize(mat({{1.0, 2.0}, {2.0, 1.0}})),
                      std::invalid_argument);  // eigenvalue -1
    REQUIRE_THROWS_AS(InteractionMatrix::factorize(Eigen::MatrixXd::Zero(2, 3)),
                      std::invalid_argument);  // not square
  }
  SECTION("random PSD matrices round-trip through B'B") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
      const int d = 2 + trial % 4, r = 1 + trial % d;
      Eigen::MatrixXd M(r, d);
      for (int i = 0; i < r; ++i)
        for (int j = 0; j < d; ++j) M(i, j) = coef(rng);
      Eigen::MatrixXd raw = M.transpose() * M;
      raw = 0.5 * (raw + raw.transpose());  // bitwise symmetry
      auto C = InteractionMatrix::factorize(raw);
      REQUIRE(C.rank() <= r);
      double cmax = raw.cwiseAbs().maxCoeff();
      REQUIRE((C.B().transpose() * C.B() - raw).cwiseAbs().maxCoeff() <=
              1e-12 * (1.0 + cmax));
    }
  }
}

TEST_CASE("mass polyhedron") {
  SECTION("fixed masses") {
    MassPolyhedron K = MassPolyhedron::fixed(vec({1.0, 0.25}));
    REQUIRE(K.feasible());
    REQUIRE(K.compact());
    REQUIRE(K.feasible_point()(0) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(K.coordinate_max(1) == Catch::Approx(0.25).margin(1e-10));
    REQUIRE(K.contains(vec({1.0, 0.25})));
    REQUIRE_FALSE(K.contains(vec({1.0, 0.5})));
    REQUIRE_FALSE(MassPolyhedron::fixed(vec({-1.0})).feasible());
  }
  SECTION("simplex") {
    MassPolyhedron K = MassPolyhedron::simplex(3, 2.0);
    REQUIRE(K.feasible());
    REQUIRE(K.compact());
    REQUIRE(K.coordinate_max(2) == Catch::Approx(2.0).margin(1e-10));
    REQUIRE(K.contains(vec({0.5, 0.5, 1.0})));
    REQUIRE_FALSE(K.contains(vec({0.5, 0.5, 0.5})));
    REQUIRE_FALSE(MassPolyhedron::simplex(2, -1.0).feasible());
  }
  SECTION("unbounded polyhedron is flagged with a recession direction") {
    MassPolyhedron K(mat({{1.0, -1.0}}), vec({0.0}));
    REQUIRE(K.feasible());
    REQUIRE_FALSE(K.compact());
    Eigen::VectorXd dir = K.recession_direction();
    REQUIRE(dir.minCoeff() >= -1e-12);
    REQUIRE(dir.sum() > 1e-6);
    REQUIRE((mat({{1.0, -1.0}}) * dir).cwiseAbs().maxCoeff() < 1e-9);
    REQUIRE(K.coordinate_max(0) == std::numeric_limits<double>::infinity());
  }
  SECTION("infeasible equalities") {
    MassPolyhedron K(mat({{1.0, 0.0}, {1.0, 0.0}}), vec({1.0, 2.0}));
    REQUIRE_FALSE(K.feasible());
    REQUIRE_THROWS_AS(K.feasible_point(), std::logic_error);
    REQUIRE(std::isnan(K.coordinate_max(0)));
  }
  SECTION("segment polyhedron from an incidence matrix") {
    // K = {x >= 0 : A x = a} for the three-vertex crossing graph; solutions
    // are (1+t, 1-t, t) for t in [0, 1].
    Eigen::MatrixXd A = mat({{-1.0, -1.0, 0.0}, {0.0, 1.0, 1.0}, {1.0, 0.0, -1.0}});
    MassPolyhedron K(A, vec({-2.0, 1.0, 1.0}));
    REQUIRE(K.feasible());
    REQUIRE(K.compact());
    REQUIRE(K.contains(vec({1.0, 1.0, 0.0})));
    REQUIRE(K.contains(vec({2.0, 0.0, 1.0})));
    REQUIRE(K.contains(vec({1.5, 0.5, 0.5})));
    REQUIRE_FALSE(K.contains(vec({1.0, 0.0, 1.0})));
    REQUIRE(K.coordinate_max(0) == Catch::Approx(2.0).margin(1e-9));
    REQUIRE(K.coordinate_max(1) == Catch::Approx(1.0).margin(1e-9));
    REQUIRE(K.coordinate_max(2) == Catch::Approx(1.0).margin(1e-9));
  }
  SECTION("dimension mismatch rejected") {
    REQUIRE_THROWS_AS(MassPolyhedron(mat({{1.0, 1.0}}), vec({1.0, 2.0})),
                      std::invalid_argument);
  }
}

TEST_CASE("problem instance validation") {
  std::vector<IntervalUnion> sets{IntervalUnion({{-1.0, 1.0}})};
  std::vector<ExternalField> fields{ExternalField()};
  auto C1 = InteractionMatrix::factorize(mat({{1.0}}));
  auto K1 = MassPolyhedron::fixed(vec({1.0}));

  REQUIRE_NOTHROW(ProblemInstance(sets, fields, C1, K1));
  REQUIRE(ProblemInstance(sets, fields, C1, K1).dimension() == 1);

  auto C2 = InteractionMatrix::factorize(mat({{1.0, 0.0}, {0.0, 1.0}}));
  REQUIRE_THROWS_AS(ProblemInstance(sets, fields, C2, K1), std::invalid_argument);
  auto K2 = MassPolyhedron::simplex(2, 1.0);
  REQUIRE_THROWS_AS(ProblemInstance(sets, fields, C1, K2), std::invalid_argument);
  REQUIRE_THROWS_AS(ProblemInstance(sets, {}, C1, K1), std::invalid_argument);
  // A single-point component set has capacity zero.
  std::vector<IntervalUnion> polar{IntervalUnion({{0.0, 0.0}})};
  REQUIRE_THROWS_AS(ProblemInstance(polar, fields, C1, K1), std::invalid_argument);
}
