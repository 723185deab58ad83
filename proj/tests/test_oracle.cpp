#include "doctest.h"
#include "support.hpp"

#include "lagrelax/error.hpp"
#include "lagrelax/oracle.hpp"

using namespace lagrelax;
using namespace lagrelax::testing;

TEST_CASE("brute force on the three-cycle") {
  const auto frustrated = brute_force_map(triangle(-1.0));
  CHECK(frustrated.value == doctest::Approx(1.0));
  CHECK(frustrated.maximizers.size() == 6);
  const auto attractive = brute_force_map(triangle(1.0));
  CHECK(attractive.value == doctest::Approx(3.0));
  REQUIRE(attractive.maximizers.size() == 2);
  CHECK(attractive.maximizers[0] == Assignment{1, 1, 1});
  CHECK(attractive.maximizers[1] == Assignment{-1, -1, -1});
}

TEST_CASE("brute force on a single node") {
  const auto m = make_discrete(1, {{{0}, 2.0}});
  const auto opt = brute_force_map(m);
  CHECK(opt.value == 2.0);
  REQUIRE(opt.maximizers.size() == 1);
  CHECK(opt.maximizers[0] == Assignment{1});
  CHECK(brute_force_max_marginal(m, {0}) == std::vector<double>{2.0, -2.0});
}

TEST_CASE("brute-force max-marginals match direct enumeration") {
  const auto m = triangle(-1.0);
  // Every pair of labels extends to a maximizer of the frustrated cycle.
  CHECK(brute_force_max_marginal(m, {0, 1}) == std::vector<double>{1.0, 1.0, 1.0, 1.0});
}

TEST_CASE("grid dynamic programming agrees with brute force") {
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t m = 2 + seed % 3;
    const auto model = random_grid(seed, m, seed % 2 ? 1.0 : 2.0);
    const auto brute = brute_force_map(model);
    const auto dp = exact_grid_map(model);
    CHECK(dp.value == doctest::Approx(brute.value).epsilon(1e-12));
    CHECK(evaluate_objective(model, dp.maximizer) == doctest::Approx(dp.value).epsilon(1e-12));
  }
  const auto zero = make_discrete(4, {{{0, 1}, 0.0}, {{2, 3}, 0.0}, {{0, 2}, 0.0}, {{1, 3}, 0.0}}, GridShape{2, 2});
  CHECK(exact_grid_map(zero).value == 0.0);
  CHECK(brute_force_map(zero).maximizers.size() == 16);
}

namespace {

DiscreteFactorModel rectangle(std::uint64_t seed, std::size_t rows, std::size_t cols) {
  Rng rng(seed);
  const GridShape g{rows, cols};
  std::map<VertexSet, double> coef;
  for (Vertex v = 0; v < g.size(); ++v) coef[{v}] = rng.normal();
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      if (c + 1 < cols) coef[{g.index(r, c), g.index(r, c + 1)}] = rng.normal();
      if (r + 1 < rows) coef[{g.index(r, c), g.index(r + 1, c)}] = rng.normal();
    }
  return make_discrete(g.size(), coef, g);
}

}  // namespace

TEST_CASE("grid dynamic programming on rectangles in both orientations") {
  for (const auto& model : {rectangle(9, 6, 3), rectangle(10, 3, 6)})
    CHECK(exact_grid_map(model).value == doctest::Approx(brute_force_map(model).value).epsilon(1e-12));
}

TEST_CASE("oracle size caps") {
  std::map<VertexSet, double> coef;
  for (Vertex v = 0; v < 25; ++v) coef[{v}] = 1.0;
  CHECK_THROWS_AS(brute_force_map(make_discrete(25, coef)), TooLarge);
  const auto big = random_grid(1, kGridStateCap + 1);
  CHECK_THROWS_AS(exact_grid_map(big), TooLarge);
  // Only one side needs to fit under the cap.
  CHECK_NOTHROW(exact_grid_map(rectangle(1, kGridStateCap + 4, 3)));
}

TEST_CASE("exact Gaussian solve") {
  Eigen::MatrixXd j(2, 2);
  j << 2, 1, 1, 2;
  const GaussianInfoModel m(2, {{{0, 1}, j, Eigen::Vector2d(1, 1)}});
  const auto opt = exact_gaussian_solve(m);
  CHECK(opt.mean(0) == doctest::Approx(1.0 / 3.0));
  CHECK(opt.mean(1) == doctest::Approx(1.0 / 3.0));
  CHECK(opt.variance(0) == doctest::Approx(2.0 / 3.0));
  CHECK(opt.variance(1) == doctest::Approx(2.0 / 3.0));
  CHECK(opt.value == doctest::Approx(1.0 / 3.0));
  CHECK(exact_covariance_block(m, {0, 1})(0, 1) == doctest::Approx(-1.0 / 3.0));

  const GaussianInfoModel identity(2, {{{0}, Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, 3.0)},
                                       {{1}, Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, -2.0)}});
  const auto id = exact_gaussian_solve(identity);
  CHECK(id.mean(0) == 3.0);
  CHECK(id.mean(1) == -2.0);
  CHECK(id.variance(0) == 1.0);
}

TEST_CASE("the Gaussian optimum value is the objective at the mean") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto m = random_gaussian_grid(seed, 3);
    const auto opt = exact_gaussian_solve(m);
    CHECK(evaluate_objective(m, opt.mean) == doctest::Approx(opt.value).epsilon(1e-10));
    const Eigen::MatrixXd dense(m.information());
    const Eigen::MatrixXd cov = dense.inverse();
    for (Eigen::Index i = 0; i < cov.rows(); ++i) CHECK(opt.variance(i) == doctest::Approx(cov(i, i)).epsilon(1e-10));
  }
}

TEST_CASE("an indefinite Gaussian model is rejected") {
  Eigen::MatrixXd j(2, 2);
  j << 1, 2, 2, 1;
  const GaussianInfoModel m(2, {{{0, 1}, j, Eigen::Vector2d(0, 0)}});
  CHECK_THROWS_AS(exact_gaussian_solve(m), NotPositiveDefinite);
}
