#include "lagrelax/oracle.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

#include <Eigen/Sparse>

#include "lagrelax/error.hpp"

namespace lagrelax {

namespace {

struct MaskedTerm {
  std::uint64_t mask;
  double theta;
};

std::vector<MaskedTerm> masked_terms(const DiscreteFactorModel& model) {
  const auto theta = model.theta();
  std::vector<MaskedTerm> terms;
  for (std::size_t e = 0; e < model.graph.edge_count(); ++e) {
    std::uint64_t mask = 0;
    for (Vertex v : model.graph.edge(e)) mask |= std::uint64_t{1} << v;
    terms.push_back({mask, theta[e]});
  }
  return terms;
}

// Bit v set means x_v = -1.
double value_of(const std::vector<MaskedTerm>& terms, double constant, std::uint64_t state) {
  double f = constant;
  for (const auto& t : terms) f += (std::popcount(state & t.mask) & 1) ? -t.theta : t.theta;
  return f;
}

Assignment decode(std::uint64_t state, std::size_t n) {
  Assignment x(n);
  for (std::size_t v = 0; v < n; ++v) x[v] = ((state >> v) & 1U) ? -1 : 1;
  return x;
}

void check_brute_force_size(const DiscreteFactorModel& model) {
  if (model.vertex_count() > kBruteForceCap)
    throw TooLarge("brute force is capped at " + std::to_string(kBruteForceCap) + " vertices");
}

}  // namespace

DiscreteOptimum brute_force_map(const DiscreteFactorModel& model, double tol) {
  check_brute_force_size(model);
  const std::size_t n = model.vertex_count();
  const auto terms = masked_terms(model);
  const std::uint64_t count = std::uint64_t{1} << n;
  double best = -std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s < count; ++s) best = std::max(best, value_of(terms, model.constant, s));
  DiscreteOptimum out{best, {}};
  for (std::uint64_t s = 0; s < count; ++s)
    if (value_of(terms, model.constant, s) >= best - tol) out.maximizers.push_back(decode(s, n));
  return out;
}

std::vector<double> brute_force_max_marginal(const DiscreteFactorModel& model, const VertexSet& scope) {
  check_brute_force_size(model);
  const std::size_t n = model.vertex_count();
  const auto terms = masked_terms(model);
  std::vector<double> out(std::size_t{1} << scope.size(), -std::numeric_limits<double>::infinity());
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << n); ++s) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < scope.size(); ++i) idx |= static_cast<std::size_t>((s >> scope[i]) & 1U) << i;
    out[idx] = std::max(out[idx], value_of(terms, model.constant, s));
  }
  return out;
}

GridOptimum exact_grid_map(const DiscreteFactorModel& model) {
  const auto& grid = model.graph.grid();
  if (!grid || grid->size() != model.vertex_count()) throw InvalidInput("exact_grid_map needs a grid model");
  // Lines run along the longer side; each line state holds `width` spins.
  const bool by_column = grid->rows <= grid->cols;
  const std::size_t width = by_column ? grid->rows : grid->cols;
  const std::size_t lines = by_column ? grid->cols : grid->rows;
  if (width > kGridStateCap)
    throw TooLarge("exact_grid_map is capped at " + std::to_string(kGridStateCap) + " states per line");
  auto line_of = [&](Vertex v) { return by_column ? grid->col(v) : grid->row(v); };
  auto pos_of = [&](Vertex v) { return by_column ? grid->row(v) : grid->col(v); };

  struct LineTerm {
    std::uint32_t first = 0, second = 0;  // masks on line l and l + 1
    double theta = 0.0;
  };
  std::vector<std::vector<LineTerm>> inner(lines), cross(lines);
  const auto theta = model.theta();
  for (std::size_t e = 0; e < model.graph.edge_count(); ++e) {
    const auto& edge = model.graph.edge(e);
    std::size_t lo = lines, hi = 0;
    for (Vertex v : edge) {
      lo = std::min(lo, line_of(v));
      hi = std::max(hi, line_of(v));
    }
    if (hi > lo + 1) throw InvalidInput("exact_grid_map: hyperedge spans non-adjacent grid lines");
    LineTerm t;
    t.theta = theta[e];
    for (Vertex v : edge) (line_of(v) == lo ? t.first : t.second) |= std::uint32_t{1} << pos_of(v);
    (hi == lo ? inner[lo] : cross[lo]).push_back(t);
  }
  auto sign = [](std::uint32_t bits) { return (std::popcount(bits) & 1) ? -1.0 : 1.0; };

  const std::size_t states = std::size_t{1} << width;
  std::vector<std::vector<double>> local(lines, std::vector<double>(states, 0.0));
  for (std::size_t l = 0; l < lines; ++l)
    for (std::size_t s = 0; s < states; ++s)
      for (const auto& t : inner[l]) local[l][s] += t.theta * sign(static_cast<std::uint32_t>(s) & t.first);

  std::vector<double> value = local[0];
  std::vector<std::vector<std::uint32_t>> back(lines, std::vector<std::uint32_t>(states, 0));
  for (std::size_t l = 0; l + 1 < lines; ++l) {
    std::vector<double> next(states, -std::numeric_limits<double>::infinity());
    for (std::size_t t = 0; t < states; ++t) {
      for (std::size_t s = 0; s < states; ++s) {
        double v = value[s];
        for (const auto& term : cross[l])
          v += term.theta * sign((static_cast<std::uint32_t>(s) & term.first) ^ (static_cast<std::uint32_t>(t) & term.second));
        if (v > next[t]) {
          next[t] = v;
          back[l + 1][t] = static_cast<std::uint32_t>(s);
        }
      }
      next[t] += local[l + 1][t];
    }
    value = std::move(next);
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < states; ++s)
    if (value[s] > value[best]) best = s;

  GridOptimum out;
  out.value = value[best] + model.constant;
  out.maximizer.assign(model.vertex_count(), 1);
  std::uint32_t state = static_cast<std::uint32_t>(best);
  for (std::size_t l = lines; l-- > 0;) {
    for (std::size_t p = 0; p < width; ++p) {
      const Vertex v = by_column ? grid->index(p, l) : grid->index(l, p);
      out.maximizer[v] = ((state >> p) & 1U) ? -1 : 1;
    }
    if (l > 0) state = back[l][state];
  }
  return out;
}

GaussianOptimum exact_gaussian_solve(const GaussianInfoModel& model) {
  const auto n = static_cast<Eigen::Index>(model.vertex_count());
  if (n > 10000) throw TooLarge("exact_gaussian_solve is capped at 10^4 variables");
  GaussianOptimum out;
  if (n <= 2000) {
    const Eigen::MatrixXd j = Eigen::MatrixXd(model.information());
    Eigen::LLT<Eigen::MatrixXd> llt(j);
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("aggregate J is not positive definite");
    out.mean = llt.solve(model.potential());
    out.variance = llt.solve(Eigen::MatrixXd::Identity(n, n)).diagonal();
  } else {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(model.information());
    if (llt.info() != Eigen::Success) throw NotPositiveDefinite("aggregate J is not positive definite");
    out.mean = llt.solve(model.potential());
    out.variance.resize(n);
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      e(i) = 1.0;
      out.variance(i) = llt.solve(e)(i);
      e(i) = 0.0;
    }
  }
  out.value = 0.5 * model.potential().dot(out.mean);
  return out;
}

Eigen::MatrixXd exact_covariance_block(const GaussianInfoModel& model, const VertexSet& vertices) {
  const auto n = static_cast<Eigen::Index>(model.vertex_count());
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt(model.information());
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("aggregate J is not positive definite");
  const auto k = static_cast<Eigen::Index>(vertices.size());
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index j = 0; j < k; ++j) rhs(static_cast<Eigen::Index>(vertices[static_cast<std::size_t>(j)]), j) = 1.0;
  const Eigen::MatrixXd cols = llt.solve(rhs);
  Eigen::MatrixXd out(k, k);
  for (Eigen::Index a = 0; a < k; ++a)
    for (Eigen::Index b = 0; b < k; ++b) out(a, b) = cols(static_cast<Eigen::Index>(vertices[static_cast<std::size_t>(a)]), b);
  return out;
}

}  // namespace lagrelax
