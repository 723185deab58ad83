#include "lagrelax/junction_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "lagrelax/elimination.hpp"
#include "lagrelax/error.hpp"
#include "lagrelax/log_table.hpp"

namespace lagrelax {

SubgraphEngine::SubgraphEngine(std::size_t variable_count, std::vector<std::vector<std::size_t>> scopes)
    : variable_count_(variable_count), scopes_(std::move(scopes)) {
  for (const auto& s : scopes_) {
    if (s.empty()) throw InvalidInput("factor with empty scope");
    for (std::size_t v : s)
      if (v >= variable_count_) throw InvalidInput("factor scope out of range");
    if (s.size() > 20) throw InvalidInput("factor scope too large for a dense table");
  }
  const EliminationTree et = eliminate_min_fill(variable_count_, scopes_);
  cliques_.resize(variable_count_);
  variable_clique_ = et.position;
  for (std::size_t k = 0; k < variable_count_; ++k) {
    auto& c = cliques_[k];
    c.vars = et.cliques[k];
    c.eliminated = et.order[k];
    c.parent = et.parent[k];
    if (c.vars.size() > 24) throw InvalidInput("component is not thin enough for exact inference");
  }
  for (std::size_t k = 0; k < variable_count_; ++k) {
    auto& c = cliques_[k];
    if (c.parent == npos) {
      c.tree = roots_.size();
      roots_.push_back(k);
      continue;
    }
    cliques_[c.parent].children.push_back(k);
    std::vector<std::size_t> sep;
    for (std::size_t v : c.vars)
      if (v != c.eliminated) sep.push_back(v);
    c.separator_size = sep.size();
    c.to_separator = projection_map(c.vars, sep);
    c.parent_to_separator = projection_map(cliques_[c.parent].vars, sep);
  }
  // Parents are eliminated later, so walking backwards visits parents first.
  tree_members_.resize(roots_.size());
  for (std::size_t k = variable_count_; k-- > 0;) {
    auto& c = cliques_[k];
    if (c.parent != npos) c.tree = cliques_[c.parent].tree;
    tree_members_[c.tree].push_back(k);
  }

  tables_.resize(scopes_.size());
  factor_clique_.resize(scopes_.size());
  for (std::size_t f = 0; f < scopes_.size(); ++f) {
    tables_[f].assign(table_size(scopes_[f].size()), 0.0);
    std::size_t home = npos;
    for (std::size_t v : scopes_[f]) home = std::min(home, variable_clique_[v]);
    factor_clique_[f] = home;
    cliques_[home].factors.push_back(f);
    cliques_[home].factor_maps.push_back(projection_map(cliques_[home].vars, scopes_[f]));
  }

  for (Cache* cache : {&max_cache_, &sum_cache_}) {
    cache->up.resize(variable_count_);
    cache->down.resize(variable_count_);
    cache->up_valid.assign(variable_count_, 0);
    cache->down_valid.assign(variable_count_, 0);
  }
  max_cache_.tau = 0.0;
}

std::size_t SubgraphEngine::max_clique_size() const {
  std::size_t m = 0;
  for (const auto& c : cliques_) m = std::max(m, c.vars.size());
  return m;
}

void SubgraphEngine::set_factor(std::size_t f, std::span<const double> table) {
  if (table.size() != tables_[f].size()) throw InvalidInput("factor table size mismatch");
  std::copy(table.begin(), table.end(), tables_[f].begin());
  const std::size_t d = factor_clique_[f];
  cliques_[d].potential_valid = false;

  std::vector<char> on_path(cliques_.size(), 0);
  for (std::size_t a = d; a != npos; a = cliques_[a].parent) on_path[a] = 1;
  for (Cache* cache : {&max_cache_, &sum_cache_})
    for (std::size_t c : tree_members_[cliques_[d].tree]) {
      if (on_path[c])
        cache->up_valid[c] = 0;
      else
        cache->down_valid[c] = 0;
    }
}

void SubgraphEngine::check_tau(double tau) const {
  if (!(tau >= 0.0) || (tau > 0.0 && tau < tau_floor_))
    throw InvalidInput("temperature " + std::to_string(tau) + " below the configured floor");
}

SubgraphEngine::Cache& SubgraphEngine::cache_for(double tau) {
  check_tau(tau);
  if (tau == 0.0) return max_cache_;
  if (sum_cache_.tau != tau) {
    std::fill(sum_cache_.up_valid.begin(), sum_cache_.up_valid.end(), 0);
    std::fill(sum_cache_.down_valid.begin(), sum_cache_.down_valid.end(), 0);
    sum_cache_.tau = tau;
  }
  return sum_cache_;
}

const std::vector<double>& SubgraphEngine::potential(std::size_t k) {
  auto& c = cliques_[k];
  if (!c.potential_valid) {
    c.potential.assign(table_size(c.vars.size()), 0.0);
    for (std::size_t j = 0; j < c.factors.size(); ++j) {
      const auto& t = tables_[c.factors[j]];
      const auto& map = c.factor_maps[j];
      for (std::size_t i = 0; i < c.potential.size(); ++i) c.potential[i] += t[map[i]];
    }
    c.potential_valid = true;
  }
  return c.potential;
}

std::vector<double> SubgraphEngine::reduce(const std::vector<double>& values, const std::vector<std::uint32_t>& map,
                                           std::size_t out_size, double tau) const {
  std::vector<double> hi(out_size, -std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < values.size(); ++i) hi[map[i]] = std::max(hi[map[i]], values[i]);
  if (tau == 0.0) return hi;
  std::vector<double> sum(out_size, 0.0);
  for (std::size_t i = 0; i < values.size(); ++i) sum[map[i]] += std::exp((values[i] - hi[map[i]]) / tau);
  for (std::size_t j = 0; j < out_size; ++j) hi[j] += tau * std::log(sum[j]);
  return hi;
}

const std::vector<double>& SubgraphEngine::up(Cache& cache, std::size_t k) {
  if (!cache.up_valid[k]) {
    std::vector<double> b = potential(k);
    for (std::size_t d : cliques_[k].children) {
      const auto& m = up(cache, d);
      const auto& map = cliques_[d].parent_to_separator;
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += m[map[i]];
    }
    cache.up[k] = reduce(b, cliques_[k].to_separator, table_size(cliques_[k].separator_size), cache.tau);
    cache.up_valid[k] = 1;
    ++messages_;
  }
  return cache.up[k];
}

const std::vector<double>& SubgraphEngine::down(Cache& cache, std::size_t k) {
  if (!cache.down_valid[k]) {
    const std::size_t p = cliques_[k].parent;
    std::vector<double> b = potential(p);
    if (cliques_[p].parent != npos) {
      const auto& m = down(cache, p);
      const auto& map = cliques_[p].to_separator;
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += m[map[i]];
    }
    for (std::size_t d : cliques_[p].children) {
      if (d == k) continue;
      const auto& m = up(cache, d);
      const auto& map = cliques_[d].parent_to_separator;
      for (std::size_t i = 0; i < b.size(); ++i) b[i] += m[map[i]];
    }
    cache.down[k] = reduce(b, cliques_[k].parent_to_separator, table_size(cliques_[k].separator_size), cache.tau);
    cache.down_valid[k] = 1;
    ++messages_;
  }
  return cache.down[k];
}

std::vector<double> SubgraphEngine::belief(Cache& cache, std::size_t k) {
  std::vector<double> b = potential(k);
  if (cliques_[k].parent != npos) {
    const auto& m = down(cache, k);
    const auto& map = cliques_[k].to_separator;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += m[map[i]];
  }
  for (std::size_t d : cliques_[k].children) {
    const auto& m = up(cache, d);
    const auto& map = cliques_[d].parent_to_separator;
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += m[map[i]];
  }
  return b;
}

double SubgraphEngine::log_partition(double tau) {
  Cache& cache = cache_for(tau);
  double total = 0.0;
  for (std::size_t r : roots_) total += soft_reduce(belief(cache, r), tau);
  return total;
}

std::vector<double> SubgraphEngine::marginal(std::size_t f, double tau) {
  Cache& cache = cache_for(tau);
  const std::size_t k = factor_clique_[f];
  const auto& c = cliques_[k];
  const auto pos = static_cast<std::size_t>(std::find(c.factors.begin(), c.factors.end(), f) - c.factors.begin());
  std::vector<double> t = reduce(belief(cache, k), c.factor_maps[pos], tables_[f].size(), tau);
  const double z = soft_reduce(t, tau);
  for (double& x : t) x -= z;
  return t;
}

std::vector<double> SubgraphEngine::variable_marginal(std::size_t v, double tau) {
  Cache& cache = cache_for(tau);
  const std::size_t k = variable_clique_[v];
  const std::size_t single[] = {v};
  std::vector<double> t = reduce(belief(cache, k), projection_map(cliques_[k].vars, single), 2, tau);
  const double z = soft_reduce(t, tau);
  for (double& x : t) x -= z;
  return t;
}

Assignment SubgraphEngine::argmax() {
  Cache& cache = cache_for(0.0);
  Assignment x(variable_count_, 1);
  std::vector<std::uint32_t> state(variable_count_, 0);
  for (std::size_t k = variable_count_; k-- > 0;) {
    const auto& c = cliques_[k];
    const std::vector<double> b = belief(cache, k);
    std::size_t base = 0, bit = 0;
    for (std::size_t i = 0; i < c.vars.size(); ++i) {
      if (c.vars[i] == c.eliminated)
        bit = i;
      else
        base |= std::size_t{state[c.vars[i]]} << i;
    }
    const double plus = b[base], minus = b[base | (std::size_t{1} << bit)];
    state[c.eliminated] = minus > plus ? 1U : 0U;
    x[c.eliminated] = label_of_state(state[c.eliminated]);
  }
  return x;
}

void SubgraphEngine::dump(std::ostream& out) const {
  out << "junction tree: " << variable_count_ << " variables, " << cliques_.size() << " cliques, "
      << roots_.size() << " trees, max clique " << max_clique_size() << "\n";
  for (std::size_t k = 0; k < cliques_.size(); ++k) {
    const auto& c = cliques_[k];
    out << "  clique " << k << " eliminates " << c.eliminated << " vars {";
    for (std::size_t i = 0; i < c.vars.size(); ++i) out << (i ? " " : "") << c.vars[i];
    out << "} parent ";
    if (c.parent == npos)
      out << "-";
    else
      out << c.parent;
    out << " factors [";
    for (std::size_t i = 0; i < c.factors.size(); ++i) out << (i ? " " : "") << c.factors[i];
    out << "]\n";
  }
}

TemperedMarginals tempered_marginals(SubgraphEngine& engine, double tau, std::span<const std::size_t> targets) {
  if (!(tau > 0.0)) throw InvalidInput("tempered marginals need tau > 0");
  TemperedMarginals out;
  for (std::size_t f : targets) {
    auto t = engine.marginal(f, tau);
    for (double& x : t) x /= tau;
    out.tables.push_back(std::move(t));
  }
  out.log_partition = engine.log_partition(tau);
  return out;
}

MaxMarginals max_marginals(SubgraphEngine& engine, std::span<const std::size_t> targets) {
  MaxMarginals out;
  out.component_max = engine.log_partition(0.0);
  for (std::size_t f : targets) {
    auto t = engine.marginal(f, 0.0);
    for (double& x : t) x += out.component_max;
    out.tables.push_back(std::move(t));
  }
  return out;
}

ComponentMap component_map(SubgraphEngine& engine, double tie_tol) {
  ComponentMap out;
  out.assignment = engine.argmax();
  out.ties.resize(engine.variable_count());
  for (std::size_t v = 0; v < engine.variable_count(); ++v) {
    const auto t = engine.variable_marginal(v, 0.0);
    out.ties[v] = std::abs(t[0] - t[1]) < tie_tol;
  }
  return out;
}

}  // namespace lagrelax
