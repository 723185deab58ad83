#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lagrelax/model.hpp"

namespace lagrelax {

/// Exact inference over binary variables 0..n-1 with log-domain factor
/// tables. Factor f is a table over scopes[f] (bit i <-> scopes[f][i]).
/// The junction tree comes from min-fill elimination; messages are cached
/// per semiring and only the ones depending on a changed factor are redone.
///
/// All tables are in objective units: for tau > 0 a marginal is tau * log p
/// normalized to soft_reduce(.., tau) == 0, for tau == 0 it is the
/// max-marginal shifted so its largest entry is 0.
class SubgraphEngine {
 public:
  SubgraphEngine(std::size_t variable_count, std::vector<std::vector<std::size_t>> scopes);

  std::size_t variable_count() const { return variable_count_; }
  std::size_t factor_count() const { return scopes_.size(); }
  const std::vector<std::size_t>& scope(std::size_t f) const { return scopes_[f]; }
  const std::vector<double>& factor(std::size_t f) const { return tables_[f]; }
  void set_factor(std::size_t f, std::span<const double> table);

  /// Temperatures in (0, floor) are rejected with InvalidInput.
  void set_tau_floor(double floor) { tau_floor_ = floor; }

  /// tau * log Z_tau for tau > 0; the maximum of the summed factors for tau == 0.
  double log_partition(double tau);
  std::vector<double> marginal(std::size_t f, double tau);
  std::vector<double> variable_marginal(std::size_t v, double tau);

  /// Max-product backtracking; prefers +1 whenever both labels are optimal.
  Assignment argmax();

  std::size_t message_count() const { return messages_; }
  std::size_t clique_count() const { return cliques_.size(); }
  std::size_t max_clique_size() const;
  void dump(std::ostream& out) const;

 private:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct Clique {
    std::vector<std::size_t> vars;
    std::size_t eliminated = 0;
    std::size_t parent = npos;
    std::size_t tree = 0;
    std::vector<std::size_t> children;
    std::vector<std::uint32_t> to_separator;         // clique index -> separator index
    std::vector<std::uint32_t> parent_to_separator;  // parent index -> separator index
    std::size_t separator_size = 0;
    std::vector<std::size_t> factors;
    std::vector<std::vector<std::uint32_t>> factor_maps;  // clique index -> factor index
    std::vector<double> potential;
    bool potential_valid = false;
  };

  struct Cache {
    std::vector<std::vector<double>> up, down;
    std::vector<char> up_valid, down_valid;
    double tau = -1.0;
  };

  Cache& cache_for(double tau);
  const std::vector<double>& potential(std::size_t c);
  const std::vector<double>& up(Cache& cache, std::size_t c);
  const std::vector<double>& down(Cache& cache, std::size_t c);
  std::vector<double> belief(Cache& cache, std::size_t c);
  std::vector<double> reduce(const std::vector<double>& values, const std::vector<std::uint32_t>& map,
                             std::size_t out_size, double tau) const;
  void check_tau(double tau) const;

  std::size_t variable_count_;
  std::vector<std::vector<std::size_t>> scopes_;
  std::vector<std::vector<double>> tables_;
  std::vector<Clique> cliques_;
  std::vector<std::size_t> variable_clique_;
  std::vector<std::size_t> factor_clique_;
  std::vector<std::size_t> roots_;
  std::vector<std::vector<std::size_t>> tree_members_;
  Cache max_cache_, sum_cache_;
  std::size_t messages_ = 0;
  double tau_floor_ = 1e-9;
};

struct TemperedMarginals {
  /// Natural-log marginal tables, each normalized to log-sum-exp zero.
  std::vector<std::vector<double>> tables;
  /// tau * Phi_tau, the component's share of the smooth dual.
  double log_partition = 0.0;
};

struct MaxMarginals {
  /// Unnormalized max-marginals f^(x_E) of the component objective.
  std::vector<std::vector<double>> tables;
  double component_max = 0.0;
};

struct ComponentMap {
  Assignment assignment;
  std::vector<bool> ties;
};

TemperedMarginals tempered_marginals(SubgraphEngine& engine, double tau, std::span<const std::size_t> targets);
MaxMarginals max_marginals(SubgraphEngine& engine, std::span<const std::size_t> targets);
ComponentMap component_map(SubgraphEngine& engine, double tie_tol = 1e-6);

}  // namespace lagrelax
