#include "lagrelax/log_table.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace lagrelax {

double soft_reduce(std::span<const double> values, double tau) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) hi = std::max(hi, v);
  if (tau == 0.0 || !std::isfinite(hi)) return hi;
  double sum = 0.0;
  for (double v : values) sum += std::exp((v - hi) / tau);
  return hi + tau * std::log(sum);
}

int feature_sign(std::size_t index) { return (std::popcount(index) & 1) ? -1 : 1; }

std::vector<double> feature_table(std::size_t arity, double theta) {
  std::vector<double> t(table_size(arity));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = theta * feature_sign(i);
  return t;
}

double feature_moment(std::span<const double> scaled, double tau) {
  double m = 0.0;
  for (std::size_t i = 0; i < scaled.size(); ++i) m += feature_sign(i) * std::exp(scaled[i] / tau);
  return m;
}

std::vector<double> monomial_coefficients(std::span<const double> table) {
  // Walsh-Hadamard transform with the +1/-1 state convention.
  std::vector<double> c(table.begin(), table.end());
  for (std::size_t len = 1; len < c.size(); len <<= 1)
    for (std::size_t i = 0; i < c.size(); i += len << 1)
      for (std::size_t j = i; j < i + len; ++j) {
        const double a = c[j], b = c[j + len];
        c[j] = a + b;
        c[j + len] = a - b;
      }
  const double scale = 1.0 / static_cast<double>(c.size());
  for (double& v : c) v *= scale;
  return c;
}

std::vector<std::uint32_t> projection_map(std::span<const std::size_t> outer,
                                          std::span<const std::size_t> inner) {
  std::vector<std::size_t> position(inner.size());
  for (std::size_t j = 0; j < inner.size(); ++j) {
    auto it = std::find(outer.begin(), outer.end(), inner[j]);
    if (it == outer.end()) throw std::logic_error("projection_map: inner scope not contained in outer");
    position[j] = static_cast<std::size_t>(it - outer.begin());
  }
  std::vector<std::uint32_t> map(table_size(outer.size()));
  for (std::size_t idx = 0; idx < map.size(); ++idx) {
    std::uint32_t sub = 0;
    for (std::size_t j = 0; j < inner.size(); ++j) sub |= static_cast<std::uint32_t>((idx >> position[j]) & 1U) << j;
    map[idx] = sub;
  }
  return map;
}

}  // namespace lagrelax
