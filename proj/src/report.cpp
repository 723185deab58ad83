#include "lagrelax/report.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>

#include "lagrelax/error.hpp"

namespace lagrelax {

namespace {

// JSON has no NaN or infinity; those become null.
nlohmann::json number(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  nlohmann::json a = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

nlohmann::json to_json(const DiscreteSolveReport& r) {
  nlohmann::json j;
  j["strategy"] = r.strategy;
  j["components"] = r.components;
  j["augmented_vertices"] = r.augmented_vertices;
  j["final_dual"] = number(r.final_dual);
  j["best_primal"] = number(r.best_primal);
  j["best_assignment"] = r.best_assignment;
  j["gap"] = number(r.final_dual - r.best_primal);
  j["gap_flag"] = r.gap;
  j["estimate"] = r.estimate;
  j["tie_nodes"] = r.tie_nodes;
  j["consistent_decode"] = r.consistent_decode;
  j["sweeps"] = r.sweeps;
  j["messages"] = r.messages;
  nlohmann::json stages = nlohmann::json::array();
  for (auto [tau, g] : r.stage_duals) stages.push_back({{"tau", tau}, {"g_smooth", number(g)}});
  j["stage_duals"] = stages;
  nlohmann::json resummed = nlohmann::json::array();
  for (const auto& m : r.resummed) resummed.push_back({number(m[0]), number(m[1])});
  j["resummed_max_marginals"] = resummed;
  return j;
}

nlohmann::json to_json(const GaussianSolveReport& r) {
  nlohmann::json j;
  j["strategy"] = r.strategy;
  j["dual"] = number(r.dual);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["means"] = to_json(r.means);
  j["variance_bound"] = to_json(r.variance_bound);
  j["tighter_variance_bound"] = to_json(r.tighter_variance_bound);
  j["max_consistency_residual"] = number(r.max_consistency_residual);
  j["all_factorizations_ok"] = r.all_factorizations_ok;
  return j;
}

nlohmann::json to_json(const MultiscaleReport& r) {
  nlohmann::json j;
  j["dual"] = number(r.dual);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["means"] = to_json(r.means);
  j["max_consistency_residual"] = number(r.max_consistency_residual);
  nlohmann::json err = nlohmann::json::array();
  for (double e : r.relative_error) err.push_back(number(e));
  j["relative_error"] = err;
  return j;
}

nlohmann::json to_json(const BlockGaussSeidelReport& r) {
  nlohmann::json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["means"] = to_json(r.means);
  return j;
}

nlohmann::json to_json(const LbpReport& r) {
  nlohmann::json j;
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["broke_down"] = r.broke_down;
  j["means"] = to_json(r.means);
  j["variances"] = to_json(r.variances);
  return j;
}

void write_trace_csv(std::ostream& out, std::span<const DualTraceEntry> trace) {
  out << "sweep,tau,g_smooth,g,best_primal,max_residual,wall_ms\n";
  for (const auto& e : trace)
    out << e.sweep << ',' << format_number(e.tau) << ',' << format_number(e.smooth_dual) << ','
        << format_number(e.dual) << ',' << format_number(e.best_primal) << ',' << format_number(e.max_residual) << ','
        << format_number(e.wall_ms) << '\n';
}

void write_trace_csv(std::ostream& out, std::span<const GaussianTraceEntry> trace) {
  out << "sweep,dual,mean_err_proxy,var_residual,max_residual,wall_ms\n";
  for (const auto& e : trace)
    out << e.sweep << ',' << format_number(e.dual) << ',' << format_number(e.mean_err_proxy) << ','
        << format_number(e.var_residual) << ',' << format_number(e.max_residual) << ',' << format_number(e.wall_ms)
        << '\n';
}

void write_trace_csv(std::ostream& out, std::span<const BlockGaussSeidelEntry> trace) {
  out << "sweep,change,mean_error,relative_error\n";
  for (const auto& e : trace)
    out << e.sweep << ',' << format_number(e.change) << ',' << format_number(e.mean_error) << ','
        << format_number(e.relative_error) << '\n';
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw InvalidInput("cannot write " + path);
  f << text;
}

}  // namespace lagrelax
