#pragma once

#include <iosfwd>
#include <span>
#include <string>

#include "json.hpp"

#include "lagrelax/baselines.hpp"
#include "lagrelax/discrete_lr.hpp"
#include "lagrelax/gaussian_lr.hpp"
#include "lagrelax/multiscale.hpp"

namespace lagrelax {

nlohmann::json to_json(const DiscreteSolveReport& r);
nlohmann::json to_json(const GaussianSolveReport& r);
nlohmann::json to_json(const MultiscaleReport& r);
nlohmann::json to_json(const BlockGaussSeidelReport& r);
nlohmann::json to_json(const LbpReport& r);
nlohmann::json to_json(const Eigen::VectorXd& v);

/// sweep,tau,g_smooth,g,best_primal,max_residual,wall_ms
void write_trace_csv(std::ostream& out, std::span<const DualTraceEntry> trace);
/// sweep,dual,mean_err_proxy,var_residual,max_residual,wall_ms
void write_trace_csv(std::ostream& out, std::span<const GaussianTraceEntry> trace);
/// sweep,change,mean_error,relative_error
void write_trace_csv(std::ostream& out, std::span<const BlockGaussSeidelEntry> trace);

/// Shortest text that reads back to the same double.
std::string format_number(double x);

void write_text_file(const std::string& path, const std::string& text);

}  // namespace lagrelax
