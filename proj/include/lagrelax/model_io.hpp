#pragma once

#include <iosfwd>
#include <string>
#include <variant>

#include "lagrelax/model.hpp"

namespace lagrelax {

using AnyModel = std::variant<DiscreteFactorModel, GaussianInfoModel>;

/// Model text format, one directive per line; '#' starts a comment.
///
///   kind: discrete | gaussian
///   n: <vertex count>
///   grid: <rows> <cols>            optional, row-major vertex layout
///   labels: ising | boolean        discrete only, default ising
///   constant: <real>               discrete only, default 0
///   edge: v1 v2 ... ; theta: <real>
///   clique: v1 ... vk ; J: <k*k reals, row-major> ; h: <k reals>
///
/// Header directives (kind, n, grid, labels, constant) must precede records.
/// With `labels: boolean` the theta values are coefficients on prod y_v with
/// y in {0,1} and are converted to the Ising convention at ingest.
/// Duplicate hyperedges are rejected.
AnyModel parse_model(std::istream& in);
AnyModel read_model_file(const std::string& path);

void write_model(std::ostream& out, const DiscreteFactorModel& model);
void write_model(std::ostream& out, const GaussianInfoModel& model);
void write_model_file(const std::string& path, const AnyModel& model);

}  // namespace lagrelax
