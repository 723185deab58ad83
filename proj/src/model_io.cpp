#include "lagrelax/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "lagrelax/error.hpp"

namespace lagrelax {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

/// Splits "key: value" into its parts; returns false if there is no colon.
bool split_directive(const std::string& s, std::string& key, std::string& value) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return false;
  key = trim(s.substr(0, colon));
  value = trim(s.substr(colon + 1));
  return true;
}

std::vector<double> parse_reals(const std::string& s, std::size_t line) {
  std::istringstream is(s);
  std::vector<double> out;
  std::string token;
  while (is >> token) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(token, &used));
      if (used != token.size()) fail(line, "bad number '" + token + "'");
    } catch (const std::logic_error&) {
      fail(line, "bad number '" + token + "'");
    }
  }
  return out;
}

std::vector<Vertex> parse_vertices(const std::string& s, std::size_t line) {
  std::istringstream is(s);
  std::vector<Vertex> out;
  std::string token;
  while (is >> token) {
    if (token.find_first_not_of("0123456789") != std::string::npos)
      fail(line, "bad vertex index '" + token + "'");
    out.push_back(std::stoull(token));
  }
  if (out.empty()) fail(line, "record lists no vertices");
  return out;
}

std::vector<std::string> split_fields(const std::string& s) {
  std::vector<std::string> fields;
  std::string::size_type start = 0;
  while (true) {
    const auto semi = s.find(';', start);
    fields.push_back(trim(s.substr(start, semi == std::string::npos ? std::string::npos : semi - start)));
    if (semi == std::string::npos) break;
    start = semi + 1;
  }
  return fields;
}

}  // namespace

AnyModel parse_model(std::istream& in) {
  std::string kind;
  std::optional<std::size_t> n;
  std::optional<GridShape> grid;
  bool boolean_labels = false;
  double constant = 0.0;
  std::map<VertexSet, double> coefficients;
  std::vector<VertexSet> edge_order;
  std::vector<CliqueTerm> cliques;
  std::set<VertexSet> seen_cliques;
  bool in_records = false;

  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = trim(raw.substr(0, raw.find('#')));
    if (s.empty()) continue;
    std::string key, value;
    if (!split_directive(s, key, value)) fail(line, "expected 'key: value'");

    if (key == "edge" || key == "clique") {
      if (kind.empty() || !n) fail(line, "records must follow 'kind' and 'n'");
      in_records = true;
      const auto fields = split_fields(value);
      std::vector<Vertex> raw_vertices = parse_vertices(fields[0], line);
      VertexSet vertices;
      try {
        vertices = make_vertex_set(raw_vertices);
      } catch (const InvalidInput& e) {
        fail(line, e.what());
      }
      if (vertices.back() >= *n) fail(line, "vertex index out of range");
      if (key == "edge") {
        if (kind != "discrete") fail(line, "'edge' records need kind: discrete");
        if (fields.size() != 2) fail(line, "expected 'edge: v... ; theta: <real>'");
        std::string fk, fv;
        if (!split_directive(fields[1], fk, fv) || fk != "theta") fail(line, "missing theta");
        const auto theta = parse_reals(fv, line);
        if (theta.size() != 1) fail(line, "theta takes one value");
        if (!coefficients.emplace(vertices, theta[0]).second) fail(line, "duplicate edge");
        edge_order.push_back(vertices);
      } else {
        if (kind != "gaussian") fail(line, "'clique' records need kind: gaussian");
        if (fields.size() != 3) fail(line, "expected 'clique: v... ; J: ... ; h: ...'");
        const auto k = raw_vertices.size();
        CliqueTerm term;
        term.vertices = raw_vertices;
        for (std::size_t f = 1; f < 3; ++f) {
          std::string fk, fv;
          if (!split_directive(fields[f], fk, fv)) fail(line, "malformed clique field");
          const auto values = parse_reals(fv, line);
          if (fk == "J") {
            if (values.size() != k * k) fail(line, "J needs " + std::to_string(k * k) + " values");
            term.information.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
            for (std::size_t a = 0; a < k; ++a)
              for (std::size_t b = 0; b < k; ++b)
                term.information(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = values[a * k + b];
          } else if (fk == "h") {
            if (values.size() != k) fail(line, "h needs " + std::to_string(k) + " values");
            term.potential = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(k));
          } else {
            fail(line, "unknown clique field '" + fk + "'");
          }
        }
        if (term.information.size() == 0 || term.potential.size() == 0)
          fail(line, "clique needs both J and h");
        if (!seen_cliques.insert(vertices).second) fail(line, "duplicate clique");
        cliques.push_back(std::move(term));
      }
      continue;
    }

    if (in_records) fail(line, "header directive '" + key + "' after records");
    if (key == "kind") {
      if (value != "discrete" && value != "gaussian") fail(line, "kind must be discrete or gaussian");
      kind = value;
    } else if (key == "n") {
      const auto v = parse_vertices(value, line);
      if (v.size() != 1 || v[0] == 0) fail(line, "n must be a positive integer");
      n = v[0];
    } else if (key == "grid") {
      const auto v = parse_vertices(value, line);
      if (v.size() != 2) fail(line, "grid takes rows and cols");
      grid = GridShape{v[0], v[1]};
    } else if (key == "labels") {
      if (value != "ising" && value != "boolean") fail(line, "labels must be ising or boolean");
      boolean_labels = value == "boolean";
    } else if (key == "constant") {
      const auto v = parse_reals(value, line);
      if (v.size() != 1) fail(line, "constant takes one value");
      constant = v[0];
    } else {
      fail(line, "unknown directive '" + key + "'");
    }
  }
  if (kind.empty()) throw ParseError("missing 'kind'");
  if (!n) throw ParseError("missing 'n'");

  try {
    if (kind == "discrete") {
      if (boolean_labels) {
        auto model = from_boolean_coefficients(*n, coefficients, grid);
        model.constant += constant;
        return model;
      }
      DiscreteFactorModel model{Hypergraph(*n, edge_order, grid), std::move(coefficients), constant};
      return model;
    }
    return GaussianInfoModel(*n, std::move(cliques), grid);
  } catch (const InvalidInput& e) {
    throw ParseError(e.what());
  }
}

AnyModel read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file " + path);
  return parse_model(in);
}

namespace {

void write_header(std::ostream& out, const char* kind, std::size_t n, const std::optional<GridShape>& grid) {
  out << "kind: " << kind << "\n" << "n: " << n << "\n";
  if (grid) out << "grid: " << grid->rows << " " << grid->cols << "\n";
}

void write_vertices(std::ostream& out, const VertexSet& e) {
  for (std::size_t i = 0; i < e.size(); ++i) out << (i ? " " : "") << e[i];
}

}  // namespace

void write_model(std::ostream& out, const DiscreteFactorModel& model) {
  const auto precision = out.precision(std::numeric_limits<double>::max_digits10);
  write_header(out, "discrete", model.vertex_count(), model.graph.grid());
  if (model.constant != 0.0) out << "constant: " << model.constant << "\n";
  const auto theta = model.theta();
  for (std::size_t e = 0; e < model.graph.edge_count(); ++e) {
    out << "edge: ";
    write_vertices(out, model.graph.edge(e));
    out << " ; theta: " << theta[e] << "\n";
  }
  out.precision(precision);
}

void write_model(std::ostream& out, const GaussianInfoModel& model) {
  const auto precision = out.precision(std::numeric_limits<double>::max_digits10);
  write_header(out, "gaussian", model.vertex_count(), model.graph().grid());
  for (const auto& t : model.terms()) {
    out << "clique: ";
    write_vertices(out, t.vertices);
    out << " ; J:";
    for (Eigen::Index a = 0; a < t.information.rows(); ++a)
      for (Eigen::Index b = 0; b < t.information.cols(); ++b) out << " " << t.information(a, b);
    out << " ; h:";
    for (Eigen::Index a = 0; a < t.potential.size(); ++a) out << " " << t.potential(a);
    out << "\n";
  }
  out.precision(precision);
}

void write_model_file(const std::string& path, const AnyModel& model) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write model file " + path);
  std::visit([&](const auto& m) { write_model(out, m); }, model);
}

}  // namespace lagrelax
