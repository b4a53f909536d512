#include "diffmean/graph.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>

#include "diffmean/error.hpp"

namespace diffmean {

MultiGraph::MultiGraph(Eigen::MatrixXi multiplicity) : d_(std::move(multiplicity)) {
  if (d_.rows() < 1 || d_.rows() != d_.cols()) throw DomainError("multiplicity matrix must be square and nonempty");
  for (int i = 0; i < d_.rows(); ++i) {
    for (int j = 0; j < d_.cols(); ++j) {
      if (d_(i, j) < 0) throw DomainError("edge multiplicities must be nonnegative");
      if (d_(i, j) != d_(j, i)) throw DomainError("multiplicity matrix must be symmetric");
    }
  }
}

MultiGraph MultiGraph::from_edges(int n, const std::vector<Edge>& edges) {
  if (n < 1) throw DomainError("graph needs at least one vertex");
  Eigen::MatrixXi d = Eigen::MatrixXi::Zero(n, n);
  for (const Edge& e : edges) {
    if (e.i < 0 || e.j < 0 || e.i >= n || e.j >= n) throw DomainError("edge endpoint out of range");
    if (e.multiplicity < 0) throw DomainError("edge multiplicity must be nonnegative");
    d(e.i, e.j) += e.multiplicity;
    if (e.i != e.j) d(e.j, e.i) += e.multiplicity;
  }
  return MultiGraph(std::move(d));
}

void VertexDistribution::validate(int n) const {
  if (static_cast<int>(probs.size()) != n) throw DomainError("distribution length does not match vertex count");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw DomainError("vertex probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("vertex probabilities must sum to 1");
}

VertexDistribution VertexDistribution::point_mass(int n, int j) {
  if (j < 0 || j >= n) throw DomainError("point mass vertex out of range");
  VertexDistribution d{std::vector<double>(n, 0.0)};
  d.probs[j] = 1.0;
  return d;
}

VertexDistribution VertexDistribution::uniform(int n) {
  if (n < 1) throw DomainError("uniform distribution needs at least one vertex");
  return VertexDistribution{std::vector<double>(n, 1.0 / n)};
}

Eigen::MatrixXd transition_matrix(const MultiGraph& g) {
  const int n = g.size();
  Eigen::MatrixXd p(n, n);
  for (int i = 0; i < n; ++i) {
    const int deg = g.degree(i);
    if (deg < 1) throw DomainError("vertex " + std::to_string(i) + " is isolated; the walk is undefined");
    p.row(i) = g.multiplicity().row(i).cast<double>() / static_cast<double>(deg);
  }
  return p;
}

Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, int t) {
  if (t < 0) throw DomainError("matrix power must be nonnegative");
  Eigen::MatrixXd result = Eigen::MatrixXd::Identity(p.rows(), p.cols());
  Eigen::MatrixXd base = p;
  while (t > 0) {
    if (t & 1) result = result * base;
    t >>= 1;
    if (t > 0) base = base * base;
  }
  return result;
}

Eigen::VectorXd graph_likelihood(const MultiGraph& g, int t, const VertexDistribution& dist) {
  if (t < 1) throw DomainError("graph diffusion time must be a positive integer");
  dist.validate(g.size());
  const Eigen::Map<const Eigen::VectorXd> px(dist.probs.data(), static_cast<Eigen::Index>(dist.probs.size()));
  return matrix_power(transition_matrix(g), t) * px;
}

std::vector<int> graph_diffusion_means(const MultiGraph& g, int t, const VertexDistribution& dist,
                                       GraphMeanRule rule) {
  const Eigen::VectorXd l = graph_likelihood(g, t, dist);
  const double best = rule == GraphMeanRule::Maximize ? l.maxCoeff() : l.minCoeff();
  std::vector<int> out;
  for (int i = 0; i < l.size(); ++i) {
    if (std::abs(l[i] - best) <= kGraphTieTolerance) out.push_back(i);
  }
  return out;
}

MultiGraph read_edge_list(std::istream& in) {
  std::vector<MultiGraph::Edge> edges;
  int n = -1;
  int max_index = -1;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    std::string first;
    if (!(row >> first)) continue;
    if (first == "n") {
      if (!(row >> n) || n < 1) throw ParseError("line " + std::to_string(line_no) + ": bad vertex count", line_no);
      continue;
    }
    MultiGraph::Edge e;
    std::string extra;
    try {
      std::size_t used = 0;
      e.i = std::stoi(first, &used);
      if (used != first.size()) throw std::invalid_argument("index");
    } catch (const std::exception&) {
      throw ParseError("line " + std::to_string(line_no) + ": expected 'i j [multiplicity]'", line_no);
    }
    if (!(row >> e.j)) throw ParseError("line " + std::to_string(line_no) + ": expected 'i j [multiplicity]'", line_no);
    if (!(row >> e.multiplicity)) {
      e.multiplicity = 1;
      row.clear();
    }
    if (row >> extra) throw ParseError("line " + std::to_string(line_no) + ": trailing fields", line_no);
    if (e.i < 0 || e.j < 0 || e.multiplicity < 0)
      throw ParseError("line " + std::to_string(line_no) + ": negative index or multiplicity", line_no);
    max_index = std::max({max_index, e.i, e.j});
    edges.push_back(e);
  }
  if (n < 0) n = max_index + 1;
  if (n < 1) throw ParseError("edge list defines no vertices", line_no);
  if (max_index >= n) throw ParseError("edge index exceeds declared vertex count", line_no);
  return MultiGraph::from_edges(n, edges);
}

MultiGraph load_edge_list(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  return read_edge_list(in);
}

VertexDistribution parse_distribution_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("distribution JSON: ") + e.what(), 0);
  }
  if (!j.is_array()) throw ParseError("distribution JSON must be an array of numbers", 0);
  VertexDistribution d;
  for (const auto& v : j) {
    if (!v.is_number()) throw ParseError("distribution JSON must be an array of numbers", 0);
    d.probs.push_back(v.get<double>());
  }
  return d;
}

VertexDistribution load_distribution_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_distribution_json(buf.str());
}

}  // namespace diffmean
