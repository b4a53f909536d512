#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <iosfwd>
#include <vector>

namespace diffmean {

// Undirected multigraph given by its symmetric edge-multiplicity matrix.
class MultiGraph {
 public:
  explicit MultiGraph(Eigen::MatrixXi multiplicity);

  // Vertices 0..n-1; each (i, j, k) adds k edges between i and j.
  struct Edge {
    int i = 0;
    int j = 0;
    int multiplicity = 1;
  };
  static MultiGraph from_edges(int n, const std::vector<Edge>& edges);

  int size() const noexcept { return static_cast<int>(d_.rows()); }
  const Eigen::MatrixXi& multiplicity() const noexcept { return d_; }
  int degree(int i) const { return d_.row(i).sum(); }

 private:
  Eigen::MatrixXi d_;
};

struct VertexDistribution {
  std::vector<double> probs;

  void validate(int n) const;
  static VertexDistribution point_mass(int n, int j);
  static VertexDistribution uniform(int n);
};

// P_ij = d_ij / d_i. Throws DomainError on isolated vertices.
Eigen::MatrixXd transition_matrix(const MultiGraph& g);

// Integer matrix power by repeated squaring.
Eigen::MatrixXd matrix_power(const Eigen::MatrixXd& p, int t);

// L_t(i) = Σ_j Pr(X = v_j) (P^t)_ij.
Eigen::VectorXd graph_likelihood(const MultiGraph& g, int t, const VertexDistribution& dist);

enum class GraphMeanRule {
  Maximize,   // vertices of largest likelihood
  AsPrinted,  // literal argmin of the displayed definition
};

inline constexpr double kGraphTieTolerance = 1e-12;

// Sorted vertex indices attaining the optimum within kGraphTieTolerance.
std::vector<int> graph_diffusion_means(const MultiGraph& g, int t, const VertexDistribution& dist,
                                       GraphMeanRule rule = GraphMeanRule::Maximize);

// Edge list: one "i j multiplicity" per line (multiplicity optional, default
// 1), 0-based indices, '#' comments. An optional first line "n <count>"
// fixes the vertex count; otherwise it is 1 + the largest index.
MultiGraph read_edge_list(std::istream& in);
MultiGraph load_edge_list(const std::filesystem::path& path);

// JSON array of probabilities.
VertexDistribution parse_distribution_json(const std::string& text);
VertexDistribution load_distribution_json(const std::filesystem::path& path);

}  // namespace diffmean
