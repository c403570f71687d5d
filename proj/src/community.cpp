#include "faultloc/community.hpp"

#include <algorithm>
#include <limits>

namespace faultloc {

namespace {

constexpr double kZeroColumnRelTol = 1e-12;

}  // namespace

CorrelationMatrix column_correlations(const CMatrix& X,
                                      const std::vector<Phase>& column_phase,
                                      SensingMatrixKind kind,
                                      bool same_phase_only) {
  const Eigen::Index n = X.cols();
  if (same_phase_only && static_cast<Eigen::Index>(column_phase.size()) != n)
    throw ModelError("column phase labels do not match the matrix");

  CorrelationMatrix out;
  out.source_kind = kind;
  out.phase_filtered = same_phase_only;
  out.C = RMatrix::Zero(n, n);

  RVector norms(n);
  for (Eigen::Index j = 0; j < n; ++j) norms(j) = X.col(j).norm();
  double max_norm = n > 0 ? norms.maxCoeff() : 0.0;
  double floor = kZeroColumnRelTol * max_norm;

  for (Eigen::Index j = 0; j < n; ++j) {
    if (norms(j) <= floor) out.zero_columns.push_back(static_cast<int>(j));
    if (same_phase_only)
      out.phase_blocks[static_cast<std::size_t>(column_phase[j])].push_back(
          static_cast<int>(j));
  }

  std::vector<char> zero(static_cast<std::size_t>(n), 0);
  for (int j : out.zero_columns) zero[static_cast<std::size_t>(j)] = 1;

  for (Eigen::Index m = 0; m < n; ++m) {
    out.C(m, m) = 1.0;
    for (Eigen::Index j = m + 1; j < n; ++j) {
      if (same_phase_only && column_phase[m] != column_phase[j]) continue;
      if (zero[static_cast<std::size_t>(m)] || zero[static_cast<std::size_t>(j)])
        continue;
      double c = std::abs(X.col(m).dot(X.col(j))) / (norms(m) * norms(j));
      c = std::clamp(c, 0.0, 1.0);
      out.C(m, j) = c;
      out.C(j, m) = c;
    }
  }
  return out;
}

CommunityGraph threshold_adjacency(const CorrelationMatrix& corr, double tau) {
  if (!(tau > 0.0) || !(tau <= 1.0))
    throw ModelError("correlation threshold must lie in (0, 1]");
  const Eigen::Index n = corr.C.rows();

  CommunityGraph g;
  g.tau = tau;
  g.adjacency.assign(static_cast<std::size_t>(n),
                     std::vector<char>(static_cast<std::size_t>(n), 0));
  for (Eigen::Index m = 0; m < n; ++m)
    for (Eigen::Index j = 0; j < n; ++j)
      if (m != j && corr.C(m, j) >= tau)
        g.adjacency[static_cast<std::size_t>(m)][static_cast<std::size_t>(j)] = 1;

  // Connected components, never crossing phase blocks. Without the filter the
  // whole index range forms one block.
  std::vector<std::vector<int>> blocks;
  if (corr.phase_filtered) {
    for (const auto& blk : corr.phase_blocks)
      if (!blk.empty()) blocks.push_back(blk);
  } else {
    std::vector<int> all(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = static_cast<int>(i);
    blocks.push_back(std::move(all));
  }

  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  for (const auto& blk : blocks) {
    for (int start : blk) {
      if (seen[static_cast<std::size_t>(start)]) continue;
      std::vector<int> comp;
      std::vector<int> stack{start};
      seen[static_cast<std::size_t>(start)] = 1;
      while (!stack.empty()) {
        int at = stack.back();
        stack.pop_back();
        comp.push_back(at);
        for (int j : blk)
          if (!seen[static_cast<std::size_t>(j)] &&
              g.adjacency[static_cast<std::size_t>(at)][static_cast<std::size_t>(j)]) {
            seen[static_cast<std::size_t>(j)] = 1;
            stack.push_back(j);
          }
      }
      std::sort(comp.begin(), comp.end());
      g.communities.push_back(std::move(comp));
    }
  }
  std::sort(g.communities.begin(), g.communities.end(),
            [](const std::vector<int>& a, const std::vector<int>& b) {
              return a.front() < b.front();
            });
  return g;
}

std::vector<LabeledCommunity> extract_communities(
    const CommunityGraph& graph, const std::vector<NodeIndexMap::Entry>& labels,
    const std::vector<int>& zero_columns) {
  std::vector<LabeledCommunity> out;
  int id = 0;
  for (const auto& comp : graph.communities) {
    LabeledCommunity c;
    c.id = id++;
    c.columns = comp;
    for (int col : comp) c.members.push_back(labels.at(static_cast<std::size_t>(col)));
    c.unlocatable =
        comp.size() == 1 &&
        std::find(zero_columns.begin(), zero_columns.end(), comp.front()) !=
            zero_columns.end();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<NodeIndexMap::Entry> partition_column_labels(
    const PartitionedBlocks& blocks) {
  std::vector<NodeIndexMap::Entry> labels;
  labels.reserve(static_cast<std::size_t>(blocks.M));
  for (int p = 0; p < blocks.M; ++p)
    labels.push_back(
        blocks.index_map.entries[static_cast<std::size_t>(blocks.perm[p])]);
  return labels;
}

std::vector<Phase> partition_column_phases(const PartitionedBlocks& blocks) {
  std::vector<Phase> phases;
  phases.reserve(static_cast<std::size_t>(blocks.M));
  for (int p = 0; p < blocks.M; ++p)
    phases.push_back(
        blocks.index_map.entries[static_cast<std::size_t>(blocks.perm[p])].phase);
  return phases;
}

int PlacementScore::worst_community() const {
  int w = 0;
  for (int m : max_community) w = std::max(w, m);
  return w;
}

PlacementScore placement_quality(const AdmittanceMatrix& adm,
                                 const ImpedanceMatrix& imp,
                                 const Placement& placement, double tau,
                                 double rank_tol) {
  PartitionedBlocks blocks = partition(adm, imp, placement);
  PlacementScore score;
  score.K = blocks.K;
  score.M = blocks.M;

  for (int r = 0; r < blocks.K && !score.yaa_offdiagonal; ++r)
    for (int c = 0; c < blocks.K; ++c)
      if (r != c && std::abs(blocks.Y_aa(r, c)) != 0.0) {
        score.yaa_offdiagonal = true;
        break;
      }

  std::vector<NodeIndexMap::Entry> labels = partition_column_labels(blocks);
  std::vector<Phase> phases = partition_column_phases(blocks);

  CorrelationMatrix corr;
  if (blocks.M == blocks.K) {
    // Fully observed network: every node-phase stands alone.
    score.rank = 0;
    score.condition = 1.0;
    CMatrix identity = CMatrix::Identity(blocks.K, blocks.K);
    corr = column_correlations(identity, phases, SensingMatrixKind::WhitenedD);
  } else {
    WhitenedModel wm = build_whitened_model(blocks, rank_tol);
    score.rank = wm.rank;
    // Condition over every computed singular value, truncated or not.
    CMatrix T = coupling_matrix(blocks);
    Eigen::JacobiSVD<CMatrix> svd(T);
    const RVector& sv = svd.singularValues();
    double smin = sv(sv.size() - 1);
    score.condition = smin > 0.0 ? sv(0) / smin
                                 : std::numeric_limits<double>::infinity();
    corr = column_correlations(wm.D, phases, SensingMatrixKind::WhitenedD);
  }

  CommunityGraph graph = threshold_adjacency(corr, tau);
  std::vector<LabeledCommunity> comms =
      extract_communities(graph, labels, corr.zero_columns);
  score.unlocatable_count = 0;
  std::array<int, 3> total{};
  for (const LabeledCommunity& c : comms) {
    if (c.unlocatable) ++score.unlocatable_count;
    Phase p = c.members.front().phase;
    auto pi = static_cast<std::size_t>(p);
    score.num_communities[pi] += 1;
    score.max_community[pi] =
        std::max(score.max_community[pi], static_cast<int>(c.columns.size()));
    total[pi] += static_cast<int>(c.columns.size());
  }
  for (std::size_t pi = 0; pi < 3; ++pi)
    score.mean_community[pi] =
        score.num_communities[pi] > 0
            ? static_cast<double>(total[pi]) / score.num_communities[pi]
            : 0.0;
  return score;
}

PlacementScore placement_quality(const NetworkModel& model,
                                 const Placement& placement, double tau,
                                 double rank_tol) {
  AdmittanceMatrix adm = build_admittance(model);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  return placement_quality(adm, imp, placement, tau, rank_tol);
}

Placement greedy_placement(const NetworkModel& model, int n_sensors, double tau,
                           std::vector<std::string>* warnings) {
  if (n_sensors < 1) throw ModelError("placement needs at least one sensor");
  if (n_sensors > static_cast<int>(model.buses.size()))
    throw ModelError("more sensors than buses");

  std::vector<std::string> chosen;
  for (const ShuntSpec& sh : model.shunts) {
    if (sh.kind != ShuntKind::NortonSource) continue;
    if (std::find(chosen.begin(), chosen.end(), sh.bus) == chosen.end())
      chosen.push_back(sh.bus);
  }
  if (static_cast<int>(chosen.size()) > n_sensors) {
    if (warnings)
      warnings->push_back(
          "sensor budget does not cover all source buses; the fault current "
          "approximation will be unavailable");
    chosen.resize(static_cast<std::size_t>(n_sensors));
  }

  AdmittanceMatrix adm = build_admittance(model);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  NodeIndexMap map = build_index_map(model);

  while (static_cast<int>(chosen.size()) < n_sensors) {
    int best_bus = -1;
    int best_worst = 0;
    double best_cond = 0.0;
    for (std::size_t bi = 0; bi < model.buses.size(); ++bi) {
      const std::string& id = model.buses[bi].id;
      if (std::find(chosen.begin(), chosen.end(), id) != chosen.end()) continue;
      std::vector<std::string> trial = chosen;
      trial.push_back(id);
      int worst;
      double cond;
      try {
        PlacementScore score = placement_quality(
            adm, imp, make_placement(model, map, trial), tau);
        worst = score.worst_community();
        cond = score.condition;
      } catch (const Error&) {
        continue;  // degenerate trial placement
      }
      bool better = best_bus < 0 || worst < best_worst ||
                    (worst == best_worst && cond < best_cond);
      if (better) {
        best_bus = static_cast<int>(bi);
        best_worst = worst;
        best_cond = cond;
      }
    }
    if (best_bus < 0)
      throw NumericError("no feasible sensor addition exists");
    chosen.push_back(model.buses[static_cast<std::size_t>(best_bus)].id);
  }
  return make_placement(model, map, chosen);
}

std::vector<std::string> feeder_dfs_order(const NetworkModel& model) {
  if (model.buses.empty()) return {};
  std::string root = model.buses.front().id;
  for (const ShuntSpec& sh : model.shunts)
    if (sh.kind == ShuntKind::NortonSource) {
      root = sh.bus;
      break;
    }

  std::vector<std::string> order;
  std::vector<char> seen(model.buses.size(), 0);
  std::vector<int> stack{model.bus_position(root)};
  while (!stack.empty()) {
    int at = stack.back();
    stack.pop_back();
    if (at < 0 || seen[static_cast<std::size_t>(at)]) continue;
    seen[static_cast<std::size_t>(at)] = 1;
    order.push_back(model.buses[static_cast<std::size_t>(at)].id);
    // Push neighbours in reverse declaration order so the first-declared
    // branch is explored first.
    std::vector<int> nbrs;
    for (const LineSpec& ln : model.lines) {
      int f = model.bus_position(ln.from_bus);
      int t = model.bus_position(ln.to_bus);
      if (f == at && !seen[static_cast<std::size_t>(t)]) nbrs.push_back(t);
      if (t == at && !seen[static_cast<std::size_t>(f)]) nbrs.push_back(f);
    }
    for (auto it = nbrs.rbegin(); it != nbrs.rend(); ++it) stack.push_back(*it);
  }
  // Disconnected models cannot occur after validate(); keep any stragglers
  // appended in declaration order anyway.
  for (std::size_t i = 0; i < model.buses.size(); ++i)
    if (!seen[i]) order.push_back(model.buses[i].id);
  return order;
}

}  // namespace faultloc
