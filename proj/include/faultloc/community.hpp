#pragma once

#include "faultloc/localizer.hpp"

#include <array>

namespace faultloc {

enum class SensingMatrixKind { RawZa, WhitenedD };

/// Pairwise column alignment |x_m^H x_n| / (|x_m| |x_n|), clamped to [0,1].
/// With the phase filter active only same-phase pairs are populated; all
/// cross-phase entries stay zero. Columns with (numerically) zero norm get
/// zero correlation against everything and a unit diagonal; their indices are
/// listed in zero_columns (such node-phases are unlocatable).
struct CorrelationMatrix {
  RMatrix C;
  std::array<std::vector<int>, 3> phase_blocks;  // column indices per phase
  std::vector<int> zero_columns;
  SensingMatrixKind source_kind = SensingMatrixKind::WhitenedD;
  bool phase_filtered = true;
};

CorrelationMatrix column_correlations(const CMatrix& X,
                                      const std::vector<Phase>& column_phase,
                                      SensingMatrixKind kind,
                                      bool same_phase_only = true);

/// A[m][n] = 1 iff C(m,n) >= tau and m != n. Communities are the connected
/// components, computed within each phase block; ordering follows the
/// smallest member index. Requires tau in (0, 1].
struct CommunityGraph {
  double tau = 0.0;
  std::vector<std::vector<char>> adjacency;
  std::vector<std::vector<int>> communities;  // column index sets, sorted
};

CommunityGraph threshold_adjacency(const CorrelationMatrix& corr, double tau);

struct LabeledCommunity {
  int id = 0;
  std::vector<int> columns;
  std::vector<NodeIndexMap::Entry> members;
  bool unlocatable = false;  // singleton created by a zero column
};

std::vector<LabeledCommunity> extract_communities(
    const CommunityGraph& graph, const std::vector<NodeIndexMap::Entry>& labels,
    const std::vector<int>& zero_columns = {});

/// Column labels of a partition-ordered matrix (Z_a or D).
std::vector<NodeIndexMap::Entry> partition_column_labels(
    const PartitionedBlocks& blocks);

std::vector<Phase> partition_column_phases(const PartitionedBlocks& blocks);

/// Resolution figures for a sensor placement: rank and conditioning of the
/// coupling T = Y_au Y_uu^-1 and the community structure of the whitened
/// dictionary D at threshold tau. Adjacent monitored buses make Y_aa
/// non-diagonal, which the score flags.
struct PlacementScore {
  int K = 0;
  int M = 0;
  int rank = 0;            // retained singular values of T
  double condition = 1.0;  // s_max / s_min over all computed singular values
  bool yaa_offdiagonal = false;
  std::array<int, 3> num_communities{};
  std::array<int, 3> max_community{};
  std::array<double, 3> mean_community{};
  int unlocatable_count = 0;

  int worst_community() const;  // max over phases of max_community
};

PlacementScore placement_quality(const AdmittanceMatrix& adm,
                                 const ImpedanceMatrix& imp,
                                 const Placement& placement, double tau = 0.814,
                                 double rank_tol = 1e-10);

PlacementScore placement_quality(const NetworkModel& model,
                                 const Placement& placement, double tau = 0.814,
                                 double rank_tol = 1e-10);

/// Greedy sensor placement: source buses are forced in first (they must be
/// monitored for the fault-current approximation); each further step adds the
/// bus that minimizes the worst community size, tie-broken by condition
/// number and then bus declaration order. If n_sensors cannot cover the
/// sources a warning is emitted and the first n_sensors source buses are
/// returned.
Placement greedy_placement(const NetworkModel& model, int n_sensors,
                           double tau = 0.814,
                           std::vector<std::string>* warnings = nullptr);

/// Depth-first bus order from the first source bus; used to draw heatmaps so
/// electrically close buses sit next to each other.
std::vector<std::string> feeder_dfs_order(const NetworkModel& model);

}  // namespace faultloc
