#pragma once

#include "faultloc/netmodel.hpp"

namespace faultloc {

/// Phase-domain bus admittance matrix, M x M over the node-phase numbering.
/// Symmetric for reciprocal input data; nonsingular (condition gated at
/// assembly time).
struct AdmittanceMatrix {
  CMatrix Y;
  NodeIndexMap index_map;
};

/// Dense inverse of the admittance matrix, same numbering.
struct ImpedanceMatrix {
  CMatrix Z;
  NodeIndexMap index_map;
};

/// Monitored buses and the node-phase indices they expose. A sensor at a bus
/// observes every phase present there. available_indices is sorted.
struct Placement {
  std::vector<std::string> monitored;
  std::vector<int> available_indices;

  int K() const { return static_cast<int>(available_indices.size()); }
};

Placement make_placement(const NetworkModel& model, const NodeIndexMap& map,
                         const std::vector<std::string>& buses);

/// Blocks of Y and Z under the permutation that lists available node-phases
/// first (each group in ascending global index order).
///   perm[p]   = global index at permuted position p
///   pos[g]    = permuted position of global index g
struct PartitionedBlocks {
  CMatrix Z_aa, Z_au, Z_a;  // Z_a = [Z_aa | Z_au], K x M
  CMatrix Y_aa, Y_au, Y_uu;
  std::vector<int> perm;
  std::vector<int> pos;
  int K = 0;
  int M = 0;
  NodeIndexMap index_map;
};

AdmittanceMatrix build_admittance(const NetworkModel& model);

/// Z = Y^-1 with one step of residual correction; verifies
/// ||Z*Y - I||_F / sqrt(M) < 1e-9 and symmetrizes the result.
ImpedanceMatrix invert_to_impedance(const AdmittanceMatrix& adm);

PartitionedBlocks partition(const AdmittanceMatrix& adm,
                            const ImpedanceMatrix& imp,
                            const Placement& placement);

/// Available-block impedance via the reduction of the unavailable nodes:
///   Z_aa = (Y_aa - Y_au Y_uu^-1 Y_au^T)^-1
///   Z_au = -Z_aa Y_au Y_uu^-1
/// Plain transpose, not conjugate: Y is complex-symmetric.
/// Returns {Z_aa, Z_au} computed from the Y blocks alone.
std::pair<CMatrix, CMatrix> schur_z_blocks(const PartitionedBlocks& blocks);

/// T = Y_au * Y_uu^-1 (K x (M-K)); the coupling of available injections to
/// unavailable nodes. Throws NumericError naming an unobservable node-phase
/// when Y_uu is singular.
CMatrix coupling_matrix(const PartitionedBlocks& blocks);

}  // namespace faultloc
