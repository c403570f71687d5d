#pragma once

#include "faultloc/faultsim.hpp"

namespace faultloc {

/// One hypothesized fault location: a bus plus the faulted phases. `support`
/// holds the global node-phase indices carrying the injection, in A<B<C
/// phase order, aligned with the fault-current vector.
struct Candidate {
  std::string bus;
  PhaseSet phases;
  std::vector<int> support;

  std::string label() const;  // "852-B-C"
};

struct CandidateSet {
  FaultType type;
  std::vector<Candidate> candidates;
};

/// Every bus carrying all faulted phases, in bus declaration order. Throws
/// ModelError when no bus qualifies.
CandidateSet enumerate_candidates(const NetworkModel& model,
                                  const NodeIndexMap& map,
                                  const FaultType& type);

/// Rank-revealing decomposition of the coupling T = Y_au Y_uu^-1 = U S W^H,
/// truncated at singular values <= rank_tol * s_max. The whitener
/// R = S^-1 U^H maps the available-side residual into a coordinate frame
/// where the unavailable-injection interference has unit covariance
/// structure; D = [S^-1 U^H | -W^H] is the matched dictionary over all
/// node-phases in the partition ordering.
///
/// Full observability (M == K) degenerates to identity whitening: U = I,
/// S = ones, W empty, D = I. (The decomposition has nothing to truncate.)
struct WhitenedModel {
  CMatrix U;              // K x rank
  RVector singular_values;  // rank
  CMatrix W;              // (M-K) x rank
  CMatrix R;              // rank x K
  CMatrix D;              // rank x M, partition ordering
  int rank = 0;
  double rank_tol = 0.0;
};

WhitenedModel build_whitened_model(const PartitionedBlocks& blocks,
                                   double rank_tol = 1e-10);

enum class MetricKind { Raw, Whitened };

struct LocalizationResult {
  MetricKind metric = MetricKind::Raw;
  double epsilon = 0.25;
  std::vector<double> objectives;  // per candidate, enumeration order
  std::vector<int> ranking;        // candidate indices, best first
  int winner = -1;                 // ranking.front()
  std::vector<int> ambiguity;      // near-minimal candidates, best first
};

/// Least-squares residual against the full available-block model:
///   || dV_a - Z_aa dI_a - Z_a i_E(candidate) ||^2
/// fault_current entries follow type.phases (A<B<C) and are placed on each
/// candidate's support. Ties rank by enumeration order.
LocalizationResult localize_raw(const MeasurementSet& meas,
                                const PartitionedBlocks& blocks,
                                const CVector& fault_current,
                                const CandidateSet& candidates,
                                double epsilon = 0.25);

/// Whitened residual || R (Z_aa^-1 dV_a - dI_a) - D i_E(candidate) ||^2.
LocalizationResult localize_whitened(const MeasurementSet& meas,
                                     const PartitionedBlocks& blocks,
                                     const WhitenedModel& wm,
                                     const CVector& fault_current,
                                     const CandidateSet& candidates,
                                     double epsilon = 0.25);

/// Indices of all objectives within (1+epsilon) of the minimum, ordered by
/// ascending objective (ties by index). An absolute floor of 1e-18 times the
/// largest objective keeps exactly-tied near-zero minima in one set.
std::vector<int> ambiguity_set(const std::vector<double>& objectives,
                               double epsilon);

}  // namespace faultloc
