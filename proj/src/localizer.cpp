#include "faultloc/localizer.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <numeric>

namespace faultloc {

std::string Candidate::label() const {
  std::string s = bus;
  for (Phase p : phases.list()) {
    s.push_back('-');
    s.push_back(phase_letter(p));
  }
  return s;
}

CandidateSet enumerate_candidates(const NetworkModel& model,
                                  const NodeIndexMap& map,
                                  const FaultType& type) {
  CandidateSet set;
  set.type = type;
  for (const BusSpec& bus : model.buses) {
    if (!type.phases.subset_of(bus.phases)) continue;
    Candidate c;
    c.bus = bus.id;
    c.phases = type.phases;
    for (Phase p : type.phases.list()) c.support.push_back(map.index_of(bus.id, p));
    set.candidates.push_back(std::move(c));
  }
  if (set.candidates.empty())
    throw ModelError("no bus carries all phases of the fault type '" +
                     type.phases.str() + "'");
  return set;
}

WhitenedModel build_whitened_model(const PartitionedBlocks& blocks,
                                   double rank_tol) {
  if (!(rank_tol > 0.0) || !(rank_tol < 1.0))
    throw ModelError("rank tolerance must lie in (0,1)");
  WhitenedModel wm;
  wm.rank_tol = rank_tol;
  const int K = blocks.K;
  const int U = blocks.M - blocks.K;

  if (U == 0) {
    // Full observability: nothing to whiten.
    wm.U = CMatrix::Identity(K, K);
    wm.singular_values = RVector::Ones(K);
    wm.W = CMatrix(0, K);
    wm.R = CMatrix::Identity(K, K);
    wm.D = CMatrix::Identity(K, K);
    wm.rank = K;
    return wm;
  }

  CMatrix T = coupling_matrix(blocks);
  Eigen::JacobiSVD<CMatrix> svd(T, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RVector& sv = svd.singularValues();
  if (sv.size() == 0 || !(sv(0) > 0.0))
    throw NumericError(
        "coupling between available and unavailable nodes is identically "
        "zero; the placement observes nothing");

  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * sv(0)) ++rank;

  wm.U = svd.matrixU().leftCols(rank);
  wm.W = svd.matrixV().leftCols(rank);
  wm.singular_values = sv.head(rank);
  wm.rank = rank;

  CMatrix Sinv = wm.singular_values.cast<Complex>().cwiseInverse().asDiagonal();
  wm.R = Sinv * wm.U.adjoint();

  wm.D.resize(rank, blocks.M);
  wm.D.leftCols(K) = wm.R;
  wm.D.rightCols(U) = -wm.W.adjoint();
  return wm;
}

std::vector<int> ambiguity_set(const std::vector<double>& objectives,
                               double epsilon) {
  if (objectives.empty()) return {};
  if (!(epsilon >= 0.0)) throw ModelError("epsilon must be non-negative");
  double lo = *std::min_element(objectives.begin(), objectives.end());
  double hi = *std::max_element(objectives.begin(), objectives.end());
  double cut = (1.0 + epsilon) * lo + 1e-18 * hi;
  std::vector<int> out;
  for (std::size_t i = 0; i < objectives.size(); ++i)
    if (objectives[i] <= cut) out.push_back(static_cast<int>(i));
  std::stable_sort(out.begin(), out.end(), [&](int a, int b) {
    return objectives[static_cast<std::size_t>(a)] <
           objectives[static_cast<std::size_t>(b)];
  });
  return out;
}

namespace {

LocalizationResult rank_candidates(std::vector<double> objectives,
                                   MetricKind metric, double epsilon) {
  LocalizationResult res;
  res.metric = metric;
  res.epsilon = epsilon;
  res.ranking.resize(objectives.size());
  std::iota(res.ranking.begin(), res.ranking.end(), 0);
  std::stable_sort(res.ranking.begin(), res.ranking.end(), [&](int a, int b) {
    return objectives[static_cast<std::size_t>(a)] <
           objectives[static_cast<std::size_t>(b)];
  });
  res.winner = res.ranking.empty() ? -1 : res.ranking.front();
  res.ambiguity = ambiguity_set(objectives, epsilon);
  res.objectives = std::move(objectives);
  return res;
}

void check_fault_current(const CVector& fault_current,
                         const CandidateSet& candidates) {
  if (fault_current.size() !=
      static_cast<Eigen::Index>(candidates.type.phases.count()))
    throw ModelError("fault current vector has " +
                     std::to_string(fault_current.size()) + " entries, fault "
                     "type has " +
                     std::to_string(candidates.type.phases.count()) +
                     " phases");
}

}  // namespace

LocalizationResult localize_raw(const MeasurementSet& meas,
                                const PartitionedBlocks& blocks,
                                const CVector& fault_current,
                                const CandidateSet& candidates,
                                double epsilon) {
  check_fault_current(fault_current, candidates);
  if (meas.dV_a.size() != blocks.K || meas.dI_a.size() != blocks.K)
    throw ModelError("measurement dimension does not match the partition");

  CVector base = meas.dV_a - blocks.Z_aa * meas.dI_a;
  std::vector<double> obj;
  obj.reserve(candidates.candidates.size());
  for (const Candidate& cand : candidates.candidates) {
    CVector r = base;
    for (std::size_t k = 0; k < cand.support.size(); ++k) {
      int col = blocks.pos[static_cast<std::size_t>(cand.support[k])];
      r -= fault_current(static_cast<Eigen::Index>(k)) * blocks.Z_a.col(col);
    }
    obj.push_back(r.squaredNorm());
  }
  return rank_candidates(std::move(obj), MetricKind::Raw, epsilon);
}

LocalizationResult localize_whitened(const MeasurementSet& meas,
                                     const PartitionedBlocks& blocks,
                                     const WhitenedModel& wm,
                                     const CVector& fault_current,
                                     const CandidateSet& candidates,
                                     double epsilon) {
  check_fault_current(fault_current, candidates);
  if (meas.dV_a.size() != blocks.K || meas.dI_a.size() != blocks.K)
    throw ModelError("measurement dimension does not match the partition");
  if (wm.D.cols() != blocks.M)
    throw ModelError("whitened model does not match the partition");

  Eigen::FullPivLU<CMatrix> lu(blocks.Z_aa);
  if (!lu.isInvertible())
    throw NumericError("Z_aa is singular; cannot form the whitened residual");
  CVector b = lu.solve(meas.dV_a) - meas.dI_a;
  CVector bh = wm.R * b;

  std::vector<double> obj;
  obj.reserve(candidates.candidates.size());
  for (const Candidate& cand : candidates.candidates) {
    CVector r = bh;
    for (std::size_t k = 0; k < cand.support.size(); ++k) {
      int col = blocks.pos[static_cast<std::size_t>(cand.support[k])];
      r -= fault_current(static_cast<Eigen::Index>(k)) * wm.D.col(col);
    }
    obj.push_back(r.squaredNorm());
  }
  return rank_candidates(std::move(obj), MetricKind::Whitened, epsilon);
}

}  // namespace faultloc
