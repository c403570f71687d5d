#include "faultloc/matrices.hpp"

#include <Eigen/SVD>

#include <algorithm>

namespace faultloc {

namespace {

constexpr double kConditionLimit = 1e14;

std::vector<int> phase_indices(const NodeIndexMap& map, const std::string& bus,
                               PhaseSet phases) {
  std::vector<int> idx;
  for (Phase p : phases.list()) {
    int i = map.index_of(bus, p);
    if (i < 0)
      throw ModelError("node-phase " + node_phase_label(bus, p) +
                       " is not in the index map");
    idx.push_back(i);
  }
  return idx;
}

// One Newton correction of X ~ A^-1: X <- X (2I - A X). Squares the residual.
// One Newton step X <- X + X(I - AX), applied only when the measured residual
// warrants it and kept only when it measures better. A well-conditioned solve
// already sits at the evaluation roundoff floor; stepping there adds noise.
void refine_inverse(const CMatrix& A, CMatrix& X) {
  const Eigen::Index n = A.rows();
  const double scale = std::sqrt(static_cast<double>(n));
  CMatrix R = CMatrix::Identity(n, n) - A * X;
  double before = R.norm() / scale;
  if (before <= 1e-10) return;
  CMatrix refined = X + X * R;
  refined = 0.5 * (refined + refined.transpose()).eval();
  double after = (CMatrix::Identity(n, n) - A * refined).norm() / scale;
  if (after < before) X = std::move(refined);
}

}  // namespace

Placement make_placement(const NetworkModel& model, const NodeIndexMap& map,
                         const std::vector<std::string>& buses) {
  if (buses.empty()) throw ModelError("placement has no monitored buses");
  Placement pl;
  for (const std::string& id : buses) {
    const BusSpec* b = model.find_bus(id);
    if (!b) throw ModelError("placement references unknown bus '" + id + "'");
    if (std::find(pl.monitored.begin(), pl.monitored.end(), id) !=
        pl.monitored.end())
      throw ModelError("placement lists bus '" + id + "' twice");
    pl.monitored.push_back(id);
    for (Phase p : b->phases.list())
      pl.available_indices.push_back(map.index_of(id, p));
  }
  std::sort(pl.available_indices.begin(), pl.available_indices.end());
  return pl;
}

AdmittanceMatrix build_admittance(const NetworkModel& model) {
  model.validate();
  NodeIndexMap map = build_index_map(model);
  const int M = map.size();
  CMatrix Y = CMatrix::Zero(M, M);

  for (const LineSpec& ln : model.lines) {
    const int p = ln.phases.count();
    Eigen::FullPivLU<CMatrix> lu(ln.series_impedance);
    if (!lu.isInvertible())
      throw NumericError("line " + ln.from_bus + "-" + ln.to_bus +
                         " has a singular series impedance");
    CMatrix yprim = lu.solve(CMatrix::Identity(p, p));
    CMatrix yhalf = 0.5 * ln.shunt_admittance;
    std::vector<int> fi = phase_indices(map, ln.from_bus, ln.phases);
    std::vector<int> ti = phase_indices(map, ln.to_bus, ln.phases);
    for (int r = 0; r < p; ++r)
      for (int c = 0; c < p; ++c) {
        Y(fi[r], fi[c]) += yprim(r, c) + yhalf(r, c);
        Y(ti[r], ti[c]) += yprim(r, c) + yhalf(r, c);
        Y(fi[r], ti[c]) -= yprim(r, c);
        Y(ti[r], fi[c]) -= yprim(r, c);
      }
  }

  for (const ShuntSpec& sh : model.shunts) {
    const BusSpec* bus = model.find_bus(sh.bus);
    std::vector<int> idx = phase_indices(map, sh.bus, sh.phases);
    std::vector<Phase> phl = sh.phases.list();
    for (std::size_t k = 0; k < idx.size(); ++k) {
      Complex y;
      switch (sh.kind) {
        case ShuntKind::ConstantImpedanceLoad:
        case ShuntKind::CapacitorOrReactor:
        case ShuntKind::NortonSource:
          y = 1.0 / sh.impedance[k];
          break;
        case ShuntKind::ConstantPowerLoad: {
          // Nominal-voltage equivalent: z_eq = |V|^2 / conj(S).
          double v = bus->nominal_voltage;
          y = std::conj(sh.power[k]) / (v * v);
          break;
        }
      }
      Y(idx[k], idx[k]) += y;
    }
  }

  Eigen::JacobiSVD<CMatrix> svd(Y);
  const auto& sv = svd.singularValues();
  double smin = sv(sv.size() - 1);
  if (!(smin > 0.0) || sv(0) / smin > kConditionLimit)
    throw NumericError(
        "assembled admittance matrix is numerically singular: some node-phase "
        "lacks a shunt path to the reference");

  return AdmittanceMatrix{std::move(Y), std::move(map)};
}

ImpedanceMatrix invert_to_impedance(const AdmittanceMatrix& adm) {
  const Eigen::Index M = adm.Y.rows();
  Eigen::PartialPivLU<CMatrix> lu(adm.Y);
  CMatrix Z = lu.solve(CMatrix::Identity(M, M));
  Z = 0.5 * (Z + Z.transpose()).eval();
  refine_inverse(adm.Y, Z);

  double resid = (Z * adm.Y - CMatrix::Identity(M, M)).norm() /
                 std::sqrt(static_cast<double>(M));
  if (!(resid < 1e-9))
    throw NumericError("impedance matrix inversion failed: residual " +
                       format_g17(resid));
  return ImpedanceMatrix{std::move(Z), adm.index_map};
}

PartitionedBlocks partition(const AdmittanceMatrix& adm,
                            const ImpedanceMatrix& imp,
                            const Placement& placement) {
  const int M = static_cast<int>(adm.Y.rows());
  const int K = placement.K();
  if (K == 0) throw ModelError("placement exposes no node-phases");
  if (K > M) throw ModelError("placement is larger than the network");

  std::vector<char> avail(static_cast<std::size_t>(M), 0);
  for (int i : placement.available_indices) {
    if (i < 0 || i >= M)
      throw ModelError("placement index out of range: " + std::to_string(i));
    avail[static_cast<std::size_t>(i)] = 1;
  }

  PartitionedBlocks b;
  b.K = K;
  b.M = M;
  b.index_map = adm.index_map;
  b.perm.reserve(static_cast<std::size_t>(M));
  for (int i = 0; i < M; ++i)
    if (avail[static_cast<std::size_t>(i)]) b.perm.push_back(i);
  for (int i = 0; i < M; ++i)
    if (!avail[static_cast<std::size_t>(i)]) b.perm.push_back(i);
  b.pos.assign(static_cast<std::size_t>(M), -1);
  for (int p = 0; p < M; ++p) b.pos[static_cast<std::size_t>(b.perm[p])] = p;

  const int U = M - K;
  b.Z_aa.resize(K, K);
  b.Z_au.resize(K, U);
  b.Z_a.resize(K, M);
  b.Y_aa.resize(K, K);
  b.Y_au.resize(K, U);
  b.Y_uu.resize(U, U);
  for (int r = 0; r < K; ++r) {
    for (int c = 0; c < M; ++c) {
      Complex z = imp.Z(b.perm[r], b.perm[c]);
      b.Z_a(r, c) = z;
      if (c < K) {
        b.Z_aa(r, c) = z;
        b.Y_aa(r, c) = adm.Y(b.perm[r], b.perm[c]);
      } else {
        b.Z_au(r, c - K) = z;
        b.Y_au(r, c - K) = adm.Y(b.perm[r], b.perm[c]);
      }
    }
  }
  for (int r = 0; r < U; ++r)
    for (int c = 0; c < U; ++c)
      b.Y_uu(r, c) = adm.Y(b.perm[K + r], b.perm[K + c]);
  return b;
}

CMatrix coupling_matrix(const PartitionedBlocks& blocks) {
  const int U = blocks.M - blocks.K;
  if (U == 0) return CMatrix(blocks.K, 0);
  Eigen::FullPivLU<CMatrix> lu(blocks.Y_uu);
  if (!lu.isInvertible()) {
    // Name the node-phase that carries the null space.
    CMatrix kernel = lu.kernel();
    int worst = 0;
    double best = -1.0;
    for (int r = 0; r < U; ++r) {
      double m = std::abs(kernel(r, 0));
      if (m > best) {
        best = m;
        worst = r;
      }
    }
    throw NumericError(
        "Y_uu is singular: unobservable node-phase " +
        blocks.index_map.label(blocks.perm[static_cast<std::size_t>(blocks.K + worst)]) +
        " has no shunt path to the reference");
  }
  // T = Y_au Y_uu^-1; with Y_uu symmetric, T^T = Y_uu^-1 Y_au^T.
  CMatrix Tt = lu.solve(blocks.Y_au.transpose());
  return Tt.transpose();
}

std::pair<CMatrix, CMatrix> schur_z_blocks(const PartitionedBlocks& blocks) {
  const int K = blocks.K;
  if (blocks.M == K) {
    Eigen::FullPivLU<CMatrix> lu(blocks.Y_aa);
    if (!lu.isInvertible())
      throw NumericError("Y_aa is singular under full observability");
    CMatrix Zaa = lu.solve(CMatrix::Identity(K, K));
    refine_inverse(blocks.Y_aa, Zaa);
    return {Zaa, CMatrix(K, 0)};
  }
  CMatrix T = coupling_matrix(blocks);
  CMatrix S = blocks.Y_aa - T * blocks.Y_au.transpose();
  Eigen::FullPivLU<CMatrix> lu(S);
  if (!lu.isInvertible())
    throw NumericError("reduced admittance (Schur complement) is singular");
  CMatrix Zaa = lu.solve(CMatrix::Identity(K, K));
  refine_inverse(S, Zaa);
  CMatrix Zau = -Zaa * T;
  return {std::move(Zaa), std::move(Zau)};
}

}  // namespace faultloc
