#include "faultloc/faultsim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <cstdio>
#include <cstdlib>

namespace faultloc {

namespace {

constexpr double kMinFaultImpedance = 1e-6;  // ohms, bolted-fault floor
constexpr double kFixedPointTol = 1e-8;      // relative voltage change
constexpr int kFixedPointMaxIters = 200;
constexpr double kCollapseFraction = 0.3;    // constant-power clamp level

int expected_phase_count(FaultKind k) {
  switch (k) {
    case FaultKind::LineToGround: return 1;
    case FaultKind::LineToLine:
    case FaultKind::LineToLineToGround: return 2;
    case FaultKind::ThreePhase:
    case FaultKind::ThreePhaseToGround: return 3;
  }
  return 0;
}

const char* kind_suffix(FaultKind k) {
  switch (k) {
    case FaultKind::LineToGround:
    case FaultKind::LineToLineToGround:
    case FaultKind::ThreePhaseToGround: return "G";
    default: return "";
  }
}

}  // namespace

FaultType make_fault_type(FaultKind kind, PhaseSet phases) {
  if (phases.empty() &&
      (kind == FaultKind::ThreePhase || kind == FaultKind::ThreePhaseToGround))
    phases = PhaseSet::all3();
  if (phases.count() != expected_phase_count(kind))
    throw ModelError("fault kind needs " +
                     std::to_string(expected_phase_count(kind)) +
                     " phases, got '" + phases.str() + "'");
  return FaultType{kind, phases};
}

FaultType parse_fault_type(std::string_view text) {
  std::string t(text);
  if (t == "LLL") return make_fault_type(FaultKind::ThreePhase, PhaseSet::all3());
  if (t == "LLLG")
    return make_fault_type(FaultKind::ThreePhaseToGround, PhaseSet::all3());
  bool ground = !t.empty() && t.back() == 'G';
  std::string letters = ground ? t.substr(0, t.size() - 1) : t;
  auto ps = PhaseSet::from_string(letters);
  if (!ps || ps->empty())
    throw ModelError("bad fault type '" + std::string(text) + "'");
  switch (ps->count()) {
    case 1:
      if (!ground)
        throw ModelError("single-phase fault must be to ground, e.g. 'AG'");
      return make_fault_type(FaultKind::LineToGround, *ps);
    case 2:
      return make_fault_type(
          ground ? FaultKind::LineToLineToGround : FaultKind::LineToLine, *ps);
    default:
      return make_fault_type(
          ground ? FaultKind::ThreePhaseToGround : FaultKind::ThreePhase, *ps);
  }
}

FaultSpec parse_fault_spec(std::string_view text, Complex impedance) {
  auto at = text.find('@');
  if (at == std::string_view::npos || at == 0 || at + 1 >= text.size())
    throw ModelError("fault spec must read '<type>@<bus>', got '" +
                     std::string(text) + "'");
  FaultSpec f;
  f.type = parse_fault_type(text.substr(0, at));
  f.bus = std::string(text.substr(at + 1));
  f.impedance = impedance;
  return f;
}

std::string fault_spec_label(const FaultSpec& f) {
  std::string t;
  if (f.type.kind == FaultKind::ThreePhase) t = "LLL";
  else if (f.type.kind == FaultKind::ThreePhaseToGround) t = "LLLG";
  else t = f.type.phases.str() + kind_suffix(f.type.kind);
  return t + "@" + f.bus;
}

namespace {

struct PloadEntry {
  int index;
  Complex power;
  double vnom;
  Complex y_eq;
};

CVector norton_vector(const NetworkModel& model, const NodeIndexMap& map) {
  CVector in = CVector::Zero(map.size());
  for (const ShuntSpec& sh : model.shunts) {
    if (sh.kind != ShuntKind::NortonSource) continue;
    std::vector<Phase> phl = sh.phases.list();
    for (std::size_t k = 0; k < phl.size(); ++k)
      in(map.index_of(sh.bus, phl[k])) += sh.norton_current[k];
  }
  return in;
}

std::vector<PloadEntry> pload_entries(const NetworkModel& model,
                                      const NodeIndexMap& map) {
  std::vector<PloadEntry> out;
  for (const ShuntSpec& sh : model.shunts) {
    if (sh.kind != ShuntKind::ConstantPowerLoad) continue;
    const BusSpec* bus = model.find_bus(sh.bus);
    std::vector<Phase> phl = sh.phases.list();
    for (std::size_t k = 0; k < phl.size(); ++k) {
      PloadEntry e;
      e.index = map.index_of(sh.bus, phl[k]);
      e.power = sh.power[k];
      e.vnom = bus->nominal_voltage;
      e.y_eq = std::conj(e.power) / (e.vnom * e.vnom);
      out.push_back(e);
    }
  }
  return out;
}

// Injection correction that turns the stamped nominal-voltage admittance of a
// constant-power load into the true constant-power draw at voltage V. Below
// kCollapseFraction of nominal the load degenerates to the constant impedance
// matching its power at the threshold; the draw is then continuous at the
// threshold and vanishes smoothly with the voltage, so collapsed nodes cannot
// destabilize the iteration.
Complex pload_correction(const PloadEntry& e, Complex v) {
  double mag = std::abs(v);
  double floor_mag = kCollapseFraction * e.vnom;
  Complex draw = mag >= floor_mag
                     ? std::conj(e.power / v)
                     : std::conj(e.power) * v / (floor_mag * floor_mag);
  return e.y_eq * v - draw;
}

// Fixed point over the constant-power corrections. `solve` maps an injection
// vector to the voltage vector of the (possibly faulted) network. Returns a
// (V, I) pair with V = solve(I) exactly.
//
// Plain Picard substitution oscillates or diverges for deep voltage sags, so
// every step is damped and the damping is backtracked until the fixed-point
// residual max|solve(inject(V)) - V| stops growing. Each trial costs one
// linear solve, which is a matvec here.
template <class Solve>
std::pair<CVector, CVector> solve_with_ploads(
    const Solve& solve, const CVector& norton,
    const std::vector<PloadEntry>& ploads, const char* what) {
  CVector I = norton;
  CVector V = solve(I);
  if (ploads.empty()) return {V, I};

  auto inject = [&](const CVector& volts) {
    CVector out = norton;
    for (const PloadEntry& e : ploads)
      out(e.index) += pload_correction(e, volts(e.index));
    return out;
  };
  // Residual relative to the largest voltage: collapsed node-phases sit near
  // zero and must not hold the iteration hostage.
  auto residual = [](const CVector& image, const CVector& volts) {
    double scale = std::max(image.cwiseAbs().maxCoeff(), 1e-9);
    return (image - volts).cwiseAbs().maxCoeff() / scale;
  };

  // Histories for Anderson extrapolation. When heavy sags push loads into the
  // clamped regime the Picard map can own an expansive mode that no scalar
  // damping cures; the least-squares combination over past iterates removes
  // it the way GMRES would on the linearized system.
  constexpr int kAndersonDepth = 6;
  std::vector<CVector> vs, gs;
  double damping = 1.0;
  for (int it = 0; it < kFixedPointMaxIters; ++it) {
    I = inject(V);
    CVector image = solve(I);
    double res = residual(image, V);
    if (getenv("FAULTLOC_TRACE")) fprintf(stderr, "it=%d res=%.3e\n", it, res);
    if (res < kFixedPointTol) return {image, I};

    vs.push_back(V);
    gs.push_back(image);
    if (static_cast<int>(vs.size()) > kAndersonDepth + 1) {
      vs.erase(vs.begin());
      gs.erase(gs.begin());
    }

    bool accepted = false;
    const std::size_t last = vs.size() - 1;
    if (last >= 1) {
      CVector fk = gs[last] - vs[last];
      CMatrix df(fk.size(), static_cast<Eigen::Index>(last));
      CMatrix dg(fk.size(), static_cast<Eigen::Index>(last));
      for (std::size_t j = 1; j <= last; ++j) {
        df.col(static_cast<Eigen::Index>(j - 1)) =
            fk - (gs[last - j] - vs[last - j]);
        dg.col(static_cast<Eigen::Index>(j - 1)) = gs[last] - gs[last - j];
      }
      CVector gamma = df.colPivHouseholderQr().solve(fk);
      CVector v_and = gs[last] - dg * gamma;
      if (v_and.allFinite() &&
          residual(solve(inject(v_and)), v_and) < res) {
        V = v_and;
        accepted = true;
      }
    }
    if (!accepted) {
      // Damped step, backtracked on the fixed-point residual.
      double d = damping;
      CVector v_best = V;
      double res_best = std::numeric_limits<double>::infinity();
      double d_best = d;
      for (int trial = 0; trial < 8; ++trial) {
        CVector v_try = V + d * (image - V);
        double r = residual(solve(inject(v_try)), v_try);
        if (r < res_best) {
          res_best = r;
          v_best = v_try;
          d_best = d;
        }
        if (r < 0.9 * res) break;
        d *= 0.5;
      }
      V = v_best;
      damping = std::min(1.0, 1.5 * d_best);
    }
  }
  I = inject(V);
  CVector image = solve(I);
  if (residual(image, V) < kFixedPointTol) return {image, I};
  throw NumericError(std::string(what) +
                     ": constant-power load refinement did not converge");
}

// Fault paths as a low-rank update Y' = Y + E g E^T, where E selects the
// faulted node-phases and g is the small admittance stamp.
struct FaultStamp {
  std::vector<int> indices;  // global node-phase indices, A<B<C
  CMatrix g;                 // r x r
};

FaultStamp fault_stamp(const FaultSpec& fault, const NodeIndexMap& map) {
  Complex z = fault.impedance;
  Complex y;
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
    y = 0.0;  // open fault: no path
  } else {
    if (std::abs(z) < kMinFaultImpedance) z = Complex(kMinFaultImpedance, 0.0);
    y = 1.0 / z;
  }

  FaultStamp st;
  for (Phase p : fault.type.phases.list()) {
    int i = map.index_of(fault.bus, p);
    if (i < 0)
      throw ModelError("fault at " + node_phase_label(fault.bus, p) +
                       ": that node-phase does not exist");
    st.indices.push_back(i);
  }
  const int r = static_cast<int>(st.indices.size());
  st.g = CMatrix::Zero(r, r);
  bool ground = fault.type.kind == FaultKind::LineToGround ||
                fault.type.kind == FaultKind::LineToLineToGround ||
                fault.type.kind == FaultKind::ThreePhaseToGround;
  if (ground)
    for (int i = 0; i < r; ++i) st.g(i, i) += y;
  if (fault.type.kind != FaultKind::LineToGround)
    for (int a = 0; a < r; ++a)
      for (int b = a + 1; b < r; ++b) {
        st.g(a, a) += y;
        st.g(b, b) += y;
        st.g(a, b) -= y;
        st.g(b, a) -= y;
      }
  return st;
}

}  // namespace

PrefaultSolution solve_prefault(const NetworkModel& model) {
  AdmittanceMatrix adm = build_admittance(model);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  CVector norton = norton_vector(model, adm.index_map);
  auto solve = [&](const CVector& I) -> CVector { return imp.Z * I; };
  auto [V, I] = solve_with_ploads(solve, norton,
                                  pload_entries(model, adm.index_map),
                                  "prefault solve");
  return PrefaultSolution{std::move(V), std::move(I)};
}

PhasorSnapshot apply_fault(const NetworkModel& model, const FaultSpec& fault) {
  AdmittanceMatrix adm = build_admittance(model);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  const NodeIndexMap& map = adm.index_map;
  CVector norton = norton_vector(model, map);
  std::vector<PloadEntry> ploads = pload_entries(model, map);

  auto solve0 = [&](const CVector& I) -> CVector { return imp.Z * I; };
  auto [V0, I0] = solve_with_ploads(solve0, norton, ploads, "prefault solve");

  FaultStamp st = fault_stamp(fault, map);
  const int r = static_cast<int>(st.indices.size());

  // (Y + E g E^T)^-1 b = Z b - (Z E) (I_r + g S)^-1 g (E^T Z b), S = E^T Z E.
  // Working through Z keeps the reported phasors exactly consistent with the
  // impedance matrix every consumer rebuilds from the model.
  CMatrix ZE(imp.Z.rows(), r);
  for (int c = 0; c < r; ++c) ZE.col(c) = imp.Z.col(st.indices[c]);
  CMatrix S(r, r);
  for (int a = 0; a < r; ++a)
    for (int b = 0; b < r; ++b) S(a, b) = imp.Z(st.indices[a], st.indices[b]);
  Eigen::FullPivLU<CMatrix> loop_lu(CMatrix::Identity(r, r) + st.g * S);
  if (!loop_lu.isInvertible())
    throw NumericError("fault loop equation is singular at bus '" + fault.bus +
                       "'");

  auto solve_f = [&](const CVector& I) -> CVector {
    CVector zb = imp.Z * I;
    CVector local(r);
    for (int a = 0; a < r; ++a) local(a) = zb(st.indices[a]);
    CVector w = loop_lu.solve(st.g * local);
    return zb - ZE * w;
  };
  auto [VF, IF] = solve_with_ploads(solve_f, norton, ploads, "fault solve");

  // g VF = w holds for the loop solution, and w is the accurate value: the
  // faulted-node voltage itself comes out of a large cancellation, which the
  // stamp admittance (1e6 S when bolted) would amplify into IE.
  CVector zb = imp.Z * IF;
  CVector zb_local(r);
  for (int a = 0; a < r; ++a) zb_local(a) = zb(st.indices[a]);
  CVector w = loop_lu.solve(st.g * zb_local);
  CVector IE = CVector::Zero(map.size());
  for (int a = 0; a < r; ++a) IE(st.indices[a]) = -w(a);

  // Circuit-law check: VF = Z (IF + IE) to well under the documented 1e-9.
  double rel = (VF - imp.Z * (IF + IE)).norm() / std::max(VF.norm(), 1e-300);
  if (!(rel < 1e-9))
    throw NumericError("fault solve failed the circuit-law check: residual " +
                       format_g17(rel));

  PhasorSnapshot snap;
  snap.index_map = map;
  snap.V0 = std::move(V0);
  snap.I0 = std::move(I0);
  snap.VF = std::move(VF);
  snap.IF = std::move(IF);
  snap.IE = std::move(IE);
  return snap;
}

namespace {

// Deterministic standard normal: two fresh uniforms per draw (Box-Muller),
// independent of any standard-library distribution implementation.
class GaussianSampler {
 public:
  explicit GaussianSampler(std::uint64_t seed) : gen_(seed) {}

  double operator()() {
    double u1 = uniform_open();
    double u2 = uniform_open();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  double uniform_open() {
    while (true) {
      double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
      if (u > 0.0) return u;  // (0,1]: guards log(0)
    }
  }
  std::mt19937_64 gen_;
};

Complex perturb(Complex v, double mag_std, double ang_std, GaussianSampler& g) {
  double m = 1.0 + mag_std * g();
  double a = ang_std * g();
  return v * std::polar(m, a);
}

}  // namespace

MeasurementSet measure(const NetworkModel& model, const PhasorSnapshot& snapshot,
                       const Placement& placement, const NoiseModel& noise) {
  const NodeIndexMap& map = snapshot.index_map;
  MeasurementSet out;
  out.placement = placement;
  out.noise_seed = noise.seed;

  GaussianSampler g(noise.seed);
  const int K = placement.K();
  out.dV_a.resize(K);
  out.dI_a.resize(K);
  CVector dV = snapshot.dV();
  CVector dI = snapshot.dI();
  for (int k = 0; k < K; ++k)
    out.dV_a(k) = perturb(dV(placement.available_indices[k]),
                          noise.magnitude_std, noise.angle_std, g);
  for (int k = 0; k < K; ++k)
    out.dI_a(k) = perturb(dI(placement.available_indices[k]),
                          noise.magnitude_std, noise.angle_std, g);

  auto monitored = [&](const std::string& bus) {
    return std::find(placement.monitored.begin(), placement.monitored.end(),
                     bus) != placement.monitored.end();
  };

  for (const ShuntSpec& sh : model.shunts) {
    if (sh.kind != ShuntKind::NortonSource) continue;
    if (!monitored(sh.bus)) {
      out.warnings.push_back("source at bus '" + sh.bus +
                             "' is not monitored; fault current approximation "
                             "will be unavailable");
      continue;
    }
    std::vector<Phase> phl = sh.phases.list();
    for (std::size_t k = 0; k < phl.size(); ++k) {
      int idx = map.index_of(sh.bus, phl[k]);
      Complex y = 1.0 / sh.impedance[k];
      // Current delivered into the grid by the Norton branch.
      Complex pre = sh.norton_current[k] - y * snapshot.V0(idx);
      Complex post = sh.norton_current[k] - y * snapshot.VF(idx);
      SourceCurrentRecord rec;
      rec.bus = sh.bus;
      rec.phase = phl[k];
      rec.pre = perturb(pre, noise.magnitude_std, noise.angle_std, g);
      rec.post = perturb(post, noise.magnitude_std, noise.angle_std, g);
      out.source_currents.push_back(std::move(rec));
    }
  }
  return out;
}

CVector approximate_fault_current(const MeasurementSet& meas,
                                  const FaultType& type,
                                  const NetworkModel& model) {
  for (const ShuntSpec& sh : model.shunts) {
    if (sh.kind != ShuntKind::NortonSource) continue;
    bool found = false;
    for (const SourceCurrentRecord& rec : meas.source_currents)
      if (rec.bus == sh.bus) {
        found = true;
        break;
      }
    if (!found)
      throw ModelError("source at bus '" + sh.bus +
                       "' is not monitored; cannot approximate the fault "
                       "current");
  }

  std::vector<Phase> phl = type.phases.list();
  CVector ig = CVector::Zero(static_cast<Eigen::Index>(phl.size()));
  for (std::size_t k = 0; k < phl.size(); ++k)
    for (const SourceCurrentRecord& rec : meas.source_currents)
      if (rec.phase == phl[k])
        ig(static_cast<Eigen::Index>(k)) += rec.pre - rec.post;
  return ig;
}

}  // namespace faultloc
