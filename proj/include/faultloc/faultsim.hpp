#pragma once

#include "faultloc/matrices.hpp"

namespace faultloc {

enum class FaultKind {
  LineToGround,        // one phase to ground
  LineToLine,          // two phases bridged
  LineToLineToGround,  // two phases bridged, both to ground
  ThreePhase,          // all three phases bridged
  ThreePhaseToGround,  // all three bridged and grounded
};

struct FaultType {
  FaultKind kind = FaultKind::LineToGround;
  PhaseSet phases;
};

/// Checks the phase count matches the kind (1 for LG, 2 for LL/LLG, 3 for
/// LLL/LLLG; LLL defaults to ABC). Throws ModelError.
FaultType make_fault_type(FaultKind kind, PhaseSet phases);

/// Compact fault notation: "AG", "BC", "ABG", "LLL", "LLLG", "ABC", "ABCG".
FaultType parse_fault_type(std::string_view text);

struct FaultSpec {
  FaultType type;
  std::string bus;
  Complex impedance{0.0, 0.0};  // per contact path; 0 is promoted to 1e-6 ohm
};

/// "<type>@<bus>" e.g. "LLL@816", "AG@822", "BCG@852".
FaultSpec parse_fault_spec(std::string_view text, Complex impedance = {0.0, 0.0});

std::string fault_spec_label(const FaultSpec& f);

/// Steady-state node-phase voltages and injection currents before (V0, I0)
/// and during (VF, IF) a fault, plus the true fault injection IE (negative of
/// the current withdrawn through the fault paths). All vectors satisfy the
/// circuit laws V0 = Z I0 and VF = Z (IF + IE) to 1e-9 relative.
struct PhasorSnapshot {
  NodeIndexMap index_map;
  CVector V0, I0, VF, IF, IE;

  CVector dV() const { return VF - V0; }
  CVector dI() const { return IF - I0; }
};

struct PrefaultSolution {
  CVector V0, I0;
};

/// Solves Y V = I for the source injections. Constant-power loads are
/// refined by a fixed point on their deviation from the nominal-voltage
/// equivalent admittance; converges when the largest voltage change, relative
/// to the largest voltage magnitude, drops below 1e-8 (at most 200
/// iterations). Below 0.3 of nominal a constant-power load degenerates to
/// the constant impedance matching its power at that threshold. The returned
/// pair is exactly consistent: V0 is the solution for injection I0.
PrefaultSolution solve_prefault(const NetworkModel& model);

/// Simulates the fault by stamping the fault paths into Y and re-solving with
/// unchanged source injections. A fault impedance of zero is replaced by
/// 1e-6 ohm; an infinite impedance degenerates to the no-fault state.
PhasorSnapshot apply_fault(const NetworkModel& model, const FaultSpec& fault);

struct NoiseModel {
  double magnitude_std = 0.0;  // relative magnitude error, Gaussian
  double angle_std = 0.0;      // radians, Gaussian, additive
  std::uint64_t seed = 0;
};

struct SourceCurrentRecord {
  std::string bus;
  Phase phase;
  Complex pre;
  Complex post;
};

struct MeasurementSet {
  Placement placement;
  CVector dV_a;  // voltage deltas at available node-phases
  CVector dI_a;  // injection deltas at available node-phases
  std::vector<SourceCurrentRecord> source_currents;  // monitored sources only
  std::uint64_t noise_seed = 0;
  std::vector<std::string> warnings;
};

/// Extracts the monitored subvectors and the per-source delivered currents,
/// applying the noise model to every reported quantity. Identical seeds give
/// identical output. Sources at unmonitored buses produce a warning and no
/// current records.
MeasurementSet measure(const NetworkModel& model, const PhasorSnapshot& snapshot,
                       const Placement& placement, const NoiseModel& noise);

/// Approximates the fault injection per faulted phase by summing, over the
/// monitored sources, the pre-fault minus post-fault delivered current. The
/// sign convention matches IE (injection, negative of the withdrawn current).
/// Every source bus must be monitored; the residual error stems from load
/// current redistribution. Entries follow type.phases in A<B<C order.
CVector approximate_fault_current(const MeasurementSet& meas,
                                  const FaultType& type,
                                  const NetworkModel& model);

}  // namespace faultloc
