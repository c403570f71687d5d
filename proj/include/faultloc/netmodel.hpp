#pragma once

#include "faultloc/common.hpp"

#include <array>
#include <unordered_map>

namespace faultloc {

struct BusSpec {
  std::string id;
  PhaseSet phases;
  double nominal_voltage = 0.0;  // line-to-ground volts

  friend bool operator==(const BusSpec&, const BusSpec&) = default;
};

enum class ShuntKind {
  ConstantImpedanceLoad,
  ConstantPowerLoad,
  CapacitorOrReactor,
  NortonSource,
};

std::string_view shunt_kind_keyword(ShuntKind k);

/// Per-phase shunt element at a bus. Vectors are aligned with the A<B<C
/// ordering of `phases`. Which vectors are populated depends on `kind`:
///   zload / cap : impedance
///   pload       : power (VA consumed at nominal voltage)
///   source      : impedance (internal) + norton_current
struct ShuntSpec {
  std::string bus;
  PhaseSet phases;
  ShuntKind kind = ShuntKind::ConstantImpedanceLoad;
  std::vector<Complex> impedance;
  std::vector<Complex> power;
  std::vector<Complex> norton_current;

  friend bool operator==(const ShuntSpec&, const ShuntSpec&) = default;
};

struct LineSpec {
  std::string from_bus;
  std::string to_bus;
  PhaseSet phases;
  CMatrix series_impedance;  // p x p ohms, rows/cols in A<B<C order
  CMatrix shunt_admittance;  // p x p siemens, total charging (half per end)

  bool operator==(const LineSpec& o) const;
};

struct NetworkModel {
  std::vector<BusSpec> buses;
  std::vector<LineSpec> lines;
  std::vector<ShuntSpec> shunts;

  int bus_position(std::string_view id) const;  // -1 when unknown
  const BusSpec* find_bus(std::string_view id) const;

  /// Semantic checks: unique bus ids, resolvable references, phase
  /// consistency, per-kind shunt data, connectivity, at least one source.
  /// Throws ModelError.
  void validate() const;

  bool operator==(const NetworkModel&) const = default;
};

/// Global node-phase numbering: buses in declaration order, phases A<B<C
/// within a bus. The numbering is deterministic for a given model.
struct NodeIndexMap {
  struct Entry {
    std::string bus;
    Phase phase;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  std::vector<Entry> entries;

  int size() const { return static_cast<int>(entries.size()); }
  int index_of(std::string_view bus, Phase p) const;  // -1 when absent
  std::string label(int idx) const;                   // "822-A"

  bool operator==(const NodeIndexMap& o) const { return entries == o.entries; }

  // Derived lookup, rebuilt by build_index_map; not part of equality.
  std::unordered_map<std::string, std::array<int, 3>> lookup;
};

NodeIndexMap build_index_map(const NetworkModel& model);

/// Parses the line-oriented network description format:
///   bus <id> phases=<ABC subset> vnom=<volts>
///   line <from> <to> phases=<subset> z=[<p*p complex>] [ysh=[<p*p complex>]]
///   shunt <bus> phases=<subset> kind=<zload|pload|cap|source>
///         [z=[...]] [s=[...]] [inorton=[...]]
/// '#' starts a comment. Complex literals read "<re>[+-]<im>j".
/// The returned model has been validated.
NetworkModel parse_network(std::string_view text);

/// Reads and parses a network file; throws ModelError if unreadable.
NetworkModel load_network_file(const std::string& path);

/// Canonical text form; parse_network(serialize_network(m)) == m.
std::string serialize_network(const NetworkModel& model);

}  // namespace faultloc
