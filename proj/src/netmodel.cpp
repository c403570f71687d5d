#include "faultloc/netmodel.hpp"

#include <fstream>
#include <queue>
#include <sstream>

namespace faultloc {

std::string_view shunt_kind_keyword(ShuntKind k) {
  switch (k) {
    case ShuntKind::ConstantImpedanceLoad: return "zload";
    case ShuntKind::ConstantPowerLoad: return "pload";
    case ShuntKind::CapacitorOrReactor: return "cap";
    case ShuntKind::NortonSource: return "source";
  }
  return "?";
}

namespace {

bool matrix_equal(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      if (a(i, j) != b(i, j)) return false;
  return true;
}

}  // namespace

bool LineSpec::operator==(const LineSpec& o) const {
  return from_bus == o.from_bus && to_bus == o.to_bus && phases == o.phases &&
         matrix_equal(series_impedance, o.series_impedance) &&
         matrix_equal(shunt_admittance, o.shunt_admittance);
}

int NetworkModel::bus_position(std::string_view id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == id) return static_cast<int>(i);
  return -1;
}

const BusSpec* NetworkModel::find_bus(std::string_view id) const {
  int pos = bus_position(id);
  return pos < 0 ? nullptr : &buses[pos];
}

void NetworkModel::validate() const {
  for (std::size_t i = 0; i < buses.size(); ++i) {
    const BusSpec& b = buses[i];
    if (b.id.empty()) throw ModelError("bus with empty id");
    if (b.phases.empty())
      throw ModelError("bus '" + b.id + "' declares no phases");
    if (!(b.nominal_voltage > 0.0))
      throw ModelError("bus '" + b.id + "' needs a positive nominal voltage");
    for (std::size_t j = i + 1; j < buses.size(); ++j)
      if (buses[j].id == b.id) throw ModelError("duplicate bus id '" + b.id + "'");
  }

  for (const LineSpec& ln : lines) {
    const BusSpec* f = find_bus(ln.from_bus);
    const BusSpec* t = find_bus(ln.to_bus);
    if (!f) throw ModelError("line references unknown bus '" + ln.from_bus + "'");
    if (!t) throw ModelError("line references unknown bus '" + ln.to_bus + "'");
    if (ln.from_bus == ln.to_bus)
      throw ModelError("line from '" + ln.from_bus + "' to itself");
    if (ln.phases.empty())
      throw ModelError("line " + ln.from_bus + "-" + ln.to_bus + " has no phases");
    if (!ln.phases.subset_of(f->phases) || !ln.phases.subset_of(t->phases))
      throw ModelError("line " + ln.from_bus + "-" + ln.to_bus + " phases '" +
                       ln.phases.str() + "' are not present at both endpoints");
    const int p = ln.phases.count();
    if (ln.series_impedance.rows() != p || ln.series_impedance.cols() != p)
      throw ModelError("line " + ln.from_bus + "-" + ln.to_bus +
                       " series impedance must be " + std::to_string(p) + "x" +
                       std::to_string(p));
    if (ln.shunt_admittance.rows() != p || ln.shunt_admittance.cols() != p)
      throw ModelError("line " + ln.from_bus + "-" + ln.to_bus +
                       " shunt admittance must be " + std::to_string(p) + "x" +
                       std::to_string(p));
  }

  bool have_source = false;
  for (const ShuntSpec& sh : shunts) {
    const BusSpec* b = find_bus(sh.bus);
    if (!b) throw ModelError("shunt references unknown bus '" + sh.bus + "'");
    if (sh.phases.empty())
      throw ModelError("shunt at '" + sh.bus + "' has no phases");
    if (!sh.phases.subset_of(b->phases))
      throw ModelError("shunt at '" + sh.bus + "' uses phases '" +
                       sh.phases.str() + "' not present at the bus");
    const std::size_t p = static_cast<std::size_t>(sh.phases.count());
    auto need = [&](const std::vector<Complex>& v, const char* what) {
      if (v.size() != p)
        throw ModelError("shunt at '" + sh.bus + "' needs " + std::to_string(p) +
                         " " + what + " entries");
    };
    switch (sh.kind) {
      case ShuntKind::ConstantImpedanceLoad:
      case ShuntKind::CapacitorOrReactor:
        need(sh.impedance, "impedance");
        for (Complex z : sh.impedance)
          if (std::abs(z) == 0.0)
            throw ModelError("shunt at '" + sh.bus + "' has a zero impedance");
        break;
      case ShuntKind::ConstantPowerLoad:
        need(sh.power, "power");
        for (Complex s : sh.power)
          if (std::abs(s) == 0.0)
            throw ModelError("constant-power shunt at '" + sh.bus +
                             "' has a zero power entry");
        break;
      case ShuntKind::NortonSource:
        need(sh.impedance, "impedance");
        need(sh.norton_current, "norton current");
        for (Complex z : sh.impedance)
          if (std::abs(z) == 0.0)
            throw ModelError("source at '" + sh.bus + "' has a zero impedance");
        have_source = true;
        break;
    }
  }
  if (!have_source) throw ModelError("network has no source shunt");

  // Connectivity over the bus graph.
  if (!buses.empty()) {
    std::vector<char> seen(buses.size(), 0);
    std::queue<int> q;
    q.push(0);
    seen[0] = 1;
    while (!q.empty()) {
      int at = q.front();
      q.pop();
      for (const LineSpec& ln : lines) {
        int f = bus_position(ln.from_bus);
        int t = bus_position(ln.to_bus);
        int other = -1;
        if (f == at) other = t;
        else if (t == at) other = f;
        if (other >= 0 && !seen[other]) {
          seen[other] = 1;
          q.push(other);
        }
      }
    }
    for (std::size_t i = 0; i < buses.size(); ++i)
      if (!seen[i])
        throw ModelError("network graph is disconnected: bus '" + buses[i].id +
                         "' is unreachable from '" + buses[0].id + "'");
  }
}

int NodeIndexMap::index_of(std::string_view bus, Phase p) const {
  auto it = lookup.find(std::string(bus));
  if (it == lookup.end()) return -1;
  return it->second[static_cast<std::size_t>(p)];
}

std::string NodeIndexMap::label(int idx) const {
  const Entry& e = entries.at(static_cast<std::size_t>(idx));
  return node_phase_label(e.bus, e.phase);
}

NodeIndexMap build_index_map(const NetworkModel& model) {
  NodeIndexMap map;
  for (const BusSpec& b : model.buses) {
    std::array<int, 3> slots = {-1, -1, -1};
    for (Phase p : b.phases.list()) {
      slots[static_cast<std::size_t>(p)] = map.size();
      map.entries.push_back({b.id, p});
    }
    map.lookup.emplace(b.id, slots);
  }
  return map;
}

namespace {

struct Token {
  std::string text;
  int column;  // 1-based
};

// Whitespace-separated tokens; a '[' opens a bracket group that may contain
// spaces and runs to the matching ']'.
std::vector<Token> tokenize(const std::string& line, int lineno) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    if (line[i] == ' ' || line[i] == '\t') {
      ++i;
      continue;
    }
    std::size_t start = i;
    bool in_bracket = false;
    while (i < line.size()) {
      char c = line[i];
      if (c == '[') {
        if (in_bracket)
          throw ParseError("nested '['", lineno, static_cast<int>(i) + 1);
        in_bracket = true;
      } else if (c == ']') {
        if (!in_bracket)
          throw ParseError("']' without '['", lineno, static_cast<int>(i) + 1);
        in_bracket = false;
      } else if ((c == ' ' || c == '\t') && !in_bracket) {
        break;
      }
      ++i;
    }
    if (in_bracket)
      throw ParseError("unterminated '['", lineno, static_cast<int>(start) + 1);
    out.push_back({line.substr(start, i - start), static_cast<int>(start) + 1});
  }
  return out;
}

struct KeyValue {
  std::string key;
  std::string value;
  int column;
};

std::optional<KeyValue> split_key_value(const Token& tok) {
  auto eq = tok.text.find('=');
  if (eq == std::string::npos || eq == 0) return std::nullopt;
  return KeyValue{tok.text.substr(0, eq), tok.text.substr(eq + 1), tok.column};
}

std::vector<Complex> parse_complex_list(const KeyValue& kv, int lineno) {
  const std::string& v = kv.value;
  if (v.size() < 2 || v.front() != '[' || v.back() != ']')
    throw ParseError("value of '" + kv.key + "' must be a [...] list", lineno,
                     kv.column);
  std::vector<Complex> out;
  std::string body = v.substr(1, v.size() - 2);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    std::size_t comma = body.find(',', pos);
    std::string item = body.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    // Skip a trailing empty element only when the list itself is empty.
    bool blank = item.find_first_not_of(" \t") == std::string::npos;
    if (blank && out.empty() && comma == std::string::npos) break;
    auto c = parse_complex(item);
    if (!c)
      throw ParseError("bad complex literal '" + item + "' in '" + kv.key + "'",
                       lineno, kv.column);
    out.push_back(*c);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

CMatrix list_to_matrix(const std::vector<Complex>& values, int p,
                       const std::string& what, int lineno, int column) {
  if (static_cast<int>(values.size()) != p * p)
    throw ParseError(what + " needs " + std::to_string(p * p) +
                         " entries (row-major), got " +
                         std::to_string(values.size()),
                     lineno, column);
  CMatrix m(p, p);
  for (int r = 0; r < p; ++r)
    for (int c = 0; c < p; ++c) m(r, c) = values[static_cast<std::size_t>(r * p + c)];
  return m;
}

PhaseSet parse_phases_kv(const KeyValue& kv, int lineno) {
  auto ps = PhaseSet::from_string(kv.value);
  if (!ps)
    throw ParseError("bad phase set '" + kv.value + "'", lineno, kv.column);
  return *ps;
}

double parse_double_kv(const KeyValue& kv, int lineno) {
  auto c = parse_complex(kv.value);
  if (!c || c->imag() != 0.0)
    throw ParseError("bad number '" + kv.value + "' for '" + kv.key + "'",
                     lineno, kv.column);
  return c->real();
}

}  // namespace

NetworkModel parse_network(std::string_view text) {
  NetworkModel model;
  std::string input(text);
  std::istringstream stream(input);
  std::string raw;
  int lineno = 0;
  while (std::getline(stream, raw)) {
    ++lineno;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::vector<Token> toks = tokenize(raw, lineno);
    if (toks.empty()) continue;

    const std::string& directive = toks[0].text;
    auto positional = [&](std::size_t i, const char* what) -> const Token& {
      if (i >= toks.size() || toks[i].text.find('=') != std::string::npos)
        throw ParseError(std::string("expected ") + what, lineno,
                         i < toks.size() ? toks[i].column
                                         : static_cast<int>(raw.size()) + 1);
      return toks[i];
    };

    if (directive == "bus") {
      BusSpec bus;
      bus.id = positional(1, "bus id").text;
      bool have_phases = false, have_vnom = false;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        auto kv = split_key_value(toks[i]);
        if (!kv)
          throw ParseError("expected key=value, got '" + toks[i].text + "'",
                           lineno, toks[i].column);
        if (kv->key == "phases") {
          bus.phases = parse_phases_kv(*kv, lineno);
          have_phases = true;
        } else if (kv->key == "vnom") {
          bus.nominal_voltage = parse_double_kv(*kv, lineno);
          have_vnom = true;
        } else {
          throw ParseError("unknown bus attribute '" + kv->key + "'", lineno,
                           kv->column);
        }
      }
      if (!have_phases)
        throw ParseError("bus '" + bus.id + "' is missing phases=", lineno,
                         toks[0].column);
      if (!have_vnom)
        throw ParseError("bus '" + bus.id + "' is missing vnom=", lineno,
                         toks[0].column);
      model.buses.push_back(std::move(bus));
    } else if (directive == "line") {
      LineSpec line;
      line.from_bus = positional(1, "from bus").text;
      line.to_bus = positional(2, "to bus").text;
      std::optional<std::vector<Complex>> z, ysh;
      int z_col = 0, ysh_col = 0;
      bool have_phases = false;
      for (std::size_t i = 3; i < toks.size(); ++i) {
        auto kv = split_key_value(toks[i]);
        if (!kv)
          throw ParseError("expected key=value, got '" + toks[i].text + "'",
                           lineno, toks[i].column);
        if (kv->key == "phases") {
          line.phases = parse_phases_kv(*kv, lineno);
          have_phases = true;
        } else if (kv->key == "z") {
          z = parse_complex_list(*kv, lineno);
          z_col = kv->column;
        } else if (kv->key == "ysh") {
          ysh = parse_complex_list(*kv, lineno);
          ysh_col = kv->column;
        } else {
          throw ParseError("unknown line attribute '" + kv->key + "'", lineno,
                           kv->column);
        }
      }
      if (!have_phases)
        throw ParseError("line is missing phases=", lineno, toks[0].column);
      if (!z) throw ParseError("line is missing z=", lineno, toks[0].column);
      const int p = line.phases.count();
      line.series_impedance = list_to_matrix(*z, p, "line z", lineno, z_col);
      line.shunt_admittance =
          ysh ? list_to_matrix(*ysh, p, "line ysh", lineno, ysh_col)
              : CMatrix::Zero(p, p);
      model.lines.push_back(std::move(line));
    } else if (directive == "shunt") {
      ShuntSpec sh;
      sh.bus = positional(1, "bus id").text;
      bool have_phases = false, have_kind = false;
      for (std::size_t i = 2; i < toks.size(); ++i) {
        auto kv = split_key_value(toks[i]);
        if (!kv)
          throw ParseError("expected key=value, got '" + toks[i].text + "'",
                           lineno, toks[i].column);
        if (kv->key == "phases") {
          sh.phases = parse_phases_kv(*kv, lineno);
          have_phases = true;
        } else if (kv->key == "kind") {
          if (kv->value == "zload") sh.kind = ShuntKind::ConstantImpedanceLoad;
          else if (kv->value == "pload") sh.kind = ShuntKind::ConstantPowerLoad;
          else if (kv->value == "cap") sh.kind = ShuntKind::CapacitorOrReactor;
          else if (kv->value == "source") sh.kind = ShuntKind::NortonSource;
          else
            throw ParseError("unknown shunt kind '" + kv->value + "'", lineno,
                             kv->column);
          have_kind = true;
        } else if (kv->key == "z") {
          sh.impedance = parse_complex_list(*kv, lineno);
        } else if (kv->key == "s") {
          sh.power = parse_complex_list(*kv, lineno);
        } else if (kv->key == "inorton") {
          sh.norton_current = parse_complex_list(*kv, lineno);
        } else {
          throw ParseError("unknown shunt attribute '" + kv->key + "'", lineno,
                           kv->column);
        }
      }
      if (!have_phases)
        throw ParseError("shunt is missing phases=", lineno, toks[0].column);
      if (!have_kind)
        throw ParseError("shunt is missing kind=", lineno, toks[0].column);
      model.shunts.push_back(std::move(sh));
    } else {
      throw ParseError("unknown directive '" + directive + "'", lineno,
                       toks[0].column);
    }
  }
  model.validate();
  return model;
}

NetworkModel load_network_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open network file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_network(buf.str());
}

namespace {

std::string matrix_list(const CMatrix& m) {
  std::string s = "[";
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (r != 0 || c != 0) s.push_back(',');
      s += format_complex(m(r, c));
    }
  s.push_back(']');
  return s;
}

std::string vector_list(const std::vector<Complex>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != 0) s.push_back(',');
    s += format_complex(v[i]);
  }
  s.push_back(']');
  return s;
}

}  // namespace

std::string serialize_network(const NetworkModel& model) {
  std::ostringstream out;
  for (const BusSpec& b : model.buses)
    out << "bus " << b.id << " phases=" << b.phases.str()
        << " vnom=" << format_g17(b.nominal_voltage) << "\n";
  for (const LineSpec& ln : model.lines) {
    out << "line " << ln.from_bus << " " << ln.to_bus
        << " phases=" << ln.phases.str() << " z=" << matrix_list(ln.series_impedance);
    if (ln.shunt_admittance.cwiseAbs().maxCoeff() != 0.0)
      out << " ysh=" << matrix_list(ln.shunt_admittance);
    out << "\n";
  }
  for (const ShuntSpec& sh : model.shunts) {
    out << "shunt " << sh.bus << " phases=" << sh.phases.str()
        << " kind=" << shunt_kind_keyword(sh.kind);
    if (!sh.impedance.empty()) out << " z=" << vector_list(sh.impedance);
    if (!sh.power.empty()) out << " s=" << vector_list(sh.power);
    if (!sh.norton_current.empty())
      out << " inorton=" << vector_list(sh.norton_current);
    out << "\n";
  }
  return out.str();
}

}  // namespace faultloc
