#include "faultloc/common.hpp"

#include <charconv>
#include <cstdio>

namespace faultloc {

std::optional<PhaseSet> PhaseSet::from_string(std::string_view s) {
  if (s.empty()) return std::nullopt;
  PhaseSet ps;
  for (char c : s) {
    Phase p;
    switch (c) {
      case 'A': p = Phase::A; break;
      case 'B': p = Phase::B; break;
      case 'C': p = Phase::C; break;
      default: return std::nullopt;
    }
    if (ps.contains(p)) return std::nullopt;  // duplicate letter
    ps.add(p);
  }
  return ps;
}

PhaseSet PhaseSet::all3() {
  PhaseSet ps;
  ps.add(Phase::A);
  ps.add(Phase::B);
  ps.add(Phase::C);
  return ps;
}

PhaseSet PhaseSet::single(Phase p) {
  PhaseSet ps;
  ps.add(p);
  return ps;
}

PhaseSet PhaseSet::intersect(PhaseSet o) const {
  PhaseSet r;
  r.bits_ = static_cast<std::uint8_t>(bits_ & o.bits_);
  return r;
}

int PhaseSet::count() const {
  int n = 0;
  for (Phase p : {Phase::A, Phase::B, Phase::C})
    if (contains(p)) ++n;
  return n;
}

std::string PhaseSet::str() const {
  std::string s;
  for (Phase p : {Phase::A, Phase::B, Phase::C})
    if (contains(p)) s.push_back(phase_letter(p));
  return s;
}

std::vector<Phase> PhaseSet::list() const {
  std::vector<Phase> v;
  for (Phase p : {Phase::A, Phase::B, Phase::C})
    if (contains(p)) v.push_back(p);
  return v;
}

int PhaseSet::position_of(Phase p) const {
  if (!contains(p)) return -1;
  int pos = 0;
  for (Phase q : {Phase::A, Phase::B, Phase::C}) {
    if (q == p) return pos;
    if (contains(q)) ++pos;
  }
  return -1;
}

std::string node_phase_label(std::string_view bus, Phase p) {
  std::string s(bus);
  s.push_back('-');
  s.push_back(phase_letter(p));
  return s;
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string format_complex(Complex v) {
  std::string re = format_g17(v.real());
  std::string im = format_g17(v.imag());
  std::string s = re;
  if (!im.empty() && im[0] != '-') s.push_back('+');
  s += im;
  s.push_back('j');
  return s;
}

namespace {

std::optional<double> parse_double(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);  // from_chars rejects '+'
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

}  // namespace

std::optional<Complex> parse_complex(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;

  const bool has_j = s.back() == 'j' || s.back() == 'J';
  if (!has_j) {
    auto re = parse_double(s);
    if (!re) return std::nullopt;
    return Complex(*re, 0.0);
  }

  std::string_view body = s.substr(0, s.size() - 1);
  // Split at the sign that separates real and imaginary parts: the last
  // '+'/'-' that is not a leading sign and not part of an exponent.
  std::size_t split = std::string_view::npos;
  for (std::size_t i = body.size(); i-- > 1;) {
    char c = body[i];
    if ((c == '+' || c == '-') && body[i - 1] != 'e' && body[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string_view::npos) {
    auto im = parse_double(body);  // pure imaginary "<im>j"
    if (!im) return std::nullopt;
    return Complex(0.0, *im);
  }
  auto re = parse_double(body.substr(0, split));
  auto im = parse_double(body.substr(split));  // sign included
  if (!re || !im) return std::nullopt;
  return Complex(*re, *im);
}

}  // namespace faultloc
