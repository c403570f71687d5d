#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace faultloc {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Error taxonomy: ParseError for malformed input text, ModelError for
/// semantically invalid models or arguments, NumericError for singular or
/// non-convergent linear algebra.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, int line, int column)
      : Error("parse error at line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + message),
        line(line),
        column(column) {}

  int line;
  int column;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

enum class Phase : std::uint8_t { A = 0, B = 1, C = 2 };

constexpr char phase_letter(Phase p) {
  return p == Phase::A ? 'A' : (p == Phase::B ? 'B' : 'C');
}

/// Set of phases present at a bus or on a line. Iteration order is always
/// A < B < C regardless of the order letters appeared in the input.
class PhaseSet {
 public:
  PhaseSet() = default;

  // Accepts a non-empty string of distinct letters from {A,B,C}.
  static std::optional<PhaseSet> from_string(std::string_view s);
  static PhaseSet all3();
  static PhaseSet single(Phase p);

  void add(Phase p) { bits_ = static_cast<std::uint8_t>(bits_ | bit(p)); }
  bool contains(Phase p) const { return (bits_ & bit(p)) != 0; }
  bool subset_of(PhaseSet o) const { return (bits_ & ~o.bits_) == 0; }
  PhaseSet intersect(PhaseSet o) const;
  int count() const;
  bool empty() const { return bits_ == 0; }

  std::string str() const;
  std::vector<Phase> list() const;

  // Index of p within the A<B<C ordering of this set, -1 if absent.
  int position_of(Phase p) const;

  friend bool operator==(PhaseSet a, PhaseSet b) { return a.bits_ == b.bits_; }
  friend bool operator!=(PhaseSet a, PhaseSet b) { return a.bits_ != b.bits_; }

 private:
  static constexpr std::uint8_t bit(Phase p) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(p));
  }
  std::uint8_t bits_ = 0;
};

/// "822-A" style node-phase name used in reports and error messages.
std::string node_phase_label(std::string_view bus, Phase p);

/// 17-significant-digit decimal formatting; round-trips any finite double.
std::string format_g17(double v);

/// Canonical complex literal: "<re>[+-]<im>j", e.g. "1.5-0.25j".
std::string format_complex(Complex v);

/// Parses "<re>", "<im>j" or "<re>[+-]<im>j". Returns nullopt on bad input.
std::optional<Complex> parse_complex(std::string_view s);

}  // namespace faultloc
