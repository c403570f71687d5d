#include <doctest.h>

#include "testutil.hpp"

#include <fstream>

using namespace faultloc;

TEST_SUITE("netmodel") {

TEST_CASE("complex literals parse and format round-trip") {
  CHECK(*parse_complex("1.5-0.25j") == Complex(1.5, -0.25));
  CHECK(*parse_complex("0.3+0.6j") == Complex(0.3, 0.6));
  CHECK(*parse_complex("-2.5-3.5j") == Complex(-2.5, -3.5));
  CHECK(*parse_complex("42") == Complex(42.0, 0.0));
  CHECK(*parse_complex("1e-3j") == Complex(0.0, 1e-3));
  CHECK(*parse_complex("-4j") == Complex(0.0, -4.0));
  CHECK(!parse_complex("").has_value());
  CHECK(!parse_complex("j").has_value());
  CHECK(!parse_complex("1+2").has_value());
  CHECK(!parse_complex("1+2i").has_value());
  CHECK(!parse_complex("1 + 2j").has_value());

  for (Complex v : {Complex(1.0 / 3.0, -2.0 / 7.0), Complex(0, 0),
                    Complex(-1e300, 1e-300), Complex(14376.0, 0.0)}) {
    auto back = parse_complex(format_complex(v));
    REQUIRE(back.has_value());
    CHECK(*back == v);
  }
}

TEST_CASE("phase sets keep A<B<C order and reject bad input") {
  auto ps = PhaseSet::from_string("CA");
  REQUIRE(ps.has_value());
  CHECK(ps->str() == "AC");
  CHECK(ps->count() == 2);
  CHECK(ps->contains(Phase::A));
  CHECK(!ps->contains(Phase::B));
  CHECK(ps->position_of(Phase::C) == 1);
  CHECK(ps->position_of(Phase::B) == -1);
  CHECK(ps->subset_of(PhaseSet::all3()));
  CHECK(!PhaseSet::all3().subset_of(*ps));

  CHECK(!PhaseSet::from_string("").has_value());
  CHECK(!PhaseSet::from_string("AA").has_value());
  CHECK(!PhaseSet::from_string("ABD").has_value());
  CHECK(!PhaseSet::from_string("abc").has_value());
}

TEST_CASE("a small network parses into the expected structures") {
  NetworkModel m = parse_network(
      "# two buses\n"
      "bus 1 phases=ABC vnom=2400\n"
      "bus 2 phases=AB vnom=2400\n"
      "line 1 2 phases=AB z=[0.3+0.6j,0.05+0.1j,0.05+0.1j,0.3+0.6j] "
      "ysh=[0+1e-6j,0,0,0+1e-6j]\n"
      "shunt 1 phases=ABC kind=source z=[0.1+1j,0.1+1j,0.1+1j] "
      "inorton=[100,100,100]\n"
      "shunt 2 phases=A kind=zload z=[50+20j]\n");
  REQUIRE(m.buses.size() == 2);
  REQUIRE(m.lines.size() == 1);
  REQUIRE(m.shunts.size() == 2);
  CHECK(m.buses[0].phases == PhaseSet::all3());
  CHECK(m.buses[1].nominal_voltage == 2400.0);
  CHECK(m.lines[0].series_impedance(0, 1) == Complex(0.05, 0.1));
  CHECK(m.lines[0].shunt_admittance(1, 1) == Complex(0.0, 1e-6));
  CHECK(m.shunts[0].kind == ShuntKind::NortonSource);
  CHECK(m.shunts[1].kind == ShuntKind::ConstantImpedanceLoad);
  CHECK(m.bus_position("2") == 1);
  CHECK(m.bus_position("99") == -1);
}

TEST_CASE("parse errors carry line and column positions") {
  auto expect_parse_error = [](const std::string& text, int line) {
    try {
      parse_network(text);
      FAIL("expected ParseError for: ", text);
    } catch (const ParseError& e) {
      CHECK(e.line == line);
      CHECK(e.column >= 1);
    }
  };
  expect_parse_error("frobnicate 1 2\n", 1);
  expect_parse_error("bus 1 phases=ABD vnom=2400\n", 1);
  expect_parse_error("bus 1 phases=A vnom=2400\nbus 2 phases=A\n", 2);
  expect_parse_error(
      "bus 1 phases=A vnom=2400\n"
      "bus 2 phases=A vnom=2400\n"
      "line 1 2 phases=A z=[0.1+oopsj]\n",
      3);
  expect_parse_error("bus 1 phases=A vnom=2400\nline 1 phases=A z=[1j]\n", 2);
  expect_parse_error("shunt 1 phases=A kind=magic\n", 1);
  expect_parse_error("bus 1 phases=A vnom=2400\nline 1 2 phases=A z=[[1j]]\n", 2);
  expect_parse_error("bus 1 phases=A vnom=2400\nline 1 2 phases=A z=[1j\n", 2);
  expect_parse_error("line 1 2 phases=A z=1j\n", 1);  // list brackets required

  // z lists must hold exactly p*p entries
  CHECK_THROWS_AS(parse_network("bus 1 phases=AB vnom=2400\n"
                                "bus 2 phases=AB vnom=2400\n"
                                "line 1 2 phases=AB z=[1j,1j,1j]\n"
                                "shunt 1 phases=AB kind=source z=[1j,1j] "
                                "inorton=[1,1]\n"),
                  ParseError);
}

TEST_CASE("validation rejects inconsistent models") {
  auto base = [] {
    return std::string(
        "bus 1 phases=ABC vnom=2400\n"
        "bus 2 phases=A vnom=2400\n"
        "line 1 2 phases=A z=[0.3+0.6j]\n"
        "shunt 1 phases=ABC kind=source z=[0.1+1j,0.1+1j,0.1+1j] "
        "inorton=[100,100,100]\n");
  };
  CHECK_NOTHROW(parse_network(base()));

  auto expect_model_error = [](const std::string& text, const char* needle) {
    try {
      parse_network(text);
      FAIL("expected ModelError containing: ", needle);
    } catch (const ModelError& e) {
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };

  expect_model_error(base() + "bus 2 phases=A vnom=2400\n", "duplicate bus id");
  expect_model_error(base() + "line 1 3 phases=A z=[1j]\n", "unknown bus '3'");
  expect_model_error(base() + "line 1 2 phases=AB z=[1j,0,0,1j]\n",
                     "not present at both endpoints");
  expect_model_error(base() + "shunt 2 phases=B kind=zload z=[50]\n",
                     "phases 'B'");
  expect_model_error(base() + "shunt 2 phases=A kind=zload z=[0]\n",
                     "zero impedance");
  expect_model_error(
      "bus 1 phases=A vnom=2400\n"
      "bus 2 phases=A vnom=2400\n"
      "line 1 2 phases=A z=[1j]\n"
      "shunt 1 phases=A kind=zload z=[50]\n",
      "no source");
  expect_model_error(
      "bus 1 phases=A vnom=2400\n"
      "bus 2 phases=A vnom=2400\n"
      "shunt 1 phases=A kind=source z=[1j] inorton=[100]\n",
      "disconnected");
}

TEST_CASE("node numbering lists buses in declaration order, phases A<B<C") {
  NetworkModel m = load_network_file(testutil::data_file("ieee34.net"));
  NodeIndexMap map = build_index_map(m);
  CHECK(map.size() == 86);
  CHECK(map.entries[0].bus == m.buses[0].id);
  CHECK(map.entries[0].phase == Phase::A);
  // Every bus occupies a contiguous block in declaration order.
  int idx = 0;
  for (const BusSpec& b : m.buses)
    for (Phase p : b.phases.list()) {
      CHECK(map.index_of(b.id, p) == idx);
      CHECK(map.label(idx) == node_phase_label(b.id, p));
      ++idx;
    }
  CHECK(idx == map.size());
  CHECK(map.index_of("822", Phase::B) == -1);
  CHECK(map.index_of("no-such-bus", Phase::A) == -1);
}

TEST_CASE("fixtures and generated networks survive a serialize/parse round-trip") {
  for (const char* name : {"fig1.net", "fig2.net", "ieee34.net"}) {
    CAPTURE(name);
    NetworkModel m = load_network_file(testutil::data_file(name));
    NetworkModel back = parse_network(serialize_network(m));
    CHECK(back == m);
  }
  std::mt19937_64 rng(20260822);
  for (int trial = 0; trial < 20; ++trial) {
    testutil::RandomNetOptions opt;
    opt.pload_prob = 0.3;
    opt.second_source = trial % 3 == 0;
    NetworkModel m = testutil::random_radial_net(rng, opt);
    NetworkModel back = parse_network(serialize_network(m));
    CHECK(back == m);
  }
}

TEST_CASE("loading a missing file reports the path") {
  try {
    load_network_file(testutil::data_file("does-not-exist.net"));
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("does-not-exist.net") != std::string::npos);
  }
}

}  // TEST_SUITE
