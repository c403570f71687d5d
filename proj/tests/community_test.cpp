#include <doctest.h>

#include "testutil.hpp"

#include <set>

using namespace faultloc;

namespace {

// Every community of the finer partition must sit inside one community of
// the coarser partition.
bool refines(const std::vector<std::vector<int>>& fine,
             const std::vector<std::vector<int>>& coarse) {
  for (const auto& f : fine) {
    bool contained = false;
    for (const auto& c : coarse) {
      std::set<int> cs(c.begin(), c.end());
      bool all = true;
      for (int x : f)
        if (!cs.count(x)) {
          all = false;
          break;
        }
      if (all) {
        contained = true;
        break;
      }
    }
    if (!contained) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("community") {

TEST_CASE("column alignment is 1 for duplicates, 0 across phases") {
  CMatrix X(3, 4);
  X.col(0) << Complex(1, 0), Complex(0, 1), Complex(2, -1);
  X.col(1) = Complex(0, 2) * X.col(0);     // parallel up to a complex scale
  X.col(2) << Complex(0, 1), Complex(1, 0), Complex(0, 0);
  X.col(3) = X.col(2);
  std::vector<Phase> phases{Phase::A, Phase::A, Phase::B, Phase::A};

  CorrelationMatrix corr =
      column_correlations(X, phases, SensingMatrixKind::WhitenedD);
  CHECK(corr.C(0, 0) == 1.0);
  CHECK(corr.C(0, 1) == doctest::Approx(1.0));
  CHECK(corr.C(1, 0) == corr.C(0, 1));
  // Cross-phase pairs are filtered to zero even when geometrically aligned.
  CHECK(corr.C(2, 3) == 0.0);
  CHECK(corr.C(3, 2) == 0.0);
  CHECK(corr.C(0, 3) >= 0.0);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      CHECK(corr.C(i, j) >= 0.0);
      CHECK(corr.C(i, j) <= 1.0);
    }
  CHECK(corr.phase_blocks[0] == std::vector<int>{0, 1, 3});
  CHECK(corr.phase_blocks[1] == std::vector<int>{2});
  CHECK(corr.phase_blocks[2].empty());
  CHECK(corr.zero_columns.empty());

  // Without the phase filter the aligned cross-phase pair shows up.
  CorrelationMatrix open =
      column_correlations(X, phases, SensingMatrixKind::WhitenedD, false);
  CHECK(open.C(2, 3) == doctest::Approx(1.0));
  CHECK_FALSE(open.phase_filtered);
}

TEST_CASE("orthogonal columns do not correlate") {
  CMatrix X = CMatrix::Identity(3, 3);
  std::vector<Phase> phases{Phase::A, Phase::A, Phase::A};
  CorrelationMatrix corr =
      column_correlations(X, phases, SensingMatrixKind::RawZa);
  CHECK(corr.C(0, 1) == 0.0);
  CHECK(corr.C(1, 2) == 0.0);
  CHECK(corr.source_kind == SensingMatrixKind::RawZa);
}

TEST_CASE("numerically dead columns are flagged unlocatable") {
  CMatrix X(2, 3);
  X.col(0) << Complex(1, 0), Complex(1, 1);
  X.col(1) << Complex(0, 0), Complex(0, 0);  // exactly zero
  X.col(2) << Complex(2, 0), Complex(0, -1);
  std::vector<Phase> phases{Phase::A, Phase::A, Phase::A};
  CorrelationMatrix corr =
      column_correlations(X, phases, SensingMatrixKind::WhitenedD);
  CHECK(corr.zero_columns == std::vector<int>{1});
  CHECK(corr.C(1, 1) == 1.0);
  CHECK(corr.C(0, 1) == 0.0);
  CHECK(corr.C(1, 2) == 0.0);

  CommunityGraph graph = threshold_adjacency(corr, 0.5);
  std::vector<NodeIndexMap::Entry> labels{
      {"10", Phase::A}, {"11", Phase::A}, {"12", Phase::A}};
  std::vector<LabeledCommunity> comms =
      extract_communities(graph, labels, corr.zero_columns);
  int dead = 0;
  for (const LabeledCommunity& c : comms)
    if (c.unlocatable) {
      ++dead;
      REQUIRE(c.members.size() == 1);
      CHECK(c.members[0].bus == "11");
    }
  CHECK(dead == 1);
}

TEST_CASE("thresholding groups connected columns inside each phase") {
  // Three A columns: 0 and 1 nearly parallel, 2 apart; one B column.
  CMatrix X(3, 4);
  X.col(0) << Complex(1, 0), Complex(1, 0), Complex(0, 0);
  X.col(1) << Complex(1, 0), Complex(0.95, 0), Complex(0, 0);
  X.col(2) << Complex(0, 0), Complex(0, 0), Complex(1, 0);
  X.col(3) << Complex(1, 0), Complex(1, 0), Complex(1, 0);
  std::vector<Phase> phases{Phase::A, Phase::A, Phase::A, Phase::B};
  CorrelationMatrix corr =
      column_correlations(X, phases, SensingMatrixKind::WhitenedD);

  CommunityGraph graph = threshold_adjacency(corr, 0.9);
  REQUIRE(graph.communities.size() == 3);
  CHECK(graph.communities[0] == std::vector<int>{0, 1});
  CHECK(graph.communities[1] == std::vector<int>{2});
  CHECK(graph.communities[2] == std::vector<int>{3});
  CHECK(graph.adjacency[0][1] == 1);
  CHECK(graph.adjacency[0][2] == 0);
  CHECK(graph.adjacency[0][3] == 0);  // cross phase, filtered correlation

  CHECK_THROWS_AS(threshold_adjacency(corr, 0.0), ModelError);
  CHECK_THROWS_AS(threshold_adjacency(corr, -1.0), ModelError);
  CHECK_THROWS_AS(threshold_adjacency(corr, 1.5), ModelError);
  CHECK_NOTHROW(threshold_adjacency(corr, 1.0));
}

TEST_CASE("tightening the threshold only splits communities") {
  NetworkModel m = load_network_file(testutil::data_file("ieee34.net"));
  AdmittanceMatrix adm = build_admittance(m);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  Placement pl = make_placement(m, adm.index_map,
                                {"800", "830", "848", "832", "862"});
  PartitionedBlocks blocks = partition(adm, imp, pl);
  WhitenedModel wm = build_whitened_model(blocks);
  CorrelationMatrix corr = column_correlations(
      wm.D, partition_column_phases(blocks), SensingMatrixKind::WhitenedD);

  std::vector<std::vector<int>> prev;
  for (double tau : {0.5, 0.7, 0.814, 0.9, 0.99}) {
    CAPTURE(tau);
    CommunityGraph g = threshold_adjacency(corr, tau);
    if (!prev.empty()) CHECK(refines(g.communities, prev));
    prev = g.communities;
  }
}

TEST_CASE("community columns follow the partition ordering") {
  NetworkModel m = load_network_file(testutil::data_file("fig2.net"));
  AdmittanceMatrix adm = build_admittance(m);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  Placement pl = make_placement(m, adm.index_map, {"2", "5"});
  PartitionedBlocks blocks = partition(adm, imp, pl);

  std::vector<NodeIndexMap::Entry> labels = partition_column_labels(blocks);
  std::vector<Phase> phases = partition_column_phases(blocks);
  REQUIRE(labels.size() == 6);
  CHECK(labels[0].bus == "2");
  CHECK(labels[1].bus == "5");
  CHECK(labels[2].bus == "1");
  CHECK(labels[5].bus == "6");
  for (std::size_t i = 0; i < labels.size(); ++i)
    CHECK(phases[i] == labels[i].phase);
}

TEST_CASE("placement scores expose sensing geometry") {
  NetworkModel m = load_network_file(testutil::data_file("fig2.net"));

  // Separated sensors: diagonal Y_aa.
  PlacementScore apart = placement_quality(
      m, make_placement(m, build_index_map(m), {"2", "5"}));
  CHECK_FALSE(apart.yaa_offdiagonal);
  CHECK(apart.K == 2);
  CHECK(apart.M == 6);
  CHECK(apart.rank >= 1);

  // Adjacent sensors share a line: off-diagonal coupling in Y_aa.
  PlacementScore adjacent = placement_quality(
      m, make_placement(m, build_index_map(m), {"2", "3"}));
  CHECK(adjacent.yaa_offdiagonal);

  // Full observability: every node-phase is its own community.
  NetworkModel f1 = load_network_file(testutil::data_file("fig1.net"));
  PlacementScore full = placement_quality(
      f1, make_placement(f1, build_index_map(f1), {"1", "2", "3", "4"}));
  CHECK(full.rank == 0);
  CHECK(full.condition == 1.0);
  CHECK(full.num_communities[0] == 4);
  CHECK(full.max_community[0] == 1);
  CHECK(full.unlocatable_count == 0);
  CHECK(full.worst_community() == 1);
}

TEST_CASE("the two benchmark placements rank by conditioning") {
  NetworkModel m = load_network_file(testutil::data_file("ieee34.net"));
  NodeIndexMap map = build_index_map(m);
  PlacementScore good = placement_quality(
      m, make_placement(m, map, {"800", "830", "848", "832", "862"}));
  PlacementScore bad = placement_quality(
      m, make_placement(m, map, {"800", "814", "816", "848", "850"}));

  CHECK(good.rank == 15);
  CHECK(good.condition < 10.0);
  CHECK(good.unlocatable_count == 0);
  CHECK(bad.rank == 12);
  CHECK(std::isinf(bad.condition));
  CHECK(bad.unlocatable_count == 3);  // nothing senses the nodes behind 814/816
  CHECK(bad.worst_community() >= good.worst_community());
}

TEST_CASE("greedy placement keeps sources and beats naive adjacency") {
  NetworkModel m = load_network_file(testutil::data_file("fig2.net"));
  NodeIndexMap map = build_index_map(m);

  std::vector<std::string> warnings;
  Placement greedy = greedy_placement(m, 2, 0.814, &warnings);
  CHECK(warnings.empty());
  REQUIRE(greedy.monitored.size() == 2);
  CHECK(greedy.monitored[0] == "1");  // the source comes first

  PlacementScore gs = placement_quality(m, greedy);
  // The greedy step considered {1,2} among its options, so it cannot be worse.
  PlacementScore naive = placement_quality(m, make_placement(m, map, {"1", "2"}));
  CHECK(gs.worst_community() <= naive.worst_community());

  // A budget below the source count truncates with a warning.
  NetworkModel two = load_network_file(testutil::data_file("ieee34.net"));
  std::vector<std::string> w2;
  Placement forced = greedy_placement(two, 1, 0.814, &w2);
  CHECK(forced.monitored.size() == 1);
  CHECK_FALSE(w2.empty());
}

TEST_CASE("heatmap ordering walks the feeder depth-first from the source") {
  NetworkModel m = load_network_file(testutil::data_file("fig2.net"));
  CHECK(feeder_dfs_order(m) ==
        std::vector<std::string>{"1", "2", "3", "4", "5", "6"});
  NetworkModel big = load_network_file(testutil::data_file("ieee34.net"));
  std::vector<std::string> order = feeder_dfs_order(big);
  CHECK(order.size() == big.buses.size());
  CHECK(order.front() == "800");
}

}  // TEST_SUITE
