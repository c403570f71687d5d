// faultloc: fault localization toolkit for sparsely sensed distribution grids.
//
// Subcommands
//   matrices     build Y and Z, partition them under a sensor placement
//   simulate     solve a fault scenario and dump the phasor snapshot
//   localize     rank candidate fault locations from sensed deltas
//   communities  column-correlation structure of the sensing matrix
//   placement    greedy sensor placement and placement scoring
//
// Exit codes: 0 success, 2 input/parse/model errors, 1 numeric failures.

#include "faultloc/export.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>

using namespace faultloc;

namespace {

struct RunConfig {
  std::string network;
  std::string placement;  // comma-separated bus ids
  std::string fault;
  std::string fault_z = "0";  // ohms, complex, or "inf"
  double noise_mag = 0.0;
  double noise_ang = 0.0;
  double tau = 0.814;
  double eps = 0.25;
  double rank_tol = 1e-10;
  std::uint64_t seed = 1;
  std::string out = ".";
  int n_sensors = 0;
  std::string baseline;
  std::string source_matrix = "whitened";
};

std::vector<std::string> split_commas(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string join_commas(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) {
    if (!out.empty()) out += ',';
    out += s;
  }
  return out;
}

std::string fmt6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

Complex parse_fault_impedance(const std::string& text) {
  std::string t = text;
  for (char& c : t) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (t == "inf" || t == "infinity")
    return {std::numeric_limits<double>::infinity(), 0.0};
  auto z = parse_complex(text);
  if (!z) throw ModelError("invalid fault impedance '" + text + "'");
  return *z;
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out);
  return (fs::path(cfg.out) / name).string();
}

Placement placement_from_config(const NetworkModel& model,
                                const NodeIndexMap& map,
                                const RunConfig& cfg) {
  if (cfg.placement.empty())
    throw ModelError("this command needs --placement");
  return make_placement(model, map, split_commas(cfg.placement));
}

struct CouplingSummary {
  int rank = 0;
  double condition = 1.0;
};

CouplingSummary coupling_summary(const PartitionedBlocks& blocks,
                                 double rank_tol) {
  CouplingSummary s;
  if (blocks.M == blocks.K) return s;  // nothing unobserved
  CMatrix T = coupling_matrix(blocks);
  Eigen::JacobiSVD<CMatrix> svd(T);
  const RVector& sv = svd.singularValues();
  double smax = sv(0);
  double smin = sv(sv.size() - 1);
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > rank_tol * smax) ++s.rank;
  s.condition = smin > 0.0 ? smax / smin
                           : std::numeric_limits<double>::infinity();
  return s;
}

int run_matrices(const RunConfig& cfg) {
  NetworkModel model = load_network_file(cfg.network);
  NodeIndexMap map = build_index_map(model);
  AdmittanceMatrix adm = build_admittance(model);
  ImpedanceMatrix imp = invert_to_impedance(adm);

  write_matrix_csv(out_path(cfg, "Y.csv"), adm.Y);
  write_matrix_csv(out_path(cfg, "Z.csv"), imp.Z);
  std::cout << "M=" << map.size() << '\n';
  std::cout << "wrote Y.csv Z.csv\n";

  if (!cfg.placement.empty()) {
    Placement placement = placement_from_config(model, map, cfg);
    PartitionedBlocks blocks = partition(adm, imp, placement);
    write_matrix_csv(out_path(cfg, "Z_aa.csv"), blocks.Z_aa);
    write_matrix_csv(out_path(cfg, "Z_au.csv"), blocks.Z_au);
    write_matrix_csv(out_path(cfg, "Y_aa.csv"), blocks.Y_aa);
    write_matrix_csv(out_path(cfg, "Y_au.csv"), blocks.Y_au);
    write_matrix_csv(out_path(cfg, "Y_uu.csv"), blocks.Y_uu);
    CouplingSummary cs = coupling_summary(blocks, cfg.rank_tol);
    std::cout << "K=" << blocks.K << '\n';
    std::cout << "coupling rank=" << cs.rank
              << " condition=" << fmt6(cs.condition) << '\n';
    std::cout << "wrote Z_aa.csv Z_au.csv Y_aa.csv Y_au.csv Y_uu.csv\n";
  }
  return 0;
}

int run_simulate(const RunConfig& cfg) {
  NetworkModel model = load_network_file(cfg.network);
  if (cfg.fault.empty()) throw ModelError("this command needs --fault");
  FaultSpec fault =
      parse_fault_spec(cfg.fault, parse_fault_impedance(cfg.fault_z));
  if (!model.find_bus(fault.bus))
    throw ModelError("fault bus '" + fault.bus + "' is not in the network");

  PhasorSnapshot snap = apply_fault(model, fault);
  write_snapshot_csv(out_path(cfg, "snapshot.csv"), snap);
  std::cout << "fault: " << fault_spec_label(fault) << '\n';
  std::cout << "wrote snapshot.csv\n";

  if (!cfg.placement.empty()) {
    NodeIndexMap map = build_index_map(model);
    Placement placement = placement_from_config(model, map, cfg);
    NoiseModel noise{cfg.noise_mag, cfg.noise_ang, cfg.seed};
    MeasurementSet meas = measure(model, snap, placement, noise);
    for (const auto& w : meas.warnings) std::cerr << "warning: " << w << '\n';

    std::string path = out_path(cfg, "measurements.csv");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open output file '" + path + "'");
    os << "bus,phase,dV_re,dV_im,dI_re,dI_im\n";
    for (int k = 0; k < placement.K(); ++k) {
      const auto& e = map.entries[static_cast<std::size_t>(
          placement.available_indices[static_cast<std::size_t>(k)])];
      os << e.bus << ',' << phase_letter(e.phase) << ','
         << format_g17(meas.dV_a(k).real()) << ','
         << format_g17(meas.dV_a(k).imag()) << ','
         << format_g17(meas.dI_a(k).real()) << ','
         << format_g17(meas.dI_a(k).imag()) << '\n';
    }
    std::cout << "wrote measurements.csv\n";
  }
  return 0;
}

int run_localize(const RunConfig& cfg) {
  NetworkModel model = load_network_file(cfg.network);
  if (cfg.fault.empty()) throw ModelError("this command needs --fault");
  FaultSpec fault =
      parse_fault_spec(cfg.fault, parse_fault_impedance(cfg.fault_z));
  if (!model.find_bus(fault.bus))
    throw ModelError("fault bus '" + fault.bus + "' is not in the network");

  NodeIndexMap map = build_index_map(model);
  Placement placement = placement_from_config(model, map, cfg);
  AdmittanceMatrix adm = build_admittance(model);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  PartitionedBlocks blocks = partition(adm, imp, placement);
  WhitenedModel wm = build_whitened_model(blocks, cfg.rank_tol);

  PhasorSnapshot snap = apply_fault(model, fault);
  NoiseModel noise{cfg.noise_mag, cfg.noise_ang, cfg.seed};
  MeasurementSet meas = measure(model, snap, placement, noise);
  for (const auto& w : meas.warnings) std::cerr << "warning: " << w << '\n';
  CVector ig = approximate_fault_current(meas, fault.type, model);

  double source_scale = 0.0;
  for (const auto& rec : meas.source_currents)
    source_scale = std::max(source_scale, std::abs(rec.pre));
  bool no_fault = ig.lpNorm<Eigen::Infinity>() <= 1e-9 * source_scale;

  CandidateSet cands = enumerate_candidates(model, map, fault.type);
  LocalizationResult raw = localize_raw(meas, blocks, ig, cands, cfg.eps);
  LocalizationResult white =
      localize_whitened(meas, blocks, wm, ig, cands, cfg.eps);

  LocalizationReportInfo info;
  info.placement = cfg.placement;
  info.fault = fault_spec_label(fault);
  info.noise_magnitude = cfg.noise_mag;
  info.noise_angle = cfg.noise_ang;
  info.seed = cfg.seed;
  write_localization_csv(out_path(cfg, "ranking_raw.csv"), raw, cands, info);
  write_localization_csv(out_path(cfg, "ranking_whitened.csv"), white, cands,
                         info);

  std::cout << "fault: " << fault_spec_label(fault)
            << "  candidates: " << cands.candidates.size() << '\n';
  if (no_fault)
    std::cout << "warning: no detectable fault (fault current is negligible; "
                 "objectives are near-equal)\n";
  for (const LocalizationResult* res : {&raw, &white}) {
    const char* name = res->metric == MetricKind::Raw ? "raw" : "whitened";
    const Candidate& best =
        cands.candidates[static_cast<std::size_t>(res->winner)];
    std::cout << name << ": best=" << best.label() << " objective="
              << fmt6(res->objectives[static_cast<std::size_t>(res->winner)])
              << '\n';
    std::cout << name << " ambiguity set (eps=" << fmt6(cfg.eps) << "):";
    for (int idx : res->ambiguity)
      std::cout << ' '
                << cands.candidates[static_cast<std::size_t>(idx)].bus;
    std::cout << '\n';
  }
  std::cout << "wrote ranking_raw.csv ranking_whitened.csv\n";
  return 0;
}

int run_communities(const RunConfig& cfg) {
  NetworkModel model = load_network_file(cfg.network);
  NodeIndexMap map = build_index_map(model);
  Placement placement = placement_from_config(model, map, cfg);
  AdmittanceMatrix adm = build_admittance(model);
  ImpedanceMatrix imp = invert_to_impedance(adm);
  PartitionedBlocks blocks = partition(adm, imp, placement);

  CMatrix X;
  SensingMatrixKind kind;
  if (cfg.source_matrix == "whitened") {
    kind = SensingMatrixKind::WhitenedD;
    X = blocks.M == blocks.K
            ? CMatrix(CMatrix::Identity(blocks.K, blocks.K))
            : build_whitened_model(blocks, cfg.rank_tol).D;
  } else if (cfg.source_matrix == "raw") {
    kind = SensingMatrixKind::RawZa;
    X = blocks.Z_a;
  } else {
    throw ModelError("--source-matrix must be 'whitened' or 'raw'");
  }

  std::vector<NodeIndexMap::Entry> labels = partition_column_labels(blocks);
  std::vector<Phase> phases = partition_column_phases(blocks);
  CorrelationMatrix corr = column_correlations(X, phases, kind);
  CommunityGraph graph = threshold_adjacency(corr, cfg.tau);
  std::vector<LabeledCommunity> comms =
      extract_communities(graph, labels, corr.zero_columns);

  std::vector<std::string> bus_order = feeder_dfs_order(model);
  for (Phase p : {Phase::A, Phase::B, Phase::C}) {
    std::vector<int> order = ordered_phase_columns(corr, labels, p, bus_order);
    if (order.empty()) continue;
    std::string letter(1, phase_letter(p));
    {
      std::string path = out_path(cfg, "correlation_" + letter + ".csv");
      std::ofstream os(path, std::ios::binary);
      if (!os) throw Error("cannot open output file '" + path + "'");
      write_correlation_csv(os, corr, labels, order);
    }
    {
      std::string path = out_path(cfg, "adjacency_" + letter + ".csv");
      std::ofstream os(path, std::ios::binary);
      if (!os) throw Error("cannot open output file '" + path + "'");
      write_adjacency_csv(os, graph, labels, order);
    }
    write_heatmap_svg(out_path(cfg, "heatmap_" + letter + ".svg"), corr,
                      labels, order,
                      "phase " + letter + " column correlation, tau=" +
                          fmt6(cfg.tau));
  }
  {
    std::string path = out_path(cfg, "communities.csv");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot open output file '" + path + "'");
    write_communities_csv(os, comms);
  }

  std::array<int, 3> count{}, largest{};
  int unlocatable = 0;
  for (const auto& c : comms) {
    auto pi = static_cast<std::size_t>(c.members.front().phase);
    count[pi] += 1;
    largest[pi] = std::max(largest[pi], static_cast<int>(c.columns.size()));
    if (c.unlocatable) ++unlocatable;
  }
  std::cout << "tau=" << fmt6(cfg.tau) << " source=" << cfg.source_matrix
            << '\n';
  for (Phase p : {Phase::A, Phase::B, Phase::C}) {
    auto pi = static_cast<std::size_t>(p);
    if (count[pi] == 0) continue;
    std::cout << "phase " << phase_letter(p) << ": communities=" << count[pi]
              << " largest=" << largest[pi] << '\n';
  }
  std::cout << "unlocatable node-phases: " << unlocatable << '\n';
  std::cout << "wrote communities.csv and per-phase correlation/adjacency/"
               "heatmap files\n";
  return 0;
}

void print_score(const std::string& tag, const PlacementScore& score) {
  std::cout << tag << ": K=" << score.K << " M=" << score.M
            << " rank=" << score.rank
            << " condition=" << fmt6(score.condition)
            << " worst_community=" << score.worst_community()
            << " unlocatable=" << score.unlocatable_count;
  if (score.yaa_offdiagonal) std::cout << " [adjacent sensors]";
  std::cout << '\n';
  for (Phase p : {Phase::A, Phase::B, Phase::C}) {
    auto pi = static_cast<std::size_t>(p);
    if (score.num_communities[pi] == 0) continue;
    std::cout << "  phase " << phase_letter(p)
              << ": communities=" << score.num_communities[pi]
              << " largest=" << score.max_community[pi]
              << " mean=" << fmt6(score.mean_community[pi]) << '\n';
  }
}

int run_placement(const RunConfig& cfg) {
  NetworkModel model = load_network_file(cfg.network);
  if (cfg.n_sensors < 1) throw ModelError("this command needs --n-sensors");

  std::vector<std::string> warnings;
  Placement chosen =
      greedy_placement(model, cfg.n_sensors, cfg.tau, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';

  std::cout << "chosen: " << join_commas(chosen.monitored) << '\n';
  PlacementScore score = placement_quality(model, chosen, cfg.tau, cfg.rank_tol);
  print_score("greedy", score);

  if (!cfg.baseline.empty()) {
    NodeIndexMap map = build_index_map(model);
    Placement base = make_placement(model, map, split_commas(cfg.baseline));
    PlacementScore bscore =
        placement_quality(model, base, cfg.tau, cfg.rank_tol);
    print_score("baseline", bscore);
    std::cout << (score.worst_community() <= bscore.worst_community()
                      ? "greedy matches or beats the baseline's worst "
                        "community size\n"
                      : "baseline beats the greedy placement\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{"fault localization from sparse phasor measurements"};
  app.require_subcommand(1);
  app.set_config("--config");

  app.add_option("--network", cfg.network, "network model file")->required();
  // join(',') keeps comma lists intact when they arrive via a config file,
  // where CLI11 pre-splits values on commas.
  app.add_option("--placement", cfg.placement, "comma-separated monitored buses")
      ->join(',');
  app.add_option("--fault", cfg.fault, "fault spec, e.g. LLL@816 or AG@822");
  app.add_option("--fault-z", cfg.fault_z,
                 "fault impedance in ohms (complex or 'inf')");
  app.add_option("--noise-mag", cfg.noise_mag,
                 "relative magnitude noise (std dev)");
  app.add_option("--noise-ang", cfg.noise_ang, "angle noise in radians (std dev)");
  app.add_option("--tau", cfg.tau, "correlation threshold in (0,1]");
  app.add_option("--eps", cfg.eps, "ambiguity margin");
  app.add_option("--rank-tol", cfg.rank_tol, "relative singular value cutoff");
  app.add_option("--seed", cfg.seed, "noise seed");
  app.add_option("--out", cfg.out, "output directory");
  app.add_option("--n-sensors", cfg.n_sensors, "sensor budget (placement)");
  app.add_option("--baseline", cfg.baseline,
                 "baseline placement to compare against")
      ->join(',');
  app.add_option("--source-matrix", cfg.source_matrix,
                 "correlation source: whitened or raw");

  CLI::App* cmd_matrices = app.add_subcommand(
      "matrices", "build Y and Z and the placement partition");
  CLI::App* cmd_simulate =
      app.add_subcommand("simulate", "solve a fault scenario");
  CLI::App* cmd_localize =
      app.add_subcommand("localize", "rank candidate fault locations");
  CLI::App* cmd_communities = app.add_subcommand(
      "communities", "column-correlation communities of the sensing matrix");
  CLI::App* cmd_placement =
      app.add_subcommand("placement", "greedy sensor placement");
  for (CLI::App* sub : {cmd_matrices, cmd_simulate, cmd_localize,
                        cmd_communities, cmd_placement})
    sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_matrices->parsed()) return run_matrices(cfg);
    if (cmd_simulate->parsed()) return run_simulate(cfg);
    if (cmd_localize->parsed()) return run_localize(cfg);
    if (cmd_communities->parsed()) return run_communities(cfg);
    if (cmd_placement->parsed()) return run_placement(cfg);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
