#include "faultloc/export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <unordered_map>

namespace faultloc {

namespace {

std::ofstream open_output(const std::string& path) {
  std::ofstream os(path, std::ios::binary);  // '\n' stays '\n'
  if (!os) throw Error("cannot open output file '" + path + "'");
  return os;
}

void put_complex_pair(std::ostream& os, Complex v) {
  os << format_g17(v.real()) << ',' << format_g17(v.imag());
}

const char* metric_name(MetricKind m) {
  return m == MetricKind::Raw ? "raw" : "whitened";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Rgb {
  double r, g, b;
};

// Dark-to-bright perceptual ramp sampled at five stops.
constexpr Rgb kRampStops[5] = {{0, 0, 4},
                               {87, 16, 110},
                               {188, 55, 84},
                               {249, 142, 9},
                               {252, 255, 164}};

std::string ramp_color(double t) {
  t = std::clamp(t, 0.0, 1.0);
  double x = t * 4.0;
  int lo = std::min(3, static_cast<int>(x));
  double f = x - lo;
  const Rgb& a = kRampStops[lo];
  const Rgb& b = kRampStops[lo + 1];
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(a.r + f * (b.r - a.r))),
                static_cast<int>(std::lround(a.g + f * (b.g - a.g))),
                static_cast<int>(std::lround(a.b + f * (b.b - a.b))));
  return buf;
}

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void write_matrix_csv(std::ostream& os, const CMatrix& X) {
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    for (Eigen::Index c = 0; c < X.cols(); ++c) {
      if (c > 0) os << ',';
      put_complex_pair(os, X(r, c));
    }
    os << '\n';
  }
}

void write_matrix_csv(const std::string& path, const CMatrix& X) {
  auto os = open_output(path);
  write_matrix_csv(os, X);
}

void write_snapshot_csv(std::ostream& os, const PhasorSnapshot& snap) {
  os << "bus,phase,V0_re,V0_im,I0_re,I0_im,VF_re,VF_im,IF_re,IF_im,IE_re,IE_im\n";
  for (Eigen::Index k = 0; k < snap.V0.size(); ++k) {
    const auto& entry = snap.index_map.entries[static_cast<std::size_t>(k)];
    os << entry.bus << ',' << phase_letter(entry.phase) << ',';
    put_complex_pair(os, snap.V0(k));
    os << ',';
    put_complex_pair(os, snap.I0(k));
    os << ',';
    put_complex_pair(os, snap.VF(k));
    os << ',';
    put_complex_pair(os, snap.IF(k));
    os << ',';
    put_complex_pair(os, snap.IE(k));
    os << '\n';
  }
}

void write_snapshot_csv(const std::string& path, const PhasorSnapshot& snap) {
  auto os = open_output(path);
  write_snapshot_csv(os, snap);
}

void write_localization_csv(std::ostream& os, const LocalizationResult& result,
                            const CandidateSet& candidates,
                            const LocalizationReportInfo& info) {
  os << "# metric=" << metric_name(result.metric) << '\n';
  os << "# epsilon=" << format_g17(result.epsilon) << '\n';
  os << "# placement=" << info.placement << '\n';
  os << "# fault=" << info.fault << '\n';
  os << "# noise_magnitude=" << format_g17(info.noise_magnitude) << '\n';
  os << "# noise_angle=" << format_g17(info.noise_angle) << '\n';
  os << "# seed=" << info.seed << '\n';
  os << "rank,bus,phases,objective\n";
  for (std::size_t r = 0; r < result.ranking.size(); ++r) {
    int idx = result.ranking[r];
    const Candidate& cand =
        candidates.candidates[static_cast<std::size_t>(idx)];
    os << (r + 1) << ',' << cand.bus << ',' << cand.phases.str() << ','
       << format_g17(result.objectives[static_cast<std::size_t>(idx)]) << '\n';
  }
}

void write_localization_csv(const std::string& path,
                            const LocalizationResult& result,
                            const CandidateSet& candidates,
                            const LocalizationReportInfo& info) {
  auto os = open_output(path);
  write_localization_csv(os, result, candidates, info);
}

void write_correlation_csv(std::ostream& os, const CorrelationMatrix& corr,
                           const std::vector<NodeIndexMap::Entry>& labels,
                           const std::vector<int>& order) {
  os << "label";
  for (int j : order)
    os << ',' << node_phase_label(labels[static_cast<std::size_t>(j)].bus,
                                  labels[static_cast<std::size_t>(j)].phase);
  os << '\n';
  for (int r : order) {
    os << node_phase_label(labels[static_cast<std::size_t>(r)].bus,
                           labels[static_cast<std::size_t>(r)].phase);
    for (int j : order) os << ',' << format_g17(corr.C(r, j));
    os << '\n';
  }
}

void write_adjacency_csv(std::ostream& os, const CommunityGraph& graph,
                         const std::vector<NodeIndexMap::Entry>& labels,
                         const std::vector<int>& order) {
  os << "label";
  for (int j : order)
    os << ',' << node_phase_label(labels[static_cast<std::size_t>(j)].bus,
                                  labels[static_cast<std::size_t>(j)].phase);
  os << '\n';
  for (int r : order) {
    os << node_phase_label(labels[static_cast<std::size_t>(r)].bus,
                           labels[static_cast<std::size_t>(r)].phase);
    for (int j : order)
      os << ','
         << (r == j ? 1
                    : static_cast<int>(graph.adjacency[static_cast<std::size_t>(
                          r)][static_cast<std::size_t>(j)]));
    os << '\n';
  }
}

void write_communities_csv(std::ostream& os,
                           const std::vector<LabeledCommunity>& communities) {
  os << "community_id,bus,phase\n";
  for (const LabeledCommunity& c : communities)
    for (const auto& member : c.members)
      os << c.id << ',' << member.bus << ',' << phase_letter(member.phase)
         << '\n';
}

std::vector<int> ordered_phase_columns(
    const CorrelationMatrix& corr,
    const std::vector<NodeIndexMap::Entry>& labels, Phase phase,
    const std::vector<std::string>& bus_order) {
  (void)corr;
  std::unordered_map<std::string, int> rank;
  for (std::size_t i = 0; i < bus_order.size(); ++i)
    rank.emplace(bus_order[i], static_cast<int>(i));

  std::vector<int> cols;
  for (std::size_t j = 0; j < labels.size(); ++j)
    if (labels[j].phase == phase) cols.push_back(static_cast<int>(j));
  std::stable_sort(cols.begin(), cols.end(), [&](int a, int b) {
    auto ra = rank.find(labels[static_cast<std::size_t>(a)].bus);
    auto rb = rank.find(labels[static_cast<std::size_t>(b)].bus);
    int ka = ra == rank.end() ? static_cast<int>(rank.size()) : ra->second;
    int kb = rb == rank.end() ? static_cast<int>(rank.size()) : rb->second;
    return ka < kb;
  });
  return cols;
}

void write_heatmap_svg(std::ostream& os, const CorrelationMatrix& corr,
                       const std::vector<NodeIndexMap::Entry>& labels,
                       const std::vector<int>& order,
                       const std::string& title) {
  const int n = static_cast<int>(order.size());
  const double cell = n > 0 ? std::clamp(600.0 / n, 9.0, 22.0) : 22.0;
  const double left = 72.0, top = 48.0, bottom = 72.0;
  const double grid = n * cell;
  const double legend_x = left + grid + 28.0;
  const double width = legend_x + 18.0 + 56.0;
  const double height = top + std::max(grid, 128.0) + bottom;

  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << svg_num(width)
     << "\" height=\"" << svg_num(height) << "\" viewBox=\"0 0 "
     << svg_num(width) << ' ' << svg_num(height) << "\">\n";
  os << "<defs><linearGradient id=\"ramp\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">";
  for (int s = 0; s < 5; ++s)
    os << "<stop offset=\"" << 25 * s << "%\" stop-color=\""
       << ramp_color(s / 4.0) << "\"/>";
  os << "</linearGradient></defs>\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << svg_num(left) << "\" y=\"20\" font-family=\"sans-serif\""
     << " font-size=\"14\">" << xml_escape(title) << "</text>\n";

  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double v = corr.C(order[static_cast<std::size_t>(r)],
                        order[static_cast<std::size_t>(c)]);
      os << "<rect x=\"" << svg_num(left + c * cell) << "\" y=\""
         << svg_num(top + r * cell) << "\" width=\"" << svg_num(cell)
         << "\" height=\"" << svg_num(cell) << "\" fill=\"" << ramp_color(v)
         << "\"><title>"
         << xml_escape(node_phase_label(
                labels[static_cast<std::size_t>(
                           order[static_cast<std::size_t>(r)])]
                    .bus,
                labels[static_cast<std::size_t>(
                           order[static_cast<std::size_t>(r)])]
                    .phase))
         << " / "
         << xml_escape(node_phase_label(
                labels[static_cast<std::size_t>(
                           order[static_cast<std::size_t>(c)])]
                    .bus,
                labels[static_cast<std::size_t>(
                           order[static_cast<std::size_t>(c)])]
                    .phase))
         << " = " << format_g17(v) << "</title></rect>\n";
    }
  }

  const double font = std::clamp(cell - 3.0, 6.0, 11.0);
  for (int r = 0; r < n; ++r) {
    const auto& e =
        labels[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
    std::string lab = xml_escape(node_phase_label(e.bus, e.phase));
    double y = top + r * cell + cell / 2.0;
    os << "<text x=\"" << svg_num(left - 6.0) << "\" y=\"" << svg_num(y)
       << "\" font-family=\"monospace\" font-size=\"" << svg_num(font)
       << "\" text-anchor=\"end\" dominant-baseline=\"middle\">" << lab
       << "</text>\n";
    double x = left + r * cell + cell / 2.0;
    os << "<text x=\"" << svg_num(x) << "\" y=\"" << svg_num(top + grid + 6.0)
       << "\" font-family=\"monospace\" font-size=\"" << svg_num(font)
       << "\" text-anchor=\"end\" transform=\"rotate(-90 " << svg_num(x) << ' '
       << svg_num(top + grid + 6.0) << ")\">" << lab << "</text>\n";
  }

  const double bar_h = std::max(grid, 128.0);
  os << "<rect x=\"" << svg_num(legend_x) << "\" y=\"" << svg_num(top)
     << "\" width=\"18\" height=\"" << svg_num(bar_h)
     << "\" fill=\"url(#ramp)\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    double frac = tick / 4.0;
    double y = top + (1.0 - frac) * bar_h;
    os << "<text x=\"" << svg_num(legend_x + 24.0) << "\" y=\"" << svg_num(y)
       << "\" font-family=\"monospace\" font-size=\"10\""
       << " dominant-baseline=\"middle\">" << svg_num(frac) << "</text>\n";
  }
  os << "</svg>\n";
}

void write_heatmap_svg(const std::string& path, const CorrelationMatrix& corr,
                       const std::vector<NodeIndexMap::Entry>& labels,
                       const std::vector<int>& order,
                       const std::string& title) {
  auto os = open_output(path);
  write_heatmap_svg(os, corr, labels, order, title);
}

}  // namespace faultloc
