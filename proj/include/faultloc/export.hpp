#pragma once

#include "faultloc/community.hpp"
#include "faultloc/faultsim.hpp"

#include <cstdint>
#include <iosfwd>

namespace faultloc {

/// All writers emit full-precision numbers (17 significant digits) and '\n'
/// line endings, so repeated runs produce byte-identical files.

/// One CSV row per matrix row; each complex entry contributes a re,im pair.
void write_matrix_csv(std::ostream& os, const CMatrix& X);
void write_matrix_csv(const std::string& path, const CMatrix& X);

/// bus,phase,V0_re,V0_im,I0_re,I0_im,VF_re,VF_im,IF_re,IF_im,IE_re,IE_im
void write_snapshot_csv(std::ostream& os, const PhasorSnapshot& snap);
void write_snapshot_csv(const std::string& path, const PhasorSnapshot& snap);

struct LocalizationReportInfo {
  std::string placement;  // comma-separated monitored buses
  std::string fault;
  double noise_magnitude = 0.0;
  double noise_angle = 0.0;
  std::uint64_t seed = 0;
};

/// rank,bus,phases,objective rows preceded by '#' comment lines recording the
/// metric, epsilon, placement, fault, noise and seed of the run.
void write_localization_csv(std::ostream& os, const LocalizationResult& result,
                            const CandidateSet& candidates,
                            const LocalizationReportInfo& info);
void write_localization_csv(const std::string& path,
                            const LocalizationResult& result,
                            const CandidateSet& candidates,
                            const LocalizationReportInfo& info);

/// Square CSV with node-phase labels on the first row and column, restricted
/// to the given phase and ordered by `order` (column indices into corr.C).
void write_correlation_csv(std::ostream& os, const CorrelationMatrix& corr,
                           const std::vector<NodeIndexMap::Entry>& labels,
                           const std::vector<int>& order);
void write_adjacency_csv(std::ostream& os, const CommunityGraph& graph,
                         const std::vector<NodeIndexMap::Entry>& labels,
                         const std::vector<int>& order);

/// community_id,bus,phase
void write_communities_csv(std::ostream& os,
                           const std::vector<LabeledCommunity>& communities);

/// Column indices of corr carrying the given phase, ordered so that buses
/// appear in bus_order (buses missing from bus_order keep enumeration order
/// at the end).
std::vector<int> ordered_phase_columns(
    const CorrelationMatrix& corr,
    const std::vector<NodeIndexMap::Entry>& labels, Phase phase,
    const std::vector<std::string>& bus_order);

/// Self-contained grid heatmap of the correlation sub-matrix selected by
/// `order`, dark-to-bright color scale, labeled axes and a value legend.
void write_heatmap_svg(std::ostream& os, const CorrelationMatrix& corr,
                       const std::vector<NodeIndexMap::Entry>& labels,
                       const std::vector<int>& order, const std::string& title);
void write_heatmap_svg(const std::string& path, const CorrelationMatrix& corr,
                       const std::vector<NodeIndexMap::Entry>& labels,
                       const std::vector<int>& order, const std::string& title);

}  // namespace faultloc
