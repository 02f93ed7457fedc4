#pragma once

#include <map>
#include <vector>

#include "iekf/camera.hpp"
#include "iekf/filter_bank.hpp"

namespace iekf {

struct ProjectedResidual {
  MatX H;  // Q₂ᵀH_X
  VecX r;  // Q₂ᵀz̃
  MatX N;  // Q₂ᵀ N Q₂
};

/// Left-nullspace projection of a stacked feature residual via Householder QR
/// of H_f. Output has H_f.rows() − 3 rows (empty for a 3-row input). Throws
/// DegenerateGeometry unless H_f has full column rank.
ProjectedResidual nullspace_project(const MatX& H_X, const MatX& H_f, const VecX& residual,
                                    const MatX& N);

struct MsckfOptions {
  std::size_t max_clones = 11;
  std::size_t max_features = 40;  // mature tracks used per update
  double chi2_confidence = 0.95;
  bool parallel = true;           // OpenMP per-track kernel; false runs the serial reference
  TriangulationOptions triangulation;
};

struct MsckfStats {
  std::size_t mature = 0;
  std::size_t used = 0;
  std::size_t rejected_geometry = 0;
  std::size_t rejected_gate = 0;
  std::size_t rows = 0;
  bool update_failed = false;
};

/// Builds the projected, gated residual of each track against the filter's
/// clone window, in input order. Failed or gated tracks yield an empty block.
std::vector<ProjectedResidual> track_residuals(const FilterInstance& filter,
                                               const std::vector<FeatureTrack>& tracks,
                                               const Extrinsics& ext, const CameraModel& model,
                                               const MsckfOptions& opts, MsckfStats* stats);

/// Stacks the blocks, compresses by thin QR when there are more rows than
/// clone columns, and runs one filter update. A SingularInnovation failure
/// leaves the filter untouched and is reported through `stats`.
void msckf_update(FilterInstance& filter, const std::vector<FeatureTrack>& tracks,
                  const Extrinsics& ext, const CameraModel& model, const MsckfOptions& opts,
                  MsckfStats* stats = nullptr);

/// Clone window plus feature bookkeeping around a FilterInstance.
class MsckfEstimator {
 public:
  MsckfEstimator(FilterInstance filter, const Extrinsics& ext, const CameraModel& model,
                 const MsckfOptions& opts = {});

  void propagate(const ImuMeasurement& meas, double dt) { filter_.predict(meas, dt); }

  /// New image at the current filter time: clone, ingest, update on mature
  /// tracks (lost, or touching the clone about to leave a full window), then
  /// marginalize the oldest clone if the window overflows.
  void process_frame(double t, long frame, const std::vector<std::pair<long, Vec2>>& features);

  const FilterInstance& filter() const { return filter_; }
  FilterInstance& filter() { return filter_; }
  const MsckfStats& last_stats() const { return stats_; }
  std::size_t open_tracks() const { return tracks_.size(); }

 private:
  FilterInstance filter_;
  Extrinsics ext_;
  CameraModel model_;
  MsckfOptions opts_;
  std::map<long, FeatureTrack> tracks_;
  MsckfStats stats_;
};

/// Feature-track CSV: `feature_id,frame_index,t,u,v`.
struct TrackRecord {
  long feature_id;
  long frame;
  double t;
  Vec2 uv;
};
std::string write_tracks_csv(const std::vector<TrackRecord>& rows);
std::vector<TrackRecord> read_tracks_csv(const std::string& text);

}  // namespace iekf
