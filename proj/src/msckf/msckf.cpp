#include <algorithm>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <boost/math/distributions/chi_squared.hpp>

#include "iekf/io.hpp"
#include "iekf/msckf.hpp"

namespace iekf {

ProjectedResidual nullspace_project(const MatX& H_X, const MatX& H_f, const VecX& residual,
                                    const MatX& N) {
  const Eigen::Index m = H_f.rows();
  if (H_f.cols() != 3 || H_X.rows() != m || residual.size() != m || N.rows() != m ||
      N.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "nullspace_project: inconsistent block sizes");
  }
  if (m < 3) throw Error(ErrorCode::DegenerateGeometry, "fewer than three residual rows");
  const Eigen::HouseholderQR<MatX> qr(H_f);
  const VecX diag = qr.matrixQR().diagonal().cwiseAbs();
  if (!(diag.minCoeff() > 1e-10 * std::max(diag.maxCoeff(), 1e-300))) {
    throw Error(ErrorCode::DegenerateGeometry, "feature Jacobian is rank deficient");
  }
  const auto Qt = qr.householderQ().transpose();
  const MatX QtH = Qt * H_X;
  const VecX Qtr = Qt * residual;
  const MatX QtNQ = Qt * (Qt * N).transpose();
  const Eigen::Index k = m - 3;
  ProjectedResidual out{QtH.bottomRows(k), Qtr.tail(k), QtNQ.bottomRightCorner(k, k)};
  out.N = 0.5 * (out.N + out.N.transpose()).eval();
  return out;
}

namespace {

enum class TrackStatus { Used, Geometry, Gated };

double chi2_quantile(Eigen::Index dof, double confidence) {
  return boost::math::quantile(boost::math::chi_squared(static_cast<double>(dof)), confidence);
}

TrackStatus build_track(const FilterInstance& filter, const std::map<long, std::size_t>& slot,
                        const FeatureTrack& track, const Extrinsics& ext, const CameraModel& model,
                        const MsckfOptions& opts, const MatX& Pcc, ProjectedResidual& out) {
  const auto& clones = filter.clones();
  std::vector<FeatureObservation> obs;
  std::vector<std::size_t> idx;
  std::vector<CameraPose> poses;
  for (const auto& o : track.obs) {
    const auto it = slot.find(o.frame);
    if (it == slot.end()) continue;
    obs.push_back(o);
    idx.push_back(it->second);
    poses.push_back(camera_pose(clones[it->second].R, clones[it->second].p, ext));
  }
  if (obs.size() < 2) return TrackStatus::Geometry;
  try {
    const Vec3 f = triangulate(obs, poses, model, opts.triangulation);
    const Eigen::Index m = 2 * static_cast<Eigen::Index>(obs.size());
    MatX H_X = MatX::Zero(m, Pcc.rows());
    MatX H_f(m, 3);
    VecX r(m);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const auto j = clone_measurement_jacobians(filter.variant().kind, clones[idx[i]], f, ext, model);
      const Eigen::Index row = 2 * static_cast<Eigen::Index>(i);
      H_X.block<2, 6>(row, 6 * static_cast<Eigen::Index>(idx[i])) = j.H_X;
      H_f.middleRows<2>(row) = j.H_f;
      r.segment<2>(row) = obs[i].uv - j.predicted;
    }
    const double var = track.sigma_px * track.sigma_px;
    out = nullspace_project(H_X, H_f, r, MatX::Identity(m, m) * var);
  } catch (const Error&) {
    return TrackStatus::Geometry;
  }
  MatX S = out.H * Pcc * out.H.transpose() + out.N;
  const Eigen::LLT<MatX> llt(S);
  if (llt.info() != Eigen::Success) return TrackStatus::Geometry;
  const double gamma = out.r.dot(llt.solve(out.r));
  if (!(gamma <= chi2_quantile(out.r.size(), opts.chi2_confidence))) return TrackStatus::Gated;
  return TrackStatus::Used;
}

}  // namespace

std::vector<ProjectedResidual> track_residuals(const FilterInstance& filter,
                                               const std::vector<FeatureTrack>& tracks,
                                               const Extrinsics& ext, const CameraModel& model,
                                               const MsckfOptions& opts, MsckfStats* stats) {
  const auto& clones = filter.clones();
  std::map<long, std::size_t> slot;
  for (std::size_t i = 0; i < clones.size(); ++i) slot[clones[i].frame] = i;
  const Eigen::Index c0 = filter.clone_offset(0);
  const Eigen::Index nc = 6 * static_cast<Eigen::Index>(clones.size());
  const MatX Pcc = filter.cov().block(c0, c0, nc, nc);

  const long n = static_cast<long>(tracks.size());
  std::vector<ProjectedResidual> out(tracks.size());
  std::vector<TrackStatus> status(tracks.size());
  if (opts.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (long i = 0; i < n; ++i) {
      status[i] = build_track(filter, slot, tracks[i], ext, model, opts, Pcc, out[i]);
    }
  } else {
    for (long i = 0; i < n; ++i) {
      status[i] = build_track(filter, slot, tracks[i], ext, model, opts, Pcc, out[i]);
    }
  }
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    if (status[i] != TrackStatus::Used) out[i] = ProjectedResidual{};
    if (!stats) continue;
    ++stats->mature;
    if (status[i] == TrackStatus::Used) ++stats->used;
    if (status[i] == TrackStatus::Geometry) ++stats->rejected_geometry;
    if (status[i] == TrackStatus::Gated) ++stats->rejected_gate;
  }
  return out;
}

void msckf_update(FilterInstance& filter, const std::vector<FeatureTrack>& tracks,
                  const Extrinsics& ext, const CameraModel& model, const MsckfOptions& opts,
                  MsckfStats* stats) {
  MsckfStats local;
  MsckfStats& st = stats ? *stats : local;
  if (tracks.empty() || filter.clones().empty()) return;
  const auto blocks = track_residuals(filter, tracks, ext, model, opts, &st);

  Eigen::Index rows = 0;
  for (const auto& b : blocks) rows += b.r.size();
  if (rows == 0) return;
  const Eigen::Index c0 = filter.clone_offset(0);
  const Eigen::Index cols = filter.dim() - c0;
  // Each block is whitened with its own noise Cholesky factor so the stack
  // (and its QR compression) carries identity noise.
  MatX H(rows, cols);
  VecX r(rows);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    const Eigen::Index k = b.r.size();
    if (k == 0) continue;
    const Eigen::LLT<MatX> llt(b.N);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorCode::SingularInnovation, "projected pixel noise is not positive definite");
    }
    H.middleRows(at, k) = llt.matrixL().solve(b.H);
    r.segment(at, k) = llt.matrixL().solve(b.r);
    at += k;
  }
  if (rows > cols) {
    const Eigen::HouseholderQR<MatX> qr(H);
    r = (qr.householderQ().transpose() * r).head(cols).eval();
    H = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
    rows = cols;
  }
  LinearMeasurement m;
  m.residual = std::move(r);
  m.H = MatX::Zero(rows, filter.dim());
  m.H.rightCols(cols) = H;
  m.N = MatX::Identity(rows, rows);
  st.rows = static_cast<std::size_t>(rows);
  try {
    filter.update(m);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::SingularInnovation) throw;
    st.update_failed = true;
  }
}

MsckfEstimator::MsckfEstimator(FilterInstance filter, const Extrinsics& ext,
                               const CameraModel& model, const MsckfOptions& opts)
    : filter_(std::move(filter)), ext_(ext), model_(model), opts_(opts) {
  model_.validate();
  if (opts_.max_clones < 2) throw Error(ErrorCode::InvalidArgument, "max_clones must be >= 2");
}

void MsckfEstimator::process_frame(double t, long frame,
                                   const std::vector<std::pair<long, Vec2>>& features) {
  stats_ = MsckfStats{};
  filter_.augment_clone(t, frame);
  for (const auto& [id, uv] : features) {
    FeatureTrack& track = tracks_[id];
    track.id = id;
    track.sigma_px = model_.sigma_px;
    track.obs.push_back({frame, uv});
  }

  const bool overflow = filter_.clones().size() > opts_.max_clones;
  const long oldest = filter_.clones().front().frame;
  std::vector<long> lost;
  std::vector<const FeatureTrack*> mature;
  for (const auto& [id, track] : tracks_) {
    const bool is_lost = track.obs.back().frame != frame;
    if (is_lost) lost.push_back(id);
    if (is_lost || (overflow && track.obs.front().frame == oldest)) {
      if (track.obs.size() >= 2) mature.push_back(&track);
    }
  }
  std::stable_sort(mature.begin(), mature.end(), [](const FeatureTrack* a, const FeatureTrack* b) {
    return a->obs.size() > b->obs.size();
  });
  if (mature.size() > opts_.max_features) mature.resize(opts_.max_features);

  std::vector<FeatureTrack> batch;
  batch.reserve(mature.size());
  for (const FeatureTrack* t : mature) batch.push_back(*t);
  msckf_update(filter_, batch, ext_, model_, opts_, &stats_);

  for (const auto& t : batch) tracks_.erase(t.id);
  for (long id : lost) tracks_.erase(id);
  if (overflow) {
    filter_.marginalize_clone(0);
    for (auto it = tracks_.begin(); it != tracks_.end();) {
      auto& obs = it->second.obs;
      obs.erase(std::remove_if(obs.begin(), obs.end(),
                               [oldest](const FeatureObservation& o) { return o.frame == oldest; }),
                obs.end());
      it = obs.empty() ? tracks_.erase(it) : std::next(it);
    }
  }
}

std::string write_tracks_csv(const std::vector<TrackRecord>& rows) {
  std::string out = "feature_id,frame_index,t,u,v\n";
  for (const auto& r : rows) {
    out += std::to_string(r.feature_id) + "," + std::to_string(r.frame) + "," + fmt_double(r.t) +
           "," + fmt_double(r.uv.x()) + "," + fmt_double(r.uv.y()) + "\n";
  }
  return out;
}

std::vector<TrackRecord> read_tracks_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != "feature_id,frame_index,t,u,v") {
    throw Error(ErrorCode::IoError, "feature-track CSV header mismatch");
  }
  std::vector<TrackRecord> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 5) throw Error(ErrorCode::IoError, "feature-track row needs 5 fields: " + line);
    rows.push_back({static_cast<long>(parse_double(f[0], "feature_id")),
                    static_cast<long>(parse_double(f[1], "frame_index")), parse_double(f[2], "t"),
                    Vec2(parse_double(f[3], "u"), parse_double(f[4], "v"))});
  }
  return rows;
}

}  // namespace iekf
