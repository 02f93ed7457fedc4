#pragma once

#include <random>
#include <string>
#include <vector>

#include "iekf/camera.hpp"
#include "iekf/filter_bank.hpp"
#include "iekf/imu_model.hpp"
#include "iekf/msckf.hpp"

namespace iekf {

/// Lissajous: p(t) = (50 cos 0.075t, 40 sin 0.05t, 20 sin(0.05t + 1)).
/// Line: constant velocity from the origin. Static: fixed at `origin`.
enum class TrajectoryKind { Lissajous, Line, Static };
/// YawFollowsVelocity: R = Rz(atan2(v_y, v_x)), roll = pitch = 0. Level: R = I.
enum class AttitudePolicy { YawFollowsVelocity, Level };

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::Lissajous;
  AttitudePolicy attitude = AttitudePolicy::YawFollowsVelocity;
  double duration = 100.0;
  double imu_rate = 200.0;
  double cam_rate = 20.0;
  Vec3 origin = Vec3::Zero();
  Vec3 velocity = Vec3(1.0, 0.0, 0.0);  // Line only

  /// Throws InvalidArgument (non-positive rates/duration, imu_rate not an
  /// integer multiple of cam_rate).
  void validate() const;
  long imu_steps() const;
  long imu_per_frame() const;
};

struct TruthSample {
  Rotation R;
  Vec3 p, v, a;  // world frame, a = p̈
  Vec3 omega;    // body angular rate (RᵀṘ)^∨
};

/// Analytic kinematics at t. Throws OutOfDomain outside [0, duration] or
/// where the attitude policy is undefined (zero horizontal speed).
TruthSample truth_kinematics(const TrajectorySpec& spec, double t);

struct LandmarkSpec {
  int count = 200;
  Vec3 box_min = Vec3(-80.0, -70.0, -30.0);
  Vec3 box_max = Vec3(80.0, 70.0, 30.0);
};
std::vector<Vec3> generate_landmarks(const LandmarkSpec& spec, std::uint64_t seed);

/// Initial-estimate perturbation (per-axis standard deviations). The bias
/// sigmas set the prior only: true initial biases are zero.
struct InitSpec {
  double sigma_theta = 0.1;
  double sigma_p = 0.5;
  double sigma_v = 0.1;
  double sigma_bg = 1e-4;
  double sigma_ba = 1e-2;

  Mat15 covariance() const;
};

struct Scenario {
  TrajectorySpec trajectory;
  LandmarkSpec landmark_spec;
  std::vector<Vec3> landmarks;
  ImuNoiseSpec noise;
  CameraModel camera = CameraModel::default_model();
  Extrinsics extrinsics = Extrinsics::default_extrinsics();
  InitSpec init;
  MsckfOptions msckf;
  double pixel_noise = 1.0;  // synthesized pixel noise σ; the filter assumes camera.sigma_px
  std::uint64_t seed = 1;

  /// Fills `landmarks` from landmark_spec and seed when empty.
  void finalize();
};

/// IMU stream with the truth it was generated from. `truth[k]` is the state at
/// t_k = k·dt including the true biases; `meas[k]` drives [t_k, t_k+1].
struct ImuStream {
  double dt = 0.0;
  std::vector<ImuMeasurement> meas;
  std::vector<ImuState> truth;
};

/// Body inputs are sampled at interval midpoints and the truth is the exact
/// constant-input integration of them, so a noiseless stream reproduces the
/// truth exactly through propagate_mean. White noise per sample has std σ/√dt,
/// bias increments σ√dt.
ImuStream synthesize_imu(const Scenario& s, std::mt19937_64& rng);

struct CameraFrame {
  long index = 0;
  long imu_step = 0;
  double t = 0.0;
  std::vector<std::pair<long, Vec2>> features;  // landmark id, pixel
};

/// Visible landmarks (in front, inside the image, within range) at every
/// camera epoch with i.i.d. N(0, pixel_noise²) noise, capped at the
/// `msckf.max_features` nearest.
std::vector<CameraFrame> synthesize_camera(const Scenario& s, const ImuStream& imu,
                                           std::mt19937_64& rng);

struct StepRecord {
  double t = 0.0;
  Vec3 pos_err = Vec3::Zero();  // p̂ − p
  Vec3 ang_err = Vec3::Zero();  // variant's native rotation error
  double nees_pos = 0.0;
  double nees_ang = 0.0;
  double nees_pos_alt = 0.0;
};

struct RunRecord {
  int run = 0;
  bool ok = true;
  std::string error;
  std::vector<StepRecord> steps;
};

struct Aggregate {
  double rmse_pos = 0.0;
  double rmse_ang = 0.0;
  double nees_pos = 0.0;
  double nees_ang = 0.0;
  double nees_pos_alt = 0.0;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  double mean_features = 0.0;  // tracked features per camera frame
};

struct VariantReport {
  FilterVariant variant;
  std::vector<RunRecord> runs;
  Aggregate aggregate;
};

struct MonteCarloReport {
  std::vector<VariantReport> variants;
  std::vector<std::string> warnings;
};

struct MonteCarloOptions {
  int runs = 50;
  int threads = 0;             // 0: OpenMP default
  bool parallel = true;        // false: serial reference loop
  bool visual_updates = true;  // false: dead reckoning
  bool exact_init = false;     // start every filter at the truth
};

/// One run of every variant on shared noise realizations (paired design).
std::vector<RunRecord> run_single(const Scenario& s, const std::vector<FilterVariant>& variants,
                                  int run, const MonteCarloOptions& opts,
                                  double* mean_features = nullptr);

/// Runs are independent and ordered by index whatever the thread count.
/// Failed runs are kept (ok = false) and excluded from the aggregates.
MonteCarloReport run_monte_carlo(const Scenario& s, const std::vector<FilterVariant>& variants,
                                 const MonteCarloOptions& opts);

/// RMSE over all successful runs and steps, NEES averaged likewise. Throws
/// EmptyReport when no step is available.
Aggregate aggregate_metrics(const std::vector<RunRecord>& runs);

/// Per-step series, `run,step,t,ex,ey,ez,eax,eay,eaz,nees_pos,nees_ang,nees_pos_alt`.
std::string report_csv(const VariantReport& r);
/// `variant,rmse_pos,rmse_ang,nees_pos,nees_ang,nees_pos_alt,runs_ok,runs_failed`.
std::string summary_csv(const MonteCarloReport& r);
/// Writes report_<label>.csv per variant, summary.csv and meta.json into
/// `dir` (each atomically). Aggregates are recomputed from the series and
/// must agree with the stored ones. Throws IoError.
void write_report(const std::string& dir, const MonteCarloReport& r, const std::string& meta_json);
/// Parses summary.csv back (used by tests and tools).
std::vector<std::pair<std::string, Aggregate>> read_summary_csv(const std::string& text);

}  // namespace iekf
