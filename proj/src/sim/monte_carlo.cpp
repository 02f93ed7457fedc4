#include <cmath>

#include <omp.h>

#include "iekf/sim.hpp"

namespace iekf {

std::vector<RunRecord> run_single(const Scenario& s, const std::vector<FilterVariant>& variants,
                                  int run, const MonteCarloOptions& opts, double* mean_features) {
  const std::uint64_t seed = derive_seed(s.seed, static_cast<std::uint64_t>(run));
  std::mt19937_64 rng_imu(derive_seed(seed, 1));
  std::mt19937_64 rng_cam(derive_seed(seed, 2));
  std::mt19937_64 rng_init(derive_seed(seed, 3));
  const ImuStream imu = synthesize_imu(s, rng_imu);
  const std::vector<CameraFrame> frames = synthesize_camera(s, imu, rng_cam);
  if (mean_features) {
    double total = 0.0;
    for (const auto& f : frames) total += static_cast<double>(f.features.size());
    *mean_features = frames.empty() ? 0.0 : total / static_cast<double>(frames.size());
  }

  ImuState est0 = imu.truth.front();
  if (!opts.exact_init) {
    std::normal_distribution<double> n(0.0, 1.0);
    const auto draw = [&](double sigma) {
      Vec3 w;
      for (int i = 0; i < 3; ++i) w(i) = sigma * n(rng_init);
      return w;
    };
    est0.R = Rotation::exp(draw(s.init.sigma_theta)) * est0.R;
    est0.p += draw(s.init.sigma_p);
    est0.v += draw(s.init.sigma_v);
  }
  const Mat15 P0 = s.init.covariance();
  MsckfOptions mopts = s.msckf;
  if (opts.parallel) mopts.parallel = false;  // runs already occupy the threads

  std::vector<RunRecord> out;
  for (const FilterVariant& variant : variants) {
    RunRecord rec;
    rec.run = run;
    try {
      FilterInstance filter(variant, est0, covariance_in_variant(variant, est0, P0), s.noise,
                            derive_seed(seed, 4));
      MsckfEstimator est(std::move(filter), s.extrinsics, s.camera, mopts);
      std::size_t next = 0;
      for (std::size_t k = 0; k < imu.meas.size(); ++k) {
        est.propagate(imu.meas[k], imu.dt);
        if (next >= frames.size() || frames[next].imu_step != static_cast<long>(k + 1)) continue;
        const CameraFrame& frame = frames[next++];
        if (opts.visual_updates) est.process_frame(frame.t, frame.index, frame.features);
        const ImuState& truth = imu.truth[k + 1];
        const PoseError e = pose_error(variant, est.filter().mean(), truth);
        const NeesValue nees = est.filter().nees(truth);
        rec.steps.push_back({frame.t, e.pos_plain, e.ang, nees.pos, nees.ang, nees.pos_alt});
      }
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = std::string(to_string(e.code())) + ": " + e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

MonteCarloReport run_monte_carlo(const Scenario& s, const std::vector<FilterVariant>& variants,
                                 const MonteCarloOptions& opts) {
  if (opts.runs < 1) throw Error(ErrorCode::InvalidArgument, "runs must be >= 1");
  for (const auto& v : variants) v.validate();
  std::vector<std::vector<RunRecord>> per_run(static_cast<std::size_t>(opts.runs));
  std::vector<double> features(static_cast<std::size_t>(opts.runs), 0.0);
  if (opts.parallel) {
    const int threads = opts.threads > 0 ? opts.threads : 0;
#pragma omp parallel for schedule(dynamic) num_threads(threads > 0 ? threads : omp_get_max_threads())
    for (int r = 0; r < opts.runs; ++r) {
      per_run[r] = run_single(s, variants, r, opts, &features[r]);
    }
  } else {
    for (int r = 0; r < opts.runs; ++r) per_run[r] = run_single(s, variants, r, opts, &features[r]);
  }

  MonteCarloReport report;
  double mean_features = 0.0;
  for (double f : features) mean_features += f / opts.runs;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    VariantReport vr;
    vr.variant = variants[v];
    for (auto& runs : per_run) {
      RunRecord& rec = runs[v];
      if (!rec.ok) {
        report.warnings.push_back(variants[v].label() + " run " + std::to_string(rec.run) +
                                  " failed and is excluded: " + rec.error);
      }
      vr.runs.push_back(std::move(rec));
    }
    try {
      vr.aggregate = aggregate_metrics(vr.runs);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyReport) throw;
      const double nan = std::nan("");
      vr.aggregate = Aggregate{nan, nan, nan, nan, nan, 0, vr.runs.size(), 0.0};
      report.warnings.push_back(variants[v].label() + ": every run failed");
    }
    vr.aggregate.mean_features = mean_features;
    report.variants.push_back(std::move(vr));
  }
  return report;
}

Aggregate aggregate_metrics(const std::vector<RunRecord>& runs) {
  Aggregate a;
  double sp = 0.0, sa = 0.0, np = 0.0, na = 0.0, npa = 0.0;
  std::size_t n = 0;
  for (const auto& r : runs) {
    if (!r.ok) {
      ++a.runs_failed;
      continue;
    }
    ++a.runs_ok;
    for (const auto& st : r.steps) {
      sp += st.pos_err.squaredNorm();
      sa += st.ang_err.squaredNorm();
      np += st.nees_pos;
      na += st.nees_ang;
      npa += st.nees_pos_alt;
      ++n;
    }
  }
  if (n == 0) throw Error(ErrorCode::EmptyReport, "no successful steps to aggregate");
  const double dn = static_cast<double>(n);
  a.rmse_pos = std::sqrt(sp / dn);
  a.rmse_ang = std::sqrt(sa / dn);
  a.nees_pos = np / dn;
  a.nees_ang = na / dn;
  a.nees_pos_alt = npa / dn;
  return a;
}

}  // namespace iekf
