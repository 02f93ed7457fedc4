// Parallel kernels against their serial references: Monte-Carlo runs and the
// per-track MSCKF residual construction.

#include <map>

#include <benchmark/benchmark.h>

#include "iekf/msckf.hpp"
#include "iekf/sim.hpp"

using namespace iekf;

namespace {

Scenario short_scenario(double duration) {
  Scenario s;
  s.trajectory.duration = duration;
  s.finalize();
  return s;
}

void BM_MonteCarlo(benchmark::State& state) {
  const Scenario s = short_scenario(5.0);
  MonteCarloOptions opts;
  opts.runs = 8;
  opts.parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto r = run_monte_carlo(s, {{FilterKind::IEKF, 0.0}}, opts);
    benchmark::DoNotOptimize(r);
  }
  state.SetLabel(opts.parallel ? "parallel" : "serial");
}
BENCHMARK(BM_MonteCarlo)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

// Full clone window on the truth, noise-free features, every visible track.
struct WindowFixture {
  Scenario s = noiseless(short_scenario(2.0));
  FilterInstance filter;
  std::vector<FeatureTrack> tracks;

  WindowFixture() : filter(make_filter(s)) {
    std::mt19937_64 rng(1);
    const ImuStream imu = synthesize_imu(s, rng);
    const auto frames = synthesize_camera(s, imu, rng);
    std::map<long, FeatureTrack> by_id;
    long step = 0;
    for (std::size_t k = 0; k < s.msckf.max_clones && k < frames.size(); ++k) {
      for (; step < frames[k].imu_step; ++step) filter.predict(imu.meas[step], imu.dt);
      filter.augment_clone(frames[k].t, frames[k].index);
      for (const auto& [id, uv] : frames[k].features) {
        by_id[id].id = id;
        by_id[id].obs.push_back({frames[k].index, uv});
      }
    }
    for (auto& [id, t] : by_id) {
      if (t.obs.size() >= 3) tracks.push_back(t);
    }
  }

  static Scenario noiseless(Scenario s) {
    s.noise = ImuNoiseSpec{0.0, 0.0, 0.0, 0.0, s.noise.gravity};
    s.pixel_noise = 0.0;
    return s;
  }

  static FilterInstance make_filter(const Scenario& s) {
    std::mt19937_64 rng(1);
    const ImuStream imu = synthesize_imu(s, rng);
    return FilterInstance({FilterKind::IEKF, 0.0}, imu.truth.front(), s.init.covariance(), s.noise,
                          1);
  }
};

void BM_TrackResiduals(benchmark::State& state) {
  static const WindowFixture fx;
  MsckfOptions opts = fx.s.msckf;
  opts.parallel = state.range(0) != 0;
  for (auto _ : state) {
    MsckfStats stats;
    auto blocks = track_residuals(fx.filter, fx.tracks, fx.s.extrinsics, fx.s.camera, opts, &stats);
    benchmark::DoNotOptimize(blocks);
  }
  state.SetLabel((opts.parallel ? "parallel, " : "serial, ") + std::to_string(fx.tracks.size()) +
                 " tracks");
}
BENCHMARK(BM_TrackResiduals)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
