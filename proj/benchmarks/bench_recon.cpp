#include <benchmark/benchmark.h>

#include "recon4d/metrics.hpp"
#include "recon4d/registration.hpp"
#include "recon4d/simulator.hpp"
#include "recon4d/solver.hpp"

using namespace recon4d;

namespace {

struct BenchScene {
    Grid4D grid;
    Phantom phantom;
    PsfParams psf;
    std::vector<ScatteredSlice> slices;
    std::vector<SliceModel> models;

    static const BenchScene& instance() {
        static BenchScene scene = [] {
            BenchScene s;
            s.grid.space = {48, 48, 16, 1.74, 1.74, 3.0, Vec3::Zero()};
            s.grid.nt = 8;
            s.grid.tr = 2.0;
            PhantomSpec ps;
            ps.grid = s.grid;
            ps.seed = 1;
            s.phantom = generate_phantom(ps);
            s.psf = default_psf(s.grid);

            TrajectorySpec ts;
            ts.max_rotation_deg = Vec3(4.2, 27.9, 7.7);
            ts.max_translation_mm = Vec3(11.9, 3.0, 3.2);
            ts.style = TrajectoryStyle::mixed;
            ts.seed = 2;
            ts.center = s.grid.space.center_world();
            AcquisitionSpec acq;
            acq.noise_sigma = 2.0;
            acq.interleave = 2;
            acq.seed = 3;
            s.slices = simulate_acquisition(
                s.phantom.series, generate_trajectory(ts, s.grid.nz() * s.grid.nt),
                s.psf, acq, 2);
            s.models = build_slice_models(s.slices, s.grid, s.psf, 2);
            return s;
        }();
        return scene;
    }
};

void BM_forward_project_slice(benchmark::State& state) {
    const auto& s = BenchScene::instance();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(forward_project(s.phantom.series, s.models[i]));
        i = (i + 1) % s.models.size();
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.models[0].n_pixels()));
}
BENCHMARK(BM_forward_project_slice);

void BM_adjoint_project_slice(benchmark::State& state) {
    const auto& s = BenchScene::instance();
    const std::vector<double> residual(s.models[0].n_pixels(), 1.0);
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(adjoint_project(residual, s.models[i], s.grid));
        i = (i + 1) % s.models.size();
    }
    state.SetItemsProcessed(state.iterations() *
                            static_cast<std::int64_t>(s.models[0].n_pixels()));
}
BENCHMARK(BM_adjoint_project_slice);

void BM_kernel_footprint(benchmark::State& state) {
    const auto& s = BenchScene::instance();
    const Vec3 c = s.grid.space.center_world();
    for (auto _ : state)
        benchmark::DoNotOptimize(kernel_footprint(s.psf, s.grid, c, 1.3 * s.grid.tr));
}
BENCHMARK(BM_kernel_footprint);

void BM_objective_gradient(benchmark::State& state) {
    const auto& s = BenchScene::instance();
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            objective_gradient(s.phantom.series, s.slices, s.models, 0.01, threads));
}
BENCHMARK(BM_objective_gradient)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

void BM_interpolate_3d_baseline(benchmark::State& state) {
    const auto& s = BenchScene::instance();
    for (auto _ : state)
        benchmark::DoNotOptimize(interpolate_3d_baseline(s.slices, s.grid, nullptr, 2));
}
BENCHMARK(BM_interpolate_3d_baseline)->Unit(benchmark::kMillisecond);

void BM_slice_ncc_scoring(benchmark::State& state) {
    const auto& s = BenchScene::instance();
    const Volume3D target = s.phantom.series.timepoint(0);
    const Mask3D mask = Mask3D::full(s.grid.space);
    RegistrationConfig cfg;
    cfg.max_eval = 50;
    cfg.interleave = 2;
    std::vector<ScatteredSlice> one{s.slices[s.slices.size() / 2]};
    for (auto _ : state)
        benchmark::DoNotOptimize(register_slices_hierarchical(one, target, cfg, &mask));
}
BENCHMARK(BM_slice_ncc_scoring)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
