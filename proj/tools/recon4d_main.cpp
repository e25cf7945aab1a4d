// recon4d command-line tool: simulate / register / reconstruct / evaluate.
//
// Every run writes a manifest capturing the full effective configuration,
// seeds, and output checksums; a manifest is itself a valid --config file,
// so any later stage can be re-run from it alone.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "recon4d/io.hpp"
#include "recon4d/metrics.hpp"
#include "recon4d/nifti.hpp"
#include "recon4d/parallel.hpp"
#include "recon4d/registration.hpp"
#include "recon4d/simulator.hpp"
#include "recon4d/solver.hpp"

namespace fs = std::filesystem;
using namespace recon4d;

namespace {

constexpr const char* kVersion = "0.1.0";

struct CommonArgs {
    std::string config_path;
    std::string output_dir = ".";
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "key-value configuration file");
    cmd->add_option("--output-dir", args.output_dir, "directory for outputs");
    cmd->add_option("--seed", args.seed, "RNG seed (overrides the config)")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--threads", args.threads, "worker threads")
        ->check(CLI::PositiveNumber);
}

Config load_config(const CommonArgs& args) {
    Config cfg;
    if (!args.config_path.empty()) {
        if (!fs::exists(args.config_path))
            throw std::invalid_argument("config file not found: " + args.config_path);
        cfg = Config::from_file(args.config_path);
    }
    return cfg;
}

void require_input(const std::string& path, const std::string& what) {
    if (path.empty())
        throw std::invalid_argument("missing required " + what);
    if (!fs::exists(path))
        throw std::invalid_argument(what + " not found: " + path);
}

Grid4D grid_from_config(const Config& cfg) {
    Grid4D g;
    g.space.nx = cfg.get_int("grid.nx", 64);
    g.space.ny = cfg.get_int("grid.ny", 64);
    g.space.nz = cfg.get_int("grid.nz", 24);
    g.nt = cfg.get_int("grid.nt", 32);
    g.space.dx = cfg.get_double("grid.dx", 1.74);
    g.space.dy = cfg.get_double("grid.dy", 1.74);
    g.space.dz = cfg.get_double("grid.dz", 3.0);
    g.tr = cfg.get_double("grid.tr", 2.0);
    g.space.origin = Vec3(cfg.get_double("grid.origin_x", 0.0),
                          cfg.get_double("grid.origin_y", 0.0),
                          cfg.get_double("grid.origin_z", 0.0));
    g.validate();
    return g;
}

Vec3 motion_center(const Config& cfg, const Grid4D& g) {
    const Vec3 fallback = g.space.center_world();
    return Vec3(cfg.get_double("motion.center_x", fallback.x()),
                cfg.get_double("motion.center_y", fallback.y()),
                cfg.get_double("motion.center_z", fallback.z()));
}

PsfParams psf_from_config(const Config& cfg, const Grid4D& g) {
    PsfParams p = default_psf(g);
    p.sigma_x = cfg.get_double("psf.sigma_x", p.sigma_x);
    p.sigma_y = cfg.get_double("psf.sigma_y", p.sigma_y);
    p.sigma_z = cfg.get_double("psf.sigma_z", p.sigma_z);
    p.sigma_t = cfg.get_double("psf.sigma_t", p.sigma_t);
    p.truncation_radius = cfg.get_double("psf.truncation_radius", p.truncation_radius);
    p.validate();
    return p;
}

ReconConfig solver_from_config(const Config& cfg, int threads) {
    ReconConfig r;
    r.alpha = cfg.get_double("solver.alpha", 0.01);
    r.max_iters = cfg.get_int("solver.max_iters", 50);
    r.tol = cfg.get_double("solver.tol", 1e-6);
    r.kind = parse_solver_kind(cfg.get_string("solver.kind", "conjugate-gradient"));
    r.step_size = cfg.get_double("solver.step_size", 0.1);
    r.init = parse_init_kind(cfg.get_string("solver.init", "normalized-scatter"));
    r.threads = threads;
    r.validate();
    return r;
}

RegistrationConfig reg_from_config(const Config& cfg, int threads) {
    RegistrationConfig r;
    r.pyramid_levels = cfg.get_int("reg.pyramid_levels", 2);
    r.max_eval = cfg.get_int("reg.max_eval", 400);
    r.interleave = cfg.get_int("reg.interleave", 2);
    r.quiescence_window = cfg.get_int("reg.quiescence_window", 4);
    r.min_coverage = cfg.get_double("reg.min_coverage", 0.10);
    r.threads = threads;
    r.validate();
    return r;
}

// Effective-config recording: every value the run used, defaults included.
void record_grid(Config& m, const Grid4D& g) {
    m.set("grid.nx", g.nx());
    m.set("grid.ny", g.ny());
    m.set("grid.nz", g.nz());
    m.set("grid.nt", g.nt);
    m.set("grid.dx", g.space.dx);
    m.set("grid.dy", g.space.dy);
    m.set("grid.dz", g.space.dz);
    m.set("grid.tr", g.tr);
    m.set("grid.origin_x", g.space.origin.x());
    m.set("grid.origin_y", g.space.origin.y());
    m.set("grid.origin_z", g.space.origin.z());
}

void record_psf(Config& m, const PsfParams& p) {
    m.set("psf.sigma_x", p.sigma_x);
    m.set("psf.sigma_y", p.sigma_y);
    m.set("psf.sigma_z", p.sigma_z);
    m.set("psf.sigma_t", p.sigma_t);
    m.set("psf.truncation_radius", p.truncation_radius);
}

void record_center(Config& m, const Vec3& c) {
    m.set("motion.center_x", c.x());
    m.set("motion.center_y", c.y());
    m.set("motion.center_z", c.z());
}

void record_file(Config& m, const std::string& key, const fs::path& path) {
    m.set("files." + key, path.filename().string());
    m.set("files." + key + ".fnv1a", fnv1a_file_hex(path.string()));
}

void write_manifest(Config& m, const std::string& command, const CommonArgs& args,
                    const fs::path& out_dir) {
    m.set("run.command", command);
    m.set("run.threads", args.threads);
    m.set("run.version", kVersion);
    m.write((out_dir / "manifest.txt").string());
}

fs::path prepare_output_dir(const CommonArgs& args) {
    fs::path out(args.output_dir);
    fs::create_directories(out);
    return out;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const CommonArgs& args) {
    const Config cfg = load_config(args);
    const fs::path out = prepare_output_dir(args);
    const Grid4D grid = grid_from_config(cfg);
    const Vec3 center = motion_center(cfg, grid);
    const PsfParams psf = psf_from_config(cfg, grid);
    const std::uint64_t seed = args.seed_set ? args.seed : cfg.get_u64("sim.seed", 1);

    PhantomSpec pspec;
    pspec.kind = parse_phantom_kind(cfg.get_string("sim.phantom", "nested-ellipsoids"));
    pspec.grid = grid;
    pspec.fluct_amplitude = cfg.get_double("sim.amplitude", 0.02);
    pspec.fluct_period_s = cfg.get_double("sim.period_s", 20.0);
    pspec.seed = seed;
    const Phantom phantom = generate_phantom(pspec);

    TrajectorySpec tspec;
    tspec.style = parse_trajectory_style(cfg.get_string("sim.style", "mixed"));
    tspec.max_rotation_deg = Vec3(cfg.get_double("sim.max_rx", 4.2),
                                  cfg.get_double("sim.max_ry", 27.9),
                                  cfg.get_double("sim.max_rz", 7.7));
    tspec.max_translation_mm = Vec3(cfg.get_double("sim.max_tx", 11.9),
                                    cfg.get_double("sim.max_ty", 3.0),
                                    cfg.get_double("sim.max_tz", 3.2));
    tspec.burst_start = cfg.get_int("sim.burst_start", -1);
    tspec.burst_len = cfg.get_int("sim.burst_len", -1);
    tspec.seed = seed + 1;
    tspec.center = center;
    const int n_slices = grid.nz() * grid.nt;
    const auto trajectory = generate_trajectory(tspec, n_slices);

    AcquisitionSpec acq;
    acq.noise_sigma = cfg.get_double("sim.noise_sigma", 2.0);
    acq.interleave = cfg.get_int("sim.interleave", 2);
    acq.fine_grid = cfg.get_bool("sim.fine_grid", false);
    acq.seed = seed + 2;
    const auto slices =
        simulate_acquisition(phantom.series, trajectory, psf, acq, args.threads);

    write_nifti(phantom.series, (out / "truth.nii").string());
    write_mask_nifti(phantom.mask(), (out / "mask.nii").string());
    write_nifti(slices_to_stack(slices), (out / "slices.nii").string());
    write_sidecar_csv((out / "slices.csv").string(), slices_to_sidecar(slices));

    std::vector<PoseRow> pose_rows;
    pose_rows.reserve(slices.size());
    for (const auto& s : slices)
        pose_rows.push_back(pose_row_from_transform(s.pose, s.slice_index, s.volume_index));
    write_pose_csv((out / "trajectory.csv").string(), pose_rows);

    Config m;
    record_grid(m, grid);
    record_psf(m, psf);
    record_center(m, center);
    m.set("sim.phantom", to_string(pspec.kind));
    m.set("sim.amplitude", pspec.fluct_amplitude);
    m.set("sim.period_s", pspec.fluct_period_s);
    m.set("sim.effective_period_s", phantom.effective_period_s);
    m.set("sim.style", to_string(tspec.style));
    m.set("sim.max_rx", tspec.max_rotation_deg.x());
    m.set("sim.max_ry", tspec.max_rotation_deg.y());
    m.set("sim.max_rz", tspec.max_rotation_deg.z());
    m.set("sim.max_tx", tspec.max_translation_mm.x());
    m.set("sim.max_ty", tspec.max_translation_mm.y());
    m.set("sim.max_tz", tspec.max_translation_mm.z());
    m.set("sim.burst_start", tspec.burst_start);
    m.set("sim.burst_len", tspec.burst_len);
    m.set("sim.noise_sigma", acq.noise_sigma);
    m.set("sim.interleave", acq.interleave);
    m.set("sim.fine_grid", acq.fine_grid ? "true" : "false");
    m.set_u64("sim.seed", seed);
    m.set_u64("run.seed", seed);
    record_file(m, "truth", out / "truth.nii");
    record_file(m, "mask", out / "mask.nii");
    record_file(m, "slices", out / "slices.nii");
    record_file(m, "sidecar", out / "slices.csv");
    record_file(m, "trajectory", out / "trajectory.csv");
    CommonArgs eff = args;
    write_manifest(m, "simulate", eff, out);

    std::cout << "simulate: wrote " << slices.size() << " slices to " << out.string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// register
// ---------------------------------------------------------------------------

int cmd_register(const CommonArgs& args, const std::string& slices_path,
                 const std::string& sidecar_path, const std::string& mask_path,
                 const std::string& init_poses_path) {
    const Config cfg = load_config(args);
    const fs::path out = prepare_output_dir(args);
    const Grid4D grid = grid_from_config(cfg);
    const Vec3 center = motion_center(cfg, grid);

    require_input(slices_path, "slice stack (--slices)");
    require_input(sidecar_path, "slice sidecar (--sidecar)");
    const Volume4D stack = read_nifti(slices_path);
    auto sidecar = read_sidecar_csv(sidecar_path);
    auto slices = stack_to_slices(stack, sidecar, center);

    Mask3D mask = Mask3D::full(grid.space);
    const int dilation = cfg.get_int("reg.mask_dilation", 2);
    if (!mask_path.empty()) {
        require_input(mask_path, "mask (--mask)");
        mask = dilate_mask(read_mask_nifti(mask_path), dilation);
    }

    const RegistrationConfig rcfg = reg_from_config(cfg, args.threads);

    if (!init_poses_path.empty()) {
        require_input(init_poses_path, "initial poses (--init-poses)");
        const auto rows = read_pose_csv(init_poses_path);
        if (rows.size() != slices.size())
            throw std::invalid_argument("--init-poses row count does not match slices");
        for (std::size_t i = 0; i < slices.size(); ++i)
            slices[i].pose = transform_from_pose_row(rows[i], center);
    } else {
        // Estimated poses start from scratch: quiescent target on the raw
        // series, then one global pass per volume.
        for (auto& s : slices) s.pose = RigidTransform::identity();
    }

    const Volume4D native = assemble_native_series(slices, grid);
    const int window = std::min(rcfg.quiescence_window, grid.nt);
    const auto [target, window_start] = find_quiescent_target(native, window);

    if (init_poses_path.empty()) {
        std::vector<RigidTransform> volume_pose(static_cast<std::size_t>(grid.nt));
        std::vector<int> volume_warn(static_cast<std::size_t>(grid.nt), 0);
        parallel_chunks(static_cast<std::size_t>(grid.nt), args.threads,
                        [&](std::size_t b, std::size_t e, int) {
            for (std::size_t t = b; t < e; ++t) {
                const auto r =
                    register_volume(native.timepoint(static_cast<int>(t)), target,
                                    rcfg, &mask);
                volume_pose[t] = r.pose;
                volume_warn[t] = r.warning ? 1 : 0;
            }
        });
        for (auto& s : slices)
            s.pose = volume_pose[static_cast<std::size_t>(s.volume_index)];
    }

    const auto results = register_slices_hierarchical(slices, target, rcfg, &mask);

    std::vector<PoseRow> rows;
    rows.reserve(results.size());
    for (std::size_t i = 0; i < results.size(); ++i)
        rows.push_back(pose_row_from_transform(results[i].pose, slices[i].slice_index,
                                               slices[i].volume_index));
    write_pose_csv((out / "poses.csv").string(), rows);

    // Per-slice score table for inspection.
    {
        std::ofstream rep((out / "registration_report.csv").string());
        rep << "slice_index,volume_index,ncc,warning\n";
        for (std::size_t i = 0; i < results.size(); ++i) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.17g", results[i].score);
            rep << slices[i].slice_index << ',' << slices[i].volume_index << ',' << buf
                << ',' << (results[i].warning ? 1 : 0) << '\n';
        }
    }

    Config m;
    record_grid(m, grid);
    record_center(m, center);
    m.set("reg.pyramid_levels", rcfg.pyramid_levels);
    m.set("reg.max_eval", rcfg.max_eval);
    m.set("reg.interleave", rcfg.interleave);
    m.set("reg.quiescence_window", window);
    m.set("reg.quiescence_start", window_start);
    m.set("reg.mask_dilation", dilation);
    m.set("reg.min_coverage", rcfg.min_coverage);
    m.set("reg.metric", "ncc");
    record_file(m, "slices", slices_path);
    record_file(m, "sidecar", sidecar_path);
    if (!mask_path.empty()) record_file(m, "mask", mask_path);
    record_file(m, "poses", out / "poses.csv");
    record_file(m, "report", out / "registration_report.csv");
    write_manifest(m, "register", args, out);

    std::cout << "register: wrote poses for " << results.size() << " slices to "
              << out.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// reconstruct
// ---------------------------------------------------------------------------

int cmd_reconstruct(const CommonArgs& args, const std::string& slices_path,
                    const std::string& sidecar_path, const std::string& poses_path,
                    const std::string& mask_path, const std::string& method) {
    const Config cfg = load_config(args);
    const fs::path out = prepare_output_dir(args);
    const Grid4D grid = grid_from_config(cfg);
    const Vec3 center = motion_center(cfg, grid);
    const PsfParams psf = psf_from_config(cfg, grid);

    require_input(slices_path, "slice stack (--slices)");
    require_input(sidecar_path, "slice sidecar (--sidecar)");
    const Volume4D stack = read_nifti(slices_path);
    const auto sidecar = read_sidecar_csv(sidecar_path);
    auto slices = stack_to_slices(stack, sidecar, center);

    if (!poses_path.empty()) {
        require_input(poses_path, "pose table (--poses)");
        const auto rows = read_pose_csv(poses_path);
        if (rows.size() != slices.size())
            throw std::invalid_argument("--poses row count does not match slices");
        for (std::size_t i = 0; i < slices.size(); ++i)
            slices[i].pose = transform_from_pose_row(rows[i], center);
    }

    Config m;
    record_grid(m, grid);
    record_psf(m, psf);
    record_center(m, center);
    m.set("reconstruct.method", method);

    if (method == "4d") {
        const ReconConfig rcfg = solver_from_config(cfg, args.threads);
        const auto [volume, report] = reconstruct(slices, grid, psf, rcfg);
        write_nifti(volume, (out / "recon.nii").string());

        std::ofstream rep((out / "recon_report.csv").string());
        rep << "iter,data_term,reg_term,total\n";
        for (std::size_t i = 0; i < report.totals.size(); ++i) {
            char buf[160];
            std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g", i,
                          report.data_terms[i], report.reg_terms[i], report.totals[i]);
            rep << buf << '\n';
        }
        rep.close();

        m.set("solver.alpha", rcfg.alpha);
        m.set("solver.max_iters", rcfg.max_iters);
        m.set("solver.tol", rcfg.tol);
        m.set("solver.kind", to_string(rcfg.kind));
        m.set("solver.step_size", rcfg.step_size);
        m.set("solver.init", to_string(rcfg.init));
        m.set("run.iterations", report.iterations);
        m.set("run.converged", report.converged ? "true" : "false");
        m.set("run.final_objective", report.final_objective());
        if (!report.note.empty()) m.set("run.note", report.note);
        record_file(m, "recon", out / "recon.nii");
        record_file(m, "report", out / "recon_report.csv");
    } else if (method == "linear-3d") {
        Mask3D mask = Mask3D::full(grid.space);
        bool have_mask = false;
        if (!mask_path.empty()) {
            require_input(mask_path, "mask (--mask)");
            mask = read_mask_nifti(mask_path);
            have_mask = true;
        }
        const auto [volume, cov] =
            interpolate_3d_baseline(slices, grid, have_mask ? &mask : nullptr,
                                    args.threads);
        write_nifti(volume, (out / "recon.nii").string());

        // Coverage map: 1 where slice samples landed, 0 in filled holes.
        Volume4D covmap(grid, 0.0);
        for (std::size_t i = 0; i < cov.covered.size(); ++i)
            covmap.data[i] = cov.covered[i] ? 1.0 : 0.0;
        write_nifti(covmap, (out / "coverage.nii").string());

        int flagged = 0;
        for (const auto f : cov.timepoint_flagged) flagged += f;
        m.set("baseline.flagged_timepoints", flagged);
        double worst = 0.0;
        for (int t = 0; t < grid.nt; ++t)
            worst = std::max(worst, cov.hole_fraction(t, have_mask ? &mask : nullptr));
        m.set("baseline.worst_hole_fraction", worst);
        record_file(m, "recon", out / "recon.nii");
        record_file(m, "coverage", out / "coverage.nii");
    } else if (method == "raw-stack") {
        const Volume4D volume = assemble_native_series(slices, grid);
        write_nifti(volume, (out / "recon.nii").string());
        record_file(m, "recon", out / "recon.nii");
    } else {
        throw std::invalid_argument("unknown --method '" + method +
                                    "' (4d, linear-3d, raw-stack)");
    }

    record_file(m, "slices", slices_path);
    record_file(m, "sidecar", sidecar_path);
    if (!poses_path.empty()) record_file(m, "poses", poses_path);
    write_manifest(m, "reconstruct", args, out);

    std::cout << "reconstruct (" << method << "): wrote " << (out / "recon.nii").string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const CommonArgs& args, const std::string& raw_path,
                 const std::string& linear_path, const std::string& ours_path,
                 const std::string& mask_path, const std::string& truth_path,
                 const std::string& subject) {
    const fs::path out = prepare_output_dir(args);

    require_input(raw_path, "raw series (--raw)");
    require_input(linear_path, "3D-linear series (--linear)");
    require_input(ours_path, "4D reconstruction (--ours)");
    const Volume4D raw = read_nifti(raw_path);
    const Volume4D linear = read_nifti(linear_path);
    const Volume4D ours = read_nifti(ours_path);

    Mask3D mask = Mask3D::full(raw.grid.space);
    if (!mask_path.empty()) {
        require_input(mask_path, "mask (--mask)");
        mask = read_mask_nifti(mask_path);
    }
    Volume4D truth;
    const bool have_truth = !truth_path.empty();
    if (have_truth) {
        require_input(truth_path, "ground truth (--truth)");
        truth = read_nifti(truth_path);
    }

    const EvaluationReport report =
        evaluate(raw, linear, ours, mask, have_truth ? &truth : nullptr);

    {
        std::ofstream csv((out / "report.csv").string());
        csv << EvaluationReport::csv_header() << '\n'
            << report.csv_row(subject) << '\n';
    }
    {
        std::ofstream txt((out / "report.txt").string());
        txt << "subject = " << subject << '\n' << report.key_value_text();
    }

    Config m;
    m.set("evaluate.subject", subject);
    record_file(m, "raw", raw_path);
    record_file(m, "linear", linear_path);
    record_file(m, "ours", ours_path);
    if (!mask_path.empty()) record_file(m, "mask", mask_path);
    if (have_truth) record_file(m, "truth", truth_path);
    record_file(m, "report_csv", out / "report.csv");
    record_file(m, "report_txt", out / "report.txt");
    write_manifest(m, "evaluate", args, out);

    std::cout << "evaluate: " << subject
              << " rel_sharpness_ours=" << report.rel_sharpness_ours
              << " rel_std_ours=" << report.rel_std_ours << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Motion-compensated 4D reconstruction of scattered slices"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    CommonArgs sim_args, reg_args, rec_args, eval_args;

    auto* sim = app.add_subcommand("simulate",
                                   "generate a phantom, a motion trajectory, and "
                                   "motion-scattered noisy slices");
    add_common(sim, sim_args);

    auto* reg = app.add_subcommand("register",
                                   "estimate per-slice rigid poses from a slice stack");
    add_common(reg, reg_args);
    std::string reg_slices, reg_sidecar, reg_mask, reg_init;
    reg->add_option("--slices", reg_slices, "slice stack (.nii)");
    reg->add_option("--sidecar", reg_sidecar, "slice sidecar (.csv)");
    reg->add_option("--mask", reg_mask, "brain mask (.nii), dilated before use");
    reg->add_option("--init-poses", reg_init, "initial pose table (.csv)");

    auto* rec = app.add_subcommand("reconstruct", "reconstruct a 4D series from slices");
    add_common(rec, rec_args);
    std::string rec_slices, rec_sidecar, rec_poses, rec_mask, rec_method = "4d";
    rec->add_option("--slices", rec_slices, "slice stack (.nii)");
    rec->add_option("--sidecar", rec_sidecar, "slice sidecar (.csv)");
    rec->add_option("--poses", rec_poses, "pose table (.csv); defaults to sidecar poses");
    rec->add_option("--mask", rec_mask, "mask for baseline hole filling (.nii)");
    rec->add_option("--method", rec_method, "4d | linear-3d | raw-stack");

    auto* ev = app.add_subcommand("evaluate",
                                  "compare raw / 3D-linear / 4D series and report "
                                  "sharpness and temporal std");
    add_common(ev, eval_args);
    std::string ev_raw, ev_linear, ev_ours, ev_mask, ev_truth, ev_subject = "S1";
    ev->add_option("--raw", ev_raw, "raw (uncorrected) series (.nii)");
    ev->add_option("--linear", ev_linear, "3D linear interpolation series (.nii)");
    ev->add_option("--ours", ev_ours, "4D reconstruction (.nii)");
    ev->add_option("--mask", ev_mask, "evaluation mask (.nii)");
    ev->add_option("--truth", ev_truth, "ground-truth series adds RMSE columns (.nii)");
    ev->add_option("--subject", ev_subject, "subject label for the report row");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return 1;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_args);
        if (reg->parsed())
            return cmd_register(reg_args, reg_slices, reg_sidecar, reg_mask, reg_init);
        if (rec->parsed())
            return cmd_reconstruct(rec_args, rec_slices, rec_sidecar, rec_poses, rec_mask,
                                   rec_method);
        if (ev->parsed())
            return cmd_evaluate(eval_args, ev_raw, ev_linear, ev_ours, ev_mask, ev_truth,
                                ev_subject);
    } catch (const io_error& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
