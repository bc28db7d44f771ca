// EYOC command-line front end: simulation, ingestion checks, filter-map
// construction, training, evaluation, single-pair registration, and
// parameter sweeps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "eyoc/io.hpp"
#include "eyoc/lidar_sim.hpp"
#include "eyoc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace eyoc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitRegistration = 4;

void add_schedule_opts(CLI::App* cmd, IntervalSchedule& s) {
  cmd->add_option("--b-start", s.b_start, "Initial frame-interval bound");
  cmd->add_option("--b-end", s.b_end, "Final frame-interval bound");
  cmd->add_option("--epochs", s.total_epochs, "Total training epochs");
  cmd->add_option("--step-size", s.step_size, "Bound increment per schedule step (frames)");
}

void add_filter_opts(CLI::App* cmd, FilterConfig& f, std::string& mode) {
  cmd->add_option("--filter", mode, "Spatial filter mode: none|hard|adaptive")
      ->check(CLI::IsMember({"none", "hard", "adaptive"}));
  cmd->add_option("--d-thresh", f.d_thresh_m, "Hard filter distance threshold (m)");
  cmd->add_option("--s-thresh", f.s_thresh, "Adaptive filter similarity threshold");
  cmd->add_flag("--lowe", f.lowe_enabled, "Enable Lowe ratio filtering");
  cmd->add_option("--lowe-thresh", f.lowe_thresh, "Lowe significance threshold");
}

void add_registrar_opts(CLI::App* cmd, RegistrarConfig& r) {
  cmd->add_option("--comp-thresh", r.comp_thresh_m, "Compatibility length threshold (m)");
  cmd->add_option("--num-seeds", r.num_seeds, "Spectral seed count");
  cmd->add_option("--power-iters", r.power_iters, "Power iteration count");
  cmd->add_option("--reg-inlier-thresh", r.inlier_thresh_m, "Hypothesis inlier threshold (m)");
  cmd->add_option("--max-corrs", r.max_corrs, "Correspondence cap before subsampling");
}

FilterMode parse_mode(const std::string& mode) {
  if (mode == "none") return FilterMode::none;
  if (mode == "adaptive") return FilterMode::adaptive;
  return FilterMode::hard;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EYOC: unsupervised distant point cloud registration"};
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value config file; flags override file values");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic LiDAR sequence");
  SceneConfig scene_cfg;
  TrajectoryConfig traj_cfg;
  DensityModel density;
  std::string sim_out = "sim_seq";
  std::uint64_t sim_seed = 42;
  sim->add_option("--out", sim_out, "Output directory");
  sim->add_option("--seed", sim_seed, "RNG seed");
  sim->add_option("--landmarks", scene_cfg.num_landmarks, "Landmark count");
  sim->add_option("--frames", traj_cfg.num_frames, "Frame count");
  sim->add_option("--speed", traj_cfg.speed_m_per_frame, "Speed (m/frame)");
  sim->add_option("--yaw-rate", traj_cfg.yaw_rate_rad_per_frame, "Yaw rate (rad/frame)");
  sim->add_option("--alpha", density.alpha, "LiDAR density constant (points*m^2)");
  sim->add_option("--min-range", density.min_range_m, "Minimum scan range (m)");
  sim->add_option("--max-range", density.max_range_m, "Maximum scan range (m)");
  sim->add_option("--jitter", density.jitter_sigma_m, "Surface jitter sigma (m)");

  // ingest-check
  auto* ingest = app.add_subcommand("ingest-check", "Validate a sequence directory");
  std::string ingest_dir;
  int ingest_stride = 3;
  ingest->add_option("dir", ingest_dir, "Sequence directory")->required();
  ingest->add_option("--stride", ingest_stride, "Floats per point in .bin files");

  // build-filter-map
  auto* bmap = app.add_subcommand("build-filter-map",
                                  "Record the (d1,d2) similarity map from labelled data");
  std::vector<std::string> bmap_dirs;
  std::string bmap_ckpt, bmap_out = "filter_map.csv";
  int bmap_interval = 30, bmap_pairs = 200, bmap_stride = 3;
  std::uint64_t bmap_seed = 0;
  bmap->add_option("--data", bmap_dirs, "Sequence directories (with poses.txt)")->required();
  bmap->add_option("--checkpoint", bmap_ckpt, "Labeler checkpoint")->required();
  bmap->add_option("--out", bmap_out, "Output CSV path");
  bmap->add_option("--max-interval", bmap_interval, "Maximum frame interval");
  bmap->add_option("--pairs", bmap_pairs, "Pairs to record");
  bmap->add_option("--stride", bmap_stride, "Floats per point");
  bmap->add_option("--seed", bmap_seed, "RNG seed");

  // train
  auto* tr = app.add_subcommand("train", "Unsupervised progressive training");
  TrainConfig train_cfg;
  std::string train_filter_mode = "hard";
  tr->add_option("--data", train_cfg.dataset_dirs, "Sequence directories")->required();
  tr->add_option("--stride", train_cfg.stride, "Floats per point");
  tr->add_option("--out", train_cfg.out_dir, "Output directory");
  tr->add_option("--seed", train_cfg.seed, "RNG seed");
  tr->add_option("--pairs-per-epoch", train_cfg.pairs_per_epoch,
                 "Pairs per epoch (0: one pass over frames)");
  tr->add_option("--embedding-dim", train_cfg.embedding_dim, "Feature dimension k");
  tr->add_option("--radius", train_cfg.descriptor.radius_m, "Descriptor radius (m)");
  tr->add_option("--margin", train_cfg.loss.margin, "Contrastive margin");
  tr->add_option("--neg-pool", train_cfg.loss.negative_pool, "Negative pool size");
  tr->add_option("--lr", train_cfg.loss.learning_rate, "Learning rate");
  tr->add_option("--weight-decay", train_cfg.loss.weight_decay, "Weight decay");
  tr->add_option("--lambda", train_cfg.ema.lambda, "EMA decay factor");
  tr->add_option("--beta-inlier", train_cfg.beta_inlier, "Rediscovery threshold (m)");
  tr->add_option("--map", train_cfg.map_path, "Similarity map CSV (adaptive filter)");
  tr->add_option("--checkpoint-every", train_cfg.checkpoint_every, "Checkpoint period");
  tr->add_flag("--measure-ir", train_cfg.measure_ir,
               "Record labeler IR diagnostic (reads ground-truth poses)");
  tr->add_flag("--verbose", train_cfg.verbose, "Per-epoch console log");
  add_schedule_opts(tr, train_cfg.schedule);
  add_filter_opts(tr, train_cfg.filter, train_filter_mode);
  add_registrar_opts(tr, train_cfg.registrar);

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Bucketed RR/RRE/RTE/mRR evaluation");
  EvalConfig eval_cfg;
  std::string eval_ckpt, eval_estimator = "sc2pcr", eval_json = "metrics.json",
                         eval_csv = "metrics.csv";
  std::vector<std::string> eval_dirs;
  ev->add_option("--data", eval_dirs, "Sequence directories (with poses.txt)")->required();
  ev->add_option("--checkpoint", eval_ckpt, "Checkpoint path")->required();
  ev->add_option("--stride", eval_cfg.stride, "Floats per point");
  ev->add_option("--estimator", eval_estimator, "sc2pcr|ransac")
      ->check(CLI::IsMember({"sc2pcr", "ransac"}));
  ev->add_option("--pairs-per-bucket", eval_cfg.pairs_per_bucket, "Eval pairs per bucket");
  ev->add_option("--ransac-iters", eval_cfg.ransac_iters, "RANSAC iterations");
  ev->add_option("--seed", eval_cfg.seed, "RNG seed");
  ev->add_option("--radius", eval_cfg.descriptor.radius_m, "Descriptor radius (m)");
  ev->add_option("--json", eval_json, "Metrics JSON output path");
  ev->add_option("--csv", eval_csv, "Metrics CSV output path");
  add_registrar_opts(ev, eval_cfg.registrar);

  // register
  auto* reg = app.add_subcommand("register", "Register two point cloud files");
  std::string reg_src, reg_dst, reg_ckpt, reg_estimator = "sc2pcr";
  int reg_stride = 3;
  EvalConfig reg_cfg;
  reg->add_option("src", reg_src, "Source .bin file")->required();
  reg->add_option("dst", reg_dst, "Target .bin file")->required();
  reg->add_option("--checkpoint", reg_ckpt, "Checkpoint path")->required();
  reg->add_option("--stride", reg_stride, "Floats per point");
  reg->add_option("--estimator", reg_estimator, "sc2pcr|ransac")
      ->check(CLI::IsMember({"sc2pcr", "ransac"}));
  reg->add_option("--radius", reg_cfg.descriptor.radius_m, "Descriptor radius (m)");
  add_registrar_opts(reg, reg_cfg.registrar);

  // ablate
  auto* ab = app.add_subcommand("ablate", "Parameter sweeps (lambda, thresholds, step size)");
  TrainConfig ab_cfg;
  std::string ab_sweep = "lambda", ab_out = "ablation.json";
  std::vector<double> ab_values;
  int ab_eval_pairs = 10;
  ab->add_option("--data", ab_cfg.dataset_dirs, "Sequence directories")->required();
  ab->add_option("--sweep", ab_sweep, "lambda|d-thresh|s-thresh|step-size")
      ->check(CLI::IsMember({"lambda", "d-thresh", "s-thresh", "step-size"}));
  ab->add_option("--values", ab_values, "Sweep values")->required();
  ab->add_option("--epochs", ab_cfg.schedule.total_epochs, "Epochs per run");
  ab->add_option("--pairs-per-epoch", ab_cfg.pairs_per_epoch, "Pairs per epoch");
  ab->add_option("--eval-pairs", ab_eval_pairs, "Eval pairs per bucket");
  ab->add_option("--seed", ab_cfg.seed, "RNG seed");
  ab->add_option("--out", ab_out, "Summary JSON path");
  ab->add_option("--map", ab_cfg.map_path, "Similarity map CSV (s-thresh sweep)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (sim->parsed()) {
      scene_cfg.seed = sim_seed;
      const Scene scene = generate_scene(scene_cfg);
      const Trajectory traj = generate_trajectory(traj_cfg);
      emit_sequence(scene, traj, density, sim_out, sim_seed);
      std::printf("wrote %d frames + poses.txt to %s\n", traj_cfg.num_frames,
                  sim_out.c_str());
      return kExitOk;
    }

    if (ingest->parsed()) {
      const SequenceStore store = SequenceStore::ingest(ingest_dir, ingest_stride);
      std::size_t points = 0;
      for (std::size_t i = 0; i < store.num_frames(); ++i) points += store.cloud(i).size();
      std::printf("%zu frames, %zu points, poses: %s\n", store.num_frames(), points,
                  store.has_poses() ? "yes" : "no");
      return kExitOk;
    }

    if (bmap->parsed()) {
      EmbeddingParams student, labeler;
      load_checkpoint(student, labeler, bmap_ckpt);
      const SimilarityMap map = build_filter_map(bmap_dirs, bmap_stride, labeler, {},
                                                 bmap_interval, bmap_pairs, bmap_seed);
      map.save_csv(bmap_out);
      std::printf("similarity map with %ld samples written to %s\n", map.total_count(),
                  bmap_out.c_str());
      return kExitOk;
    }

    if (tr->parsed()) {
      train_cfg.filter.mode = parse_mode(train_filter_mode);
      const TrainResult result = train(train_cfg);
      std::printf("trained %d epochs, checkpoint: %s\n", train_cfg.schedule.total_epochs,
                  result.checkpoint_path.c_str());
      return kExitOk;
    }

    if (ev->parsed()) {
      eval_cfg.dataset_dirs = eval_dirs;
      eval_cfg.estimator = eval_estimator == "ransac" ? Estimator::ransac : Estimator::sc2pcr;
      EmbeddingParams student, labeler;
      load_checkpoint(student, labeler, eval_ckpt);
      const EvalReport report = evaluate(student, eval_cfg);
      std::ofstream(eval_json) << report.to_json() << "\n";
      std::ofstream(eval_csv) << report.to_csv();
      std::printf("%s\n", report.to_json().c_str());
      return kExitOk;
    }

    if (reg->parsed()) {
      reg_cfg.estimator = reg_estimator == "ransac" ? Estimator::ransac : Estimator::sc2pcr;
      EmbeddingParams student, labeler;
      load_checkpoint(student, labeler, reg_ckpt);
      const PointCloud src = read_cloud_bin(reg_src, reg_stride);
      const PointCloud dst = read_cloud_bin(reg_dst, reg_stride);
      RegistrationOutput out;
      try {
        out = register_pair(src, dst, student, reg_cfg);
      } catch (const RegistrationFailed& e) {
        std::fprintf(stderr, "registration failed: %s\n", e.what());
        return kExitRegistration;
      }
      Pose p = out.pose;
      std::printf("%s\n", format_pose_line(p).c_str());
      std::printf("inliers: %d\n", out.confidence);
      return kExitOk;
    }

    if (ab->parsed()) {
      std::ostringstream summary;
      summary << "[";
      bool first = true;
      for (double v : ab_values) {
        TrainConfig run_cfg = ab_cfg;
        if (ab_sweep == "lambda") run_cfg.ema.lambda = v;
        if (ab_sweep == "d-thresh") run_cfg.filter.d_thresh_m = v;
        if (ab_sweep == "s-thresh") {
          run_cfg.filter.mode = FilterMode::adaptive;
          run_cfg.filter.s_thresh = v;
        }
        if (ab_sweep == "step-size") run_cfg.schedule.step_size = static_cast<int>(v);
        run_cfg.out_dir = "ablate_" + ab_sweep + "_" + std::to_string(v);
        const TrainResult result = train(run_cfg);

        EvalConfig ecfg;
        ecfg.dataset_dirs = ab_cfg.dataset_dirs;
        ecfg.pairs_per_bucket = ab_eval_pairs;
        ecfg.seed = ab_cfg.seed;
        const EvalReport report = evaluate(result.student, ecfg);
        if (!first) summary << ",";
        first = false;
        summary << "{\"value\":" << v << ",\"report\":" << report.to_json() << "}";
      }
      summary << "]";
      std::ofstream(ab_out) << summary.str() << "\n";
      std::printf("%s\n", summary.str().c_str());
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const MalformedFile& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const IoError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kExitData;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
  return kExitOk;
}
