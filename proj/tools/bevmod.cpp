#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bevmod/bev_raster.hpp"
#include "bevmod/error.hpp"
#include "bevmod/eval.hpp"
#include "bevmod/fusion_net/flow_io.hpp"
#include "bevmod/fusion_net/training.hpp"
#include "bevmod/geometry.hpp"
#include "bevmod/ingest.hpp"
#include "bevmod/ipm.hpp"
#include "bevmod/motion_labeling.hpp"
#include "bevmod/parallel.hpp"
#include "bevmod/png_io.hpp"
#include "bevmod/text.hpp"
#include "run_io.hpp"

namespace fs = std::filesystem;
using namespace bevmod;
using cli::Manifest;

namespace {

struct CommonOptions {
  fs::path out = ".";
  std::uint64_t seed = 1;
  double resolution = 0.2;
  double max_range = 50.0;
  double half_width = 25.0;
  double threshold = 0.5;
  int min_track_length = 2;
  int jobs = 1;
};

LabelingConfig labeling_config(const CommonOptions& common) {
  LabelingConfig cfg;
  cfg.speed_threshold = common.threshold;
  cfg.min_track_length = common.min_track_length;
  cfg.max_range = common.max_range;
  cfg.validate();
  return cfg;
}

GridSpec grid_spec(const CommonOptions& common) {
  return GridSpec::make(common.resolution, common.max_range, common.half_width);
}

void set_grid(Manifest& m, const GridSpec& g) {
  m.set("grid.x_min", text::format_double(g.x_min));
  m.set("grid.x_max", text::format_double(g.x_max));
  m.set("grid.z_min", text::format_double(g.z_min));
  m.set("grid.z_max", text::format_double(g.z_max));
  m.set("grid.resolution", text::format_double(g.resolution));
  m.set("grid.height", std::to_string(g.height));
  m.set("grid.width", std::to_string(g.width));
}

void set_labeling(Manifest& m, const LabelingConfig& cfg) {
  m.set("labeling.speed_threshold", text::format_double(cfg.speed_threshold));
  m.set("labeling.min_track_length", std::to_string(cfg.min_track_length));
  m.set("labeling.max_range", text::format_double(cfg.max_range));
}

Manifest base_manifest(const std::string& command, const CommonOptions& common) {
  Manifest m;
  m.set("tool", "bevmod");
  m.set("tool_version", std::string(cli::kToolVersion));
  m.set("command", command);
  m.set("seed", std::to_string(common.seed));
  m.set("jobs", std::to_string(common.jobs));
  return m;
}

void prepare_out(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw Error(ErrorCode::kIoError, "cannot create output directory " + out.string());
}

std::string frame_name(int frame, std::string_view ext) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "bev_%06d", frame);
  return std::string(buf) + std::string(ext);
}

std::string serialize_mask(const BevGrid& grid) {
  std::ostringstream out(std::ios::binary);
  write_mask(out, grid);
  return std::move(out).str();
}

BevGrid load_mask(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  try {
    return read_mask(in);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

TrackletParseResult load_tracklets(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  TrackletParseResult r = parse_tracklets(in);
  for (const auto& d : r.diagnostics) {
    std::cerr << "warning: " << path.string() << ':' << d.line_number << ": " << d.message << '\n';
  }
  return r;
}

// ---- label-gen ----

struct LabelGenOptions {
  fs::path sequence;
  fs::path calib;
  fs::path tracklets;
};

int cmd_label_gen(const CommonOptions& common, const LabelGenOptions& opt) {
  const fs::path calib_dir = opt.calib.empty() ? opt.sequence : opt.calib;
  const fs::path tracklet_path = opt.tracklets.empty() ? opt.sequence / "tracklets.txt" : opt.tracklets;
  const LabelingConfig cfg = labeling_config(common);

  const CalibrationSet calib = load_calibration(calib_dir);
  const auto records = load_oxts_sequence(opt.sequence);
  const auto parsed = load_tracklets(tracklet_path);

  Manifest m = base_manifest("label-gen", common);
  m.set_input("sequence", opt.sequence);
  m.set_input("calib", calib_dir);
  m.set_input("tracklets", tracklet_path);
  set_labeling(m, cfg);
  prepare_out(common.out);
  m.write(common.out);

  const auto poses = velo_world_poses(records, calib.imu_to_velo);
  std::vector<double> timestamps;
  timestamps.reserve(records.size());
  for (const auto& r : records) timestamps.push_back(r.timestamp);
  const auto labels = label_sequence(parsed.boxes, poses, timestamps, cfg, common.jobs);

  std::ostringstream label_text, review_text, stats_text;
  write_labels(label_text, labels);
  write_labels(review_text, review_candidates(labels, cfg));
  write_stats_table(stats_text, dataset_stats(labels));
  cli::write_atomic(common.out / "labels.txt", label_text.str());
  cli::write_atomic(common.out / "review.txt", review_text.str());
  cli::write_atomic(common.out / "stats.txt", stats_text.str());
  std::cout << stats_text.str();
  return 0;
}

// ---- rasterize ----

struct RasterizeOptions {
  fs::path labels;
  fs::path tracklets;
  fs::path calib;
};

int cmd_rasterize(const CommonOptions& common, const RasterizeOptions& opt) {
  const GridSpec spec = grid_spec(common);
  std::vector<MotionLabel> labels;
  {
    std::ifstream in(opt.labels);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + opt.labels.string());
    labels = parse_labels(in);
  }
  const auto parsed = load_tracklets(opt.tracklets);
  const CalibrationSet calib = load_calibration(opt.calib);

  std::map<std::pair<int, int>, const TrackedBox*> box_index;
  for (const auto& b : parsed.boxes) box_index[{b.track_id, b.frame_index}] = &b;

  std::map<int, std::vector<LabeledFootprint>> frames;
  for (const auto& b : parsed.boxes) frames[b.frame_index];
  for (const auto& label : labels) {
    const auto it = box_index.find({label.track_id, label.frame_index});
    if (it == box_index.end()) {
      throw Error(ErrorCode::kMissingField, "label for track " + std::to_string(label.track_id) + " frame " +
                                                std::to_string(label.frame_index) + " has no tracklet box");
    }
    const auto corners = footprint(box_to_cam(*it->second, calib));
    frames[label.frame_index].push_back({Polygon2(corners.begin(), corners.end()), label.verdict});
  }

  Manifest m = base_manifest("rasterize", common);
  m.set_input("labels", opt.labels);
  m.set_input("tracklets", opt.tracklets);
  m.set_input("calib", opt.calib);
  set_grid(m, spec);
  m.set("frames", std::to_string(frames.size()));
  prepare_out(common.out);
  m.write(common.out);

  std::vector<std::pair<int, const std::vector<LabeledFootprint>*>> work;
  for (const auto& [frame, fps] : frames) work.emplace_back(frame, &fps);
  parallel_for(work.size(), common.jobs, [&](std::size_t i) {
    const BevGrid grid = rasterize(*work[i].second, spec);
    cli::write_atomic(common.out / frame_name(work[i].first, ".mask"), serialize_mask(grid));
    cli::write_atomic(common.out / frame_name(work[i].first, ".png"), render_png(grid));
  });
  return 0;
}

// ---- ipm-baseline ----

struct IpmOptions {
  fs::path front;
  std::vector<std::string> pairs;
  fs::path pairs_file;
  fs::path gt;
  bool moving_only = false;
};

int cmd_ipm(const CommonOptions& common, const IpmOptions& opt) {
  std::vector<Correspondence> pairs;
  if (!opt.pairs_file.empty()) {
    std::ifstream in(opt.pairs_file);
    if (!in) throw Error(ErrorCode::kIoError, "cannot open " + opt.pairs_file.string());
    pairs = parse_correspondences(in);
  }
  for (const auto& p : opt.pairs) pairs.push_back(parse_correspondence(p));
  if (pairs.size() != 4) {
    throw Error(ErrorCode::kBadConfig, "need exactly 4 correspondences, got " + std::to_string(pairs.size()));
  }
  const Homography h = estimate_homography(pairs);
  const ClassImage front = decode_class_png(cli::read_bytes(opt.front));
  const GridSpec spec = grid_spec(common);
  std::optional<BevGrid> gt;
  if (!opt.gt.empty()) {
    gt = load_mask(opt.gt);
    if (!(gt->spec == spec)) throw Error(ErrorCode::kGridMismatch, "ground-truth grid differs from --resolution/--max-range");
  }

  Manifest m = base_manifest("ipm-baseline", common);
  m.set_input("front", opt.front);
  if (!opt.pairs_file.empty()) m.set_input("pairs", opt.pairs_file);
  if (gt) m.set_input("gt", opt.gt);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    m.set("pair." + std::to_string(i), text::format_double(p.src.x()) + ',' + text::format_double(p.src.y()) + ',' +
                                           text::format_double(p.dst.x()) + ',' + text::format_double(p.dst.y()));
  }
  m.set("homography", format_homography(h));
  m.set("miou_mode", opt.moving_only ? "moving" : "mean");
  set_grid(m, spec);
  prepare_out(common.out);
  m.write(common.out);

  const BevGrid warped = warp_mask(front, h, spec);
  cli::write_atomic(common.out / "ipm_bev.mask", serialize_mask(warped));
  cli::write_atomic(common.out / "ipm_bev.png", render_png(warped));
  if (gt) {
    const IouReport r = iou_report(accumulate(warped, *gt), opt.moving_only ? MiouMode::kMovingOnly : MiouMode::kMeanOfTwo);
    const std::string report = "iou_moving=" + text::format_fixed(r.moving, 6) + "\niou_not_moving=" +
                               text::format_fixed(r.not_moving, 6) + "\nmiou=" + text::format_fixed(r.miou, 6) + '\n';
    cli::write_atomic(common.out / "report.txt", report);
    std::cout << report;
  }
  return 0;
}

// ---- eval ----

struct EvalOptions {
  fs::path pred;
  fs::path gt;
  bool moving_only = false;
  bool skip_absent = false;
};

std::vector<std::string> mask_names(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoError, "not a directory: " + dir.string());
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".mask") names.push_back(e.path().filename().string());
  }
  std::sort(names.begin(), names.end());
  return names;
}

int cmd_eval(const CommonOptions& common, const EvalOptions& opt) {
  const auto gt_names = mask_names(opt.gt);
  const auto pred_names = mask_names(opt.pred);
  const std::set<std::string> pred_set(pred_names.begin(), pred_names.end());
  for (const auto& n : gt_names) {
    if (!pred_set.count(n)) throw Error(ErrorCode::kGridMismatch, "no prediction for " + (opt.gt / n).string());
  }
  for (const auto& n : pred_names) {
    if (!std::binary_search(gt_names.begin(), gt_names.end(), n)) {
      std::cerr << "warning: prediction " << n << " has no ground truth; ignored\n";
    }
  }
  const MiouOptions options{opt.moving_only ? MiouMode::kMovingOnly : MiouMode::kMeanOfTwo,
                            opt.skip_absent ? AbsentClassPolicy::kSkip : AbsentClassPolicy::kScoreOne};

  Manifest m = base_manifest("eval", common);
  m.set_input("pred", opt.pred);
  m.set_input("gt", opt.gt);
  m.set("miou_mode", opt.moving_only ? "moving" : "mean");
  m.set("absent_class", opt.skip_absent ? "skip" : "one");
  m.set("frames", std::to_string(gt_names.size()));
  prepare_out(common.out);
  m.write(common.out);

  RangeBins bins;
  std::vector<BinnedConfusion> per_frame(gt_names.size());
  parallel_for(gt_names.size(), common.jobs, [&](std::size_t i) {
    const BevGrid gt = load_mask(opt.gt / gt_names[i]);
    const BevGrid pred = load_mask(opt.pred / gt_names[i]);
    bins.check_covers(gt.spec);
    accumulate_binned(pred, gt, bins, per_frame[i]);
  });
  BinnedConfusion total;
  total.bins.assign(bins.count(), {});
  for (const auto& f : per_frame) {
    for (std::size_t b = 0; b < bins.count(); ++b) total.bins[b] += f.bins[b];
    total.global += f.global;
  }
  std::ostringstream table, kv;
  write_report_table(table, total, bins, options, gt_names.size());
  write_report_kv(kv, total, bins, options, gt_names.size());
  cli::write_atomic(common.out / "report.txt", table.str());
  cli::write_atomic(common.out / "metrics.txt", kv.str());
  std::cout << table.str();
  return 0;
}

// ---- train-toy ----

struct TrainOptions {
  fs::path data;
  int steps = 500;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int samples = 10;
  int size = 64;
  int channels = 4;
  int encoder_stages = 4;
};

std::vector<nn::Sample> load_training_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(ErrorCode::kIoError, "not a directory: " + dir.string());
  std::vector<fs::path> flows;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".flo") flows.push_back(e.path());
  }
  std::sort(flows.begin(), flows.end());
  std::vector<nn::Sample> samples;
  for (const auto& flo : flows) {
    const std::string stem = flo.stem().string();
    nn::Sample s;
    {
      std::ifstream in(flo, std::ios::binary);
      s.flow = nn::read_flo(in);
    }
    const RgbImage rgb = decode_png(cli::read_bytes(dir / (stem + ".png")));
    const ClassImage target = decode_class_png(cli::read_bytes(dir / (stem + "_target.png")));
    const int h = s.flow.height(), w = s.flow.width();
    if (rgb.height != h || rgb.width != w || target.height != h || target.width != w) {
      throw Error(ErrorCode::kShapeError, stem + ": image, target and flow sizes differ");
    }
    s.rgb = nn::Tensor::chw(3, h, w);
    s.target = nn::Tensor::chw(1, h, w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c) s.rgb(c, y, x) = rgb.pixels[(static_cast<std::size_t>(y) * w + x) * 3 + c] / 255.0;
        s.target(0, y, x) = target.at(y, x) == CellClass::kMoving ? 1.0 : 0.0;
      }
    }
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw Error(ErrorCode::kIoError, "no .flo samples in " + dir.string());
  return samples;
}

int cmd_train_toy(const CommonOptions& common, const TrainOptions& opt) {
  if (opt.steps < 0) throw Error(ErrorCode::kBadConfig, "--steps must be non-negative");
  if (!(opt.learning_rate > 0.0) || opt.momentum < 0.0 || opt.momentum >= 1.0) {
    throw Error(ErrorCode::kBadConfig, "need --lr > 0 and --momentum in [0, 1)");
  }
  std::vector<nn::Sample> samples = opt.data.empty() ? nn::make_synthetic_set(opt.samples, opt.size, opt.size, common.seed)
                                                     : load_training_dir(opt.data);
  nn::NetConfig cfg;
  cfg.base_channels = opt.channels;
  cfg.encoder_stages = opt.encoder_stages;
  cfg.input_height = samples.front().flow.height();
  cfg.input_width = samples.front().flow.width();
  nn::Network net(cfg, common.seed);

  Manifest m = base_manifest("train-toy", common);
  if (opt.data.empty()) {
    m.set("data", "synthetic");
    m.set("synthetic.samples", std::to_string(opt.samples));
    m.set("synthetic.size", std::to_string(opt.size));
  } else {
    m.set_input("data", opt.data);
  }
  m.set("net.encoder_stages", std::to_string(cfg.encoder_stages));
  m.set("net.base_channels", std::to_string(cfg.base_channels));
  m.set("net.decoder_stages", std::to_string(cfg.decoder_stages));
  m.set("net.input", std::to_string(cfg.input_height) + 'x' + std::to_string(cfg.input_width));
  m.set("net.parameters", std::to_string(net.parameter_count()));
  m.set("train.steps", std::to_string(opt.steps));
  m.set("train.learning_rate", text::format_double(opt.learning_rate));
  m.set("train.momentum", text::format_double(opt.momentum));
  prepare_out(common.out);
  m.write(common.out);

  nn::SgdOptimizer optimizer{opt.learning_rate, opt.momentum, {}};
  std::string log = "step loss\n";
  for (int step = 0; step < opt.steps; ++step) {
    const double loss = nn::train_step(net, samples, optimizer);
    log += std::to_string(step) + ' ' + text::format_fixed(loss, 8) + '\n';
  }
  const double final_loss = nn::batch_loss(net, samples).loss;
  const double iou = nn::moving_iou(net, samples);
  log += "final " + text::format_fixed(final_loss, 8) + '\n';
  log += "iou_moving " + text::format_fixed(iou, 6) + '\n';

  std::ostringstream ckpt(std::ios::binary);
  nn::save_checkpoint(ckpt, net);
  cli::write_atomic(common.out / "fusenet.ckpt", std::move(ckpt).str());
  cli::write_atomic(common.out / "loss.log", log);
  std::cout << "final_loss=" << text::format_fixed(final_loss, 8) << "\niou_moving=" << text::format_fixed(iou, 6) << '\n';
  return 0;
}

// ---- viz ----

int cmd_viz(const CommonOptions& common, const fs::path& mask) {
  const BevGrid grid = load_mask(mask);
  Manifest m = base_manifest("viz", common);
  m.set_input("mask", mask);
  prepare_out(common.out);
  m.write(common.out);
  cli::write_atomic(common.out / (mask.stem().string() + ".png"), render_png(grid));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"BEV moving-object tooling: labeling, rasterization, IPM baseline, evaluation, toy training"};
  app.set_version_flag("--version", std::string(cli::kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "key=value file; command-line flags take precedence");

  CommonOptions common;
  app.add_option("--out", common.out, "Output directory");
  app.add_option("--seed", common.seed, "Random seed");
  app.add_option("--resolution", common.resolution, "BEV cell size (m)");
  app.add_option("--max-range", common.max_range, "Depth range and label distance cutoff (m)");
  app.add_option("--half-width", common.half_width, "Lateral half extent of the BEV grid (m)");
  app.add_option("--threshold", common.threshold, "Moving speed threshold (m/s)");
  app.add_option("--min-track-length", common.min_track_length, "Tracks shorter than this are Static");
  app.add_option("--jobs", common.jobs, "Worker threads")->check(CLI::PositiveNumber);

  LabelGenOptions label_opt;
  auto* label_gen = app.add_subcommand("label-gen", "Label tracked objects Moving/Static from ego-motion");
  label_gen->add_option("sequence", label_opt.sequence, "Sequence directory (oxts/, tracklets.txt)")->required();
  label_gen->add_option("--calib", label_opt.calib, "Calibration directory (default: sequence)");
  label_gen->add_option("--tracklets", label_opt.tracklets, "Tracklet file (default: sequence/tracklets.txt)");

  RasterizeOptions raster_opt;
  auto* raster = app.add_subcommand("rasterize", "Render labeled box footprints into BEV masks");
  raster->add_option("--labels", raster_opt.labels, "Label file")->required();
  raster->add_option("--tracklets", raster_opt.tracklets, "Tracklet file")->required();
  raster->add_option("--calib", raster_opt.calib, "Calibration directory")->required();

  IpmOptions ipm_opt;
  auto* ipm = app.add_subcommand("ipm-baseline", "Warp a front-view class mask to BEV through a ground homography");
  ipm->add_option("--front", ipm_opt.front, "Front-view class PNG")->required();
  ipm->add_option("--pair", ipm_opt.pairs, "Correspondence u,v,x,z (repeat 4 times)");
  ipm->add_option("--pairs", ipm_opt.pairs_file, "File with 4 correspondence lines");
  ipm->add_option("--gt", ipm_opt.gt, "Ground-truth BEV mask to score against");
  ipm->add_flag("--moving-only", ipm_opt.moving_only, "Report IoU(moving) instead of the two-class mean");

  EvalOptions eval_opt;
  auto* eval_cmd = app.add_subcommand("eval", "Score predicted BEV masks against ground truth");
  eval_cmd->add_option("--pred", eval_opt.pred, "Directory of predicted .mask files")->required();
  eval_cmd->add_option("--gt", eval_opt.gt, "Directory of ground-truth .mask files")->required();
  eval_cmd->add_flag("--moving-only", eval_opt.moving_only, "Report IoU(moving) instead of the two-class mean");
  eval_cmd->add_flag("--skip-absent", eval_opt.skip_absent, "Leave absent classes and empty bins out");

  TrainOptions train_opt;
  auto* train = app.add_subcommand("train-toy", "Train the two-stream network at toy scale");
  train->add_option("--data", train_opt.data, "Directory of NAME.png, NAME.flo, NAME_target.png (default: synthetic)");
  train->add_option("--steps", train_opt.steps, "Optimizer steps");
  train->add_option("--lr", train_opt.learning_rate, "Learning rate");
  train->add_option("--momentum", train_opt.momentum, "Heavy-ball momentum");
  train->add_option("--samples", train_opt.samples, "Synthetic sample count");
  train->add_option("--size", train_opt.size, "Synthetic image side (multiple of 32)");
  train->add_option("--channels", train_opt.channels, "Base channel count");
  train->add_option("--encoder-stages", train_opt.encoder_stages, "Fused encoder stages (1-5)");

  fs::path viz_mask;
  auto* viz = app.add_subcommand("viz", "Render a BEV mask file as PNG");
  viz->add_option("mask", viz_mask, "Mask file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*label_gen) return cmd_label_gen(common, label_opt);
    if (*raster) return cmd_rasterize(common, raster_opt);
    if (*ipm) return cmd_ipm(common, ipm_opt);
    if (*eval_cmd) return cmd_eval(common, eval_opt);
    if (*train) return cmd_train_toy(common, train_opt);
    if (*viz) return cmd_viz(common, viz_mask);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
