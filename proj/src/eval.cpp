#include "bevmod/eval.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include "bevmod/error.hpp"
#include "bevmod/text.hpp"

namespace bevmod {
namespace {

bool is_moving(CellClass c) { return c == CellClass::kMoving; }

void check_same_grid(const BevGrid& pred, const BevGrid& gt) {
  if (!(pred.spec == gt.spec)) throw Error(ErrorCode::kGridMismatch, "prediction and ground truth grids differ");
}

void tally(ConfusionMatrix& cm, bool pred_moving, bool gt_moving) {
  if (pred_moving && gt_moving) {
    ++cm.tp;
  } else if (pred_moving) {
    ++cm.fp;
  } else if (gt_moving) {
    ++cm.fn;
  } else {
    ++cm.tn;
  }
}

std::optional<double> class_iou(std::uint64_t hit, std::uint64_t fp, std::uint64_t fn) {
  const auto denom = hit + fp + fn;
  if (denom == 0) return std::nullopt;
  return static_cast<double>(hit) / static_cast<double>(denom);
}

std::string format_score(const std::optional<double>& v) {
  return v ? text::format_fixed(*v * 100.0, 2) : std::string("skipped");
}

std::string bin_name(const RangeBins& bins, std::size_t k) {
  return text::format_double(bins.edges[k]) + "-" + text::format_double(bins.edges[k + 1]) + "m";
}

}  // namespace

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionMatrix accumulate(const BevGrid& pred, const BevGrid& gt, ConfusionMatrix cm) {
  check_same_grid(pred, gt);
  for (std::size_t i = 0; i < gt.cells.cells.size(); ++i) {
    tally(cm, is_moving(pred.cells.cells[i]), is_moving(gt.cells.cells[i]));
  }
  return cm;
}

IouReport iou_report(const ConfusionMatrix& cm, MiouMode mode) {
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyEval, "no cells accumulated");
  IouReport r;
  r.moving = class_iou(cm.tp, cm.fp, cm.fn).value_or(1.0);
  r.not_moving = class_iou(cm.tn, cm.fp, cm.fn).value_or(1.0);
  r.miou = mode == MiouMode::kMovingOnly ? r.moving : (r.moving + r.not_moving) / 2.0;
  return r;
}

double miou(const ConfusionMatrix& cm, MiouMode mode) { return iou_report(cm, mode).miou; }

std::optional<double> miou(const ConfusionMatrix& cm, const MiouOptions& options) {
  if (options.absent == AbsentClassPolicy::kScoreOne) return miou(cm, options.mode);
  if (cm.total() == 0) throw Error(ErrorCode::kEmptyEval, "no cells accumulated");
  const auto moving = class_iou(cm.tp, cm.fp, cm.fn);
  if (!moving) return std::nullopt;
  if (options.mode == MiouMode::kMovingOnly) return moving;
  const auto not_moving = class_iou(cm.tn, cm.fp, cm.fn);
  return not_moving ? (*moving + *not_moving) / 2.0 : *moving;
}

std::optional<std::size_t> RangeBins::bin_of(double z) const {
  if (edges.size() < 2 || z < edges.front() || z > edges.back()) return std::nullopt;
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (z < edges[k + 1]) return k;
  }
  return edges.size() - 2;
}

void RangeBins::check_covers(const GridSpec& spec) const {
  if (edges.size() < 2) throw Error(ErrorCode::kGridMismatch, "need at least one range bin");
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    if (!(edges[k] < edges[k + 1])) throw Error(ErrorCode::kGridMismatch, "bin edges must increase");
  }
  if (std::abs(edges.front() - spec.z_min) > 1e-9 || std::abs(edges.back() - spec.z_max) > 1e-9) {
    throw Error(ErrorCode::kGridMismatch, "range bins do not cover the grid's forward extent");
  }
}

void accumulate_binned(const BevGrid& pred, const BevGrid& gt, const RangeBins& bins, BinnedConfusion& acc) {
  check_same_grid(pred, gt);
  bins.check_covers(gt.spec);
  if (acc.bins.empty()) acc.bins.resize(bins.count());
  if (acc.bins.size() != bins.count()) throw Error(ErrorCode::kGridMismatch, "accumulator bin count differs");
  for (int row = 0; row < gt.spec.height; ++row) {
    const auto k = bins.bin_of(gt.spec.cell_center_z(row));
    ConfusionMatrix row_cm;
    for (int col = 0; col < gt.spec.width; ++col) {
      tally(row_cm, is_moving(pred.at(row, col)), is_moving(gt.at(row, col)));
    }
    if (k) acc.bins[*k] += row_cm;
    acc.global += row_cm;
  }
}

std::vector<double> range_binned_miou(const BevGrid& pred, const BevGrid& gt, const RangeBins& bins,
                                      MiouMode mode) {
  BinnedConfusion acc;
  accumulate_binned(pred, gt, bins, acc);
  std::vector<double> out;
  out.reserve(acc.bins.size());
  for (const auto& cm : acc.bins) out.push_back(miou(cm, mode));
  return out;
}

std::vector<std::optional<double>> binned_miou(const BinnedConfusion& acc, const MiouOptions& options) {
  std::vector<std::optional<double>> out;
  out.reserve(acc.bins.size());
  for (const auto& cm : acc.bins) out.push_back(cm.total() == 0 ? std::nullopt : miou(cm, options));
  return out;
}

DatasetStats dataset_stats(std::span<const MotionLabel> labels) {
  DatasetStats stats{};
  for (const auto& label : labels) {
    auto& c = stats[static_cast<std::size_t>(label.object_class)];
    (label.verdict == Verdict::kMoving ? c.moving_count : c.static_count) += 1;
    c.total += 1;
  }
  return stats;
}

void write_report_table(std::ostream& out, const BinnedConfusion& acc, const RangeBins& bins,
                        const MiouOptions& options, std::size_t frames) {
  const auto per_bin = binned_miou(acc, options);
  const auto global = acc.global.total() ? miou(acc.global, options) : std::nullopt;
  char line[160];
  out << "frames: " << frames << '\n';
  out << "metric: " << (options.mode == MiouMode::kMeanOfTwo ? "mean(moving, not-moving) IoU" : "moving IoU")
      << '\n';
  std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s %10s\n", "range", "mIoU", "tp", "fp", "fn", "tn");
  out << line;
  auto row = [&](const std::string& name, const std::optional<double>& score, const ConfusionMatrix& cm) {
    std::snprintf(line, sizeof line, "%-12s %10s %10llu %10llu %10llu %10llu\n", name.c_str(),
                  format_score(score).c_str(), static_cast<unsigned long long>(cm.tp),
                  static_cast<unsigned long long>(cm.fp), static_cast<unsigned long long>(cm.fn),
                  static_cast<unsigned long long>(cm.tn));
    out << line;
  };
  for (std::size_t k = 0; k < acc.bins.size(); ++k) row(bin_name(bins, k), per_bin[k], acc.bins[k]);
  row("all", global, acc.global);
}

void write_report_kv(std::ostream& out, const BinnedConfusion& acc, const RangeBins& bins,
                     const MiouOptions& options, std::size_t frames) {
  const auto per_bin = binned_miou(acc, options);
  const auto global = acc.global.total() ? miou(acc.global, options) : std::nullopt;
  auto score = [](const std::optional<double>& v) { return v ? text::format_fixed(*v, 6) : std::string("skipped"); };
  out << "frames=" << frames << '\n';
  out << "mode=" << (options.mode == MiouMode::kMeanOfTwo ? "mean_of_two" : "moving_only") << '\n';
  out << "absent=" << (options.absent == AbsentClassPolicy::kScoreOne ? "score_one" : "skip") << '\n';
  out << "miou=" << score(global) << '\n';
  auto counts = [&](const std::string& prefix, const ConfusionMatrix& cm) {
    out << prefix << ".tp=" << cm.tp << '\n'
        << prefix << ".fp=" << cm.fp << '\n'
        << prefix << ".fn=" << cm.fn << '\n'
        << prefix << ".tn=" << cm.tn << '\n';
  };
  counts("all", acc.global);
  for (std::size_t k = 0; k < acc.bins.size(); ++k) {
    const auto name = "bin." + bin_name(bins, k);
    out << name << ".miou=" << score(per_bin[k]) << '\n';
    counts(name, acc.bins[k]);
  }
}

void write_stats_table(std::ostream& out, const DatasetStats& stats) {
  char line[128];
  std::snprintf(line, sizeof line, "%-12s %10s %10s %10s\n", "class", "static", "moving", "total");
  out << line;
  for (auto cls : kAllObjectClasses) {
    const auto& c = stats[static_cast<std::size_t>(cls)];
    std::snprintf(line, sizeof line, "%-12s %10llu %10llu %10llu\n", std::string(to_string(cls)).c_str(),
                  static_cast<unsigned long long>(c.static_count), static_cast<unsigned long long>(c.moving_count),
                  static_cast<unsigned long long>(c.total));
    out << line;
  }
}

}  // namespace bevmod
