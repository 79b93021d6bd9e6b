#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "bevmod/bev_raster.hpp"
#include "bevmod/motion_labeling.hpp"

namespace bevmod {

// Binary moving / not-moving counts; Static and Background both score as
// not-moving.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;
  std::uint64_t tn = 0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);
  bool operator==(const ConfusionMatrix&) const = default;
};

enum class MiouMode {
  kMeanOfTwo,   // mean of IoU(moving) and IoU(not-moving)
  kMovingOnly,  // IoU(moving)
};

enum class AbsentClassPolicy {
  kScoreOne,  // a class absent from both pred and gt has IoU 1
  kSkip,      // ...is left out; a bin without moving cells is skipped
};

struct MiouOptions {
  MiouMode mode = MiouMode::kMeanOfTwo;
  AbsentClassPolicy absent = AbsentClassPolicy::kScoreOne;
};

struct IouReport {
  double moving = 0.0;
  double not_moving = 0.0;
  double miou = 0.0;
};

// Throws GridMismatch when the specs differ.
ConfusionMatrix accumulate(const BevGrid& pred, const BevGrid& gt, ConfusionMatrix cm = {});

// Throws EmptyEval on an empty matrix.
IouReport iou_report(const ConfusionMatrix& cm, MiouMode mode = MiouMode::kMeanOfTwo);
double miou(const ConfusionMatrix& cm, MiouMode mode = MiouMode::kMeanOfTwo);
// nullopt when the options skip this matrix entirely.
std::optional<double> miou(const ConfusionMatrix& cm, const MiouOptions& options);

/// Forward-depth bins over cell centers: [lo, hi) except the last, which
/// is closed.
struct RangeBins {
  std::vector<double> edges = {0.0, 10.0, 20.0, 30.0, 40.0, 50.0};

  std::size_t count() const { return edges.size() - 1; }
  // Bin of depth z, or nullopt outside [edges.front(), edges.back()].
  std::optional<std::size_t> bin_of(double z) const;
  // Throws GridMismatch unless edges increase strictly and span exactly
  // [spec.z_min, spec.z_max].
  void check_covers(const GridSpec& spec) const;
};

struct BinnedConfusion {
  std::vector<ConfusionMatrix> bins;
  ConfusionMatrix global;
};

// Adds one frame into `acc` (resized to the bin count when empty).
void accumulate_binned(const BevGrid& pred, const BevGrid& gt, const RangeBins& bins, BinnedConfusion& acc);

std::vector<double> range_binned_miou(const BevGrid& pred, const BevGrid& gt,
                                      const RangeBins& bins = {}, MiouMode mode = MiouMode::kMeanOfTwo);
std::vector<std::optional<double>> binned_miou(const BinnedConfusion& acc, const MiouOptions& options);

struct ClassCounts {
  std::uint64_t static_count = 0;
  std::uint64_t moving_count = 0;
  std::uint64_t total = 0;

  bool operator==(const ClassCounts&) const = default;
};

// Indexed by ObjectClass.
using DatasetStats = std::array<ClassCounts, kAllObjectClasses.size()>;

DatasetStats dataset_stats(std::span<const MotionLabel> labels);

// Human-readable per-bin and global table.
void write_report_table(std::ostream& out, const BinnedConfusion& acc, const RangeBins& bins,
                        const MiouOptions& options, std::size_t frames);
// `key=value` lines with the same content.
void write_report_kv(std::ostream& out, const BinnedConfusion& acc, const RangeBins& bins,
                     const MiouOptions& options, std::size_t frames);
void write_stats_table(std::ostream& out, const DatasetStats& stats);

}  // namespace bevmod
