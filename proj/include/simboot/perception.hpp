#pragma once

// Synthetic multi-view state estimation: independent noisy views of the scene
// and their component-wise median fusion.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "simboot/model.hpp"
#include "simboot/result.hpp"

namespace simboot {

struct NoiseModel {
  double sigma_pos = 0.005;   // meters, per axis
  double sigma_dim = 0.003;   // meters, per dimension
  double sigma_yaw = 0.035;   // radians
  double outlier_probability = 0.1;
  double outlier_offset_range = 0.2;  // meters; offsets uniform in [-r, r] per axis

  /// Throws ModelError unless all sigmas are >= 0, the outlier probability
  /// is in [0, 1) and the offset range is >= 0.
  void validate() const;

  static NoiseModel zero() { return NoiseModel{0.0, 0.0, 0.0, 0.0, 0.0}; }

  friend bool operator==(const NoiseModel&, const NoiseModel&) = default;
};

inline constexpr std::size_t kDefaultViews = 3;

struct ObjectEstimate {
  std::string id;
  Pose center;
  Extent size;
  bool is_outlier = false;  // ground-truth label, for tests only
};

struct ViewEstimate {
  std::size_t view_index = 0;
  std::vector<ObjectEstimate> objects;  // same order as the observed state
};

/// K independent noisy views of `state`. Deterministic in `seed`; throws
/// ModelError when `views` is 0 or the model is invalid.
std::vector<ViewEstimate> observe(const EnvState& state, const NoiseModel& model, std::size_t views,
                                  std::uint64_t seed);

enum class FuseErrorKind { NoViews, ViewCountMismatch };

struct FuseError {
  FuseErrorKind kind = FuseErrorKind::ViewCountMismatch;
  std::string message;
};

/// Lower median of the values (the smaller middle element for even counts).
double lower_median(std::vector<double> values);

/// Circular median: yaws are unwrapped around their circular mean, the lower
/// median is taken, and the chosen view's original yaw is returned.
double circular_median(std::vector<double> yaws);

/// Fused scene: every object in `layout` (names, categories, flags and the
/// gripper are taken from it) with center, yaw and size replaced by the
/// per-field median over views. Dimensions are clamped to >= 1e-4.
Result<EnvState, FuseError> fuse(std::span<const ViewEstimate> views, const EnvState& layout);

}  // namespace simboot
