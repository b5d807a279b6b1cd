#include "simboot/perception.hpp"

#include <algorithm>
#include <cmath>

#include "simboot/rng.hpp"

namespace simboot {

namespace {

constexpr double kMinDimension = 1e-4;

}  // namespace

void NoiseModel::validate() const {
  auto non_negative = [](double v) { return std::isfinite(v) && v >= 0.0; };
  if (!non_negative(sigma_pos) || !non_negative(sigma_dim) || !non_negative(sigma_yaw)) {
    throw ModelError("noise sigmas must be finite and >= 0");
  }
  if (!(outlier_probability >= 0.0 && outlier_probability < 1.0)) {
    throw ModelError("outlier_probability must be in [0, 1)");
  }
  if (!non_negative(outlier_offset_range)) throw ModelError("outlier_offset_range must be >= 0");
}

std::vector<ViewEstimate> observe(const EnvState& state, const NoiseModel& model, std::size_t views,
                                  std::uint64_t seed) {
  model.validate();
  if (views == 0) throw ModelError("observe needs at least one view");
  std::vector<ViewEstimate> out;
  out.reserve(views);
  for (std::size_t v = 0; v < views; ++v) {
    Rng rng(derive_seed(seed, {0x9e75, v}));
    ViewEstimate view{v, {}};
    view.objects.reserve(state.objects().size());
    for (const auto& o : state.objects()) {
      const Pose& c = o.center();
      double x = c.x() + rng.normal(model.sigma_pos);
      double y = c.y() + rng.normal(model.sigma_pos);
      double z = c.z() + rng.normal(model.sigma_pos);
      const double yaw = c.yaw() + rng.normal(model.sigma_yaw);
      const Extent size{o.size().length + rng.normal(model.sigma_dim), o.size().width + rng.normal(model.sigma_dim),
                        o.size().height + rng.normal(model.sigma_dim)};
      const bool outlier = model.outlier_probability > 0.0 && rng.bernoulli(model.outlier_probability);
      if (outlier) {
        const double r = model.outlier_offset_range;
        x = c.x() + rng.uniform(-r, r);
        y = c.y() + rng.uniform(-r, r);
        z = c.z() + rng.uniform(-r, r);
      }
      view.objects.push_back({o.id(), Pose(x, y, z, yaw), size, outlier});
    }
    out.push_back(std::move(view));
  }
  return out;
}

double lower_median(std::vector<double> values) {
  if (values.empty()) throw ModelError("median of no values");
  const std::size_t k = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k), values.end());
  return values[k];
}

double circular_median(std::vector<double> yaws) {
  if (yaws.empty()) throw ModelError("median of no angles");
  // Sorting first makes the floating-point sums independent of view order.
  std::sort(yaws.begin(), yaws.end());
  double s = 0.0;
  double c = 0.0;
  for (double y : yaws) {
    s += std::sin(y);
    c += std::cos(y);
  }
  const double mean = std::atan2(s, c);
  std::vector<std::pair<double, double>> unwrapped;  // (unwrapped, original)
  unwrapped.reserve(yaws.size());
  for (double y : yaws) unwrapped.emplace_back(mean + normalize_yaw(y - mean), y);
  std::sort(unwrapped.begin(), unwrapped.end());
  return unwrapped[(unwrapped.size() - 1) / 2].second;
}

Result<EnvState, FuseError> fuse(std::span<const ViewEstimate> views, const EnvState& layout) {
  if (views.empty()) return unexpected(FuseError{FuseErrorKind::NoViews, "fuse needs at least one view"});
  const auto objects = layout.objects();
  for (const auto& v : views) {
    if (v.objects.size() != objects.size()) {
      return unexpected(FuseError{FuseErrorKind::ViewCountMismatch,
                                  "view " + std::to_string(v.view_index) + " has " +
                                      std::to_string(v.objects.size()) + " estimates for " +
                                      std::to_string(objects.size()) + " objects"});
    }
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (v.objects[i].id != objects[i].id()) {
        return unexpected(FuseError{FuseErrorKind::ViewCountMismatch,
                                    "view " + std::to_string(v.view_index) + " estimate " + std::to_string(i) +
                                        " is '" + v.objects[i].id + "', expected '" + objects[i].id() + "'"});
      }
    }
  }

  std::vector<ObjectState> fused;
  fused.reserve(objects.size());
  std::vector<double> buf(views.size());
  auto median_of = [&](std::size_t i, auto field) {
    for (std::size_t v = 0; v < views.size(); ++v) buf[v] = field(views[v].objects[i]);
    return lower_median(buf);
  };
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const double x = median_of(i, [](const ObjectEstimate& e) { return e.center.x(); });
    const double y = median_of(i, [](const ObjectEstimate& e) { return e.center.y(); });
    const double z = median_of(i, [](const ObjectEstimate& e) { return e.center.z(); });
    for (std::size_t v = 0; v < views.size(); ++v) buf[v] = views[v].objects[i].center.yaw();
    const double yaw = circular_median(buf);
    const Extent size{
        std::max(kMinDimension, median_of(i, [](const ObjectEstimate& e) { return e.size.length; })),
        std::max(kMinDimension, median_of(i, [](const ObjectEstimate& e) { return e.size.width; })),
        std::max(kMinDimension, median_of(i, [](const ObjectEstimate& e) { return e.size.height; }))};
    fused.push_back(objects[i].moved_to(Pose(x, y, z, yaw)).with_size(size));
  }
  return layout.with_objects(std::move(fused));
}

}  // namespace simboot
