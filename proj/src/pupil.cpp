#include "gazesa/gaze_events.hpp"

#include <cmath>
#include <numbers>

#include "gazesa/kernels.hpp"

namespace gazesa {

bool PupilSeries::all_invalid() const {
  for (auto f : flag) {
    if (f != PupilFlag::kInvalid) return false;
  }
  return true;
}

double area_to_diameter(double area, double mm_per_unit) {
  return 2.0 * std::sqrt(area / std::numbers::pi) * mm_per_unit;
}

PupilSeries pupil_pipeline(std::span<const GazeSample> samples, std::span<const GazeEvent> blinks,
                           double mm_per_unit) {
  const std::size_t n = samples.size();
  PupilSeries out;
  out.t.resize(n);
  out.diameter.assign(n, 0.0);
  out.flag.assign(n, PupilFlag::kInvalid);

  std::vector<double> area(n);
  std::vector<std::uint8_t> measured(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.t[i] = samples[i].t;
    area[i] = samples[i].pupil_area;
    measured[i] = samples[i].usable() ? 1 : 0;
  }

  // 1. moving mean over measured samples
  std::vector<double> smoothed(n, 0.0);
  kernels::moving_mean_parallel(area, measured, kPupilWindow, smoothed);

  // 2. linear interpolation across blinks from the nearest measured neighbours
  std::vector<std::uint8_t> usable = measured;
  for (const auto& blink : blinks) {
    const bool has_left = blink.begin > 0 && measured[blink.begin - 1];
    const bool has_right = blink.end < n && measured[blink.end];
    if (!has_left && !has_right) continue;
    const double t_left = has_left ? samples[blink.begin - 1].t : 0.0;
    const double t_right = has_right ? samples[blink.end].t : 0.0;
    const double v_left = has_left ? smoothed[blink.begin - 1] : smoothed[blink.end];
    const double v_right = has_right ? smoothed[blink.end] : smoothed[blink.begin - 1];
    for (std::size_t k = blink.begin; k < blink.end; ++k) {
      if (has_left && has_right) {
        const double frac = (samples[k].t - t_left) / (t_right - t_left);
        smoothed[k] = v_left + (v_right - v_left) * frac;
      } else {
        smoothed[k] = v_left;
      }
      usable[k] = 1;
      out.flag[k] = PupilFlag::kInterpolatedBlink;
    }
  }

  // 3. median filter over measured + interpolated samples
  std::vector<double> filtered(n, 0.0);
  kernels::moving_median_parallel(smoothed, usable, kPupilWindow, filtered);

  // 4. area -> diameter
  for (std::size_t i = 0; i < n; ++i) {
    if (!usable[i]) continue;
    if (measured[i]) out.flag[i] = PupilFlag::kMeasured;
    out.diameter[i] = area_to_diameter(filtered[i], mm_per_unit);
  }
  return out;
}

}  // namespace gazesa
