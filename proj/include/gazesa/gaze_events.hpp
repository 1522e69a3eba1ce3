#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazesa {

// Detection thresholds. Minimums are inclusive, maximums inclusive.
inline constexpr double kNominalRateHz = 2000.0;
inline constexpr double kMinFixationS = 0.040;
inline constexpr double kMinSaccadeS = 0.015;
inline constexpr double kMaxSaccadeS = 0.150;
inline constexpr double kMinSaccadeSpeedPxS = 2000.0;
inline constexpr double kMaxBlinkS = 0.200;
inline constexpr std::size_t kPupilWindow = 100;
inline constexpr double kFrameWidthPx = 1920.0;
inline constexpr double kFrameHeightPx = 1080.0;

// Absorbs timestamp rounding (t = k / 2000 is not exact in binary).
inline constexpr double kTimeEps = 1e-9;

struct GazeSample {
  double t = 0.0;           // seconds since trial start
  double x = 0.0;           // px
  double y = 0.0;           // px
  double pupil_area = 0.0;  // device units
  bool valid = true;

  bool usable() const { return valid && pupil_area > 0.0; }
};

enum class EventKind { kFixation, kSaccade, kBlink };
const char* event_kind_name(EventKind kind);

// Every event owns the half-open sample range [begin, end). A sample k owns
// the time interval [t_k, t_{k+1}); the last sample owns one sample period.
struct GazeEvent {
  EventKind kind = EventKind::kFixation;
  double onset = 0.0;
  double duration = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
  double centroid_x = 0.0;  // fixations
  double centroid_y = 0.0;  // fixations
  double amplitude = 0.0;   // saccades, px
  std::optional<std::string> aoi;
};

// A run of unusable samples too long to be a blink.
struct InvalidGap {
  double onset = 0.0;
  double duration = 0.0;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct BlinkResult {
  std::vector<GazeEvent> blinks;
  std::vector<InvalidGap> gaps;
};

// Throws Error(kValidation) unless timestamps strictly increase.
void validate_samples(std::span<const GazeSample> samples);

// Time at which sample `index` ends (start of the next sample, or one period
// after the last one).
double sample_end_time(std::span<const GazeSample> samples, std::size_t index);
double trial_duration(std::span<const GazeSample> samples);

BlinkResult detect_blinks(std::span<const GazeSample> samples);
std::vector<GazeEvent> detect_saccades(std::span<const GazeSample> samples);
std::vector<GazeEvent> detect_fixations(std::span<const GazeSample> samples,
                                        std::span<const GazeEvent> saccades,
                                        std::span<const GazeEvent> blinks,
                                        std::span<const InvalidGap> gaps);

// --- pupil -------------------------------------------------------------------

enum class PupilFlag : unsigned char { kMeasured, kInterpolatedBlink, kInvalid };

struct PupilSeries {
  std::vector<double> t;
  std::vector<double> diameter;  // mm; 0 where invalid
  std::vector<PupilFlag> flag;

  bool all_invalid() const;
};

// Moving mean -> blink interpolation -> median filter -> area to diameter.
PupilSeries pupil_pipeline(std::span<const GazeSample> samples, std::span<const GazeEvent> blinks,
                           double mm_per_unit = 1.0);

double area_to_diameter(double area, double mm_per_unit);

// --- areas of interest -------------------------------------------------------

struct AoiRegion {
  std::string name;
  double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;  // inclusive rectangle
  int priority = 0;                              // larger wins on overlap

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

// The five region names accepted by a layout, in feature-table order.
const std::vector<std::string>& aoi_names();

class AoiLayout {
 public:
  AoiLayout() = default;
  // Throws Error(kValidation) on unknown names, duplicates, or rectangles
  // outside the 1920x1080 frame.
  explicit AoiLayout(std::vector<AoiRegion> regions);

  static AoiLayout default_layout();
  static AoiLayout from_json(const std::string& text);
  static AoiLayout load(const std::string& path);
  std::string to_json() const;

  // Highest-priority region containing the point (ties: lexicographically
  // smaller name).
  std::optional<std::string> locate(double x, double y) const;
  const std::vector<AoiRegion>& regions() const { return regions_; }

 private:
  std::vector<AoiRegion> regions_;  // sorted by descending priority, then name
};

void assign_aoi(std::vector<GazeEvent>& fixations, const AoiLayout& layout);

// --- whole-trial convenience ---------------------------------------------------

struct TrialEvents {
  std::vector<GazeEvent> fixations;
  std::vector<GazeEvent> saccades;
  std::vector<GazeEvent> blinks;
  std::vector<InvalidGap> gaps;
  PupilSeries pupil;

  // All events merged in onset order.
  std::vector<GazeEvent> merged() const;
};

TrialEvents detect_events(std::span<const GazeSample> samples, const AoiLayout& layout,
                          double mm_per_unit = 1.0);

// --- file formats ----------------------------------------------------------------

// Header `t,x,y,pupil_area,valid`.
std::vector<GazeSample> read_gaze_csv(std::istream& in, const std::string& name = "<stream>");
std::vector<GazeSample> load_gaze_csv(const std::string& path);
void write_gaze_csv(std::ostream& out, std::span<const GazeSample> samples);

// Header `kind,onset,duration,centroid_x,centroid_y,amplitude,aoi`.
void write_events_csv(std::ostream& out, std::span<const GazeEvent> events);

}  // namespace gazesa
