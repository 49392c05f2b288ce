#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mgm/graph.hpp"
#include "mgm/numerics.hpp"

namespace mgm {

// Diameters (pixels) sampled along a centerline. All samples positive and finite.
struct DiameterProfile {
  std::vector<double> samples;

  DiameterProfile() = default;
  explicit DiameterProfile(std::vector<double> s);
  std::size_t size() const { return samples.size(); }
};

// 2 x EDT at each centerline point (rounded to the nearest cell).
DiameterProfile diameters_from_mask(const BinaryMask& mask, const std::vector<Point2>& centerline);

struct Extrema {
  std::vector<std::size_t> minima;
  std::vector<std::size_t> maxima;
};

// Sign changes of backward differences; flat steps keep the previous sign.
Extrema local_extrema(const DiameterProfile& d);

enum class Grade { None, Minimal, Mild, Moderate, Severe };

std::string_view to_string(Grade g);
Grade parse_grade(std::string_view text);
Grade grade(double percent);

struct StenosisFinding {
  std::size_t min_index = 0;
  double d_min = 0.0;
  double d_max = 0.0;
  double percent = 0.0;  // narrowing, (1 - d_min / d_max) * 100
  Grade grade = Grade::None;
  bool degenerate = false;  // no interior minimum/maximum pair
};

StenosisFinding stenosis_percent(const DiameterProfile& d);

nlohmann::json finding_to_json(const StenosisFinding& f);

struct SegmentTruth {
  CoarseLabel label = CoarseLabel::LMA;  // true class of the segment
  bool stenotic = false;                 // a lesion was planted
  bool label_correct = false;            // labeling recovered the true class
};

struct StenosisClassAccuracy {
  CoarseLabel label = CoarseLabel::LMA;
  std::size_t support = 0;  // stenotic segments of this class
  std::size_t tp = 0;
  std::size_t fn = 0;
  double acc = 0.0;
};

struct StenosisAccuracy {
  std::vector<StenosisClassAccuracy> classes;
  std::size_t total = 0;
  double acc = 0.0;  // support-weighted over classes
};

// A stenotic segment counts as found when it is graded (not None) and correctly labeled.
StenosisAccuracy stenosis_accuracy(const std::vector<StenosisFinding>& findings,
                                   const std::vector<SegmentTruth>& truth);

nlohmann::json stenosis_accuracy_to_json(const StenosisAccuracy& a);

}  // namespace mgm
