#include "mgm/stenosis.hpp"

#include <algorithm>
#include <cmath>

#include "mgm/error.hpp"

namespace mgm {

using nlohmann::json;

DiameterProfile::DiameterProfile(std::vector<double> s) : samples(std::move(s)) {
  for (double v : samples) {
    if (!std::isfinite(v) || v <= 0.0) {
      throw ValidationError("diameter profile: samples must be positive and finite");
    }
  }
}

DiameterProfile diameters_from_mask(const BinaryMask& mask, const std::vector<Point2>& centerline) {
  if (centerline.empty()) throw ValidationError("diameters_from_mask: empty centerline");
  if (!mask.has_background()) throw ValidationError("diameters_from_mask: mask has no background");
  const DenseMatrix dist = euclidean_distance_transform(mask);
  std::vector<double> out;
  out.reserve(centerline.size());
  for (const Point2& p : centerline) {
    const double rx = std::round(p.x), ry = std::round(p.y);
    if (rx < 0 || ry < 0 || rx >= static_cast<double>(mask.width()) ||
        ry >= static_cast<double>(mask.height())) {
      throw ValidationError("diameters_from_mask: centerline point outside the mask");
    }
    const auto x = static_cast<std::size_t>(rx), y = static_cast<std::size_t>(ry);
    if (!mask.at(x, y)) {
      throw ValidationError("diameters_from_mask: centerline point (" + std::to_string(x) + ", " +
                            std::to_string(y) + ") is background");
    }
    out.push_back(2.0 * dist(y, x));
  }
  return DiameterProfile(std::move(out));
}

Extrema local_extrema(const DiameterProfile& d) {
  const auto& s = d.samples;
  if (s.size() < 3) throw ValidationError("local_extrema: profile needs at least 3 samples");
  Extrema e;
  int last = 0;  // last nonzero sign of the backward difference
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    const double back = s[i] - s[i - 1];
    if (back > 0) last = 1;
    if (back < 0) last = -1;
    const double fwd = s[i + 1] - s[i];
    const int next = fwd > 0 ? 1 : (fwd < 0 ? -1 : 0);
    if (next == 0 || last == 0) continue;
    if (last < 0 && next > 0) e.minima.push_back(i);
    if (last > 0 && next < 0) e.maxima.push_back(i);
  }
  return e;
}

std::string_view to_string(Grade g) {
  switch (g) {
    case Grade::None: return "None";
    case Grade::Minimal: return "Minimal";
    case Grade::Mild: return "Mild";
    case Grade::Moderate: return "Moderate";
    case Grade::Severe: return "Severe";
  }
  return "None";
}

Grade parse_grade(std::string_view text) {
  for (Grade g : {Grade::None, Grade::Minimal, Grade::Mild, Grade::Moderate, Grade::Severe})
    if (to_string(g) == text) return g;
  throw ValidationError("unknown grade '" + std::string(text) + "'");
}

Grade grade(double percent) {
  if (!(percent >= 0.0 && percent <= 100.0)) {
    throw ValidationError("grade: percent must lie in [0, 100]");
  }
  if (percent < 1.0) return Grade::None;
  if (percent < 25.0) return Grade::Minimal;
  if (percent < 50.0) return Grade::Mild;
  if (percent < 70.0) return Grade::Moderate;
  return Grade::Severe;
}

StenosisFinding stenosis_percent(const DiameterProfile& d) {
  if (d.samples.empty()) throw ValidationError("stenosis_percent: empty profile");
  const auto& s = d.samples;
  StenosisFinding f;
  Extrema e;
  if (s.size() >= 3) e = local_extrema(d);

  if (e.minima.empty() || e.maxima.empty()) {
    const auto lo = std::min_element(s.begin(), s.end());
    f.min_index = static_cast<std::size_t>(lo - s.begin());
    f.d_min = *lo;
    f.d_max = *std::max_element(s.begin(), s.end());
    f.percent = std::clamp((1.0 - f.d_min / f.d_max) * 100.0, 0.0, 100.0);
    f.grade = Grade::None;
    f.degenerate = true;
    return f;
  }

  f.min_index = e.minima.front();
  for (std::size_t i : e.minima)
    if (s[i] < s[f.min_index]) f.min_index = i;
  f.d_min = s[f.min_index];
  f.d_max = s[e.maxima.front()];
  for (std::size_t i : e.maxima) f.d_max = std::max(f.d_max, s[i]);
  f.percent = std::clamp((1.0 - f.d_min / f.d_max) * 100.0, 0.0, 100.0);
  f.grade = grade(f.percent);
  return f;
}

json finding_to_json(const StenosisFinding& f) {
  return {{"min_index", f.min_index},
          {"d_min", f.d_min},
          {"d_max", f.d_max},
          {"percent", f.percent},
          {"grade", std::string(to_string(f.grade))},
          {"degenerate", f.degenerate}};
}

StenosisAccuracy stenosis_accuracy(const std::vector<StenosisFinding>& findings,
                                   const std::vector<SegmentTruth>& truth) {
  if (findings.size() != truth.size()) {
    throw ValidationError("stenosis_accuracy: findings and truth differ in length");
  }
  StenosisAccuracy out;
  for (CoarseLabel c : kCoarseLabels) out.classes.push_back({c, 0, 0, 0, 0.0});
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!truth[i].stenotic) continue;
    auto& cls = out.classes[static_cast<std::size_t>(truth[i].label)];
    ++cls.support;
    ++out.total;
    if (findings[i].grade != Grade::None && truth[i].label_correct) {
      ++cls.tp;
    } else {
      ++cls.fn;
    }
  }
  if (out.total == 0) return out;
  for (auto& cls : out.classes) {
    if (cls.support == 0) continue;
    cls.acc = static_cast<double>(cls.tp) / static_cast<double>(cls.tp + cls.fn);
    out.acc += cls.acc * static_cast<double>(cls.support) / static_cast<double>(out.total);
  }
  return out;
}

json stenosis_accuracy_to_json(const StenosisAccuracy& a) {
  json classes = json::array();
  for (const auto& c : a.classes) {
    classes.push_back({{"class", std::string(to_string(c.label))},
                       {"support", c.support},
                       {"tp", c.tp},
                       {"fn", c.fn},
                       {"acc", c.acc}});
  }
  return {{"acc", a.acc}, {"total", a.total}, {"classes", std::move(classes)}};
}

}  // namespace mgm
