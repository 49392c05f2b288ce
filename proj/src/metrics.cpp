#include <algorithm>

#include "mgm/error.hpp"
#include "mgm/labeling.hpp"

namespace mgm {

using nlohmann::json;

namespace {

std::size_t class_index(CoarseLabel c) { return static_cast<std::size_t>(c); }

double ratio(std::size_t num, double den, bool& zero) {
  if (den == 0.0) {
    zero = true;
    return 0.0;
  }
  return static_cast<double>(num) / den;
}

}  // namespace

MetricsReport weighted_metrics(const std::vector<std::optional<CoarseLabel>>& pred,
                               const std::vector<CoarseLabel>& truth) {
  if (pred.size() != truth.size()) throw ValidationError("metrics: length mismatch");
  if (truth.empty()) throw ValidationError("metrics: empty input");

  constexpr std::size_t K = kCoarseClassCount;
  MetricsReport r;
  r.total = truth.size();
  r.confusion.assign(K, std::vector<std::size_t>(K, 0));
  r.unassigned.assign(K, 0);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const std::size_t t = class_index(truth[i]);
    if (pred[i]) {
      ++r.confusion[t][class_index(*pred[i])];
      if (*pred[i] == truth[i]) ++correct;
    } else {
      ++r.unassigned[t];
    }
  }
  r.plain_accuracy = static_cast<double>(correct) / static_cast<double>(r.total);

  const double total = static_cast<double>(r.total);
  for (std::size_t c = 0; c < K; ++c) {
    ClassMetrics m;
    m.label = kCoarseLabels[c];
    for (std::size_t p = 0; p < K; ++p) m.support += r.confusion[c][p];
    m.support += r.unassigned[c];
    m.tp = r.confusion[c][c];
    for (std::size_t t = 0; t < K; ++t)
      if (t != c) m.fp += r.confusion[t][c];
    m.fn = m.support - m.tp;
    m.tn = r.total - m.tp - m.fp - m.fn;

    bool zero = false;
    m.acc = ratio(m.tp + m.tn, static_cast<double>(m.tp + m.tn + m.fp + m.fn), zero);
    m.prec = ratio(m.tp, static_cast<double>(m.tp + m.fp), zero);
    m.rec = ratio(m.tp, static_cast<double>(m.tp + m.fn), zero);
    m.f1 = ratio(m.tp, static_cast<double>(m.tp) + 0.5 * static_cast<double>(m.fp + m.fn), zero);
    m.zero_denominator = zero;

    const double w = static_cast<double>(m.support) / total;
    r.acc += m.acc * w;
    r.prec += m.prec * w;
    r.rec += m.rec * w;
    r.f1 += m.f1 * w;
    r.classes.push_back(m);
  }
  return r;
}

MetricsReport weighted_metrics(const std::vector<CoarseLabel>& pred,
                               const std::vector<CoarseLabel>& truth) {
  std::vector<std::optional<CoarseLabel>> wrapped(pred.begin(), pred.end());
  return weighted_metrics(wrapped, truth);
}

json metrics_to_json(const MetricsReport& r) {
  json classes = json::array();
  for (const auto& c : r.classes) {
    classes.push_back({{"class", std::string(to_string(c.label))},
                       {"support", c.support},
                       {"tp", c.tp},
                       {"tn", c.tn},
                       {"fp", c.fp},
                       {"fn", c.fn},
                       {"acc", c.acc},
                       {"prec", c.prec},
                       {"rec", c.rec},
                       {"f1", c.f1},
                       {"zero_denominator", c.zero_denominator}});
  }
  json labels = json::array();
  for (CoarseLabel c : kCoarseLabels) labels.push_back(std::string(to_string(c)));
  return {{"weighted", {{"acc", r.acc}, {"prec", r.prec}, {"rec", r.rec}, {"f1", r.f1}}},
          {"plain_accuracy", r.plain_accuracy},
          {"total", r.total},
          {"classes", std::move(classes)},
          {"confusion", {{"labels", std::move(labels)}, {"matrix", r.confusion},
                         {"unassigned", r.unassigned}}}};
}

}  // namespace mgm
