#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mgm/graph.hpp"
#include "mgm/nn.hpp"
#include "mgm/numerics.hpp"

namespace mgm {

// Unordered coarse-label pairs that may be physically adjacent.
class AnatomyTable {
 public:
  // LMA-LAD, LMA-LCX, LAD-LAD, LAD-D, LCX-LCX, LCX-OM
  static AnatomyTable standard();
  explicit AnatomyTable(std::set<std::pair<CoarseLabel, CoarseLabel>> allowed);

  bool allows(CoarseLabel a, CoarseLabel b) const;
  const std::set<std::pair<CoarseLabel, CoarseLabel>>& allowed() const { return allowed_; }

 private:
  std::set<std::pair<CoarseLabel, CoarseLabel>> allowed_;
};

// Fraction of edges whose label pair the table does not allow.
double structural_loss(const VascularGraph& g, const std::vector<CoarseLabel>& labels,
                       const AnatomyTable& table);

enum class VoteMode {
  Strict,  // only matchings with zero structural loss vote
  Soft     // every matching votes with weight 1 - structural loss
};
enum class PivotMode { Test, Random };

// Labels one template induces on the test graph through a matching.
struct CandidateMatching {
  std::size_t tuple_index = 0;
  std::string template_id;
  std::vector<CoarseLabel> labels;  // per test node
  std::vector<double> affinity;     // soft affinity of each test node to its partner
  double structural_loss = 0.0;
  bool accepted = false;
};

struct LabelReport {
  std::string graph_id;
  std::vector<std::optional<CoarseLabel>> labels;
  std::vector<std::map<CoarseLabel, double>> tallies;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  bool abstained = false;
  std::vector<CandidateMatching> candidates;
};

// Screens candidates against the table and takes the per-node majority.
// Ties: larger summed affinity, then lexicographically smaller label name.
// With no surviving candidate the least-violating one is used and the report
// is flagged abstained.
LabelReport vote(const VascularGraph& test, std::vector<CandidateMatching> candidates,
                 const AnatomyTable& table, VoteMode mode);

struct LabelOptions {
  std::size_t m = 3;
  std::size_t cap = 0;
  VoteMode mode = VoteMode::Strict;
  PivotMode pivot = PivotMode::Test;
  std::uint64_t seed = 0;
  SinkhornOptions sinkhorn;
  std::size_t threads = 1;
};

LabelReport label_graph(const VascularGraph& test, const std::vector<VascularGraph>& templates,
                        const ModelParams& params, const LabelOptions& options,
                        const AnatomyTable& table = AnatomyTable::standard());

nlohmann::json label_report_to_json(const LabelReport& r);
// Debug CSV rows: tuple_id,template_id,structural_loss,accepted
std::string candidates_csv(const LabelReport& r);

struct ClassMetrics {
  CoarseLabel label = CoarseLabel::LMA;
  std::size_t support = 0;  // N_c
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double acc = 0.0, prec = 0.0, rec = 0.0, f1 = 0.0;
  bool zero_denominator = false;
};

struct MetricsReport {
  std::vector<ClassMetrics> classes;  // one per coarse class, fixed order
  double acc = 0.0, prec = 0.0, rec = 0.0, f1 = 0.0;  // support-weighted
  double plain_accuracy = 0.0;                        // fraction predicted correctly
  std::size_t total = 0;
  // confusion[t][p]: truth class t predicted as p; unassigned[t] counts
  // abstentions so each row plus unassigned sums to the class support.
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::size_t> unassigned;
};

MetricsReport weighted_metrics(const std::vector<CoarseLabel>& pred,
                               const std::vector<CoarseLabel>& truth);
// Missing predictions count as misses of the true class and as nobody's false positive.
MetricsReport weighted_metrics(const std::vector<std::optional<CoarseLabel>>& pred,
                               const std::vector<CoarseLabel>& truth);

nlohmann::json metrics_to_json(const MetricsReport& r);

}  // namespace mgm
