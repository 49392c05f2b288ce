#include "mgm/labeling.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <sstream>
#include <thread>

#include "mgm/embedding.hpp"
#include "mgm/error.hpp"
#include "mgm/seed.hpp"
#include "mgm/solver.hpp"
#include "mgm/training.hpp"

namespace mgm {

using nlohmann::json;

AnatomyTable::AnatomyTable(std::set<std::pair<CoarseLabel, CoarseLabel>> allowed) {
  if (allowed.empty()) throw ValidationError("anatomy table: empty");
  for (auto [a, b] : allowed) allowed_.insert(std::minmax(a, b));
}

AnatomyTable AnatomyTable::standard() {
  using C = CoarseLabel;
  return AnatomyTable({{C::LMA, C::LAD},
                       {C::LMA, C::LCX},
                       {C::LAD, C::LAD},
                       {C::LAD, C::D},
                       {C::LCX, C::LCX},
                       {C::LCX, C::OM}});
}

bool AnatomyTable::allows(CoarseLabel a, CoarseLabel b) const {
  return allowed_.contains(std::minmax(a, b));
}

double structural_loss(const VascularGraph& g, const std::vector<CoarseLabel>& labels,
                       const AnatomyTable& table) {
  if (labels.size() != g.size()) {
    throw ValidationError("structural_loss: expected one label per node of '" + g.id() + "'");
  }
  if (g.edges().empty()) return 0.0;
  std::size_t bad = 0;
  for (auto [a, b] : g.edges())
    if (!table.allows(labels[a], labels[b])) ++bad;
  return static_cast<double>(bad) / static_cast<double>(g.edges().size());
}

LabelReport vote(const VascularGraph& test, std::vector<CandidateMatching> candidates,
                 const AnatomyTable& table, VoteMode mode) {
  const std::size_t n = test.size();
  LabelReport report;
  report.graph_id = test.id();
  report.labels.assign(n, std::nullopt);
  report.tallies.assign(n, {});

  for (auto& c : candidates) {
    if (c.labels.size() != n || c.affinity.size() != n) {
      throw ContractError("vote: candidate does not cover every test node");
    }
    c.structural_loss = structural_loss(test, c.labels, table);
    c.accepted = mode == VoteMode::Strict ? c.structural_loss == 0.0 : c.structural_loss < 1.0;
    if (c.accepted) {
      ++report.accepted;
    } else {
      ++report.rejected;
    }
  }

  if (report.accepted == 0) {
    report.abstained = true;
    if (!candidates.empty()) {
      const auto best = std::min_element(
          candidates.begin(), candidates.end(),
          [](const auto& a, const auto& b) { return a.structural_loss < b.structural_loss; });
      for (std::size_t i = 0; i < n; ++i) report.labels[i] = best->labels[i];
    }
    report.candidates = std::move(candidates);
    return report;
  }

  std::vector<std::map<CoarseLabel, double>> affinity_sums(n);
  for (const auto& c : candidates) {
    if (!c.accepted) continue;
    const double weight = mode == VoteMode::Strict ? 1.0 : 1.0 - c.structural_loss;
    for (std::size_t i = 0; i < n; ++i) {
      report.tallies[i][c.labels[i]] += weight;
      affinity_sums[i][c.labels[i]] += c.affinity[i];
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::optional<CoarseLabel> best;
    for (const auto& [label, count] : report.tallies[i]) {
      if (!best) {
        best = label;
        continue;
      }
      const double best_count = report.tallies[i][*best];
      if (count != best_count) {
        if (count > best_count) best = label;
        continue;
      }
      const double aff = affinity_sums[i][label];
      const double best_aff = affinity_sums[i][*best];
      if (aff != best_aff) {
        if (aff > best_aff) best = label;
        continue;
      }
      if (to_string(label) < to_string(*best)) best = label;
    }
    report.labels[i] = best;
  }
  report.candidates = std::move(candidates);
  return report;
}

LabelReport label_graph(const VascularGraph& test, const std::vector<VascularGraph>& templates,
                        const ModelParams& params, const LabelOptions& options,
                        const AnatomyTable& table) {
  for (const auto& t : templates) t.require_unique_labels();
  const auto tuples = enumerate_tuples(test, templates, options.m, options.cap, options.seed);
  const BoundParams bound = BoundParams::bind(params, false);

  std::vector<std::vector<CandidateMatching>> per_tuple(tuples.size());
  auto evaluate = [&](std::size_t t) {
    const auto& tuple = tuples[t];
    const auto affinities = net::pairwise_affinities(tuple.graphs, bound, options.sinkhorn);
    std::vector<DenseMatrix> values;
    values.reserve(affinities.size());
    for (const auto& a : affinities) values.push_back(a.value());

    std::size_t pivot = 0;
    if (options.pivot == PivotMode::Random) {
      std::mt19937_64 rng(derive_seed(options.seed, {t}));
      pivot = std::uniform_int_distribution<std::size_t>(0, options.m - 1)(rng);
    }
    const TupleMatch match = match_tuple(values, options.m, pivot);
    // Test graph is index 0, so its blocks (0, J) come first in pair order.
    for (std::size_t j = 1; j < options.m; ++j) {
      const Permutation& to_template = match.matches.at(0, j);
      const VascularGraph& tmpl = *tuple.graphs[j];
      const DenseMatrix& soft = values[j - 1];
      CandidateMatching c;
      c.tuple_index = t;
      c.template_id = tmpl.id();
      for (std::size_t i = 0; i < test.size(); ++i) {
        c.labels.push_back(regroup(*tmpl.node(to_template[i]).label));
        c.affinity.push_back(soft(i, to_template[i]));
      }
      per_tuple[t].push_back(std::move(c));
    }
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(options.threads, tuples.size()));
  if (workers <= 1) {
    for (std::size_t t = 0; t < tuples.size(); ++t) evaluate(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < tuples.size(); t = next++) evaluate(t);
      });
    }
    for (auto& th : pool) th.join();
  }

  std::vector<CandidateMatching> candidates;
  for (auto& group : per_tuple)
    for (auto& c : group) candidates.push_back(std::move(c));
  return vote(test, std::move(candidates), table, options.mode);
}

json label_report_to_json(const LabelReport& r) {
  json labels = json::array();
  json tallies = json::array();
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    labels.push_back(r.labels[i] ? json(std::string(to_string(*r.labels[i]))) : json(nullptr));
    json t = json::object();
    for (const auto& [label, count] : r.tallies[i]) t[std::string(to_string(label))] = count;
    tallies.push_back(std::move(t));
  }
  return {{"graph_id", r.graph_id},
          {"labels", std::move(labels)},
          {"tallies", std::move(tallies)},
          {"accepted", r.accepted},
          {"rejected", r.rejected},
          {"abstained", r.abstained}};
}

std::string candidates_csv(const LabelReport& r) {
  std::ostringstream out;
  out << "tuple_id,template_id,structural_loss,accepted\n";
  for (const auto& c : r.candidates) {
    out << c.tuple_index << ',' << c.template_id << ',' << c.structural_loss << ','
        << (c.accepted ? 1 : 0) << '\n';
  }
  return out.str();
}

}  // namespace mgm
