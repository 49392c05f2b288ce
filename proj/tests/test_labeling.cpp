#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "mgm/error.hpp"
#include "mgm/labeling.hpp"
#include "mgm/synth.hpp"
#include "oracles.hpp"

using namespace mgm;
using C = CoarseLabel;

namespace {

CandidateMatching candidate(std::vector<C> labels, std::vector<double> affinity, std::string id) {
  CandidateMatching c;
  c.template_id = std::move(id);
  c.labels = std::move(labels);
  c.affinity = std::move(affinity);
  return c;
}

}  // namespace

TEST_CASE("structural loss examples") {
  TreeSpec spec;
  const VascularGraph g = generate_tree(spec);
  std::vector<C> truth;
  for (const auto& n : g.nodes()) truth.push_back(regroup(*n.label));
  CHECK(structural_loss(g, truth, AnatomyTable::standard()) == 0.0);

  // LMA-LAD, LMA-OM, LCX-OM, LAD-D
  std::vector<ArteryNode> nodes;
  for (int i = 0; i < 5; ++i) nodes.push_back(fixture::node(i, std::nullopt, {0.0}));
  const VascularGraph four("four", {}, nodes, {{0, 1}, {0, 2}, {3, 2}, {1, 4}});
  const std::vector<C> labels = {C::LMA, C::LAD, C::OM, C::LCX, C::D};
  CHECK(structural_loss(four, labels, AnatomyTable::standard()) == 0.25);
  CHECK(structural_loss(four, {C::OM, C::D, C::D, C::LMA, C::OM}, AnatomyTable::standard()) == 1.0);
  CHECK_THROWS_AS(structural_loss(four, {C::LMA}, AnatomyTable::standard()), ValidationError);

  // Reordering nodes does not change the loss.
  std::mt19937_64 rng(1);
  const Permutation pi = oracle::random_permutation(5, rng);
  const VascularGraph moved = relabel_nodes(four, pi, "moved");
  std::vector<C> moved_labels(5);
  for (int i = 0; i < 5; ++i) moved_labels[pi[i]] = labels[i];
  CHECK(structural_loss(moved, moved_labels, AnatomyTable::standard()) == 0.25);
}

TEST_CASE("anatomy table is unordered and non-empty") {
  const AnatomyTable t = AnatomyTable::standard();
  CHECK(t.allows(C::LAD, C::LMA));
  CHECK(t.allows(C::LMA, C::LAD));
  CHECK(t.allows(C::OM, C::LCX));
  CHECK_FALSE(t.allows(C::LMA, C::OM));
  CHECK_FALSE(t.allows(C::D, C::D));
  CHECK(t.allowed().size() == 6);
  CHECK_THROWS_AS(AnatomyTable({}), ValidationError);
}

TEST_CASE("majority vote with screening") {
  const VascularGraph g = fixture::lca5();  // LMA-LAD1-LAD2, LMA-LCX1, LCX1-OM1
  const AnatomyTable table = AnatomyTable::standard();
  const std::vector<double> flat(5, 0.5);

  SUBCASE("2-1 majority wins") {
    const auto report = vote(g,
                             {candidate({C::LMA, C::LAD, C::LAD, C::LCX, C::OM}, flat, "a"),
                              candidate({C::LMA, C::LAD, C::LAD, C::LCX, C::OM}, flat, "b"),
                              candidate({C::LMA, C::LAD, C::D, C::LCX, C::OM}, flat, "c")},
                             table, VoteMode::Strict);
    CHECK(report.accepted == 3);
    CHECK(report.labels[2] == C::LAD);
    CHECK(report.tallies[2].at(C::LAD) == 2.0);
    CHECK(report.tallies[2].at(C::D) == 1.0);
    for (const auto& t : report.tallies) {
      double total = 0.0;
      for (const auto& [label, count] : t) total += count;
      CHECK(total == 3.0);
    }
  }

  SUBCASE("an LMA-OM matching is excluded from every vote") {
    const auto bad = candidate({C::LMA, C::LAD, C::D, C::OM, C::OM}, flat, "bad");
    std::vector<double> strong = flat;
    strong[2] = 0.9;
    const auto a = candidate({C::LMA, C::LAD, C::LAD, C::LCX, C::OM}, strong, "a");
    const auto b = candidate({C::LMA, C::LAD, C::D, C::LCX, C::OM}, flat, "b");
    const auto report = vote(g, {a, bad, b}, table, VoteMode::Strict);
    CHECK(report.accepted == 2);
    CHECK(report.rejected == 1);
    CHECK_FALSE(report.candidates[1].accepted);
    CHECK(report.candidates[1].structural_loss == 0.5);
    const auto two = vote(g, {a, b}, table, VoteMode::Strict);
    CHECK(report.labels == two.labels);
    // Tie on node 2 broken by affinity, not by the rejected matching's D vote.
    CHECK(report.labels[2] == C::LAD);
    CHECK_FALSE(report.tallies[3].contains(C::OM));
  }

  SUBCASE("lexicographic tie-break after equal affinity") {
    const auto report = vote(g,
                             {candidate({C::LMA, C::LAD, C::LAD, C::LCX, C::OM}, flat, "a"),
                              candidate({C::LMA, C::LAD, C::D, C::LCX, C::OM}, flat, "b")},
                             table, VoteMode::Strict);
    CHECK(report.labels[2] == C::D);  // "D" < "LAD"
  }

  SUBCASE("no survivors falls back to the least violating matching") {
    const auto worse = candidate({C::OM, C::OM, C::OM, C::OM, C::OM}, flat, "w");
    const auto bad = candidate({C::LMA, C::LAD, C::LAD, C::OM, C::OM}, flat, "b");
    const auto report = vote(g, {worse, bad}, table, VoteMode::Strict);
    CHECK(report.abstained);
    CHECK(report.accepted == 0);
    CHECK(report.labels[3] == C::OM);
    CHECK(report.labels[1] == C::LAD);
  }

  SUBCASE("soft mode weights votes by one minus the loss") {
    const auto bad = candidate({C::LMA, C::LAD, C::D, C::OM, C::OM}, flat, "bad");  // loss 0.5
    const auto good = candidate({C::LMA, C::LAD, C::LAD, C::LCX, C::OM}, flat, "good");
    const auto report = vote(g, {bad, good}, table, VoteMode::Soft);
    CHECK(report.accepted == 2);
    CHECK(report.tallies[2].at(C::D) == 0.5);
    CHECK(report.labels[2] == C::LAD);
  }

  SUBCASE("a single survivor is reproduced exactly") {
    const auto only = candidate({C::LMA, C::LAD, C::D, C::LCX, C::OM}, flat, "only");
    const auto report = vote(g, {only}, table, VoteMode::Strict);
    for (std::size_t i = 0; i < 5; ++i) CHECK(report.labels[i] == only.labels[i]);
  }

  SUBCASE("no candidates at all") {
    const auto report = vote(g, {}, table, VoteMode::Strict);
    CHECK(report.abstained);
    for (const auto& l : report.labels) CHECK_FALSE(l.has_value());
  }
}

TEST_CASE("label graph on exact template copies") {
  TreeSpec spec;
  spec.feature_noise = 0.0;
  spec.d_in = feature::kCount;
  const Dataset d = build_dataset(spec, 6, {0, 1, 5}, 3);
  ModelDims dims;
  dims.d_in = feature::kCount;
  dims.d_intra = dims.d_cross = 16;
  ModelParams p = ModelParams::initialize(dims, 1);
  // Identity affinity over separated embeddings makes exact copies match themselves.
  p.a_intra = DenseMatrix::identity(16);
  p.a_cross = DenseMatrix::identity(16);
  LabelOptions opt;
  opt.threads = 3;
  const LabelReport r = label_graph(d.test[0], d.templates, p, opt);
  CHECK(r.rejected == 0);
  CHECK(r.accepted == 2 * 10);
  for (std::size_t i = 0; i < r.labels.size(); ++i) CHECK(r.labels[i] == regroup(*d.test[0].node(i).label));

  opt.threads = 1;
  CHECK(label_report_to_json(label_graph(d.test[0], d.templates, p, opt)) == label_report_to_json(r));
  opt.pivot = PivotMode::Random;
  CHECK(label_graph(d.test[0], d.templates, p, opt).labels == r.labels);

  const std::string csv = candidates_csv(r);
  CHECK(csv.rfind("tuple_id,template_id,structural_loss,accepted\n", 0) == 0);

  // No compatible template: every node abstains.
  std::vector<VascularGraph> far;
  for (const auto& t : d.templates) far.emplace_back(t.id(), ViewAngle{FirstAxis::AP, SecondAxis::CAU}, t.nodes(), t.edges());
  const LabelReport none = label_graph(d.test[0], far, p, opt);
  CHECK(none.abstained);
}

TEST_CASE("weighted metrics worked example") {
  const auto r = weighted_metrics(std::vector<C>{C::LAD, C::LCX, C::LCX, C::OM},
                                  std::vector<C>{C::LAD, C::LAD, C::LCX, C::OM});
  CHECK(r.rec == 0.75);
  CHECK(r.plain_accuracy == 0.75);
  CHECK(r.classes[1].rec == 0.5);
  CHECK(r.classes[0].zero_denominator);
  CHECK(r.confusion[1][2] == 1);
}

TEST_CASE("perfect predictions score one everywhere") {
  const std::vector<C> t = {C::LMA, C::LAD, C::LAD, C::D, C::OM, C::LCX};
  const auto r = weighted_metrics(t, t);
  CHECK(std::abs(r.acc - 1.0) <= 1e-12);
  CHECK(std::abs(r.prec - 1.0) <= 1e-12);
  CHECK(std::abs(r.rec - 1.0) <= 1e-12);
  CHECK(std::abs(r.f1 - 1.0) <= 1e-12);
  auto p = t;
  p[0] = C::OM;
  const auto w = weighted_metrics(p, t);
  CHECK((w.acc < 1.0 && w.prec < 1.0 && w.rec < 1.0 && w.f1 < 1.0));
}

TEST_CASE("weighted metrics match direct counting") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 100; ++t) {
    std::vector<C> truth(200), pred(200);
    for (auto& c : truth) c = kCoarseLabels[rng() % 5];
    for (std::size_t i = 0; i < 200; ++i) pred[i] = rng() % 3 ? truth[i] : kCoarseLabels[rng() % 5];
    const auto r = weighted_metrics(pred, truth);
    const auto d = oracle::direct_weighted_metrics(pred, truth);
    CHECK(std::abs(r.acc - d.acc) <= 1e-12);
    CHECK(std::abs(r.prec - d.prec) <= 1e-12);
    CHECK(std::abs(r.rec - d.rec) <= 1e-12);
    CHECK(std::abs(r.f1 - d.f1) <= 1e-12);
    for (std::size_t c = 0; c < 5; ++c) {
      std::size_t row = r.unassigned[c];
      for (std::size_t q = 0; q < 5; ++q) row += r.confusion[c][q];
      CHECK(row == r.classes[c].support);
    }
  }
}

TEST_CASE("metrics input errors and abstentions") {
  CHECK_THROWS_AS(weighted_metrics(std::vector<C>{C::LAD}, std::vector<C>{}), ValidationError);
  CHECK_THROWS_AS(weighted_metrics(std::vector<C>{}, std::vector<C>{}), ValidationError);
  const std::vector<std::optional<C>> pred = {C::LAD, std::nullopt};
  const auto r = weighted_metrics(pred, std::vector<C>{C::LAD, C::LAD});
  CHECK(r.unassigned[1] == 1);
  CHECK(r.classes[1].rec == 0.5);
  CHECK(r.classes[1].prec == 1.0);
}
