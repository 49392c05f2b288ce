#include "cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "mgm/embedding.hpp"
#include "mgm/error.hpp"
#include "mgm/graph_io.hpp"
#include "mgm/labeling.hpp"
#include "mgm/nn.hpp"
#include "mgm/solver.hpp"
#include "mgm/stenosis.hpp"
#include "mgm/synth.hpp"
#include "mgm/training.hpp"

namespace mgm::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Shared {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
  std::size_t threads = 0;

  std::uint64_t resolved_seed(std::optional<std::uint64_t> from_config = std::nullopt) const {
    if (seed) return *seed;
    if (from_config) return *from_config;
    if (const char* env = std::getenv("MGM_SEED")) {
      try {
        std::size_t used = 0;
        const auto v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
        return v;
      } catch (const std::exception&) {
        throw ValidationError("MGM_SEED must be a non-negative integer");
      }
    }
    return 0;
  }
  std::size_t resolved_threads() const {
    if (threads > 0) return threads;
    return std::max(1u, std::thread::hardware_concurrency());
  }
};

void add_shared(CLI::App* sub, Shared& s, bool with_config) {
  sub->add_option("--seed", s.seed, "Random seed (falls back to MGM_SEED, then 0)");
  sub->add_option("--out", s.out, "Output path");
  sub->add_option("--threads", s.threads, "Worker threads (default: all cores)");
  if (with_config) sub->add_option("--config", s.config, "JSON config file");
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("failed writing " + path.string());
}

void emit(const json& j, const std::string& out_path, std::ostream& out) {
  if (out_path.empty()) {
    out << dump_json(j) << '\n';
  } else {
    write_json_file(j, out_path);
  }
}

// ---- generate

struct GenerateArgs {
  Shared shared;
  std::string spec;
  std::size_t count = 60;
  std::string splits = "40/14/6";
};

int cmd_generate(const GenerateArgs& a, std::ostream& out) {
  if (a.shared.out.empty()) throw ValidationError("generate: --out is required");
  TreeSpec spec;
  if (!a.spec.empty()) spec = tree_spec_from_json(read_json_file(a.spec));
  const DatasetSplits splits = parse_splits(a.splits);
  const Dataset d = build_dataset(spec, a.count, splits, a.shared.resolved_seed());
  write_dataset(d, a.shared.out);
  out << dump_json({{"graphs", a.count},
                    {"train", d.train.size()},
                    {"test", d.test.size()},
                    {"templates", d.templates.size()}})
      << '\n';
  return 0;
}

// ---- train

struct TrainArgs {
  Shared shared;
  std::string data;
  std::optional<std::size_t> m, epochs, L, C, d_intra, d_cross, max_tuples;
  std::optional<double> lr;
  std::string resume;
  std::string log;
};

TrainConfig resolve_train_config(const TrainArgs& a, const Dataset& d) {
  TrainConfig cfg;
  std::optional<std::uint64_t> config_seed;
  if (!a.shared.config.empty()) {
    const json j = read_json_file(a.shared.config);
    cfg = config_from_json(j, cfg);
    if (j.contains("seed")) config_seed = cfg.seed;
  }
  if (a.m) cfg.m = *a.m;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (a.lr) cfg.lr = *a.lr;
  if (a.L) cfg.dims.intra_layers = *a.L;
  if (a.C) cfg.dims.cross_layers = *a.C;
  if (a.d_intra) cfg.dims.d_intra = *a.d_intra;
  if (a.d_cross) cfg.dims.d_cross = *a.d_cross;
  if (a.max_tuples) cfg.max_tuples_per_graph = *a.max_tuples;
  cfg.seed = a.shared.resolved_seed(config_seed);
  if (!d.train.empty()) cfg.dims.d_in = d.train.front().feature_dim();
  cfg.validate();
  if (cfg.m - 1 > d.templates.size()) {
    throw ValidationError("train: m = " + std::to_string(cfg.m) + " needs at least " +
                          std::to_string(cfg.m - 1) + " templates, dataset has " +
                          std::to_string(d.templates.size()));
  }
  return cfg;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
  if (a.shared.out.empty()) throw ValidationError("train: --out is required");
  const Dataset d = load_dataset(a.data);
  const TrainConfig cfg = resolve_train_config(a, d);

  Checkpoint ckpt;
  if (!a.resume.empty()) {
    ckpt = load_checkpoint(a.resume);
    if (!(ckpt.params.dims == cfg.dims)) {
      throw ValidationError("train: checkpoint dimensions differ from the configuration");
    }
  } else {
    ckpt.params = ModelParams::initialize(cfg.dims, cfg.seed);
  }
  AdamState adam = ckpt.adam.value_or(AdamState{});
  adam.lr = cfg.lr;

  const fs::path log_path = a.log.empty() ? fs::path(a.shared.out + ".metrics.jsonl") : fs::path(a.log);
  std::string log_text;
  if (!a.resume.empty() && fs::exists(log_path)) {
    std::ifstream f(log_path, std::ios::binary);
    log_text.assign(std::istreambuf_iterator<char>(f), {});
  }
  for (auto epoch = static_cast<std::size_t>(ckpt.epochs_completed) + 1; epoch <= cfg.epochs; ++epoch) {
    const EpochReport r = train_epoch(d.train, d.templates, ckpt.params, cfg, adam, epoch);
    const std::string line = dump_json(epoch_report_to_json(r));
    out << line << std::endl;
    log_text += line + '\n';
    ckpt.epochs_completed = static_cast<std::int64_t>(epoch);
  }
  ckpt.adam = adam;
  save_checkpoint(ckpt, a.shared.out);
  write_text(log_path, log_text);
  return 0;
}

// ---- label

struct LabelArgs {
  Shared shared;
  std::string data;
  std::string checkpoint;
  std::size_t m = 3;
  std::size_t cap = 0;
  std::string mode = "strict";
  std::string pivot = "test";
  std::string debug_csv;
};

int cmd_label(const LabelArgs& a, std::ostream& out) {
  const Dataset d = load_dataset(a.data);
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  if (!d.test.empty() && d.test.front().feature_dim() != ckpt.params.dims.d_in) {
    throw ValidationError("label: checkpoint expects " + std::to_string(ckpt.params.dims.d_in) +
                          " features, dataset has " + std::to_string(d.test.front().feature_dim()));
  }
  LabelOptions opt;
  opt.m = a.m;
  opt.cap = a.cap;
  opt.mode = a.mode == "soft" ? VoteMode::Soft : VoteMode::Strict;
  opt.pivot = a.pivot == "random" ? PivotMode::Random : PivotMode::Test;
  opt.seed = a.shared.resolved_seed();
  opt.threads = a.shared.resolved_threads();
  if (opt.m < 2) throw ValidationError("label: --m must be >= 2");

  json reports = json::array();
  std::string csv;
  for (const auto& g : d.test) {
    const LabelReport r = label_graph(g, d.templates, ckpt.params, opt);
    reports.push_back(label_report_to_json(r));
    std::string rows = candidates_csv(r);
    if (!csv.empty()) rows.erase(0, rows.find('\n') + 1);
    csv += rows;
  }
  json result = {{"version", 1},
                 {"m", opt.m},
                 {"mode", a.mode},
                 {"pivot", a.pivot},
                 {"reports", std::move(reports)}};
  emit(result, a.shared.out, out);
  if (!a.debug_csv.empty()) write_text(a.debug_csv, csv);
  return 0;
}

// ---- eval

struct EvalArgs {
  Shared shared;
  std::string pred;
  std::string truth;
};

std::map<std::string, std::vector<std::optional<CoarseLabel>>> read_predictions(const fs::path& path) {
  const json j = read_json_file(path);
  std::map<std::string, std::vector<std::optional<CoarseLabel>>> out;
  try {
    for (const auto& r : j.at("reports")) {
      std::vector<std::optional<CoarseLabel>> labels;
      for (const auto& l : r.at("labels")) {
        labels.push_back(l.is_null() ? std::nullopt
                                     : std::optional(parse_coarse_label(l.get<std::string>())));
      }
      out[r.at("graph_id").get<std::string>()] = std::move(labels);
    }
  } catch (const json::exception& e) {
    throw ParseError("predictions: " + std::string(e.what()));
  }
  return out;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto pred = read_predictions(a.pred);
  const Dataset d = load_dataset(a.truth);
  std::vector<std::optional<CoarseLabel>> p;
  std::vector<CoarseLabel> t;
  for (const auto& g : d.test) {
    auto it = pred.find(g.id());
    if (it == pred.end()) throw ValidationError("eval: no prediction for graph '" + g.id() + "'");
    if (it->second.size() != g.size()) {
      throw ValidationError("eval: prediction for '" + g.id() + "' has wrong node count");
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!g.node(i).label) throw ValidationError("eval: truth graph '" + g.id() + "' is unlabeled");
      t.push_back(regroup(*g.node(i).label));
      p.push_back(it->second[i]);
    }
  }
  emit(metrics_to_json(weighted_metrics(p, t)), a.shared.out, out);
  return 0;
}

// ---- stenosis

struct StenosisArgs {
  Shared shared;
  std::string data;
  std::string pred;
  std::string mask;
  std::string centerline;
};

int cmd_stenosis(const StenosisArgs& a, std::ostream& out) {
  if (!a.mask.empty() || !a.centerline.empty()) {
    if (a.mask.empty() || a.centerline.empty() || !a.data.empty()) {
      throw ValidationError("stenosis: use either --data or both --mask and --centerline");
    }
    const BinaryMask mask = read_pgm_mask(a.mask);
    std::vector<Point2> line;
    try {
      for (const auto& p : read_json_file(a.centerline)) line.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    } catch (const json::exception& e) {
      throw ParseError("centerline: " + std::string(e.what()));
    }
    const DiameterProfile profile = diameters_from_mask(mask, line);
    json j = {{"diameters", profile.samples}};
    if (profile.size() >= 3) j["finding"] = finding_to_json(stenosis_percent(profile));
    emit(j, a.shared.out, out);
    return 0;
  }
  if (a.data.empty()) throw ValidationError("stenosis: --data or --mask/--centerline required");

  const Dataset d = load_dataset(a.data);
  std::optional<std::map<std::string, std::vector<std::optional<CoarseLabel>>>> pred;
  if (!a.pred.empty()) pred = read_predictions(a.pred);
  std::map<std::pair<std::string, int>, double> planted;
  for (const auto& l : d.manifest.lesions) planted[{l.graph_id, l.node_id}] = l.percent;

  json segments = json::array();
  std::vector<StenosisFinding> findings;
  std::vector<SegmentTruth> truth;
  std::map<std::string, std::size_t> grade_counts;
  std::size_t planted_grade_hits = 0, planted_total = 0;
  for (const auto& g : d.test) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      const ArteryNode& node = g.node(i);
      if (!node.diameters || node.diameters->empty()) continue;
      const StenosisFinding f = stenosis_percent(DiameterProfile(*node.diameters));
      SegmentTruth st;
      if (node.label) st.label = regroup(*node.label);
      const auto it = planted.find({g.id(), node.id});
      st.stenotic = it != planted.end();
      if (pred) {
        const auto p = pred->find(g.id());
        st.label_correct = p != pred->end() && i < p->second.size() && p->second[i] &&
                           node.label && *p->second[i] == regroup(*node.label);
      } else {
        st.label_correct = node.label.has_value();
      }
      json seg = {{"graph_id", g.id()}, {"node_id", node.id}, {"finding", finding_to_json(f)}};
      if (node.label) seg["label"] = to_string(*node.label);
      if (st.stenotic) {
        seg["planted_percent"] = it->second;
        ++planted_total;
        if (grade(it->second) == f.grade) ++planted_grade_hits;
      }
      ++grade_counts[std::string(to_string(f.grade))];
      segments.push_back(std::move(seg));
      findings.push_back(f);
      truth.push_back(st);
    }
  }
  json summary = {{"segments", findings.size()},
                  {"grades", grade_counts},
                  {"planted", planted_total},
                  {"planted_grade_recovered", planted_grade_hits}};
  emit({{"summary", std::move(summary)},
        {"accuracy", stenosis_accuracy_to_json(stenosis_accuracy(findings, truth))},
        {"segments", std::move(segments)}},
       a.shared.out, out);
  return 0;
}

// ---- match

struct MatchArgs {
  Shared shared;
  std::vector<std::string> graphs;
  std::string checkpoint;
  std::size_t pivot = 0;
  std::string dump_debug;
};

int cmd_match(const MatchArgs& a, std::ostream& out) {
  if (a.graphs.size() < 2) throw ValidationError("match: need at least two --graphs");
  std::vector<VascularGraph> owned;
  for (const auto& p : a.graphs) owned.push_back(load_graph(p));
  std::vector<const VascularGraph*> ptrs;
  for (const auto& g : owned) ptrs.push_back(&g);
  const GraphSet set(ptrs);
  if (a.pivot >= set.m()) throw ValidationError("match: --pivot out of range");

  ModelParams params;
  if (!a.checkpoint.empty()) {
    params = load_checkpoint(a.checkpoint).params;
  } else {
    ModelDims dims;
    dims.d_in = set.n() > 0 ? owned.front().feature_dim() : dims.d_in;
    params = ModelParams::initialize(dims, a.shared.resolved_seed());
  }
  if (owned.front().feature_dim() != params.dims.d_in) {
    throw ValidationError("match: checkpoint expects " + std::to_string(params.dims.d_in) + " features");
  }
  const BoundParams bound = BoundParams::bind(params, false);
  const auto affinities = net::pairwise_affinities(ptrs, bound, SinkhornOptions{});
  std::vector<DenseMatrix> values;
  for (const auto& s : affinities) values.push_back(s.value());
  const TupleMatch match = match_tuple(values, set.m(), a.pivot);

  json pairs = json::array();
  for (std::size_t i = 0; i < set.m(); ++i) {
    for (std::size_t j = i + 1; j < set.m(); ++j) {
      pairs.push_back({{"from", owned[i].id()},
                       {"to", owned[j].id()},
                       {"assignment", match.matches.at(i, j).assignment()}});
    }
  }
  emit({{"pivot", a.pivot}, {"cycle_defect", cycle_defect(PairwiseMatches::from(match.matches))}, {"pairs", pairs}},
       a.shared.out, out);

  if (!a.dump_debug.empty()) {
    const fs::path dir = a.dump_debug;
    json s_hat = json::array();
    std::size_t k = 0;
    for (std::size_t i = 0; i < set.m(); ++i)
      for (std::size_t j = i + 1; j < set.m(); ++j)
        s_hat.push_back({{"i", i}, {"j", j}, {"matrix", values[k++].to_nested()}});
    write_json_file(s_hat, dir / "s_hat.json");
    write_json_file({{"u_hat", match.factor.u_hat.to_nested()}, {"eigenvalues", match.factor.values}},
                    dir / "u_hat.json");
    write_json_file(pairs, dir / "m_hat.json");
  }
  return 0;
}

json error_json(std::string_view kind, std::string_view message) {
  return {{"error", {{"kind", kind}, {"message", message}}}};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-graph matching for coronary artery labeling", "mgm"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write a synthetic dataset");
  add_shared(g, gen.shared, false);
  g->add_option("--spec", gen.spec, "Tree spec JSON");
  g->add_option("--count", gen.count, "Number of graphs");
  g->add_option("--splits", gen.splits, "train/test/template counts, e.g. 40/14/6");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train the matching network");
  add_shared(t, tr.shared, true);
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--m", tr.m, "Graphs per tuple");
  t->add_option("--epochs", tr.epochs, "Total epochs");
  t->add_option("--lr", tr.lr, "Adam learning rate");
  t->add_option("--L", tr.L, "Intra-graph layers");
  t->add_option("--C", tr.C, "Cross-graph layers");
  t->add_option("--d-intra", tr.d_intra, "Intra embedding width");
  t->add_option("--d-cross", tr.d_cross, "Cross embedding width");
  t->add_option("--max-tuples", tr.max_tuples, "Tuples per training graph and epoch (0 = all)");
  t->add_option("--resume", tr.resume, "Continue from this checkpoint");
  t->add_option("--log", tr.log, "JSON-lines metrics log (default: <out>.metrics.jsonl)");

  LabelArgs lb;
  auto* l = app.add_subcommand("label", "Label the test split");
  add_shared(l, lb.shared, false);
  l->add_option("--data", lb.data, "Dataset directory")->required();
  l->add_option("--checkpoint", lb.checkpoint, "Trained checkpoint")->required();
  l->add_option("--m", lb.m, "Graphs per tuple");
  l->add_option("--cap", lb.cap, "Tuples per test graph (0 = all)");
  l->add_option("--mode", lb.mode, "Vote screening")->check(CLI::IsMember({"strict", "soft"}));
  l->add_option("--pivot", lb.pivot, "Pivot graph")->check(CLI::IsMember({"test", "random"}));
  l->add_option("--debug-csv", lb.debug_csv, "Per-matching screening log");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Score predictions against the dataset labels");
  add_shared(e, ev.shared, false);
  e->add_option("--pred", ev.pred, "Predictions from label")->required();
  e->add_option("--truth", ev.truth, "Dataset directory")->required();

  StenosisArgs st;
  auto* s = app.add_subcommand("stenosis", "Grade diameter profiles");
  add_shared(s, st.shared, false);
  s->add_option("--data", st.data, "Dataset directory");
  s->add_option("--pred", st.pred, "Predictions used to score label agreement");
  s->add_option("--mask", st.mask, "Binary PGM mask");
  s->add_option("--centerline", st.centerline, "JSON array of [x, y] points");

  MatchArgs mt;
  auto* mc = app.add_subcommand("match", "Match graphs and dump intermediate results");
  add_shared(mc, mt.shared, false);
  mc->add_option("--graphs", mt.graphs, "Graph JSON files")->required()->expected(2, 64);
  mc->add_option("--checkpoint", mt.checkpoint, "Trained checkpoint (default: fresh init)");
  mc->add_option("--pivot", mt.pivot, "Pivot graph index");
  mc->add_option("--dump-debug", mt.dump_debug, "Directory for S, U and M dumps");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& ex) {
    err << dump_json(error_json("usage", ex.what())) << '\n';
    return 2;
  }

  try {
    if (g->parsed()) return cmd_generate(gen, out);
    if (t->parsed()) return cmd_train(tr, out);
    if (l->parsed()) return cmd_label(lb, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (s->parsed()) return cmd_stenosis(st, out);
    if (mc->parsed()) return cmd_match(mt, out);
  } catch (const ParseError& ex) {
    err << dump_json(error_json("parse", ex.what())) << '\n';
    return 1;
  } catch (const ValidationError& ex) {
    err << dump_json(error_json("validation", ex.what())) << '\n';
    return 1;
  } catch (const ContractError& ex) {
    err << dump_json(error_json("contract", ex.what())) << '\n';
    return 1;
  } catch (const IoError& ex) {
    err << dump_json(error_json("io", ex.what())) << '\n';
    return 1;
  } catch (const std::exception& ex) {
    err << dump_json(error_json("internal", ex.what())) << '\n';
    return 1;
  }
  return 2;
}

}  // namespace mgm::cli
