#include "mgm/synth.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

#include "mgm/error.hpp"
#include "mgm/graph_io.hpp"
#include "mgm/seed.hpp"

namespace mgm {

using nlohmann::json;

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Segment {
  ArteryLabel label;
  int parent = -1;
  Point2 start;
  Point2 end;
  double angle = 0.0;
  double diameter = 0.0;
};

Point2 advance(Point2 p, double angle, double length) {
  return {p.x + length * std::cos(angle), p.y + length * std::sin(angle)};
}

json view_to_json(const ViewAngle& v) {
  return {{"first", std::string(to_string(v.first))}, {"second", std::string(to_string(v.second))}};
}

ViewAngle view_from_json(const json& j) {
  return {parse_first_axis(j.at("first").get<std::string>()),
          parse_second_axis(j.at("second").get<std::string>())};
}

template <typename F>
auto parse_field(const char* what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw ParseError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

std::size_t TreeSpec::node_count() const {
  return static_cast<std::size_t>(1 + lad_segments + lcx_segments + d_branches + om_branches);
}

void TreeSpec::validate() const {
  if (lad_segments < 1 || lcx_segments < 1) {
    throw ValidationError("tree spec: lad_segments and lcx_segments must be >= 1");
  }
  if (d_branches < 0 || om_branches < 0) {
    throw ValidationError("tree spec: branch counts must be >= 0");
  }
  if (d_branches > lad_segments) {
    throw ValidationError("tree spec: more D branches than LAD segments to host them");
  }
  if (om_branches > lcx_segments) {
    throw ValidationError("tree spec: more OM branches than LCX segments to host them");
  }
  if (!(feature_noise >= 0.0) || !std::isfinite(feature_noise)) {
    throw ValidationError("tree spec: feature_noise must be a finite value >= 0");
  }
  if (d_in < feature::kCount) {
    throw ValidationError("tree spec: d_in must be at least " + std::to_string(feature::kCount));
  }
  if (profile_samples < 8) throw ValidationError("tree spec: profile_samples must be >= 8");
  const auto exists = [&](const ArteryLabel& l) {
    const auto within = [&](int count) { return l.sub_index && *l.sub_index <= count; };
    switch (l.coarse) {
      case CoarseLabel::LMA: return true;
      case CoarseLabel::LAD: return within(lad_segments);
      case CoarseLabel::LCX: return within(lcx_segments);
      case CoarseLabel::D: return within(d_branches);
      case CoarseLabel::OM: return within(om_branches);
    }
    return false;
  };
  for (const auto& lesion : stenosis_plan) {
    if (!exists(lesion.segment)) {
      throw ValidationError("tree spec: stenosis planned on missing segment " +
                            to_string(lesion.segment));
    }
    if (!(lesion.percent > 0.0 && lesion.percent < 100.0)) {
      throw ValidationError("tree spec: planted percent must lie in (0, 100)");
    }
  }
}

json tree_spec_to_json(const TreeSpec& s) {
  json plan = json::array();
  for (const auto& l : s.stenosis_plan) {
    plan.push_back({{"segment", to_string(l.segment)}, {"percent", l.percent}});
  }
  return {{"lad_segments", s.lad_segments},
          {"lcx_segments", s.lcx_segments},
          {"d_branches", s.d_branches},
          {"om_branches", s.om_branches},
          {"view", view_to_json(s.view)},
          {"feature_noise", s.feature_noise},
          {"geometry_seed", s.geometry_seed},
          {"stenosis_plan", std::move(plan)},
          {"d_in", s.d_in},
          {"profile_samples", s.profile_samples}};
}

TreeSpec tree_spec_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("tree spec: expected a JSON object");
  TreeSpec s;
  return parse_field("tree spec", [&] {
    for (const auto& [key, value] : j.items()) {
      if (key == "lad_segments") {
        s.lad_segments = value.get<int>();
      } else if (key == "lcx_segments") {
        s.lcx_segments = value.get<int>();
      } else if (key == "d_branches") {
        s.d_branches = value.get<int>();
      } else if (key == "om_branches") {
        s.om_branches = value.get<int>();
      } else if (key == "view") {
        s.view = view_from_json(value);
      } else if (key == "feature_noise") {
        s.feature_noise = value.get<double>();
      } else if (key == "geometry_seed") {
        s.geometry_seed = value.get<std::uint64_t>();
      } else if (key == "d_in") {
        s.d_in = value.get<std::size_t>();
      } else if (key == "profile_samples") {
        s.profile_samples = value.get<std::size_t>();
      } else if (key == "stenosis_plan") {
        for (const auto& l : value) {
          s.stenosis_plan.push_back(
              {parse_artery_label(l.at("segment").get<std::string>()), l.at("percent").get<double>()});
        }
      } else {
        throw ValidationError("tree spec: unknown key '" + key + "'");
      }
    }
    s.validate();
    return s;
  });
}

std::vector<double> planted_profile(std::size_t samples, double peak, double percent) {
  if (samples < 3) throw ValidationError("planted_profile: need at least 3 samples");
  if (!(peak > 0.0)) throw ValidationError("planted_profile: peak must be positive");
  if (!(percent >= 0.0 && percent < 100.0)) {
    throw ValidationError("planted_profile: percent must lie in [0, 100)");
  }
  constexpr double kCurvature = 0.02;
  constexpr double kPeakAt = 0.25;
  constexpr double kNotchAt = 0.65;
  constexpr double kNotchWidth = 0.06;
  const double last = static_cast<double>(samples - 1);
  const auto baseline = [&](double t) {
    return peak * (1.0 - kCurvature * (t - kPeakAt) * (t - kPeakAt));
  };
  const auto center = static_cast<std::size_t>(std::lround(kNotchAt * last));
  const double tc = static_cast<double>(center) / last;
  const double depth = percent > 0.0 ? 1.0 - (1.0 - percent / 100.0) * peak / baseline(tc) : 0.0;

  std::vector<double> out(samples);
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / last;
    double v = baseline(t);
    if (depth > 0.0) {
      const double z = (t - tc) / kNotchWidth;
      v *= 1.0 - depth * std::exp(-0.5 * z * z);
    }
    out[i] = v;
  }
  if (depth > 0.0) out[center] = (1.0 - percent / 100.0) * peak;
  return out;
}

VascularGraph generate_tree(const TreeSpec& spec, std::string id) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.geometry_seed, {0x7ee}));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const auto jitter = [&](double base, double spread) { return base + spread * u(rng); };

  std::vector<Segment> segs;
  Segment lma{ArteryLabel(CoarseLabel::LMA), -1, {256.0, 64.0}, {}, jitter(kPi / 2, 0.2),
              jitter(9.0, 0.6)};
  lma.end = advance(lma.start, lma.angle, jitter(50.0, 10.0));
  segs.push_back(lma);

  const auto chain = [&](CoarseLabel c, int count, double turn, double length, double diameter) {
    std::vector<int> ids;
    int parent = 0;
    double angle = segs[0].angle + turn;
    for (int k = 1; k <= count; ++k) {
      if (k > 1) angle += jitter(0.0, 0.25);
      Segment s{ArteryLabel(c, k), parent, segs[parent].end, {}, angle,
                std::max(2.0, jitter(diameter - 0.8 * (k - 1), 0.5))};
      s.end = advance(s.start, angle, jitter(length, 15.0));
      parent = static_cast<int>(segs.size());
      ids.push_back(parent);
      segs.push_back(s);
    }
    return ids;
  };
  const auto lad = chain(CoarseLabel::LAD, spec.lad_segments, jitter(-0.5, 0.15), 65.0, 7.0);
  const auto lcx = chain(CoarseLabel::LCX, spec.lcx_segments, jitter(0.7, 0.15), 58.0, 6.5);

  const auto side = [&](CoarseLabel c, int count, const std::vector<int>& hosts, double turn) {
    for (int k = 1; k <= count; ++k) {
      const Segment& host = segs[hosts[k - 1]];
      Segment s{ArteryLabel(c, k), hosts[k - 1], host.end, {}, host.angle + jitter(turn, 0.2),
                std::max(2.0, jitter(4.0, 0.4))};
      s.end = advance(s.start, s.angle, jitter(45.0, 10.0));
      segs.push_back(s);
    }
  };
  side(CoarseLabel::D, spec.d_branches, lad, -0.75);
  side(CoarseLabel::OM, spec.om_branches, lcx, 0.75);

  const std::size_t n = segs.size();
  std::vector<int> degree(n, 0), depth(n, 0), subtree(n, 1);
  std::vector<Edge> edges;
  for (std::size_t i = 1; i < n; ++i) {
    const int p = segs[i].parent;
    edges.emplace_back(p, static_cast<int>(i));
    ++degree[i];
    ++degree[p];
    depth[i] = depth[p] + 1;
  }
  // Parents always precede children, so a reverse sweep accumulates subtrees.
  for (std::size_t i = n; i-- > 1;) subtree[segs[i].parent] += subtree[i];

  std::vector<double> percent_of(n, 0.0);
  for (const auto& lesion : spec.stenosis_plan) {
    for (std::size_t i = 0; i < n; ++i)
      if (segs[i].label == lesion.segment) percent_of[i] = lesion.percent;
  }

  std::vector<ArteryNode> nodes;
  const double S = feature::kImageSize;
  for (std::size_t i = 0; i < n; ++i) {
    const Segment& s = segs[i];
    ArteryNode node;
    node.id = static_cast<int>(i);
    node.label = s.label;
    std::vector<Point2> line(spec.profile_samples);
    for (std::size_t k = 0; k < line.size(); ++k) {
      const double t = static_cast<double>(k) / static_cast<double>(line.size() - 1);
      line[k] = {s.start.x + t * (s.end.x - s.start.x), s.start.y + t * (s.end.y - s.start.y)};
    }
    auto diam = planted_profile(spec.profile_samples, s.diameter, percent_of[i]);
    const double mean_diam = std::accumulate(diam.begin(), diam.end(), 0.0) / static_cast<double>(diam.size());
    const double length = std::hypot(s.end.x - s.start.x, s.end.y - s.start.y);

    std::vector<double> f(spec.d_in, 0.0);
    f[feature::kDegree] = degree[i] / 4.0;
    f[feature::kCenterX] = 0.5 * (s.start.x + s.end.x) / S;
    f[feature::kCenterY] = 0.5 * (s.start.y + s.end.y) / S;
    f[feature::kStartX] = s.start.x / S;
    f[feature::kStartY] = s.start.y / S;
    f[feature::kEndX] = s.end.x / S;
    f[feature::kEndY] = s.end.y / S;
    f[feature::kLength] = length / S;
    f[feature::kMeanDiameter] = mean_diam / 10.0;
    f[feature::kDepth] = depth[i] / 10.0;
    f[feature::kDirCos] = std::cos(s.angle);
    f[feature::kDirSin] = std::sin(s.angle);
    f[feature::kSubtree] = static_cast<double>(subtree[i]) / static_cast<double>(n);
    node.features = std::move(f);
    node.centerline = std::move(line);
    node.diameters = std::move(diam);
    nodes.push_back(std::move(node));
  }
  return VascularGraph(std::move(id), spec.view, std::move(nodes), std::move(edges));
}

std::pair<VascularGraph, Permutation> perturb(const VascularGraph& g, double sigma,
                                              std::uint64_t seed, std::string new_id) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ValidationError("perturb: sigma must be a finite value >= 0");
  }
  std::vector<int> order(g.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 shuffle_rng(derive_seed(seed, {1}));
  std::shuffle(order.begin(), order.end(), shuffle_rng);
  const Permutation perm(order);

  std::vector<ArteryNode> nodes = g.nodes();
  if (sigma > 0.0) {
    std::mt19937_64 rng(derive_seed(seed, {2}));
    std::normal_distribution<double> noise(0.0, sigma);
    const double theta = noise(rng);
    const double scale = 1.0 + noise(rng);
    const double tx = noise(rng), ty = noise(rng);
    const double c = std::cos(theta), s = std::sin(theta);
    // Rotation and scaling about the image center, in normalized units.
    const auto warp = [&](double x, double y) {
      const double dx = x - 0.5, dy = y - 0.5;
      return Point2{0.5 + scale * (c * dx - s * dy) + tx, 0.5 + scale * (s * dx + c * dy) + ty};
    };
    const std::size_t meaningful = std::min(feature::kCount, g.feature_dim());
    for (auto& node : nodes) {
      auto& f = node.features;
      if (f.size() >= feature::kCount) {
        for (std::size_t k : {feature::kCenterX, feature::kStartX, feature::kEndX}) {
          const Point2 p = warp(f[k], f[k + 1]);
          f[k] = p.x;
          f[k + 1] = p.y;
        }
        f[feature::kLength] *= scale;
        const double dc = f[feature::kDirCos], ds = f[feature::kDirSin];
        f[feature::kDirCos] = c * dc - s * ds;
        f[feature::kDirSin] = s * dc + c * ds;
        if (node.centerline) {
          const double S = feature::kImageSize;
          for (auto& p : *node.centerline) {
            const Point2 q = warp(p.x / S, p.y / S);
            p = {q.x * S, q.y * S};
          }
        }
      }
      for (std::size_t k = 0; k < meaningful; ++k) f[k] += noise(rng);
    }
  }
  const VascularGraph jittered(g.id(), g.view(), std::move(nodes), g.edges());
  return {relabel_nodes(jittered, perm, std::move(new_id)), perm};
}

DatasetSplits parse_splits(const std::string& text) {
  DatasetSplits s;
  std::size_t* fields[3] = {&s.train, &s.test, &s.templates};
  const char* p = text.data();
  const char* end = p + text.size();
  for (int k = 0; k < 3; ++k) {
    auto [next, ec] = std::from_chars(p, end, *fields[k]);
    if (ec != std::errc() || next == p) throw ValidationError("splits: expected tr/te/tp, got '" + text + "'");
    p = next;
    if (k < 2) {
      if (p == end || *p != '/') throw ValidationError("splits: expected tr/te/tp, got '" + text + "'");
      ++p;
    }
  }
  if (p != end) throw ValidationError("splits: expected tr/te/tp, got '" + text + "'");
  return s;
}

json manifest_to_json(const DatasetManifest& m) {
  json lesions = json::array();
  for (const auto& l : m.lesions) {
    lesions.push_back({{"graph_id", l.graph_id},
                       {"node_id", l.node_id},
                       {"label", to_string(l.label)},
                       {"percent", l.percent}});
  }
  return {{"version", 1},
          {"spec", tree_spec_to_json(m.spec)},
          {"seed", m.seed},
          {"counts", {{"train", m.train.size()}, {"test", m.test.size()}, {"templates", m.templates.size()}}},
          {"train", m.train},
          {"test", m.test},
          {"templates", m.templates},
          {"lesions", std::move(lesions)}};
}

DatasetManifest manifest_from_json(const json& j) {
  return parse_field("manifest", [&] {
    DatasetManifest m;
    if (j.at("version").get<int>() != 1) throw ParseError("manifest: unsupported version");
    m.spec = tree_spec_from_json(j.at("spec"));
    m.seed = j.at("seed").get<std::uint64_t>();
    m.train = j.at("train").get<std::vector<std::string>>();
    m.test = j.at("test").get<std::vector<std::string>>();
    m.templates = j.at("templates").get<std::vector<std::string>>();
    for (const auto& l : j.at("lesions")) {
      m.lesions.push_back({l.at("graph_id").get<std::string>(), l.at("node_id").get<int>(),
                           parse_artery_label(l.at("label").get<std::string>()),
                           l.at("percent").get<double>()});
    }
    return m;
  });
}

Dataset build_dataset(const TreeSpec& spec, std::size_t count, const DatasetSplits& splits,
                      std::uint64_t seed) {
  spec.validate();
  if (count == 0) throw ValidationError("dataset: count must be positive");
  if (splits.total() != count) {
    throw ValidationError("dataset: splits sum to " + std::to_string(splits.total()) +
                          ", expected " + std::to_string(count));
  }
  const VascularGraph base = generate_tree(spec, "base");
  Dataset d;
  d.manifest.spec = spec;
  d.manifest.seed = seed;
  const int width = count >= 1000 ? 4 : 3;
  for (std::size_t i = 0; i < count; ++i) {
    std::string id = std::to_string(i);
    id = "g" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0') + id;
    auto [g, perm] = perturb(base, spec.feature_noise, derive_seed(seed, {i}), id);
    for (const auto& lesion : spec.stenosis_plan) {
      for (std::size_t k = 0; k < base.size(); ++k) {
        if (base.node(k).label == lesion.segment) {
          d.manifest.lesions.push_back({id, perm[k], lesion.segment, lesion.percent});
        }
      }
    }
    if (i < splits.train) {
      d.manifest.train.push_back(id);
      d.train.push_back(std::move(g));
    } else if (i < splits.train + splits.test) {
      d.manifest.test.push_back(id);
      d.test.push_back(std::move(g));
    } else {
      d.manifest.templates.push_back(id);
      d.templates.push_back(std::move(g));
    }
  }
  return d;
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir) {
  for (const auto* split : {&d.train, &d.test, &d.templates})
    for (const auto& g : *split) save_graph(g, dir / "graphs" / (g.id() + ".json"));
  write_json_file(manifest_to_json(d.manifest), dir / "manifest.json");
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!std::filesystem::exists(manifest_path)) {
    throw ValidationError("dataset: missing manifest " + manifest_path.string());
  }
  Dataset d;
  d.manifest = manifest_from_json(read_json_file(manifest_path));
  const auto load = [&](const std::vector<std::string>& ids, LabelPolicy policy) {
    std::vector<VascularGraph> out;
    for (const auto& id : ids) out.push_back(load_graph(dir / "graphs" / (id + ".json"), policy));
    return out;
  };
  d.train = load(d.manifest.train, LabelPolicy::RequireUnique);
  d.test = load(d.manifest.test, LabelPolicy::Any);
  d.templates = load(d.manifest.templates, LabelPolicy::RequireUnique);
  return d;
}

}  // namespace mgm
