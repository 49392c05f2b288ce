#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "mgm/error.hpp"
#include "mgm/numerics.hpp"

namespace mgm {

namespace {

constexpr double kUnreached = std::numeric_limits<double>::infinity();

// Lower envelope of parabolas (q - p)^2 + f[p] over the finite entries of f.
void envelope_1d(const std::vector<double>& f, std::vector<double>& out) {
  const std::size_t n = f.size();
  std::vector<std::size_t> sites;
  std::vector<double> bounds;  // bounds[k] is where sites[k] starts to win
  sites.reserve(n);
  bounds.reserve(n + 1);
  auto intersect = [&](std::size_t p, std::size_t q) {
    const double dp = static_cast<double>(p);
    const double dq = static_cast<double>(q);
    return ((f[q] + dq * dq) - (f[p] + dp * dp)) / (2.0 * (dq - dp));
  };
  for (std::size_t q = 0; q < n; ++q) {
    if (!std::isfinite(f[q])) continue;
    while (!sites.empty()) {
      const double s = intersect(sites.back(), q);
      if (s <= bounds.back()) {
        sites.pop_back();
        bounds.pop_back();
      } else {
        sites.push_back(q);
        bounds.push_back(s);
        break;
      }
    }
    if (sites.empty()) {
      sites.push_back(q);
      bounds.push_back(-kUnreached);
    }
  }
  out.assign(n, kUnreached);
  if (sites.empty()) return;
  std::size_t k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double dq = static_cast<double>(q);
    while (k + 1 < sites.size() && bounds[k + 1] < dq) ++k;
    const double d = dq - static_cast<double>(sites[k]);
    out[q] = d * d + f[sites[k]];
  }
}

}  // namespace

BinaryMask::BinaryMask(std::size_t width, std::size_t height)
    : width_(width), height_(height), cells_(width * height, 0) {}

bool BinaryMask::has_background() const {
  for (auto c : cells_)
    if (c == 0) return true;
  return false;
}

DenseMatrix squared_distance_transform(const BinaryMask& mask) {
  const std::size_t w = mask.width();
  const std::size_t h = mask.height();
  if (w == 0 || h == 0) throw ContractError("distance transform: empty mask");
  if (!mask.has_background()) {
    throw ContractError("distance transform: mask has no background cell");
  }

  DenseMatrix rows_pass(h, w);
  std::vector<double> f(w), g;
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) f[x] = mask.at(x, y) ? kUnreached : 0.0;
    envelope_1d(f, g);
    for (std::size_t x = 0; x < w; ++x) rows_pass(y, x) = g[x];
  }

  DenseMatrix out(h, w);
  f.resize(h);
  for (std::size_t x = 0; x < w; ++x) {
    for (std::size_t y = 0; y < h; ++y) f[y] = rows_pass(y, x);
    envelope_1d(f, g);
    for (std::size_t y = 0; y < h; ++y) out(y, x) = g[y];
  }
  return out;
}

DenseMatrix euclidean_distance_transform(const BinaryMask& mask) {
  DenseMatrix d = squared_distance_transform(mask);
  for (double& v : d.data()) v = std::sqrt(v);
  return d;
}

BinaryMask read_pgm_mask(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");

  auto next_token = [&]() {
    std::string token;
    char ch;
    while (in.get(ch)) {
      if (ch == '#') {
        std::string skip;
        std::getline(in, skip);
        continue;
      }
      if (std::isspace(static_cast<unsigned char>(ch))) {
        if (!token.empty()) break;
        continue;
      }
      token.push_back(ch);
    }
    return token;
  };

  if (next_token() != "P5") throw ParseError("'" + path.string() + "': not a binary PGM (P5)");
  std::size_t width = 0, height = 0;
  int maxval = 0;
  try {
    width = std::stoul(next_token());
    height = std::stoul(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw ParseError("'" + path.string() + "': malformed PGM header");
  }
  if (width == 0 || height == 0 || maxval <= 0 || maxval > 65535) {
    throw ParseError("'" + path.string() + "': invalid PGM dimensions");
  }
  const std::size_t bytes_per_px = maxval > 255 ? 2 : 1;
  std::vector<char> raw(width * height * bytes_per_px);
  in.read(raw.data(), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw ParseError("'" + path.string() + "': truncated PGM pixel data");
  }
  BinaryMask mask(width, height);
  for (std::size_t y = 0; y < height; ++y) {
    for (std::size_t x = 0; x < width; ++x) {
      const std::size_t idx = (y * width + x) * bytes_per_px;
      bool fg = raw[idx] != 0;
      if (bytes_per_px == 2) fg = fg || raw[idx + 1] != 0;
      mask.set(x, y, fg);
    }
  }
  return mask;
}

void write_pgm_mask(const BinaryMask& mask, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path.string() + "'");
  out << "P5\n" << mask.width() << ' ' << mask.height() << "\n255\n";
  for (std::size_t y = 0; y < mask.height(); ++y)
    for (std::size_t x = 0; x < mask.width(); ++x) out.put(mask.at(x, y) ? char(255) : char(0));
}

}  // namespace mgm
