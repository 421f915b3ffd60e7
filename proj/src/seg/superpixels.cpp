#include "mf/seg/superpixels.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mf/error.h"

namespace mf {

namespace {

Eigen::Vector3f rgb_to_lab(const Rgb8& c) {
  auto lin = [](double v) {
    v /= 255.0;
    return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
  };
  const double r = lin(c.r), g = lin(c.g), b = lin(c.b);
  // sRGB D65
  const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
  const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
  const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
  auto f = [](double t) {
    return t > 0.008856 ? std::cbrt(t) : (7.787 * t + 16.0 / 116.0);
  };
  const double fx = f(X / 0.95047), fy = f(Y), fz = f(Z / 1.08883);
  return Eigen::Vector3f(static_cast<float>(116.0 * fy - 16.0),
                         static_cast<float>(500.0 * (fx - fy)),
                         static_cast<float>(200.0 * (fy - fz)));
}

struct Center {
  float l = 0, a = 0, b = 0;
  float x = 0, y = 0;
};

}  // namespace

SuperpixelGraph slic(const RgbdFrame& frame, const SegConfig& cfg) {
  const int w = frame.width(), h = frame.height();
  if (w < 32 || h < 32) throw Error("slic: image must be at least 32x32");

  std::vector<Eigen::Vector3f> lab(static_cast<size_t>(w) * h);
  for (size_t i = 0; i < lab.size(); ++i) lab[i] = rgb_to_lab(frame.color[i]);

  const double step = std::sqrt(static_cast<double>(w) * h / cfg.superpixel_count);
  std::vector<Center> centers;
  for (double cy = step / 2; cy < h; cy += step) {
    for (double cx = step / 2; cx < w; cx += step) {
      int x = static_cast<int>(cx), y = static_cast<int>(cy);
      // Nudge the seed to the lowest-gradient spot in a 3x3 window.
      double best = std::numeric_limits<double>::max();
      int bx = x, by = y;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 1 || ny < 1 || nx >= w - 1 || ny >= h - 1) continue;
          const double g = (lab[ny * w + nx + 1] - lab[ny * w + nx - 1]).squaredNorm() +
                           (lab[(ny + 1) * w + nx] - lab[(ny - 1) * w + nx]).squaredNorm();
          if (g < best) {
            best = g;
            bx = nx;
            by = ny;
          }
        }
      const Eigen::Vector3f& c = lab[by * w + bx];
      centers.push_back({c.x(), c.y(), c.z(), static_cast<float>(bx), static_cast<float>(by)});
    }
  }
  const int S = static_cast<int>(centers.size());

  Image<int32_t> assign(w, h, -1);
  std::vector<float> dist(static_cast<size_t>(w) * h);
  const float spatial_w = static_cast<float>(cfg.slic_compactness / step);
  const int window = static_cast<int>(step) + 1;

  for (int iter = 0; iter < cfg.slic_iterations; ++iter) {
    std::fill(dist.begin(), dist.end(), std::numeric_limits<float>::max());
    for (int k = 0; k < S; ++k) {
      const Center& c = centers[k];
      const int x0 = std::max(0, static_cast<int>(c.x) - window);
      const int x1 = std::min(w - 1, static_cast<int>(c.x) + window);
      const int y0 = std::max(0, static_cast<int>(c.y) - window);
      const int y1 = std::min(h - 1, static_cast<int>(c.y) + window);
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const size_t i = static_cast<size_t>(y) * w + x;
          const Eigen::Vector3f& p = lab[i];
          const float dl = p.x() - c.l, da = p.y() - c.a, db = p.z() - c.b;
          const float dx = (x - c.x) * spatial_w, dy = (y - c.y) * spatial_w;
          const float d = dl * dl + da * da + db * db + dx * dx + dy * dy;
          if (d < dist[i]) {
            dist[i] = d;
            assign[i] = k;
          }
        }
      }
    }
    // Update centers.
    std::vector<Center> sums(S);
    std::vector<int> counts(S, 0);
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        const int k = assign.at(x, y);
        if (k < 0) continue;
        const Eigen::Vector3f& p = lab[static_cast<size_t>(y) * w + x];
        sums[k].l += p.x();
        sums[k].a += p.y();
        sums[k].b += p.z();
        sums[k].x += x;
        sums[k].y += y;
        ++counts[k];
      }
    for (int k = 0; k < S; ++k) {
      if (counts[k] == 0) continue;
      const float inv = 1.0f / counts[k];
      centers[k] = {sums[k].l * inv, sums[k].a * inv, sums[k].b * inv, sums[k].x * inv,
                    sums[k].y * inv};
    }
  }

  // Any pixel missed by all windows joins its nearest assigned neighbor.
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (assign.at(x, y) >= 0) continue;
      for (int radius = 1; radius < std::max(w, h) && assign.at(x, y) < 0; ++radius)
        for (int dy = -radius; dy <= radius && assign.at(x, y) < 0; ++dy)
          for (int dx = -radius; dx <= radius; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (assign.in_bounds(nx, ny) && assign.at(nx, ny) >= 0) {
              assign.at(x, y) = assign.at(nx, ny);
              break;
            }
          }
    }

  // Connectivity: relabel all but the largest component of each cluster to the
  // dominant neighboring cluster.
  {
    Image<int32_t> comp(w, h, -1);
    std::vector<int> comp_size;
    std::vector<int> comp_cluster;
    std::vector<int> stack;
    for (int start = 0; start < w * h; ++start) {
      if (comp[start] >= 0) continue;
      const int cluster = assign[start];
      const int id = static_cast<int>(comp_size.size());
      comp_size.push_back(0);
      comp_cluster.push_back(cluster);
      stack.push_back(start);
      comp[start] = id;
      while (!stack.empty()) {
        const int i = stack.back();
        stack.pop_back();
        ++comp_size[id];
        const int x = i % w, y = i / w;
        const int nbr[4] = {x > 0 ? i - 1 : -1, x < w - 1 ? i + 1 : -1, y > 0 ? i - w : -1,
                            y < h - 1 ? i + w : -1};
        for (int n : nbr)
          if (n >= 0 && comp[n] < 0 && assign[n] == cluster) {
            comp[n] = id;
            stack.push_back(n);
          }
      }
    }
    std::vector<int> largest(S, -1);
    for (size_t id = 0; id < comp_size.size(); ++id) {
      const int k = comp_cluster[id];
      if (largest[k] < 0 || comp_size[id] > comp_size[largest[k]])
        largest[k] = static_cast<int>(id);
    }
    // Orphan components absorb the label of an adjacent kept component.
    bool changed = true;
    while (changed) {
      changed = false;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const int i = y * w + x;
          if (comp[i] == largest[assign[i]]) continue;
          const int nbr[4] = {x > 0 ? i - 1 : -1, x < w - 1 ? i + 1 : -1, y > 0 ? i - w : -1,
                              y < h - 1 ? i + w : -1};
          for (int n : nbr)
            if (n >= 0 && comp[n] == largest[assign[n]]) {
              assign[i] = assign[n];
              comp[i] = comp[n];
              changed = true;
              break;
            }
        }
    }
  }

  // Gather superpixels; drop empty clusters and compact indices.
  SuperpixelGraph graph;
  graph.width = w;
  graph.height = h;
  std::vector<int> remap(S, -1);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int k = assign.at(x, y);
      if (remap[k] < 0) {
        remap[k] = graph.count();
        graph.superpixels.emplace_back();
      }
      Superpixel& sp = graph.superpixels[remap[k]];
      sp.pixels.push_back(y * w + x);
    }
  graph.assignment = Image<int32_t>(w, h, -1);
  for (size_t k = 0; k < graph.superpixels.size(); ++k) {
    Superpixel& sp = graph.superpixels[k];
    Eigen::Vector2d cen = Eigen::Vector2d::Zero();
    Eigen::Vector3d col = Eigen::Vector3d::Zero();
    std::vector<float> depths;
    for (int i : sp.pixels) {
      graph.assignment[i] = static_cast<int32_t>(k);
      cen += Eigen::Vector2d(i % w, i / w);
      const Rgb8& c = frame.color[i];
      col += Eigen::Vector3d(c.r, c.g, c.b);
      const float d = frame.depth[i];
      if (d > 0) depths.push_back(d);
    }
    sp.centroid = cen / sp.pixels.size();
    sp.mean_color = col / sp.pixels.size();
    if (!depths.empty()) {
      std::nth_element(depths.begin(), depths.begin() + depths.size() / 2, depths.end());
      sp.depth = depths[depths.size() / 2];
    }
  }
  return graph;
}

}  // namespace mf
