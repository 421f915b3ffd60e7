#include "mf/synth/render.h"

#include <cmath>
#include <limits>

#include "mf/error.h"

namespace mf::synth {

namespace {

constexpr double kNearClip = 0.05;

struct SplitMix64 {
  uint64_t state;
  uint64_t next() {
    state += 0x9e3779b97f4a7c15ull;
    uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double gaussian() {
    // Box-Muller; platform-independent unlike std::normal_distribution.
    double u1 = uniform01();
    while (u1 <= 0) u1 = uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }
};

/// Ray is o + s*d with d.z == 1 in the camera frame, so the hit parameter s
/// equals the z-buffer depth. Returns infinity when there is no hit.
double intersect_local(const ScenePrimitive& prim, const Eigen::Vector3d& o,
                       const Eigen::Vector3d& d) {
  const double inf = std::numeric_limits<double>::infinity();
  switch (prim.shape) {
    case ShapeKind::Plane: {
      if (std::abs(d.z()) < 1e-12) return inf;
      const double s = -o.z() / d.z();
      if (s <= kNearClip) return inf;
      const Eigen::Vector3d p = o + s * d;
      if (std::abs(p.x()) > prim.extent.x() || std::abs(p.y()) > prim.extent.y()) return inf;
      return s;
    }
    case ShapeKind::Box: {
      double t0 = -inf, t1 = inf;
      for (int i = 0; i < 3; ++i) {
        const double h = prim.extent[i];
        if (std::abs(d[i]) < 1e-12) {
          if (std::abs(o[i]) > h) return inf;
          continue;
        }
        double a = (-h - o[i]) / d[i];
        double b = (h - o[i]) / d[i];
        if (a > b) std::swap(a, b);
        t0 = std::max(t0, a);
        t1 = std::min(t1, b);
        if (t0 > t1) return inf;
      }
      if (t0 > kNearClip) return t0;
      if (t1 > kNearClip) return t1;  // camera inside the box: interior faces
      return inf;
    }
    case ShapeKind::Sphere: {
      const double r = prim.extent.x();
      const double a = d.squaredNorm();
      const double b = 2.0 * o.dot(d);
      const double c = o.squaredNorm() - r * r;
      const double disc = b * b - 4 * a * c;
      if (disc < 0) return inf;
      const double sq = std::sqrt(disc);
      const double s0 = (-b - sq) / (2 * a);
      const double s1 = (-b + sq) / (2 * a);
      if (s0 > kNearClip) return s0;
      if (s1 > kNearClip) return s1;
      return inf;
    }
    case ShapeKind::Mesh: {
      double best = inf;
      for (const Triangle& tri : prim.triangles) {
        const Eigen::Vector3d e1 = tri.b - tri.a;
        const Eigen::Vector3d e2 = tri.c - tri.a;
        const Eigen::Vector3d pv = d.cross(e2);
        const double det = e1.dot(pv);
        if (std::abs(det) < 1e-12) continue;
        const double inv = 1.0 / det;
        const Eigen::Vector3d tv = o - tri.a;
        const double u = tv.dot(pv) * inv;
        if (u < 0 || u > 1) continue;
        const Eigen::Vector3d qv = tv.cross(e1);
        const double v = d.dot(qv) * inv;
        if (v < 0 || u + v > 1) continue;
        const double s = e2.dot(qv) * inv;
        if (s > kNearClip && s < best) best = s;
      }
      return best;
    }
  }
  return inf;
}

Rgb8 shade(const ScenePrimitive& prim, const Eigen::Vector3d& local_hit) {
  const Albedo& a = prim.albedo;
  Eigen::Vector3d c = a.color_a;
  if (a.kind == Albedo::Kind::Checker) {
    long parity = 0;
    for (int i = 0; i < 3; ++i)
      parity += static_cast<long>(std::floor(local_hit[i] / a.square - 1e-6));
    if (parity & 1) c = a.color_b;
  }
  auto to8 = [](double v) { return static_cast<uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
  return {to8(c.x()), to8(c.y()), to8(c.z())};
}

}  // namespace

uint64_t mix_seed(uint64_t seed, uint64_t t) {
  SplitMix64 rng{seed ^ (0x9e3779b97f4a7c15ull * (t + 1))};
  return rng.next();
}

RenderedFrame render_frame(const SceneScript& script, int t) {
  if (t < 0 || t >= script.frame_count) throw Error("render_frame: frame index out of range");
  const Intrinsics& K = script.intrinsics;

  const Se3Pose cam = script.camera_pose_at(t);  // camera-to-world
  if (cam.orthonormality_error() > 1e-6) throw Error("render_frame: degenerate camera pose");

  struct Body {
    const ScenePrimitive* prim;
    Se3Pose world_from_local;
    Se3Pose local_from_world;
  };
  std::vector<Body> bodies;
  bodies.reserve(script.primitives.size());
  RenderedFrame out;
  for (const ScenePrimitive& p : script.primitives) {
    const Se3Pose wp = p.pose_at(t);
    bodies.push_back({&p, wp, wp.inverse()});
    out.gt_poses.emplace_back(p.id, wp);
  }

  DepthImage depth(K.width, K.height, 0.0f);
  ColorImage color(K.width, K.height, Rgb8{0, 0, 0});
  out.gt_masks = LabelImage(K.width, K.height, kInvalidMaskId);

  const Eigen::Vector3d origin_w = cam.translation();
  auto cast = [&](double px, double py, double* hit_depth) -> const Body* {
    const Eigen::Vector3d dir_c((px - K.cx) / K.fx, (py - K.cy) / K.fy, 1.0);
    const Eigen::Vector3d dir_w = cam.rotation() * dir_c;
    double best = std::numeric_limits<double>::infinity();
    const Body* winner = nullptr;
    for (const Body& b : bodies) {
      const Eigen::Vector3d o_l = b.local_from_world * origin_w;
      const Eigen::Vector3d d_l = b.local_from_world.rotation() * dir_w;
      const double s = intersect_local(*b.prim, o_l, d_l);
      if (s < best) {
        best = s;
        winner = &b;
      }
    }
    if (winner && hit_depth) *hit_depth = best;
    return winner;
  };
  auto shade_at = [&](double px, double py, const Body* b, double s) {
    const Eigen::Vector3d dir_c((px - K.cx) / K.fx, (py - K.cy) / K.fy, 1.0);
    const Eigen::Vector3d hit_w = origin_w + s * (cam.rotation() * dir_c);
    return shade(*b->prim, b->local_from_world * hit_w);
  };

  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      double s_center;
      const Body* winner = cast(x, y, &s_center);
      if (!winner) continue;
      depth.at(x, y) = static_cast<float>(s_center);
      out.gt_masks.at(x, y) = static_cast<uint8_t>(winner->prim->group());

      // 2x2 supersampled color: band-limits texture edges like a real sensor.
      double r = 0, g = 0, b = 0;
      int hits = 0;
      for (const double ox : {-0.25, 0.25}) {
        for (const double oy : {-0.25, 0.25}) {
          double s_sub;
          const Body* sub = cast(x + ox, y + oy, &s_sub);
          if (!sub) continue;
          const Rgb8 c = shade_at(x + ox, y + oy, sub, s_sub);
          r += c.r;
          g += c.g;
          b += c.b;
          ++hits;
        }
      }
      if (hits > 0)
        color.at(x, y) = {static_cast<uint8_t>(std::lround(r / hits)),
                          static_cast<uint8_t>(std::lround(g / hits)),
                          static_cast<uint8_t>(std::lround(b / hits))};
    }
  }

  out.frame = RgbdFrame::make(t, std::move(color), std::move(depth));
  out.camera_pose = cam;
  if (script.noise.enabled()) {
    NoiseParams per_frame = script.noise;
    per_frame.seed = mix_seed(script.noise.seed, static_cast<uint64_t>(t));
    out.frame = apply_noise(out.frame, per_frame);
  }
  return out;
}

RgbdFrame apply_noise(const RgbdFrame& frame, const NoiseParams& params) {
  if (!params.enabled()) return frame;
  RgbdFrame out = frame;
  SplitMix64 rng{params.seed};
  for (size_t i = 0; i < out.depth.size(); ++i) {
    float& d = out.depth[i];
    if (d <= 0) continue;
    double v = d;
    const double sigma = params.sigma0 + params.sigma_quad * v * v;
    if (sigma > 0) v += sigma * rng.gaussian();
    if (params.quantization_step > 0)
      v = std::round(v / params.quantization_step) * params.quantization_step;
    d = v > 0 ? static_cast<float>(v) : 0.0f;
  }
  return out;
}

std::vector<Eigen::Vector3d> sample_surface(const ScenePrimitive& prim, double spacing) {
  std::vector<Eigen::Vector3d> pts;
  const double s = std::max(spacing, 1e-4);

  auto sample_rect = [&](const Eigen::Vector3d& origin, const Eigen::Vector3d& du,
                         const Eigen::Vector3d& dv, double lu, double lv) {
    const int nu = std::max(1, static_cast<int>(std::ceil(lu / s)));
    const int nv = std::max(1, static_cast<int>(std::ceil(lv / s)));
    for (int i = 0; i <= nu; ++i)
      for (int j = 0; j <= nv; ++j)
        pts.push_back(origin + du * (lu * i / nu) + dv * (lv * j / nv));
  };

  switch (prim.shape) {
    case ShapeKind::Plane: {
      const Eigen::Vector3d e = prim.extent;
      sample_rect({-e.x(), -e.y(), 0}, Eigen::Vector3d::UnitX(), Eigen::Vector3d::UnitY(),
                  2 * e.x(), 2 * e.y());
      break;
    }
    case ShapeKind::Box: {
      const Eigen::Vector3d e = prim.extent;
      for (int axis = 0; axis < 3; ++axis)
        for (int side = -1; side <= 1; side += 2) {
          Eigen::Vector3d origin = Eigen::Vector3d::Zero();
          origin[axis] = side * e[axis];
          const int u = (axis + 1) % 3, v = (axis + 2) % 3;
          Eigen::Vector3d du = Eigen::Vector3d::Zero(), dv = Eigen::Vector3d::Zero();
          du[u] = 1;
          dv[v] = 1;
          origin -= du * e[u] + dv * e[v];
          sample_rect(origin, du, dv, 2 * e[u], 2 * e[v]);
        }
      break;
    }
    case ShapeKind::Sphere: {
      const double r = prim.extent.x();
      const int n = std::max(8, static_cast<int>(4 * M_PI * r * r / (s * s)));
      const double golden = M_PI * (3.0 - std::sqrt(5.0));
      for (int i = 0; i < n; ++i) {
        const double z = 1.0 - 2.0 * (i + 0.5) / n;
        const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double phi = golden * i;
        pts.emplace_back(r * rho * std::cos(phi), r * rho * std::sin(phi), r * z);
      }
      break;
    }
    case ShapeKind::Mesh: {
      for (const Triangle& tri : prim.triangles) {
        const double area = 0.5 * (tri.b - tri.a).cross(tri.c - tri.a).norm();
        const int n = std::max(1, static_cast<int>(std::ceil(std::sqrt(2 * area) / s)));
        for (int i = 0; i <= n; ++i)
          for (int j = 0; j <= n - i; ++j) {
            const double u = static_cast<double>(i) / n;
            const double v = static_cast<double>(j) / n;
            pts.push_back(tri.a + u * (tri.b - tri.a) + v * (tri.c - tri.a));
          }
      }
      break;
    }
  }
  return pts;
}

}  // namespace mf::synth
