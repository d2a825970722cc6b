/*
 * scene.hpp - synthetic box-world generator and ray-cast renderer
 *
 * Copyright (c) 2026 or3d authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <limits>

#include "or3d/core.hpp"
#include "or3d/geometry.hpp"

namespace or3d::scene {

using geometry::Camera;
using geometry::RectifiedPair;
using geometry::Vec2;
using geometry::Vec3;

struct Box {
    Vec3 center;  // meters, world; z >= 0
    Vec3 size;    // full extents, meters
    double yaw = 0;
    int class_id = 0;
};

/// Ground plane at world z = 0 plus a handful of textured boxes.
struct Scene {
    std::vector<Box> boxes;
    uint64_t texture_seed = 0;
};

struct SceneParams {
    int num_boxes = 5;
    double placement_radius_min = 3.0;
    double placement_radius_max = 10.0;
    double size_min = 0.8;  // per-axis extents drawn from [size_min, size_max]
    double size_max = 2.5;
    int num_classes = 3;
    double ring_radius = 0.5;  // boxes must stay clear of the camera ring
    int max_retries = 200;

    void validate() const {
        if (!(placement_radius_min > 0) || !(placement_radius_max > placement_radius_min))
            throw ConfigError("scene: bad placement radius range");
        if (!(size_min > 0) || !(size_max >= size_min))
            throw ConfigError("scene: bad size range");
        if (num_boxes < 0 || num_classes < 1)
            throw ConfigError("scene: bad counts");
    }
};

/// Deterministic scene draw. Box centers stay outside the camera ring by at
/// least the box half-diagonal.
inline Scene sample_scene(uint64_t rng_seed, const SceneParams& p = {}) {
    p.validate();
    Rng rng(rng_seed * 0x9e3779b97f4a7c15ULL + 0x7f4a7c15ULL);
    Scene s;
    s.texture_seed = rng.next_u64();
    for (int i = 0; i < p.num_boxes; ++i) {
        bool placed = false;
        for (int attempt = 0; attempt < p.max_retries && !placed; ++attempt) {
            Vec3 size(rng.uniform(p.size_min, p.size_max), rng.uniform(p.size_min, p.size_max),
                      rng.uniform(p.size_min, p.size_max));
            double radius = rng.uniform(p.placement_radius_min, p.placement_radius_max);
            double angle = rng.uniform(0.0, 2.0 * M_PI);
            Vec3 center(radius * std::cos(angle), radius * std::sin(angle), size.z() / 2.0);
            double half_diag = 0.5 * std::hypot(size.x(), size.y());
            if (center.head<2>().norm() <= p.ring_radius + half_diag) continue;
            Box b;
            b.center = center;
            b.size = size;
            b.yaw = rng.uniform(0.0, 2.0 * M_PI);
            b.class_id = static_cast<int>(rng.uniform_int(0, p.num_classes - 1));
            s.boxes.push_back(b);
            placed = true;
        }
        if (!placed)
            throw InfeasiblePlacement("scene: could not place box " + std::to_string(i));
    }
    return s;
}

struct RenderedView {
    Image<double> intensity;  // [0, 1]
    Image<double> depth;      // z-depth, meters; +inf = sky
    Image<int> instance;      // box index, -1 = background (ground or sky)
};

namespace detail {

inline uint64_t hash_mix(uint64_t x) {
    x ^= x >> 33;
    x *= 0xff51afd7ed558ccdULL;
    x ^= x >> 33;
    x *= 0xc4ceb9fe1a85ec53ULL;
    x ^= x >> 33;
    return x;
}

inline double lattice(uint64_t seed, int64_t xi, int64_t yi) {
    uint64_t h = hash_mix(seed ^ hash_mix(static_cast<uint64_t>(xi) * 0x9e3779b97f4a7c15ULL ^
                                          static_cast<uint64_t>(yi) + 0x2545f4914f6cdd1dULL));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

inline double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

/// Bilinear value noise in [0, 1].
inline double value_noise(uint64_t seed, double u, double v) {
    double fu = std::floor(u), fv = std::floor(v);
    int64_t xi = static_cast<int64_t>(fu), yi = static_cast<int64_t>(fv);
    double tu = smoothstep(u - fu), tv = smoothstep(v - fv);
    double a = lattice(seed, xi, yi), b = lattice(seed, xi + 1, yi);
    double c = lattice(seed, xi, yi + 1), d = lattice(seed, xi + 1, yi + 1);
    return (a * (1 - tu) + b * tu) * (1 - tv) + (c * (1 - tu) + d * tu) * tv;
}

/// Checker plus two octaves of value noise; enough texture for matching.
inline double albedo(uint64_t seed, double u, double v) {
    double checker = (static_cast<int64_t>(std::floor(u * 2.0)) +
                      static_cast<int64_t>(std::floor(v * 2.0))) & 1 ? 1.0 : 0.0;
    double n = 0.65 * value_noise(seed, u * 3.0, v * 3.0) +
               0.35 * value_noise(seed ^ 0xabcdef12345ULL, u * 9.0, v * 9.0);
    return 0.35 + 0.25 * checker + 0.40 * n;
}

struct Hit {
    double t = std::numeric_limits<double>::infinity();
    int instance = -1;
    Vec3 normal = Vec3::UnitZ();
    double u = 0, v = 0;      // texture coords on the hit surface
    uint64_t tex_salt = 0;
};

inline bool ray_box(const Box& box, const Vec3& origin, const Vec3& dir, double& t_hit,
                    Vec3& normal_world, double& u, double& v) {
    const double c = std::cos(box.yaw), s = std::sin(box.yaw);
    // world -> box frame (inverse yaw about z)
    auto to_local = [&](const Vec3& p) {
        return Vec3(c * p.x() + s * p.y(), -s * p.x() + c * p.y(), p.z());
    };
    Vec3 o = to_local(origin - box.center);
    Vec3 d = to_local(dir);
    Vec3 half = box.size / 2.0;

    double tmin = -std::numeric_limits<double>::infinity();
    double tmax = std::numeric_limits<double>::infinity();
    int axis_min = -1;
    for (int k = 0; k < 3; ++k) {
        if (std::abs(d[k]) < 1e-12) {
            if (o[k] < -half[k] || o[k] > half[k]) return false;
            continue;
        }
        double t1 = (-half[k] - o[k]) / d[k];
        double t2 = (half[k] - o[k]) / d[k];
        if (t1 > t2) std::swap(t1, t2);
        if (t1 > tmin) {
            tmin = t1;
            axis_min = k;
        }
        tmax = std::min(tmax, t2);
        if (tmin > tmax) return false;
    }
    if (tmin <= geometry::kMinDepth || axis_min < 0) return false;
    t_hit = tmin;

    Vec3 n_local = Vec3::Zero();
    n_local[axis_min] = d[axis_min] > 0 ? -1.0 : 1.0;
    normal_world = Vec3(c * n_local.x() - s * n_local.y(), s * n_local.x() + c * n_local.y(),
                        n_local.z());
    Vec3 p = o + t_hit * d;  // local hit point
    switch (axis_min) {      // texture on the two in-face axes
        case 0: u = p.y(); v = p.z(); break;
        case 1: u = p.x(); v = p.z(); break;
        default: u = p.x(); v = p.y(); break;
    }
    return true;
}

}  // namespace detail

/// Nearest-hit ray cast of ground plane and boxes with Lambertian shading and
/// procedural texture. Deterministic for a fixed (camera, scene).
inline RenderedView render(const Camera& camera, const Scene& scene) {
    camera.validate();
    const int w = camera.intrinsics.width, h = camera.intrinsics.height;
    RenderedView view;
    view.intensity = Image<double>(w, h, 0.0);
    view.depth = Image<double>(w, h, std::numeric_limits<double>::infinity());
    view.instance = Image<int>(w, h, -1);

    const Vec3 origin = camera.center();
    const Vec3 light = Vec3(0.3, 0.2, -1.0).normalized();  // from above

    parallel_for(h, [&](int64_t y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir = camera.ray(Vec2(x, y));  // z-depth parameterization
            detail::Hit best;

            if (std::abs(dir.z()) > 1e-12) {
                double t = -origin.z() / dir.z();
                if (t > geometry::kMinDepth) {
                    best.t = t;
                    best.instance = -1;
                    best.normal = Vec3::UnitZ();
                    Vec3 p = origin + t * dir;
                    best.u = p.x();
                    best.v = p.y();
                    best.tex_salt = 0;
                }
            }
            for (size_t i = 0; i < scene.boxes.size(); ++i) {
                double t, u, v;
                Vec3 n;
                if (detail::ray_box(scene.boxes[i], origin, dir, t, n, u, v) && t < best.t) {
                    best.t = t;
                    best.instance = static_cast<int>(i);
                    best.normal = n;
                    best.u = u;
                    best.v = v;
                    best.tex_salt = detail::hash_mix(i + 1);
                }
            }

            const int yi = static_cast<int>(y);
            if (!std::isfinite(best.t)) {
                view.intensity(x, yi) = 0.02;  // sky
                continue;
            }
            view.depth(x, yi) = best.t;
            view.instance(x, yi) = best.instance;
            double shade = 0.35 + 0.65 * std::max(0.0, best.normal.dot(-light));
            double a = detail::albedo(scene.texture_seed ^ best.tex_salt, best.u, best.v);
            view.intensity(x, yi) = std::clamp(a * shade, 0.0, 1.0);
        }
    });
    return view;
}

struct RectifiedViews {
    RenderedView left;
    RenderedView right;
};

inline RectifiedViews render_rectified(const RectifiedPair& pair, const Scene& scene) {
    return RectifiedViews{render(pair.left_camera(), scene),
                          render(pair.right_camera(), scene)};
}

constexpr double kOcclusionTolerance = 0.01;  // relative depth mismatch

/// Analytic disparity of the rectified-left view: d = f*B/Z from rendered
/// depth. Pixels occluded in the right view are flagged invalid by a
/// left-right depth re-projection check; sky pixels carry disparity 0,
/// invalid.
inline DisparityMap gt_disparity_from_views(const RectifiedPair& pair,
                                            const Image<double>& left_depth,
                                            const Image<double>& right_depth) {
    const int w = left_depth.width(), h = left_depth.height();
    DisparityMap out(w, h);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double z = left_depth(x, y);
            if (!std::isfinite(z)) {
                out.disparity(x, y) = 0.0;  // vanishing-disparity sentinel
                out.valid(x, y) = 0;
                continue;
            }
            double d = geometry::disparity_from_depth(pair, z);
            out.disparity(x, y) = d;
            // rectified views share orientation, so the point keeps z-depth z
            double xr = x - d;
            int xn = static_cast<int>(std::lround(xr));
            bool visible = false;
            if (xn >= 0 && xn < w) {
                double zr = right_depth(xn, y);
                visible = std::isfinite(zr) && std::abs(zr - z) <= kOcclusionTolerance * z;
            }
            out.valid(x, y) = visible ? 1 : 0;
        }
    }
    return out;
}

inline DisparityMap gt_disparity(const RectifiedPair& pair, const Scene& scene) {
    RectifiedViews views = render_rectified(pair, scene);
    return gt_disparity_from_views(pair, views.left.depth, views.right.depth);
}

}  // namespace or3d::scene
