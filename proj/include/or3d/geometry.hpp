/*
 * geometry.hpp - pinhole surround rig: projection chain, overlap masks,
 *                epipolar rectification
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

#include <Eigen/Dense>
#include <optional>
#include <utility>
#include <vector>

#include "or3d/core.hpp"

namespace or3d::geometry {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

constexpr double kMinDepth = 1e-6;           // meters; closer counts as behind
constexpr double kRotationTolerance = 1e-9;  // max |R^T R - I| entry

// Camera frame: x right, y down, z forward. World frame: right-handed, z up.

struct CameraIntrinsics {
    double fx = 0, fy = 0;
    double cx = 0, cy = 0;
    int width = 0, height = 0;

    void validate() const {
        if (!(fx > 0) || !(fy > 0))
            throw ConfigError("intrinsics: focal lengths must be positive");
        if (width < 2 || height < 2)
            throw ConfigError("intrinsics: image must be at least 2x2");
        if (!(cx >= 0 && cx < width) || !(cy >= 0 && cy < height))
            throw ConfigError("intrinsics: principal point outside image");
    }

    /// Continuous pixel coords; pixel centers sit on integers 0..W-1.
    bool contains(const Vec2& p) const {
        return p.x() >= 0.0 && p.x() <= width - 1.0 && p.y() >= 0.0 && p.y() <= height - 1.0;
    }
};

struct CameraPose {
    Mat3 rotation = Mat3::Identity();  // world -> camera
    Vec3 translation = Vec3::Zero();   // meters

    void validate() const {
        Mat3 err = rotation.transpose() * rotation - Mat3::Identity();
        if (err.cwiseAbs().maxCoeff() >= kRotationTolerance)
            throw ConfigError("pose: rotation is not orthonormal");
        if (rotation.determinant() < 0)
            throw ConfigError("pose: rotation has negative determinant");
    }
};

struct Camera {
    CameraIntrinsics intrinsics;
    CameraPose pose;

    void validate() const {
        intrinsics.validate();
        pose.validate();
    }

    Vec3 center() const { return -pose.rotation.transpose() * pose.translation; }

    /// Camera optical axis direction, world coords.
    Vec3 forward() const { return pose.rotation.row(2).transpose(); }

    /// Unnormalized ray direction through pixel p, world coords. The point at
    /// z-depth z along the ray is center() + z * ray.
    Vec3 ray(const Vec2& p) const {
        Vec3 dir_cam((p.x() - intrinsics.cx) / intrinsics.fx,
                     (p.y() - intrinsics.cy) / intrinsics.fy, 1.0);
        return pose.rotation.transpose() * dir_cam;
    }
};

struct CameraRig {
    std::vector<Camera> cameras;
    std::vector<std::pair<int, int>> adjacent_pairs;  // (source, target)

    void validate() const {
        if (cameras.size() < 2)
            throw ConfigError("rig: need at least 2 cameras");
        for (const Camera& c : cameras) c.validate();
        for (auto [s, t] : adjacent_pairs) {
            if (s < 0 || t < 0 || s >= static_cast<int>(cameras.size()) ||
                t >= static_cast<int>(cameras.size()) || s == t)
                throw ConfigError("rig: bad adjacency pair");
        }
    }
};

struct Projection {
    Vec2 pixel;
    double depth = 0;  // z in camera frame, meters
};

/// Pinhole projection. Empty result means the point is behind the camera
/// (z <= kMinDepth). Out-of-bounds pixels are returned as-is; callers decide.
inline std::optional<Projection> project(const Camera& cam, const Vec3& world_point) {
    Vec3 pc = cam.pose.rotation * world_point + cam.pose.translation;
    if (pc.z() <= kMinDepth) return std::nullopt;
    const CameraIntrinsics& k = cam.intrinsics;
    return Projection{Vec2(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy),
                      pc.z()};
}

/// Lifts a pixel at the given z-depth back to world coordinates.
inline Vec3 unproject(const Camera& cam, const Vec2& pixel, double depth) {
    if (!(depth > 0))
        throw NonPositiveDepth("unproject: depth must be positive");
    const CameraIntrinsics& k = cam.intrinsics;
    Vec3 pc((pixel.x() - k.cx) / k.fx * depth, (pixel.y() - k.cy) / k.fy * depth, depth);
    return cam.pose.rotation.transpose() * (pc - cam.pose.translation);
}

/// Source pixel at z-depth -> target pixel. Empty if behind the target camera
/// or outside the target image.
inline std::optional<Vec2> correspondence(const CameraRig& rig, int source_idx, int target_idx,
                                          const Vec2& pixel, double depth) {
    const Camera& src = rig.cameras.at(source_idx);
    const Camera& tgt = rig.cameras.at(target_idx);
    Vec3 world = unproject(src, pixel, depth);
    auto proj = project(tgt, world);
    if (!proj || !tgt.intrinsics.contains(proj->pixel)) return std::nullopt;
    return proj->pixel;
}

struct DepthRange {
    double min = 1.0;
    double max = 60.0;

    void validate() const {
        if (!(min > 0) || !(max > min))
            throw InvalidDepthRange("depth range must satisfy 0 < min < max");
    }
    double geometric_mean() const { return std::sqrt(min * max); }
};

struct OverlapMask {
    int camera_index = -1;
    Image<uint8_t> mask;  // 1 = overlap
    double fraction = 0;
};

struct CorrespondenceField {
    Image<uint8_t> valid;
    Image<double> target_x;  // -1 where invalid
    Image<double> target_y;
    Image<double> depth;  // depth used for the stored mapping, meters

    CorrespondenceField() = default;
    CorrespondenceField(int w, int h)
        : valid(w, h, 0), target_x(w, h, -1.0), target_y(w, h, -1.0), depth(w, h, -1.0) {}
};

struct OverlapResult {
    OverlapMask mask;
    CorrespondenceField field;
};

namespace detail {

/// Overlap mask between two explicit cameras. A pixel is marked when its ray
/// lands inside the target frustum for at least one of the inverse-depth
/// samples. The field stores the mapping at rep_depth(x, y).
template <typename RepDepthFn>
OverlapResult overlap_between(const Camera& src, const Camera& tgt, const DepthRange& range,
                              int samples_per_ray, RepDepthFn rep_depth) {
    range.validate();
    if (samples_per_ray < 2)
        throw ConfigError("overlap: samples_per_ray must be >= 2");
    const int w = src.intrinsics.width, h = src.intrinsics.height;
    OverlapResult out;
    out.mask.mask = Image<uint8_t>(w, h, 0);
    out.field = CorrespondenceField(w, h);

    const double w_min = 1.0 / range.max, w_max = 1.0 / range.min;
    const Vec3 c_src = src.center();
    const Mat3 r_tgt = tgt.pose.rotation;
    const Vec3 t_tgt = tgt.pose.translation;
    const CameraIntrinsics& k = tgt.intrinsics;

    parallel_for(h, [&](int64_t y) {
        for (int x = 0; x < w; ++x) {
            const Vec3 dir = src.ray(Vec2(x, y));
            // target-frame ray: q(z) = z * a + b, z the source z-depth
            const Vec3 a = r_tgt * dir;
            const Vec3 b = r_tgt * c_src + t_tgt;
            bool hit = false;
            for (int s = 0; s < samples_per_ray && !hit; ++s) {
                double invd = w_min + (w_max - w_min) * s / (samples_per_ray - 1);
                double z = 1.0 / invd;
                Vec3 q = z * a + b;
                if (q.z() <= kMinDepth) continue;
                Vec2 px(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
                if (k.contains(px)) hit = true;
            }
            if (hit) out.mask.mask(x, static_cast<int>(y)) = 1;

            double zr = rep_depth(x, static_cast<int>(y));
            Vec3 q = zr * a + b;
            if (zr > 0 && q.z() > kMinDepth) {
                Vec2 px(k.fx * q.x() / q.z() + k.cx, k.fy * q.y() / q.z() + k.cy);
                if (k.contains(px)) {
                    out.field.valid(x, static_cast<int>(y)) = 1;
                    out.field.target_x(x, static_cast<int>(y)) = px.x();
                    out.field.target_y(x, static_cast<int>(y)) = px.y();
                    out.field.depth(x, static_cast<int>(y)) = zr;
                }
            }
        }
    });

    int count = 0;
    for (uint8_t m : out.mask.mask.data()) count += m;
    out.mask.fraction = static_cast<double>(count) / (static_cast<double>(w) * h);
    return out;
}

}  // namespace detail

/// Frustum-overlap mask of the source camera against the target over a depth
/// range. Correspondences are stored at the geometric-mean depth, or at the
/// true scene depth per pixel when source_depth is given (non-finite entries
/// fall back to the geometric mean).
inline OverlapResult compute_overlap_mask(const CameraRig& rig, int source_idx, int target_idx,
                                          const DepthRange& range, int samples_per_ray,
                                          const Image<double>* source_depth = nullptr) {
    const Camera& src = rig.cameras.at(source_idx);
    const Camera& tgt = rig.cameras.at(target_idx);
    const double mid = range.geometric_mean();
    OverlapResult out;
    if (source_depth) {
        if (source_depth->width() != src.intrinsics.width ||
            source_depth->height() != src.intrinsics.height)
            throw ImageSizeMismatch("overlap: depth map size mismatch");
        out = detail::overlap_between(src, tgt, range, samples_per_ray, [&](int x, int y) {
            double z = (*source_depth)(x, y);
            return std::isfinite(z) && z > 0 ? z : mid;
        });
    } else {
        out = detail::overlap_between(src, tgt, range, samples_per_ray,
                                      [&](int, int) { return mid; });
    }
    out.mask.camera_index = source_idx;
    return out;
}

/// Union of a camera's overlap masks against every rig neighbor it is paired
/// with (either slot of adjacent_pairs).
inline OverlapMask camera_overlap_union(const CameraRig& rig, int camera_idx,
                                        const DepthRange& range, int samples_per_ray) {
    const Camera& cam = rig.cameras.at(camera_idx);
    OverlapMask out;
    out.camera_index = camera_idx;
    out.mask = Image<uint8_t>(cam.intrinsics.width, cam.intrinsics.height, 0);
    for (auto [s, t] : rig.adjacent_pairs) {
        int other = -1;
        if (s == camera_idx) other = t;
        else if (t == camera_idx) other = s;
        if (other < 0) continue;
        OverlapResult r = compute_overlap_mask(rig, camera_idx, other, range, samples_per_ray);
        for (size_t i = 0; i < out.mask.data().size(); ++i)
            out.mask.data()[i] |= r.mask.mask.data()[i];
    }
    int count = 0;
    for (uint8_t m : out.mask.data()) count += m;
    out.fraction = static_cast<double>(count) / static_cast<double>(out.mask.size());
    return out;
}

struct CropWindow {
    int x0 = 0, y0 = 0;
    int width = 0, height = 0;

    bool empty() const { return width <= 0 || height <= 0; }
};

struct RectifyOptions {
    DepthRange depth_range;
    int samples_per_ray = 16;
    int crop_align = 4;  // crop dims padded up to a multiple of this
};

struct RectifiedPair {
    CameraIntrinsics intrinsics;  // shared virtual intrinsics
    Mat3 world_to_rect;           // common rectified orientation (world -> cam)
    Mat3 applied_left;            // old-left camera frame -> rectified frame
    Mat3 applied_right;
    Vec3 center_left, center_right;
    double baseline = 0;  // meters
    CropWindow crop;      // overlap crop, same window in both views
    int source_index = -1, target_index = -1;

    Camera left_camera() const {
        return Camera{intrinsics, CameraPose{world_to_rect, -world_to_rect * center_left}};
    }
    Camera right_camera() const {
        return Camera{intrinsics, CameraPose{world_to_rect, -world_to_rect * center_right}};
    }
};

/// Overlap mask between the two virtual rectified views, left frame.
inline OverlapMask rectified_overlap_mask(const RectifiedPair& pair, const DepthRange& range,
                                          int samples_per_ray) {
    OverlapResult r = detail::overlap_between(pair.left_camera(), pair.right_camera(), range,
                                              samples_per_ray,
                                              [&](int, int) { return range.geometric_mean(); });
    r.mask.camera_index = 0;
    return r.mask;
}

namespace detail {

inline CropWindow bounding_box(const Image<uint8_t>& mask) {
    int x0 = mask.width(), y0 = mask.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x)
            if (mask(x, y)) {
                x0 = std::min(x0, x);
                y0 = std::min(y0, y);
                x1 = std::max(x1, x);
                y1 = std::max(y1, y);
            }
    if (x1 < 0) return CropWindow{};
    return CropWindow{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

inline CropWindow union_box(const CropWindow& a, const CropWindow& b) {
    if (a.empty()) return b;
    if (b.empty()) return a;
    int x0 = std::min(a.x0, b.x0), y0 = std::min(a.y0, b.y0);
    int x1 = std::max(a.x0 + a.width, b.x0 + b.width);
    int y1 = std::max(a.y0 + a.height, b.y0 + b.height);
    return CropWindow{x0, y0, x1 - x0, y1 - y0};
}

/// Grow the window to a multiple of align in each dimension, staying inside
/// the image; shifts left/up when the border is reached.
inline CropWindow align_window(CropWindow w, int align, int img_w, int img_h) {
    if (w.empty() || align <= 1) return w;
    auto fit = [](int lo, int len, int limit, int align) -> std::pair<int, int> {
        int want = ((len + align - 1) / align) * align;
        want = std::min(want, (limit / align) * align);
        want = std::max(want, align <= limit ? align : limit);
        int start = lo - (want - len) / 2;
        start = std::max(0, std::min(start, limit - want));
        return {start, want};
    };
    auto [x0, cw] = fit(w.x0, w.width, img_w, align);
    auto [y0, ch] = fit(w.y0, w.height, img_h, align);
    return CropWindow{x0, y0, cw, ch};
}

}  // namespace detail

/// Classic two-rotation epipolar rectification: both cameras are rotated so
/// the shared x-axis runs along the baseline and optical axes are orthogonal
/// to it. The source camera becomes the left view, so disparity
/// x_left - x_right = f*B/Z is non-negative.
inline RectifiedPair rectify_pair(const CameraRig& rig, int source_idx, int target_idx,
                                  const RectifyOptions& opts = {}) {
    const Camera& src = rig.cameras.at(source_idx);
    const Camera& tgt = rig.cameras.at(target_idx);
    const Vec3 c_l = src.center(), c_r = tgt.center();
    const Vec3 base = c_r - c_l;
    const double b_norm = base.norm();
    if (b_norm <= 1e-6)
        throw DegenerateBaseline("rectify: camera centers coincide");

    const Vec3 ex = base / b_norm;
    Vec3 axis = src.forward() + tgt.forward();
    Vec3 ez = axis - axis.dot(ex) * ex;
    if (ez.norm() < 1e-9) {
        // mean axis parallel to baseline; fall back to source up direction
        Vec3 up = -src.pose.rotation.row(1).transpose();
        ez = up - up.dot(ex) * ex;
    }
    ez.normalize();
    const Vec3 ey = ez.cross(ex);

    RectifiedPair pair;
    pair.world_to_rect.row(0) = ex.transpose();
    pair.world_to_rect.row(1) = ey.transpose();
    pair.world_to_rect.row(2) = ez.transpose();
    pair.applied_left = pair.world_to_rect * src.pose.rotation.transpose();
    pair.applied_right = pair.world_to_rect * tgt.pose.rotation.transpose();
    pair.center_left = c_l;
    pair.center_right = c_r;
    pair.baseline = b_norm;
    pair.source_index = source_idx;
    pair.target_index = target_idx;

    const CameraIntrinsics &ks = src.intrinsics, &kt = tgt.intrinsics;
    pair.intrinsics.fx = 0.5 * (ks.fx + kt.fx);
    pair.intrinsics.fy = 0.5 * (ks.fy + kt.fy);
    pair.intrinsics.cx = 0.5 * (ks.cx + kt.cx);
    pair.intrinsics.cy = 0.5 * (ks.cy + kt.cy);
    pair.intrinsics.width = std::max(ks.width, kt.width);
    pair.intrinsics.height = std::max(ks.height, kt.height);
    pair.intrinsics.validate();

    OverlapMask left = rectified_overlap_mask(pair, opts.depth_range, opts.samples_per_ray);
    OverlapResult right = detail::overlap_between(
        pair.right_camera(), pair.left_camera(), opts.depth_range, opts.samples_per_ray,
        [&](int, int) { return opts.depth_range.geometric_mean(); });
    CropWindow box = detail::union_box(detail::bounding_box(left.mask),
                                       detail::bounding_box(right.mask.mask));
    pair.crop = detail::align_window(box, opts.crop_align, pair.intrinsics.width,
                                     pair.intrinsics.height);
    return pair;
}

/// d = f * B / Z with the rectified focal length.
inline double disparity_from_depth(const RectifiedPair& pair, double depth) {
    if (!(depth > 0))
        throw NonPositiveDepth("disparity_from_depth: depth must be positive");
    return pair.intrinsics.fx * pair.baseline / depth;
}

struct DefaultRigParams {
    int num_cameras = 6;
    double fov_deg = 64.0;      // horizontal
    int width = 128, height = 80;
    double ring_radius = 0.5;   // meters
    double mount_height = 1.5;  // meters
};

/// Ring of outward-facing cameras, evenly spaced in yaw. Adjacent pairs run
/// (i, i+1 mod n).
inline CameraRig make_default_rig(const DefaultRigParams& p = {}) {
    if (p.num_cameras < 2)
        throw ConfigError("rig: need at least 2 cameras");
    CameraRig rig;
    const double fov = p.fov_deg * M_PI / 180.0;
    CameraIntrinsics k;
    k.width = p.width;
    k.height = p.height;
    k.fx = (p.width / 2.0) / std::tan(fov / 2.0);
    k.fy = k.fx;
    k.cx = p.width / 2.0;
    k.cy = p.height / 2.0;

    for (int i = 0; i < p.num_cameras; ++i) {
        const double yaw = 2.0 * M_PI * i / p.num_cameras;
        const double c = std::cos(yaw), s = std::sin(yaw);
        // rows: camera x (right), y (down), z (forward) in world coords
        Mat3 r;
        r << s, -c, 0, 0, 0, -1, c, s, 0;
        const Vec3 center(p.ring_radius * c, p.ring_radius * s, p.mount_height);
        rig.cameras.push_back(Camera{k, CameraPose{r, -r * center}});
    }
    for (int i = 0; i < p.num_cameras; ++i)
        rig.adjacent_pairs.emplace_back(i, (i + 1) % p.num_cameras);
    rig.validate();
    return rig;
}

}  // namespace or3d::geometry
