/*
 * io.hpp - PGM/PFM images, rig and scene JSON
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

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "or3d/core.hpp"
#include "or3d/geometry.hpp"
#include "or3d/scene.hpp"

namespace or3d::io {

using nlohmann::json;

// ---------------------------------------------------------------- PGM (P5)

/// Binary mask: maxval 255, values 0/255.
inline void write_mask_pgm(const std::string& path, const Image<uint8_t>& mask) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "P5\n" << mask.width() << " " << mask.height() << "\n255\n";
    std::vector<uint8_t> row(mask.width());
    for (int y = 0; y < mask.height(); ++y) {
        for (int x = 0; x < mask.width(); ++x) row[x] = mask(x, y) ? 255 : 0;
        f.write(reinterpret_cast<const char*>(row.data()), row.size());
    }
    if (!f) throw IoError("write failed: " + path);
}

/// 16-bit grayscale: values in [0,1] scaled to 65535, big-endian per netpbm.
inline void write_gray_pgm16(const std::string& path, const Image<double>& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "P5\n" << img.width() << " " << img.height() << "\n65535\n";
    for (int y = 0; y < img.height(); ++y) {
        for (int x = 0; x < img.width(); ++x) {
            double v = std::clamp(img(x, y), 0.0, 1.0);
            uint16_t q = static_cast<uint16_t>(std::lround(v * 65535.0));
            uint8_t bytes[2] = {static_cast<uint8_t>(q >> 8), static_cast<uint8_t>(q & 0xff)};
            f.write(reinterpret_cast<const char*>(bytes), 2);
        }
    }
    if (!f) throw IoError("write failed: " + path);
}

namespace detail {
inline void skip_pgm_whitespace(std::istream& in) {
    while (true) {
        int c = in.peek();
        if (c == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(c)) {
            in.get();
        } else {
            break;
        }
    }
}
}  // namespace detail

/// Reads an 8- or 16-bit P5 PGM as grayscale in [0, 1].
inline Image<double> read_gray_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5") throw IoError("not a P5 PGM: " + path);
    int w = 0, h = 0, maxval = 0;
    detail::skip_pgm_whitespace(f);
    f >> w;
    detail::skip_pgm_whitespace(f);
    f >> h;
    detail::skip_pgm_whitespace(f);
    f >> maxval;
    f.get();  // single whitespace before raster
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535)
        throw IoError("bad PGM header: " + path);
    Image<double> img(w, h, 0.0);
    if (maxval < 256) {
        std::vector<uint8_t> buf(static_cast<size_t>(w) * h);
        f.read(reinterpret_cast<char*>(buf.data()), buf.size());
        if (!f) throw IoError("truncated PGM: " + path);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x)
                img(x, y) = buf[static_cast<size_t>(y) * w + x] / static_cast<double>(maxval);
    } else {
        std::vector<uint8_t> buf(static_cast<size_t>(w) * h * 2);
        f.read(reinterpret_cast<char*>(buf.data()), buf.size());
        if (!f) throw IoError("truncated PGM: " + path);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                size_t i = (static_cast<size_t>(y) * w + x) * 2;
                uint16_t q = static_cast<uint16_t>((buf[i] << 8) | buf[i + 1]);
                img(x, y) = q / static_cast<double>(maxval);
            }
    }
    return img;
}

inline Image<uint8_t> read_mask_pgm(const std::string& path) {
    Image<double> g = read_gray_pgm(path);
    Image<uint8_t> mask(g.width(), g.height(), 0);
    for (int y = 0; y < g.height(); ++y)
        for (int x = 0; x < g.width(); ++x) mask(x, y) = g(x, y) > 0.5 ? 1 : 0;
    return mask;
}

// ------------------------------------------------------------------- PFM

/// Grayscale PFM, header "Pf", negative scale = little-endian float32,
/// rows stored bottom-to-top.
inline void write_pfm(const std::string& path, const Image<double>& img) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open for write: " + path);
    f << "Pf\n" << img.width() << " " << img.height() << "\n-1.0\n";
    std::vector<float> row(img.width());
    for (int y = img.height() - 1; y >= 0; --y) {
        for (int x = 0; x < img.width(); ++x) row[x] = static_cast<float>(img(x, y));
        f.write(reinterpret_cast<const char*>(row.data()), row.size() * sizeof(float));
    }
    if (!f) throw IoError("write failed: " + path);
}

inline Image<double> read_pfm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open: " + path);
    std::string magic;
    f >> magic;
    if (magic != "Pf") throw IoError("not a grayscale PFM: " + path);
    int w = 0, h = 0;
    double scale = 0;
    f >> w >> h >> scale;
    f.get();
    if (w <= 0 || h <= 0 || scale >= 0)
        throw IoError("unsupported PFM header (expect negative scale): " + path);
    Image<double> img(w, h, 0.0);
    std::vector<float> row(w);
    for (int y = h - 1; y >= 0; --y) {
        f.read(reinterpret_cast<char*>(row.data()), row.size() * sizeof(float));
        if (!f) throw IoError("truncated PFM: " + path);
        for (int x = 0; x < w; ++x) img(x, y) = row[x];
    }
    return img;
}

/// Invalid pixels are serialized as the -1 sentinel; valid disparities are
/// non-negative, so the encoding is unambiguous.
inline void write_disparity_pfm(const std::string& path, const DisparityMap& map) {
    Image<double> img(map.width(), map.height(), kInvalidDisparity);
    for (int y = 0; y < map.height(); ++y)
        for (int x = 0; x < map.width(); ++x)
            img(x, y) = map.valid(x, y) ? map.disparity(x, y) : kInvalidDisparity;
    write_pfm(path, img);
}

inline DisparityMap read_disparity_pfm(const std::string& path) {
    Image<double> img = read_pfm(path);
    DisparityMap map(img.width(), img.height());
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            if (img(x, y) >= 0.0)
                map.set(x, y, img(x, y));
            else
                map.invalidate(x, y);
        }
    return map;
}

/// Correspondence field goes out as two PFM channel files (target x and y).
inline void write_correspondence_pfm(const std::string& path_x, const std::string& path_y,
                                     const geometry::CorrespondenceField& field) {
    Image<double> fx(field.valid.width(), field.valid.height(), -1.0);
    Image<double> fy(field.valid.width(), field.valid.height(), -1.0);
    for (int y = 0; y < field.valid.height(); ++y)
        for (int x = 0; x < field.valid.width(); ++x)
            if (field.valid(x, y)) {
                fx(x, y) = field.target_x(x, y);
                fy(x, y) = field.target_y(x, y);
            }
    write_pfm(path_x, fx);
    write_pfm(path_y, fy);
}

// ------------------------------------------------------------------ JSON

inline json rig_to_json(const geometry::CameraRig& rig) {
    json cams = json::array();
    for (const auto& cam : rig.cameras) {
        json rot = json::array();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) rot.push_back(cam.pose.rotation(r, c));
        cams.push_back({{"fx", cam.intrinsics.fx},
                        {"fy", cam.intrinsics.fy},
                        {"cx", cam.intrinsics.cx},
                        {"cy", cam.intrinsics.cy},
                        {"width", cam.intrinsics.width},
                        {"height", cam.intrinsics.height},
                        {"rotation", rot},
                        {"translation", {cam.pose.translation.x(), cam.pose.translation.y(),
                                         cam.pose.translation.z()}}});
    }
    json pairs = json::array();
    for (auto [s, t] : rig.adjacent_pairs) pairs.push_back({s, t});
    return json{{"cameras", cams}, {"adjacent_pairs", pairs}};
}

inline geometry::CameraRig rig_from_json(const json& j) {
    geometry::CameraRig rig;
    for (const auto& jc : j.at("cameras")) {
        geometry::Camera cam;
        cam.intrinsics.fx = jc.at("fx").get<double>();
        cam.intrinsics.fy = jc.at("fy").get<double>();
        cam.intrinsics.cx = jc.at("cx").get<double>();
        cam.intrinsics.cy = jc.at("cy").get<double>();
        cam.intrinsics.width = jc.at("width").get<int>();
        cam.intrinsics.height = jc.at("height").get<int>();
        const auto& rot = jc.at("rotation");
        if (rot.size() != 9) throw ConfigError("rig json: rotation must have 9 entries");
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) cam.pose.rotation(r, c) = rot[3 * r + c].get<double>();
        const auto& tr = jc.at("translation");
        if (tr.size() != 3) throw ConfigError("rig json: translation must have 3 entries");
        for (int k = 0; k < 3; ++k) cam.pose.translation[k] = tr[k].get<double>();
        rig.cameras.push_back(cam);
    }
    for (const auto& jp : j.at("adjacent_pairs"))
        rig.adjacent_pairs.emplace_back(jp.at(0).get<int>(), jp.at(1).get<int>());
    rig.validate();
    return rig;
}

inline json scene_to_json(const scene::Scene& s) {
    json boxes = json::array();
    for (const auto& b : s.boxes)
        boxes.push_back({{"center", {b.center.x(), b.center.y(), b.center.z()}},
                         {"size", {b.size.x(), b.size.y(), b.size.z()}},
                         {"yaw", b.yaw},
                         {"class_id", b.class_id}});
    return json{{"boxes", boxes}, {"seed", s.texture_seed}};
}

inline scene::Scene scene_from_json(const json& j) {
    scene::Scene s;
    s.texture_seed = j.at("seed").get<uint64_t>();
    for (const auto& jb : j.at("boxes")) {
        scene::Box b;
        for (int k = 0; k < 3; ++k) {
            b.center[k] = jb.at("center").at(k).get<double>();
            b.size[k] = jb.at("size").at(k).get<double>();
        }
        b.yaw = jb.at("yaw").get<double>();
        b.class_id = jb.at("class_id").get<int>();
        s.boxes.push_back(b);
    }
    return s;
}

inline json load_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open: " + path);
    json j;
    f >> j;
    return j;
}

inline void save_json(const std::string& path, const json& j) {
    std::ofstream f(path);
    if (!f) throw IoError("cannot open for write: " + path);
    f << j.dump(2) << "\n";
}

inline geometry::CameraRig load_rig(const std::string& path) {
    return rig_from_json(load_json(path));
}
inline void save_rig(const std::string& path, const geometry::CameraRig& rig) {
    save_json(path, rig_to_json(rig));
}
inline scene::Scene load_scene(const std::string& path) {
    return scene_from_json(load_json(path));
}
inline void save_scene(const std::string& path, const scene::Scene& s) {
    save_json(path, scene_to_json(s));
}

}  // namespace or3d::io
