#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "ps3d/core/annotation.hpp"
#include "ps3d/core/camera.hpp"
#include "ps3d/core/errors.hpp"
#include "ps3d/core/frame.hpp"
#include "ps3d/core/rng.hpp"

namespace ps3d {

/// Synthetic RGB-D scene: articulated persons (head sphere, limb and torso
/// capsules) ray-cast into a closed room from an elevated, downward-pitched
/// camera, with flat-shaded colors, adjustable background color similarity,
/// and a depth channel with Gaussian noise plus fixed-step quantization.
struct SceneConfig {
    int width = 320;
    int height = 240;
    double fov_deg = 62.0;  // horizontal field of view

    int n_persons = 2;
    double min_person_depth = 2.0;   // camera-plane depth band for torsos, m
    double max_person_depth = 4.5;
    double min_person_separation = 0.55;  // 3D spacing between hip centers, m

    double camera_height = 2.2;     // m above the floor
    double camera_pitch_deg = 40.0; // downward pitch

    double room_depth = 7.0;        // back wall distance, m
    double room_half_width = 4.0;
    double room_height = 3.0;

    // limb lengths in meters; each person jitters them by +-length_jitter
    double torso_length = 0.50;
    double neck_length = 0.22;
    double shoulder_width = 0.38;
    double hip_width = 0.30;
    double upper_arm_length = 0.28;
    double forearm_length = 0.26;
    double length_jitter = 0.08;    // fraction

    // articulation ranges, degrees
    double max_arm_swing_deg = 70.0;
    double max_elbow_bend_deg = 110.0;
    double max_torso_lean_deg = 10.0;
    double yaw_range_deg = 60.0;    // facing direction spread around the camera

    double clutter_density = 0.5;   // ~10 * density scenery items
    double color_similarity = 0.7;  // 0 distinct background, 1 body-colored

    double depth_noise_sigma = 0.01;   // m
    double depth_quantization = 0.001; // m

    void validate() const {
        if (width < 32 || height < 32) throw ConfigInvalid("scene too small to render");
        if (!(fov_deg > 10.0 && fov_deg < 170.0)) throw ConfigInvalid("bad field of view");
        if (n_persons < 0) throw ConfigInvalid("negative person count");
        if (!(min_person_depth > 0.5) || max_person_depth < min_person_depth)
            throw ConfigInvalid("bad person depth band");
        if (!(camera_height > 0.0)) throw ConfigInvalid("camera below the floor");
        if (camera_pitch_deg < 0.0 || camera_pitch_deg > 80.0)
            throw ConfigInvalid("camera pitch outside [0, 80] degrees");
        if (room_depth < max_person_depth || room_half_width < 1.0 || room_height < 2.0)
            throw ConfigInvalid("room does not contain the person depth band");
        for (const double len : {torso_length, neck_length, shoulder_width, hip_width,
                                 upper_arm_length, forearm_length})
            if (!(len > 0.0) || len >= 0.9)
                throw ConfigInvalid("limb lengths must lie in (0, 0.9) meters");
        if (length_jitter < 0.0 || length_jitter > 0.3)
            throw ConfigInvalid("length jitter outside [0, 0.3]");
        if (color_similarity < 0.0 || color_similarity > 1.0)
            throw ConfigInvalid("color similarity outside [0, 1]");
        if (clutter_density < 0.0) throw ConfigInvalid("negative clutter density");
        if (depth_noise_sigma < 0.0) throw ConfigInvalid("negative depth noise");
        if (!(depth_quantization > 0.0)) throw ConfigInvalid("non-positive quantization step");
    }

    CameraIntrinsics intrinsics() const {
        const double f = (width / 2.0) / std::tan(fov_deg * M_PI / 360.0);
        return CameraIntrinsics::from_focal(f, f, (width - 1) / 2.0, (height - 1) / 2.0);
    }
};

namespace detail {

inline Point3D v_add(const Point3D& a, const Point3D& b) {
    return {a.x + b.x, a.y + b.y, a.z + b.z};
}
inline Point3D v_sub(const Point3D& a, const Point3D& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
}
inline Point3D v_scale(const Point3D& a, double s) { return {a.x * s, a.y * s, a.z * s}; }
inline double v_dot(const Point3D& a, const Point3D& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}
inline Point3D v_cross(const Point3D& a, const Point3D& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double v_norm(const Point3D& a) { return std::sqrt(v_dot(a, a)); }
inline Point3D v_unit(const Point3D& a) {
    const double n = v_norm(a);
    return n > 0.0 ? v_scale(a, 1.0 / n) : Point3D{0, 0, 1};
}

/// Rotation of d around unit axis w by angle g (Rodrigues, general form).
inline Point3D v_rotate(const Point3D& d, const Point3D& w, double g) {
    const double c = std::cos(g), s = std::sin(g);
    return v_add(v_add(v_scale(d, c), v_scale(v_cross(w, d), s)),
                 v_scale(w, v_dot(w, d) * (1.0 - c)));
}

struct Primitive {
    enum class Shape { Sphere, Capsule, Box } shape = Shape::Sphere;
    Point3D a, b;  // sphere: a = center; capsule: endpoints; box: min/max corners
    double r = 0.0;
    int owner = -1;           // person index, -1 for scenery
    bool upper_body = false;  // participates in boxes / occlusion statistics
    Rgb8 color{128, 128, 128};
};

constexpr double kRayMin = 1e-6;

inline bool hit_sphere(const Point3D& o, const Point3D& d, const Point3D& c, double r,
                       double& t) {
    const Point3D v = v_sub(o, c);
    const double a = v_dot(d, d);
    const double b = 2.0 * v_dot(v, d);
    const double cc = v_dot(v, v) - r * r;
    const double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) return false;
    const double root = (-b - std::sqrt(disc)) / (2.0 * a);
    if (root <= kRayMin) return false;
    t = root;
    return true;
}

inline bool hit_capsule(const Point3D& o, const Point3D& d, const Point3D& pa,
                        const Point3D& pb, double r, double& t) {
    double best = std::numeric_limits<double>::infinity();
    const Point3D ab = v_sub(pb, pa);
    const double len = v_norm(ab);
    if (len > 1e-9) {
        const Point3D u = v_scale(ab, 1.0 / len);
        const Point3D vo = v_sub(o, pa);
        const Point3D dp = v_sub(d, v_scale(u, v_dot(d, u)));
        const Point3D vp = v_sub(vo, v_scale(u, v_dot(vo, u)));
        const double a = v_dot(dp, dp);
        if (a > 1e-12) {
            const double b = 2.0 * v_dot(dp, vp);
            const double cc = v_dot(vp, vp) - r * r;
            const double disc = b * b - 4.0 * a * cc;
            if (disc >= 0.0) {
                const double root = (-b - std::sqrt(disc)) / (2.0 * a);
                if (root > kRayMin) {
                    const double s = v_dot(v_add(vo, v_scale(d, root)), u);
                    if (s >= 0.0 && s <= len) best = root;
                }
            }
        }
    }
    double tc;
    if (hit_sphere(o, d, pa, r, tc)) best = std::min(best, tc);
    if (hit_sphere(o, d, pb, r, tc)) best = std::min(best, tc);
    if (!std::isfinite(best)) return false;
    t = best;
    return true;
}

inline bool hit_box(const Point3D& o, const Point3D& d, const Point3D& lo, const Point3D& hi,
                    double& t) {
    double tlo = kRayMin, thi = std::numeric_limits<double>::infinity();
    const double os[3] = {o.x, o.y, o.z}, ds[3] = {d.x, d.y, d.z};
    const double ls[3] = {lo.x, lo.y, lo.z}, hs[3] = {hi.x, hi.y, hi.z};
    for (int i = 0; i < 3; ++i) {
        if (std::abs(ds[i]) < 1e-12) {
            if (os[i] < ls[i] || os[i] > hs[i]) return false;
            continue;
        }
        double t1 = (ls[i] - os[i]) / ds[i];
        double t2 = (hs[i] - os[i]) / ds[i];
        if (t1 > t2) std::swap(t1, t2);
        tlo = std::max(tlo, t1);
        thi = std::min(thi, t2);
        if (tlo > thi) return false;
    }
    t = tlo;
    return true;
}

inline bool hit_primitive(const Point3D& o, const Point3D& d, const Primitive& p, double& t) {
    switch (p.shape) {
        case Primitive::Shape::Sphere: return hit_sphere(o, d, p.a, p.r, t);
        case Primitive::Shape::Capsule: return hit_capsule(o, d, p.a, p.b, p.r, t);
        case Primitive::Shape::Box: return hit_box(o, d, p.a, p.b, t);
    }
    return false;
}

struct CameraPose {
    Point3D center;
    Point3D right, down, forward;  // camera axes in world coordinates

    Point3D ray_world(double u, double v, const CameraIntrinsics& k) const {
        const double xc = (u - k.cx) / k.fx, yc = (v - k.cy) / k.fy;
        // unnormalized with unit camera-forward component: the ray parameter
        // of a hit is then directly its camera-plane depth
        return v_add(v_add(v_scale(right, xc), v_scale(down, yc)), forward);
    }

    Point3D to_camera(const Point3D& pw) const {
        const Point3D rel = v_sub(pw, center);
        return {v_dot(rel, right), v_dot(rel, down), v_dot(rel, forward)};
    }
};

inline CameraPose make_camera(const SceneConfig& cfg) {
    const double th = cfg.camera_pitch_deg * M_PI / 180.0;
    CameraPose cam;
    cam.center = {0.0, 0.0, cfg.camera_height};
    cam.right = {1.0, 0.0, 0.0};
    cam.forward = {0.0, std::cos(th), -std::sin(th)};
    cam.down = {0.0, -std::sin(th), -std::cos(th)};
    return cam;
}

inline Rgb8 mix_color(const Rgb8& a, const Rgb8& b, double w) {
    auto mix = [&](std::uint8_t x, std::uint8_t y) {
        return std::uint8_t(std::clamp(int(std::lround(x + (double(y) - x) * w)), 0, 255));
    };
    return Rgb8{mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b)};
}

inline Rgb8 jitter_color(const Rgb8& c, Rng& rng, int amp) {
    auto j = [&](std::uint8_t v) {
        return std::uint8_t(std::clamp(int(v) + int(rng.uniform_int(-amp, amp)), 0, 255));
    };
    return Rgb8{j(c.r), j(c.g), j(c.b)};
}

inline Rgb8 pick_scrub(Rng& rng) {
    static const Rgb8 base[] = {{60, 120, 115}, {70, 100, 150}, {80, 140, 90}};
    return jitter_color(base[rng.uniform_int(0, 2)], rng, 12);
}

inline Rgb8 pick_skin(Rng& rng) {
    static const Rgb8 base[] = {{196, 160, 130}, {150, 110, 85}, {226, 192, 168}};
    return jitter_color(base[rng.uniform_int(0, 2)], rng, 8);
}

inline Rgb8 pick_scenery(Rng& rng, double similarity) {
    static const Rgb8 base[] = {{95, 92, 98}, {142, 138, 132}, {152, 122, 100}, {98, 108, 128}};
    const Rgb8 neutral = jitter_color(base[rng.uniform_int(0, 3)], rng, 10);
    const Rgb8 bodylike = rng.bernoulli(0.5) ? pick_scrub(rng) : pick_skin(rng);
    return mix_color(neutral, bodylike, similarity);
}

struct PersonBuild {
    std::array<Point3D, kNumJoints> joints;  // world coordinates
    std::vector<Primitive> prims;
};

inline PersonBuild build_person(const SceneConfig& cfg, Rng& rng, int index, double x0,
                                double y0) {
    auto rad = [](double deg) { return deg * M_PI / 180.0; };
    auto jitter = [&](double len) { return len * (1.0 + cfg.length_jitter * rng.uniform(-1, 1)); };

    const double leg_height = jitter(0.95);
    const double torso = jitter(cfg.torso_length);
    const double neck = jitter(cfg.neck_length);
    const double shoulder_w = jitter(cfg.shoulder_width);
    const double hip_w = jitter(cfg.hip_width);
    const double girth = 0.9 + 0.2 * rng.uniform01();

    const double lean = rad(cfg.max_torso_lean_deg) * rng.uniform01();
    const double lean_dir = rng.uniform(0.0, 2.0 * M_PI);
    const Point3D up{std::sin(lean) * std::cos(lean_dir), std::sin(lean) * std::sin(lean_dir),
                     std::cos(lean)};
    const double yaw = rad(cfg.yaw_range_deg) * rng.uniform(-0.5, 0.5);
    const Point3D facing{std::sin(yaw), -std::cos(yaw), 0.0};  // yaw 0 faces the camera
    const Point3D left = v_unit(v_cross(up, facing));

    PersonBuild pb;
    const Point3D hip_c{x0, y0, leg_height};
    const Point3D shoulder_c = v_add(hip_c, v_scale(up, torso));
    const Point3D head = v_add(shoulder_c, v_scale(up, neck));
    const Point3D s_l = v_add(shoulder_c, v_scale(left, shoulder_w / 2));
    const Point3D s_r = v_sub(shoulder_c, v_scale(left, shoulder_w / 2));
    const Point3D h_l = v_add(hip_c, v_scale(left, hip_w / 2));
    const Point3D h_r = v_sub(hip_c, v_scale(left, hip_w / 2));

    const Rgb8 scrub = pick_scrub(rng);
    const Rgb8 skin = pick_skin(rng);
    const Rgb8 leg_color = mix_color(scrub, Rgb8{30, 30, 40}, 0.35);

    auto arm = [&](const Point3D& s, double side) {
        const double abduct = rad(rng.uniform(-10.0, cfg.max_arm_swing_deg));
        const double flex = rad(cfg.max_arm_swing_deg) * rng.uniform(-0.5, 1.0);
        Point3D dir = v_add(v_scale(up, -std::cos(abduct) * std::cos(flex)),
                            v_add(v_scale(left, side * std::sin(abduct)),
                                  v_scale(facing, std::sin(flex) * std::cos(abduct))));
        dir = v_unit(dir);
        const Point3D elbow = v_add(s, v_scale(dir, jitter(cfg.upper_arm_length)));
        Point3D axis = v_cross(dir, Point3D{rng.uniform(-1, 1), rng.uniform(-1, 1),
                                            rng.uniform(-1, 1)});
        if (v_norm(axis) < 1e-6) axis = v_cross(dir, Point3D{1, 0, 0});
        axis = v_unit(axis);
        const double bend = rad(rng.uniform(10.0, cfg.max_elbow_bend_deg));
        const Point3D fdir = v_rotate(dir, axis, bend);
        const Point3D wrist = v_add(elbow, v_scale(fdir, jitter(cfg.forearm_length)));
        return std::pair<Point3D, Point3D>{elbow, wrist};
    };
    const auto [e_l, w_l] = arm(s_l, +1.0);
    const auto [e_r, w_r] = arm(s_r, -1.0);

    pb.joints[int(Joint::Head)] = head;
    pb.joints[int(Joint::LeftShoulder)] = s_l;
    pb.joints[int(Joint::RightShoulder)] = s_r;
    pb.joints[int(Joint::LeftElbow)] = e_l;
    pb.joints[int(Joint::RightElbow)] = e_r;
    pb.joints[int(Joint::LeftWrist)] = w_l;
    pb.joints[int(Joint::RightWrist)] = w_r;
    pb.joints[int(Joint::LeftHip)] = h_l;
    pb.joints[int(Joint::RightHip)] = h_r;

    auto add = [&](Primitive p) {
        p.owner = index;
        pb.prims.push_back(p);
    };
    add({Primitive::Shape::Sphere, head, {}, 0.11 * girth, 0, true, skin});
    add({Primitive::Shape::Capsule, hip_c, shoulder_c, 0.16 * girth, 0, true, scrub});
    add({Primitive::Shape::Capsule, s_l, e_l, 0.050 * girth, 0, true, scrub});
    add({Primitive::Shape::Capsule, s_r, e_r, 0.050 * girth, 0, true, scrub});
    add({Primitive::Shape::Capsule, e_l, w_l, 0.045 * girth, 0, true, skin});
    add({Primitive::Shape::Capsule, e_r, w_r, 0.045 * girth, 0, true, skin});
    add({Primitive::Shape::Capsule, h_l, Point3D{h_l.x + 0.03, h_l.y, 0.0}, 0.065 * girth, 0,
         false, leg_color});
    add({Primitive::Shape::Capsule, h_r, Point3D{h_r.x - 0.03, h_r.y, 0.0}, 0.065 * girth, 0,
         false, leg_color});
    return pb;
}

/// Closed room as six boxes just outside the walls so that every forward
/// ray terminates on scenery with a valid depth.
inline std::vector<Primitive> build_room(const SceneConfig& cfg, Rng& rng) {
    const double hw = cfg.room_half_width, rd = cfg.room_depth, rh = cfg.room_height;
    const double pad = 0.2, back = 1.0;
    std::vector<Primitive> prims;
    auto slab = [&](Point3D lo, Point3D hi) {
        prims.push_back({Primitive::Shape::Box, lo, hi, 0.0, -1, false,
                         pick_scenery(rng, cfg.color_similarity)});
    };
    slab({-hw - pad, -back, -pad}, {hw + pad, rd + pad, 0.0});          // floor
    slab({-hw - pad, -back, rh}, {hw + pad, rd + pad, rh + pad});       // ceiling
    slab({-hw - pad, rd, -pad}, {hw + pad, rd + pad, rh + pad});        // back wall
    slab({-hw - pad, -back - pad, -pad}, {hw + pad, -back, rh + pad});  // behind camera
    slab({-hw - pad, -back, -pad}, {-hw, rd + pad, rh + pad});          // left wall
    slab({hw, -back, -pad}, {hw + pad, rd + pad, rh + pad});            // right wall
    return prims;
}

inline std::vector<Primitive> build_clutter(const SceneConfig& cfg, Rng& rng) {
    std::vector<Primitive> prims;
    const int n = int(std::lround(cfg.clutter_density * 10.0));
    for (int i = 0; i < n; ++i) {
        const double x = rng.uniform(-cfg.room_half_width + 0.4, cfg.room_half_width - 0.4);
        const double y = rng.uniform(1.2, cfg.room_depth - 0.3);
        const Rgb8 color = pick_scenery(rng, cfg.color_similarity);
        const int kind = int(rng.uniform_int(0, 2));
        if (kind == 0) {  // pole
            const double h = rng.uniform(0.8, 1.9), r = rng.uniform(0.03, 0.10);
            prims.push_back({Primitive::Shape::Capsule, {x, y, 0.0}, {x, y, h}, r, -1, false,
                             color});
        } else if (kind == 1) {  // cart / table
            const double ex = rng.uniform(0.2, 0.55), ey = rng.uniform(0.2, 0.55);
            const double h = rng.uniform(0.6, 1.1);
            prims.push_back({Primitive::Shape::Box, {x - ex, y - ey, 0.0}, {x + ex, y + ey, h},
                             0.0, -1, false, color});
        } else {  // lamp / equipment ball
            const double r = rng.uniform(0.08, 0.22), h = rng.uniform(0.5, 1.9);
            prims.push_back({Primitive::Shape::Sphere, {x, y, h}, {}, r, -1, false, color});
        }
    }
    return prims;
}

struct HitRecord {
    double t = std::numeric_limits<double>::infinity();
    int prim = -1;
};

inline HitRecord trace(const Point3D& o, const Point3D& d, const std::vector<Primitive>& prims,
                       int only_owner, bool upper_only) {
    HitRecord h;
    for (std::size_t i = 0; i < prims.size(); ++i) {
        const Primitive& p = prims[i];
        if (only_owner >= 0 && (p.owner != only_owner || (upper_only && !p.upper_body)))
            continue;
        double t;
        if (hit_primitive(o, d, p, t) && t < h.t) {
            h.t = t;
            h.prim = int(i);
        }
    }
    return h;
}

}  // namespace detail

/// Full generator output including the oracle channels that do not belong in
/// the frame files: the pre-noise surface depth and, per person, the exact
/// 3D surface points behind each annotated joint pixel.
struct SceneRender {
    RgbdFrame frame;
    DepthImage clean_depth;  // pre-noise, pre-quantization camera-plane depth
    std::vector<std::array<Point3D, kNumJoints>> joint_points;  // camera coordinates
    std::vector<std::array<bool, kNumJoints>> joint_has3d;
};

inline SceneRender render_scene(const SceneConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    const CameraIntrinsics intr = cfg.intrinsics();
    const detail::CameraPose cam = detail::make_camera(cfg);
    const double th = cfg.camera_pitch_deg * M_PI / 180.0;

    std::vector<detail::Primitive> prims = detail::build_room(cfg, rng);
    {
        std::vector<detail::Primitive> clutter = detail::build_clutter(cfg, rng);
        prims.insert(prims.end(), clutter.begin(), clutter.end());
    }

    // place persons inside the camera depth band with pairwise separation
    std::vector<detail::PersonBuild> persons;
    std::vector<Point3D> hips;
    const double half_fov = cfg.fov_deg * M_PI / 360.0;
    for (int i = 0; i < cfg.n_persons; ++i) {
        double x0 = 0.0, y0 = 2.5;
        for (int attempt = 0; attempt < 64; ++attempt) {
            const double zc = rng.uniform(cfg.min_person_depth, cfg.max_person_depth);
            const double y = (zc - std::sin(th) * (cfg.camera_height - 1.2)) / std::cos(th);
            const double lateral =
                std::min(cfg.room_half_width - 0.7, 0.75 * zc * std::tan(half_fov));
            const double x = rng.uniform(-lateral, lateral);
            bool ok = y > 0.8 && y < cfg.room_depth - 0.6;
            for (const Point3D& h : hips)
                ok = ok && std::hypot(h.x - x, h.y - y) >=
                               std::max(cfg.min_person_separation, 0.55);
            if (ok || attempt == 63) {
                x0 = x;
                y0 = y;
                break;
            }
        }
        hips.push_back({x0, y0, 0.0});
        detail::PersonBuild pb = detail::build_person(cfg, rng, i, x0, y0);
        for (detail::Primitive& p : pb.prims) prims.push_back(p);
        persons.push_back(std::move(pb));
    }

    // full-scene visibility pass
    SceneRender out;
    out.frame.color = ColorImage(cfg.width, cfg.height, Rgb8{0, 0, 0});
    out.frame.depth = DepthImage(cfg.width, cfg.height, kInvalidDepth);
    out.frame.intrinsics = intr;
    out.clean_depth = DepthImage(cfg.width, cfg.height, kInvalidDepth);
    Image<std::int16_t> owner(cfg.width, cfg.height, -1);
    Image<std::uint8_t> upper(cfg.width, cfg.height, 0);
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const Point3D d = cam.ray_world(x, y, intr);
            const detail::HitRecord h = detail::trace(cam.center, d, prims, -1, false);
            if (h.prim < 0) continue;
            const detail::Primitive& p = prims[std::size_t(h.prim)];
            out.frame.color.at(x, y) = p.color;
            out.clean_depth.at(x, y) = float(h.t);
            owner.at(x, y) = std::int16_t(p.owner);
            upper.at(x, y) = p.owner >= 0 && p.upper_body ? 1 : 0;
        }

    // per-person statistics from a solo upper-body pass over the projected
    // support, then joint annotations
    for (int i = 0; i < int(persons.size()); ++i) {
        const detail::PersonBuild& pb = persons[i];
        // conservative pixel window around the projected joints
        double umin = 1e9, umax = -1e9, vmin = 1e9, vmax = -1e9, zmin = 1e9;
        std::array<std::pair<double, double>, kNumJoints> px;
        bool behind = false;
        for (int j = 0; j < kNumJoints; ++j) {
            const Point3D pc = cam.to_camera(pb.joints[j]);
            if (pc.z <= 0.05) {
                behind = true;
                break;
            }
            px[j] = project(pc, intr);
            umin = std::min(umin, px[j].first);
            umax = std::max(umax, px[j].first);
            vmin = std::min(vmin, px[j].second);
            vmax = std::max(vmax, px[j].second);
            zmin = std::min(zmin, pc.z);
        }
        if (behind) continue;
        const double margin = 0.45 / zmin * intr.fx;
        const int x0 = std::max(0, int(std::floor(umin - margin)));
        const int x1 = std::min(cfg.width - 1, int(std::ceil(umax + margin)));
        const int y0 = std::max(0, int(std::floor(vmin - margin)));
        const int y1 = std::min(cfg.height - 1, int(std::ceil(vmax + margin)));

        long solo_px = 0, visible_px = 0;
        int bx0 = cfg.width, bx1 = -1, by0 = cfg.height, by1 = -1;
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const Point3D d = cam.ray_world(x, y, intr);
                const detail::HitRecord h = detail::trace(cam.center, d, prims, i, true);
                if (h.prim < 0) continue;
                ++solo_px;
                bx0 = std::min(bx0, x);
                bx1 = std::max(bx1, x);
                by0 = std::min(by0, y);
                by1 = std::max(by1, y);
                if (owner.at(x, y) == i && upper.at(x, y)) ++visible_px;
            }
        if (solo_px == 0) continue;  // fully outside the image

        PersonAnnotation ann;
        ann.bbox = BoxF{double(bx0), double(by0), double(bx1 - bx0 + 1), double(by1 - by0 + 1)};
        ann.difficult = double(solo_px - visible_px) / double(solo_px) > 0.5;

        std::array<Point3D, kNumJoints> jpoints{};
        std::array<bool, kNumJoints> jvalid{};
        for (int j = 0; j < kNumJoints; ++j) {
            const double u = px[j].first, v = px[j].second;
            ann.joints[j].u = u;
            ann.joints[j].v = v;
            const int ui = int(std::lround(u)), vi = int(std::lround(v));
            // both the subpixel position and its rounded pixel must be inside
            const bool inside = u >= 0.0 && u < cfg.width && v >= 0.0 && v < cfg.height &&
                                ui < cfg.width && vi < cfg.height;
            ann.joints[j].visible = inside && owner.at(ui, vi) == i && upper.at(ui, vi) == 1;
            // surface point behind the joint pixel, ignoring occluders; cast
            // through the stored pixel's center so the depth image agrees
            // with this point wherever the joint is visible
            const double ur = inside ? double(ui) : u, vr = inside ? double(vi) : v;
            const Point3D d = cam.ray_world(ur, vr, intr);
            const detail::HitRecord h = detail::trace(cam.center, d, prims, i, true);
            if (h.prim >= 0) {
                jpoints[j] = reproject(u, v, h.t, intr);
                jvalid[j] = true;
            }
        }
        out.frame.annotations.push_back(ann);
        out.joint_points.push_back(jpoints);
        out.joint_has3d.push_back(jvalid);
    }

    // depth channel: Gaussian noise then fixed-step quantization
    const double step = cfg.depth_quantization;
    for (int y = 0; y < cfg.height; ++y)
        for (int x = 0; x < cfg.width; ++x) {
            const float z = out.clean_depth.at(x, y);
            if (z == kInvalidDepth) continue;
            double zn = double(z);
            if (cfg.depth_noise_sigma > 0.0) zn += rng.normal(0.0, cfg.depth_noise_sigma);
            out.frame.depth.at(x, y) = float(std::max(1.0, std::round(zn / step)) * step);
        }

    return out;
}

inline RgbdFrame generate_scene(const SceneConfig& cfg, std::uint64_t seed) {
    return render_scene(cfg, seed).frame;
}

}  // namespace ps3d
