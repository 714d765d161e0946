//! Synthetic scenes with ground-truth 3D boxes and oracle 2D detections.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::camera::{CamPoint, CameraModel};
use crate::error::{Error, Result};
use crate::geometry::{self, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ClassName {
    Car,
    Pedestrian,
}

impl ClassName {
    pub const ALL: [ClassName; 2] = [ClassName::Car, ClassName::Pedestrian];

    pub fn as_str(&self) -> &'static str {
        match self {
            ClassName::Car => "Car",
            ClassName::Pedestrian => "Pedestrian",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            ClassName::Car => 0,
            ClassName::Pedestrian => 1,
        }
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for ClassName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Car" => Ok(ClassName::Car),
            "Pedestrian" => Ok(ClassName::Pedestrian),
            other => Err(Error::InvalidArgument(format!("unknown class `{other}`"))),
        }
    }
}

/// Per-class dimension statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectClass {
    pub name: ClassName,
    /// Mean (h, w, l), meters.
    pub dim_mean: [f64; 3],
    /// Standard deviation of the height, meters.
    pub dim_sigma: f64,
}

impl ObjectClass {
    /// Heights centered on 1.75 m; two sigma spans 1.5 to 2.0 m.
    pub fn pedestrian() -> Self {
        Self {
            name: ClassName::Pedestrian,
            dim_mean: [1.75, 0.6, 0.8],
            dim_sigma: 0.125,
        }
    }

    /// Generator defaults; recompute from labels for real data.
    pub fn car() -> Self {
        Self {
            name: ClassName::Car,
            dim_mean: [1.55, 1.85, 4.30],
            dim_sigma: 0.15,
        }
    }

    pub fn defaults(name: ClassName) -> Self {
        match name {
            ClassName::Car => Self::car(),
            ClassName::Pedestrian => Self::pedestrian(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim_mean.iter().all(|&m| m > 0.0) && self.dim_sigma > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidStats(format!("{self:?}")))
        }
    }

    /// Standard deviations of (h, w, l); width and length share the height's
    /// relative spread.
    pub fn dim_sigmas(&self) -> [f64; 3] {
        let rel = self.dim_sigma / self.dim_mean[0];
        [self.dim_sigma, rel * self.dim_mean[1], rel * self.dim_mean[2]]
    }
}

/// Class statistics for both modeled classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub car: ObjectClass,
    pub pedestrian: ObjectClass,
}

impl Default for ClassStats {
    fn default() -> Self {
        Self {
            car: ObjectClass::car(),
            pedestrian: ObjectClass::pedestrian(),
        }
    }
}

impl ClassStats {
    pub fn get(&self, name: ClassName) -> &ObjectClass {
        match name {
            ClassName::Car => &self.car,
            ClassName::Pedestrian => &self.pedestrian,
        }
    }
}

/// 3D box in the camera frame. `center` is the bottom-face center; the box
/// spans y in [center.y - h, center.y].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub class: ClassName,
    pub center: CamPoint,
    pub h: f64,
    pub w: f64,
    pub l: f64,
    pub yaw: f64,
    pub score: f64,
}

impl Box3D {
    pub fn new(class: ClassName, center: CamPoint, [h, w, l]: [f64; 3], yaw: f64) -> Self {
        Self {
            class,
            center,
            h,
            w,
            l,
            yaw,
            score: 1.0,
        }
    }

    pub fn dims(&self) -> [f64; 3] {
        [self.h, self.w, self.l]
    }

    pub fn volume(&self) -> f64 {
        self.h * self.w * self.l
    }

    /// Footprint in the (x, z) plane. Length runs along the heading.
    pub fn bev_polygon(&self) -> [Point2; 4] {
        let (s, c) = self.yaw.sin_cos();
        // Heading (cos, -sin) in (x, z).
        geometry::rotated_rect([self.center.x, self.center.z], self.l, self.w, c, -s)
    }

    pub fn corners(&self) -> [CamPoint; 8] {
        let bev = self.bev_polygon();
        let y_bottom = self.center.y;
        let y_top = self.center.y - self.h;
        let mut out = [CamPoint::new(0.0, 0.0, 0.0); 8];
        for (i, [x, z]) in bev.iter().enumerate() {
            out[i] = CamPoint::new(*x, y_bottom, *z);
            out[i + 4] = CamPoint::new(*x, y_top, *z);
        }
        out
    }

    /// Fronto-parallel rectangle (x0, x1, y0, y1) spanning the box silhouette
    /// at the center depth.
    pub fn billboard(&self) -> (f64, f64, f64, f64) {
        let (s, c) = self.yaw.sin_cos();
        let half = 0.5 * (self.l * c.abs() + self.w * s.abs());
        (
            self.center.x - half,
            self.center.x + half,
            self.center.y - self.h,
            self.center.y,
        )
    }
}

/// Axis-aligned image box given by center and size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box2D {
    pub class: ClassName,
    pub u: f64,
    pub v: f64,
    pub w_u: f64,
    pub h_v: f64,
    pub score: f64,
}

impl Box2D {
    pub fn from_bounds(class: ClassName, u0: f64, v0: f64, u1: f64, v1: f64, score: f64) -> Self {
        Self {
            class,
            u: 0.5 * (u0 + u1),
            v: 0.5 * (v0 + v1),
            w_u: u1 - u0,
            h_v: v1 - v0,
            score,
        }
    }

    /// (u0, v0, u1, v1).
    pub fn bounds(&self) -> (f64, f64, f64, f64) {
        (
            self.u - 0.5 * self.w_u,
            self.v - 0.5 * self.h_v,
            self.u + 0.5 * self.w_u,
            self.v + 0.5 * self.h_v,
        )
    }

    pub fn area(&self) -> f64 {
        self.w_u * self.h_v
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneObject {
    pub bbox: Box3D,
    pub albedo: f64,
}

/// Far lambertian backdrop; `range: None` means no return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Background {
    pub albedo: f64,
    pub range: Option<f64>,
}

/// Horizontal ground plane `height` meters below the optical center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundPlane {
    pub height: f64,
    pub albedo: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneDescription {
    pub frame_id: u64,
    pub objects: Vec<SceneObject>,
    pub background: Option<Background>,
    pub ground: Option<GroundPlane>,
    /// Set when rejection sampling gave up on an object.
    pub placement_failed: bool,
}

impl SceneDescription {
    pub fn empty(frame_id: u64) -> Self {
        Self {
            frame_id,
            objects: Vec::new(),
            background: None,
            ground: None,
            placement_failed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassWeight {
    pub class: ObjectClass,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub classes: Vec<ClassWeight>,
    pub min_objects: usize,
    pub max_objects: usize,
    pub z_min: f64,
    pub z_max: f64,
    /// Fraction of the horizontal field of view used for object centers.
    pub lateral_fraction: f64,
    /// Camera height above the ground; bottom faces sit at y = this value
    /// plus the terrain offset.
    pub camera_height: f64,
    /// Standard deviation of a per-object vertical offset of the ground
    /// contact point (road grade, bumps), meters. Truncated at 3 sigma.
    pub terrain_sigma: f64,
    pub albedo_range: [f64; 2],
    pub background: Option<Background>,
    pub ground_albedo: Option<f64>,
    pub max_retries: usize,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            classes: vec![
                ClassWeight {
                    class: ObjectClass::car(),
                    weight: 0.5,
                },
                ClassWeight {
                    class: ObjectClass::pedestrian(),
                    weight: 0.5,
                },
            ],
            min_objects: 1,
            max_objects: 6,
            z_min: 3.0,
            z_max: 120.0,
            lateral_fraction: 0.9,
            camera_height: 1.6,
            terrain_sigma: 0.0,
            albedo_range: [0.2, 0.9],
            background: None,
            ground_albedo: None,
            max_retries: 100,
        }
    }
}

impl SceneConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() && self.max_objects > 0 {
            return Err(Error::config("scene.classes", "class list is empty"));
        }
        for (i, c) in self.classes.iter().enumerate() {
            c.class
                .validate()
                .map_err(|e| Error::config(format!("scene.classes[{i}]"), e.to_string()))?;
            if !(c.weight > 0.0) {
                return Err(Error::config(format!("scene.classes[{i}].weight"), "must be > 0"));
            }
        }
        if self.min_objects > self.max_objects {
            return Err(Error::config("scene.min_objects", "exceeds max_objects"));
        }
        if !(self.z_min > 0.0 && self.z_max > self.z_min) {
            return Err(Error::config("scene.z_min/z_max", "need 0 < z_min < z_max"));
        }
        if !(self.lateral_fraction > 0.0 && self.lateral_fraction <= 1.0) {
            return Err(Error::config("scene.lateral_fraction", "must be in (0, 1]"));
        }
        if !(self.terrain_sigma >= 0.0 && self.terrain_sigma.is_finite()) {
            return Err(Error::config("scene.terrain_sigma", "must be >= 0"));
        }
        let [a0, a1] = self.albedo_range;
        if !(0.0 <= a0 && a0 <= a1 && a1 <= 1.0) {
            return Err(Error::config("scene.albedo_range", "must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Gaussian draw truncated to mean ± 3 sigma by rejection.
fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sigma: f64) -> f64 {
    let normal = Normal::new(mean, sigma).expect("sigma validated positive");
    loop {
        let x = normal.sample(rng);
        if (x - mean).abs() <= 3.0 * sigma {
            return x;
        }
    }
}

/// Draws (h, w, l) for one object.
pub fn sample_dims<R: Rng + ?Sized>(class: &ObjectClass, rng: &mut R) -> [f64; 3] {
    let sig = class.dim_sigmas();
    [0, 1, 2].map(|i| truncated_normal(rng, class.dim_mean[i], sig[i]))
}

fn pick_class<'a, R: Rng + ?Sized>(classes: &'a [ClassWeight], rng: &mut R) -> &'a ObjectClass {
    let total: f64 = classes.iter().map(|c| c.weight).sum();
    let mut t = rng.random::<f64>() * total;
    for c in classes {
        if t < c.weight {
            return &c.class;
        }
        t -= c.weight;
    }
    &classes[classes.len() - 1].class
}

/// Samples a scene with BEV-disjoint objects.
pub fn sample_scene<R: Rng + ?Sized>(
    cfg: &SceneConfig,
    cam: &CameraModel,
    frame_id: u64,
    rng: &mut R,
) -> Result<SceneDescription> {
    cfg.validate()?;
    let mut scene = SceneDescription {
        frame_id,
        objects: Vec::new(),
        background: cfg.background,
        ground: cfg.ground_albedo.map(|albedo| GroundPlane {
            height: cfg.camera_height,
            albedo,
        }),
        placement_failed: false,
    };
    if cfg.max_objects == 0 {
        return Ok(scene);
    }
    let count = rng.random_range(cfg.min_objects..=cfg.max_objects);
    let left = cam.c_u / cam.f_u * cfg.lateral_fraction;
    let right = (cam.width as f64 - cam.c_u) / cam.f_u * cfg.lateral_fraction;
    let [a0, a1] = cfg.albedo_range;

    'objects: for _ in 0..count {
        let class = pick_class(&cfg.classes, rng);
        for _ in 0..cfg.max_retries {
            let z = rng.random_range(cfg.z_min..=cfg.z_max);
            let x = rng.random_range(-left * z..=right * z);
            let dims = sample_dims(class, rng);
            let yaw = crate::camera::wrap_to_pi(rng.random_range(-PI..PI));
            let albedo = if a1 > a0 { rng.random_range(a0..=a1) } else { a0 };
            let y = if cfg.terrain_sigma > 0.0 {
                truncated_normal(rng, cfg.camera_height, cfg.terrain_sigma)
            } else {
                cfg.camera_height
            };
            let b = Box3D::new(class.name, CamPoint::new(x, y, z), dims, yaw);
            let fp = b.bev_polygon();
            let clear = scene
                .objects
                .iter()
                .all(|o| geometry::intersection_area(&fp, &o.bbox.bev_polygon()) == 0.0);
            if clear {
                scene.objects.push(SceneObject { bbox: b, albedo });
                continue 'objects;
            }
        }
        log::warn!("frame {frame_id}: object placement failed after {} retries", cfg.max_retries);
        scene.placement_failed = true;
    }
    Ok(scene)
}

/// Axis-aligned hull of the projected cuboid, clipped to the image.
pub fn oracle_box2d(b: &Box3D, cam: &CameraModel) -> Result<Box2D> {
    const Z_NEAR: f64 = 1e-3;
    let corners = b.corners();
    let mut any = false;
    let (mut u0, mut v0, mut u1, mut v1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for c in corners.iter().filter(|c| c.z > Z_NEAR) {
        let p = cam.project(*c)?;
        any = true;
        u0 = u0.min(p.u);
        v0 = v0.min(p.v);
        u1 = u1.max(p.u);
        v1 = v1.max(p.v);
    }
    if !any {
        return Err(Error::BehindCamera);
    }
    let (w, h) = (cam.width as f64, cam.height as f64);
    let (u0, v0, u1, v1) = (u0.max(0.0), v0.max(0.0), u1.min(w), v1.min(h));
    if u1 <= u0 || v1 <= v0 {
        return Err(Error::FullyOutOfImage);
    }
    Ok(Box2D::from_bounds(b.class, u0, v0, u1, v1, 1.0))
}

/// Jitters a 2D box to mimic an imperfect detector.
pub fn perturb_box2d<R: Rng + ?Sized>(b: &Box2D, level: f64, rng: &mut R) -> Result<Box2D> {
    if !(level >= 0.0) {
        return Err(Error::InvalidArgument(format!("noise level {level}")));
    }
    if level == 0.0 {
        return Ok(*b);
    }
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let e: [f64; 4] = [0; 4].map(|_| std.sample(rng));
    let out = Box2D {
        class: b.class,
        u: b.u + e[0] * level * b.w_u,
        v: b.v + e[1] * level * b.h_v,
        w_u: b.w_u * (e[2] * level).exp(),
        h_v: b.h_v * (e[3] * level).exp(),
        score: b.score * (-level * e.iter().map(|x| x * x).sum::<f64>().sqrt()).exp(),
    };
    Ok(out)
}
