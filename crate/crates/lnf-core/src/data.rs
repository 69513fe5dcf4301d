//! Synthetic labeled point clouds for desk-scale experiments, triangle
//! meshes, and area-weighted surface sampling.
//!
//! The shape families are chosen so that geometry alone separates the
//! classes while local fine structure still matters (torus vs cylinder),
//! which keeps the feature ablations meaningful at small scale.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::{normalize_unit_sphere, Point3, PointCloud};
use crate::error::{Error, Result};
use crate::math;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShapeFamily {
    Sphere,
    Cube,
    Cylinder,
    Cone,
    Torus,
    Plane,
    Pyramid,
    Helix,
}

impl ShapeFamily {
    pub const ALL: [ShapeFamily; 8] = [
        ShapeFamily::Sphere,
        ShapeFamily::Cube,
        ShapeFamily::Cylinder,
        ShapeFamily::Cone,
        ShapeFamily::Torus,
        ShapeFamily::Plane,
        ShapeFamily::Pyramid,
        ShapeFamily::Helix,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapeFamily::Sphere => "sphere",
            ShapeFamily::Cube => "cube",
            ShapeFamily::Cylinder => "cylinder",
            ShapeFamily::Cone => "cone",
            ShapeFamily::Torus => "torus",
            ShapeFamily::Plane => "plane",
            ShapeFamily::Pyramid => "pyramid",
            ShapeFamily::Helix => "helix",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|f| f.name() == name)
    }
}

/// Synthetic dataset description; fully determines the dataset given the
/// seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub classes: Vec<ShapeFamily>,
    pub clouds_per_class: usize,
    pub points_per_cloud: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn desk_scale(seed: u64) -> Self {
        SyntheticSpec {
            classes: ShapeFamily::ALL.to_vec(),
            clouds_per_class: 50,
            points_per_cloud: 512,
            noise_sigma: 0.02,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() {
            return Err(Error::InvalidSpec("no shape classes".into()));
        }
        if self.clouds_per_class == 0 {
            return Err(Error::InvalidSpec("clouds_per_class must be >= 1".into()));
        }
        if self.points_per_cloud < 8 {
            return Err(Error::InvalidSpec("points_per_cloud must be >= 8".into()));
        }
        if !(self.noise_sigma >= 0.0) {
            return Err(Error::InvalidSpec("noise_sigma must be >= 0".into()));
        }
        Ok(())
    }
}

/// Labeled train/val/test splits.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<PointCloud>,
    pub val: Vec<PointCloud>,
    pub test: Vec<PointCloud>,
}

/// A triangle mesh for surface sampling; faces index into `vertices`.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        let n = vertices.len();
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {fi} references a vertex >= {n}"
                )));
            }
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMesh(format!("non-finite vertex {i}")));
        }
        Ok(TriangleMesh { vertices, faces })
    }

    pub fn face_area(&self, fi: usize) -> f64 {
        let [a, b, c] = self.faces[fi];
        let (va, vb, vc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        let u = vb.sub(&va);
        let v = vc.sub(&va);
        let cx = u.y * v.z - u.z * v.y;
        let cy = u.z * v.x - u.x * v.z;
        let cz = u.x * v.y - u.y * v.x;
        0.5 * math::sqrt(cx * cx + cy * cy + cz * cz)
    }

    pub fn total_area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }
}

/// Sample `n` points on the mesh surface, per-face probability proportional
/// to area, uniform barycentric within each face.
pub fn sample_surface(mesh: &TriangleMesh, n: usize, rng: &mut Rng) -> Result<PointCloud> {
    let mut cumulative = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for fi in 0..mesh.faces.len() {
        total += mesh.face_area(fi);
        cumulative.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::InvalidMesh("zero total surface area".into()));
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.next_f64() * total;
        let fi = cumulative.partition_point(|&c| c <= t).min(mesh.faces.len() - 1);
        let [a, b, c] = mesh.faces[fi];
        let (va, vb, vc) = (mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]);
        let mut u = rng.next_f64();
        let mut v = rng.next_f64();
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        points.push(Point3::new(
            va.x + u * (vb.x - va.x) + v * (vc.x - va.x),
            va.y + u * (vb.y - va.y) + v * (vc.y - va.y),
            va.z + u * (vb.z - va.z) + v * (vc.z - va.z),
        ));
    }
    PointCloud::new(points)
}

fn unit_cube_mesh() -> TriangleMesh {
    // [-1,1]^3 box
    let vertices = vec![
        Point3::new(-1.0, -1.0, -1.0),
        Point3::new(1.0, -1.0, -1.0),
        Point3::new(1.0, 1.0, -1.0),
        Point3::new(-1.0, 1.0, -1.0),
        Point3::new(-1.0, -1.0, 1.0),
        Point3::new(1.0, -1.0, 1.0),
        Point3::new(1.0, 1.0, 1.0),
        Point3::new(-1.0, 1.0, 1.0),
    ];
    let quads = [
        [0, 1, 2, 3],
        [4, 5, 6, 7],
        [0, 1, 5, 4],
        [2, 3, 7, 6],
        [1, 2, 6, 5],
        [0, 3, 7, 4],
    ];
    let mut faces = Vec::new();
    for q in quads {
        faces.push([q[0], q[1], q[2]]);
        faces.push([q[0], q[2], q[3]]);
    }
    TriangleMesh::new(vertices, faces).expect("static mesh")
}

fn pyramid_mesh() -> TriangleMesh {
    let vertices = vec![
        Point3::new(-1.0, -1.0, 0.0),
        Point3::new(1.0, -1.0, 0.0),
        Point3::new(1.0, 1.0, 0.0),
        Point3::new(-1.0, 1.0, 0.0),
        Point3::new(0.0, 0.0, 1.4),
    ];
    let faces = vec![
        [0, 1, 4],
        [1, 2, 4],
        [2, 3, 4],
        [3, 0, 4],
        [0, 1, 2],
        [0, 2, 3],
    ];
    TriangleMesh::new(vertices, faces).expect("static mesh")
}

fn sample_shape(family: ShapeFamily, n: usize, rng: &mut Rng) -> Vec<Point3> {
    match family {
        ShapeFamily::Sphere => {
            // antipodal pairs keep the sample centroid exactly at the
            // origin, so unit-sphere normalization leaves the surface exact
            let mut points = Vec::with_capacity(n + 1);
            while points.len() < n {
                let p = loop {
                    let p = Point3::new(rng.normal(), rng.normal(), rng.normal());
                    let norm = p.norm();
                    if norm > 1e-9 {
                        break p.scale(1.0 / norm);
                    }
                };
                points.push(p);
                points.push(p.scale(-1.0));
            }
            points.truncate(n);
            points
        }
        ShapeFamily::Cube => {
            let mesh = unit_cube_mesh();
            sample_surface(&mesh, n, rng).expect("cube mesh").points
        }
        ShapeFamily::Pyramid => {
            let mesh = pyramid_mesh();
            sample_surface(&mesh, n, rng).expect("pyramid mesh").points
        }
        ShapeFamily::Plane => (0..n)
            .map(|_| Point3::new(rng.range_f64(-1.0, 1.0), rng.range_f64(-1.0, 1.0), 0.0))
            .collect(),
        ShapeFamily::Cylinder => {
            // radius 0.7, height 2, with caps; pick the part by area
            let r = 0.7;
            let lateral = 2.0 * math::PI * r * 2.0;
            let caps = 2.0 * math::PI * r * r;
            (0..n)
                .map(|_| {
                    let theta = rng.range_f64(0.0, 2.0 * math::PI);
                    if rng.next_f64() * (lateral + caps) < lateral {
                        Point3::new(r * math::cos(theta), r * math::sin(theta), rng.range_f64(-1.0, 1.0))
                    } else {
                        let rr = r * math::sqrt(rng.next_f64());
                        let z = if rng.next_f64() < 0.5 { -1.0 } else { 1.0 };
                        Point3::new(rr * math::cos(theta), rr * math::sin(theta), z)
                    }
                })
                .collect()
        }
        ShapeFamily::Cone => {
            // apex at z=1, base disk radius 1 at z=-1
            let slant = math::sqrt(1.0 + 4.0);
            let lateral = math::PI * 1.0 * slant;
            let base = math::PI;
            (0..n)
                .map(|_| {
                    let theta = rng.range_f64(0.0, 2.0 * math::PI);
                    if rng.next_f64() * (lateral + base) < lateral {
                        // uniform on the lateral surface: radius fraction ~ sqrt(u)
                        let f = math::sqrt(rng.next_f64());
                        Point3::new(
                            f * math::cos(theta),
                            f * math::sin(theta),
                            1.0 - 2.0 * f,
                        )
                    } else {
                        let rr = math::sqrt(rng.next_f64());
                        Point3::new(rr * math::cos(theta), rr * math::sin(theta), -1.0)
                    }
                })
                .collect()
        }
        ShapeFamily::Torus => {
            // major radius 0.7, minor 0.3; rejection on the area element
            let (major, minor) = (0.7, 0.3);
            (0..n)
                .map(|_| loop {
                    let u = rng.range_f64(0.0, 2.0 * math::PI);
                    let v = rng.range_f64(0.0, 2.0 * math::PI);
                    let w = (major + minor * math::cos(v)) / (major + minor);
                    if rng.next_f64() <= w {
                        let ring = major + minor * math::cos(v);
                        break Point3::new(
                            ring * math::cos(u),
                            ring * math::sin(u),
                            minor * math::sin(v),
                        );
                    }
                })
                .collect()
        }
        ShapeFamily::Helix => {
            // three turns, radius 0.6, swept through z in [-1, 1]
            (0..n)
                .map(|_| {
                    let t = rng.next_f64();
                    let theta = t * 6.0 * math::PI;
                    Point3::new(
                        0.6 * math::cos(theta),
                        0.6 * math::sin(theta),
                        2.0 * t - 1.0,
                    )
                })
                .collect()
        }
    }
}

fn jitter_cloud(points: &mut [Point3], noise_sigma: f64, rng: &mut Rng) {
    // rotation about z, uniform scale, then isotropic Gaussian noise
    let angle = rng.range_f64(0.0, 2.0 * math::PI);
    let (c, s) = (math::cos(angle), math::sin(angle));
    let scale = rng.range_f64(0.8, 1.2);
    for p in points.iter_mut() {
        let (x, y) = (p.x, p.y);
        p.x = scale * (c * x - s * y);
        p.y = scale * (s * x + c * y);
        p.z = scale * p.z;
        if noise_sigma > 0.0 {
            p.x += noise_sigma * rng.normal();
            p.y += noise_sigma * rng.normal();
            p.z += noise_sigma * rng.normal();
        }
    }
}

/// Generate one labeled cloud of the family, jittered, noised and
/// normalized to the unit sphere.
pub fn generate_cloud(
    family: ShapeFamily,
    label: usize,
    n: usize,
    noise_sigma: f64,
    rng: &mut Rng,
) -> Result<PointCloud> {
    let mut points = sample_shape(family, n, rng);
    jitter_cloud(&mut points, noise_sigma, rng);
    let cloud = PointCloud::new(points)?;
    Ok(normalize_unit_sphere(&cloud)?.with_label(label))
}

/// Generate a stratified 70/15/15 split. Deterministic given the spec seed:
/// each cloud gets its own derived RNG stream.
pub fn generate(spec: &SyntheticSpec) -> Result<DatasetSplit> {
    spec.validate()?;
    let root = Rng::new(spec.seed);
    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for (class_id, &family) in spec.classes.iter().enumerate() {
        let count = spec.clouds_per_class;
        let n_train = count * 7 / 10;
        let rem = count - n_train;
        // alternate the odd leftover between val and test across classes so
        // the global 15/15 balance holds
        let n_val = (rem + (class_id % 2)) / 2;
        for i in 0..count {
            let mut rng = root.split((class_id as u64) << 32 | i as u64);
            let cloud =
                generate_cloud(family, class_id, spec.points_per_cloud, spec.noise_sigma, &mut rng)?;
            if i < n_train {
                train.push(cloud);
            } else if i < n_train + n_val {
                val.push(cloud);
            } else {
                test.push(cloud);
            }
        }
    }
    if train.is_empty() || val.is_empty() || test.is_empty() {
        return Err(Error::InvalidSpec(
            "too few clouds per class to populate every split".into(),
        ));
    }
    Ok(DatasetSplit { train, val, test })
}

/// Map class names to ids in sorted-name order.
pub fn class_ids_sorted(names: &mut [String]) -> Vec<(String, usize)> {
    names.sort();
    names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.clone(), i))
        .collect()
}
