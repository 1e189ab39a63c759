//! Points on the unit sphere, tangent frames and quadrature rules.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read};

use crate::error::{Error, Result};
use crate::legendre::LegendreTable;

/// Points closer than this (in `sin θ`) to a pole have no tangent frame.
pub const POLE_TOL: f64 = 1e-12;

/// Largest Gauss–Legendre level the generator accepts.
pub const MAX_GL_LEVEL: u32 = 12;

/// A point on the unit sphere, stored as a Cartesian unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    xyz: [f64; 3],
}

impl SpherePoint {
    /// Builds a point from colatitude `θ ∈ [0, π]` and longitude `φ ∈ [0, 2π)`.
    pub fn from_angles(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::Domain(format!("colatitude {theta} outside [0, π]")));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::Domain(format!("longitude {phi} outside [0, 2π)")));
        }
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Ok(Self::normalized([st * cp, st * sp, ct]))
    }

    /// Builds a point from a Cartesian vector whose norm is within `1e-10` of one.
    pub fn from_xyz(x: f64, y: f64, z: f64) -> Result<Self> {
        let n = (x * x + y * y + z * z).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(Error::Domain(format!("vector ({x}, {y}, {z}) has norm {n}, not 1")));
        }
        Ok(Self::normalized([x, y, z]))
    }

    /// Rescales any nonzero vector onto the sphere.
    pub(crate) fn normalized(v: [f64; 3]) -> Self {
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        SpherePoint {
            xyz: [v[0] / n, v[1] / n, v[2] / n],
        }
    }

    pub fn xyz(&self) -> [f64; 3] {
        self.xyz
    }

    /// `(cos θ, sin θ)` with `sin θ = hypot(x, y)`, exactly zero on the axis.
    pub fn cos_sin_theta(&self) -> (f64, f64) {
        (self.xyz[2], self.xyz[0].hypot(self.xyz[1]))
    }

    pub fn colatitude(&self) -> f64 {
        let (c, s) = self.cos_sin_theta();
        s.atan2(c)
    }

    /// Longitude in `[0, 2π)`; zero at the poles.
    pub fn longitude(&self) -> f64 {
        let [x, y, _] = self.xyz;
        if x == 0.0 && y == 0.0 {
            return 0.0;
        }
        let phi = y.atan2(x);
        if phi < 0.0 {
            let wrapped = phi + 2.0 * PI;
            if wrapped >= 2.0 * PI {
                0.0
            } else {
                wrapped
            }
        } else {
            phi
        }
    }

    pub fn is_pole(&self) -> bool {
        self.cos_sin_theta().1 < POLE_TOL
    }

    pub fn dot(&self, v: &[f64; 3]) -> f64 {
        self.xyz[0] * v[0] + self.xyz[1] * v[1] + self.xyz[2] * v[2]
    }
}

/// Orthonormal tangent pair at a non-pole point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentBasis {
    pub east: [f64; 3],
    pub north: [f64; 3],
}

/// East/north frame. Poles have no canonical frame and are rejected.
pub fn local_frame(p: &SpherePoint) -> Result<TangentBasis> {
    if p.is_pole() {
        return Err(Error::DegenerateFrame);
    }
    let (ct, st) = p.cos_sin_theta();
    let [x, y, _] = p.xyz();
    let (cp, sp) = (x / st, y / st);
    Ok(TangentBasis {
        east: [-sp, cp, 0.0],
        north: [-ct * cp, -ct * sp, st],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendre { level: u32 },
    SphericalDesign,
}

impl RuleKind {
    pub fn label(&self) -> &'static str {
        match self {
            RuleKind::GaussLegendre { .. } => "gl",
            RuleKind::SphericalDesign => "sd",
        }
    }
}

/// Latitude-ring structure of a tensor rule. Node `k = i * n_lon + j` sits on
/// ring `i` at longitude `2πj / n_lon`.
#[derive(Debug, Clone, PartialEq)]
pub struct RingLayout {
    pub n_lon: usize,
    pub cos_theta: Vec<f64>,
    pub sin_theta: Vec<f64>,
    /// Weight shared by every node of ring `i`.
    pub ring_weight: Vec<f64>,
}

impl RingLayout {
    pub fn n_lat(&self) -> usize {
        self.cos_theta.len()
    }
}

/// Weighted point set with a certified polynomial exactness degree.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    points: Vec<SpherePoint>,
    weights: Vec<f64>,
    exactness_degree: usize,
    kind: RuleKind,
    rings: Option<RingLayout>,
}

impl QuadratureRule {
    /// Builds a scattered rule from explicit nodes and weights.
    pub fn new(points: Vec<SpherePoint>, weights: Vec<f64>, exactness_degree: usize, kind: RuleKind) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Format("rule has no nodes".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Shape {
                expected: points.len(),
                got: weights.len(),
            });
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0) || !w.is_finite()) {
            return Err(Error::Format(format!("non-positive weight {w}")));
        }
        Ok(QuadratureRule {
            points,
            weights,
            exactness_degree,
            kind,
            rings: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exactness_degree(&self) -> usize {
        self.exactness_degree
    }

    pub fn kind(&self) -> RuleKind {
        self.kind
    }

    pub fn rings(&self) -> Option<&RingLayout> {
        self.rings.as_ref()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Same nodes and weights with the ring structure dropped, which forces
    /// transforms onto the direct path.
    pub fn scattered_view(&self) -> Self {
        QuadratureRule {
            rings: None,
            ..self.clone()
        }
    }

    /// Text export: `# degree t` then `x y z w` per node at 17 significant digits.
    pub fn to_export_string(&self) -> String {
        let mut s = String::with_capacity(self.len() * 96);
        let _ = writeln!(s, "# degree {}", self.exactness_degree);
        for (p, w) in self.points.iter().zip(&self.weights) {
            let [x, y, z] = p.xyz();
            let _ = writeln!(s, "{x:.17e} {y:.17e} {z:.17e} {w:.17e}");
        }
        s
    }
}

/// Gauss–Legendre nodes (descending) and weights on `[-1, 1]`.
pub fn gauss_legendre_nodes(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let (p, d) = legendre_p_and_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                converged = true;
                let (_, d) = legendre_p_and_derivative(n, z);
                dp = d;
                break;
            }
        }
        if !converged || !z.is_finite() {
            return Err(Error::Resource(format!("Gauss–Legendre Newton iteration did not converge for n = {n}")));
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = z;
        w[i] = wi;
        x[n - 1 - i] = -z;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    Ok((x, w))
}

fn legendre_p_and_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    (p1, nf * (z * p1 - p0) / (z * z - 1.0))
}

/// Tensor rule at level `J`: `2^J + 1` Gauss–Legendre rings times
/// `2(2^J + 1)` equispaced longitudes, exact to degree `2^{J+1}`.
pub fn gauss_legendre_rule(level: u32) -> Result<QuadratureRule> {
    if level < 1 {
        return Err(Error::Domain("Gauss–Legendre level must be at least 1".into()));
    }
    if level > MAX_GL_LEVEL {
        return Err(Error::Resource(format!(
            "Gauss–Legendre level {level} exceeds the supported maximum {MAX_GL_LEVEL}"
        )));
    }
    let n_lat = (1usize << level) + 1;
    let n_lon = 2 * n_lat;
    let (x, gw) = gauss_legendre_nodes(n_lat)?;
    let dphi = 2.0 * PI / n_lon as f64;
    let lon: Vec<(f64, f64)> = (0..n_lon).map(|j| (j as f64 * dphi).sin_cos()).collect();

    let mut points = Vec::with_capacity(n_lat * n_lon);
    let mut weights = Vec::with_capacity(n_lat * n_lon);
    let mut sin_theta = Vec::with_capacity(n_lat);
    let mut ring_weight = Vec::with_capacity(n_lat);
    for (i, &c) in x.iter().enumerate() {
        let s = ((1.0 - c) * (1.0 + c)).sqrt();
        sin_theta.push(s);
        let rw = gw[i] * dphi;
        ring_weight.push(rw);
        for &(sp, cp) in &lon {
            points.push(SpherePoint::normalized([s * cp, s * sp, c]));
            weights.push(rw);
        }
    }
    Ok(QuadratureRule {
        points,
        weights,
        exactness_degree: 1usize << (level + 1),
        kind: RuleKind::GaussLegendre { level },
        rings: Some(RingLayout {
            n_lon,
            cos_theta: x,
            sin_theta,
            ring_weight,
        }),
    })
}

/// Reads a point file: a `# degree t` header, then one `x y z` line per node.
/// Other `#` lines and blank lines are skipped. Weights are `4π / N`.
pub fn load_spherical_design<R: Read>(reader: R) -> Result<QuadratureRule> {
    let mut degree: Option<usize> = None;
    let mut points = Vec::new();
    for (lineno, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("degree") {
                let v = it
                    .next()
                    .and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| Error::Format(format!("line {}: bad degree header", lineno + 1)))?;
                degree = Some(v);
            }
            continue;
        }
        let vals: Vec<f64> = t
            .split_whitespace()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", lineno + 1)))?;
        if vals.len() != 3 {
            return Err(Error::Format(format!(
                "line {}: expected 3 coordinates, found {}",
                lineno + 1,
                vals.len()
            )));
        }
        let n = (vals[0] * vals[0] + vals[1] * vals[1] + vals[2] * vals[2]).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-10 {
            return Err(Error::Format(format!("line {}: point norm {n} is not 1", lineno + 1)));
        }
        points.push(SpherePoint::normalized([vals[0], vals[1], vals[2]]));
    }
    if points.is_empty() {
        return Err(Error::Format("point file contains no nodes".into()));
    }
    let degree = degree.ok_or_else(|| Error::Format("missing `# degree <t>` header".into()))?;
    let w = 4.0 * PI / points.len() as f64;
    let n = points.len();
    QuadratureRule::new(points, vec![w; n], degree, RuleKind::SphericalDesign)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactnessReport {
    /// Probe bandlimit; harmonics up to degree `probe_degree / 2` enter the Gram matrix.
    pub probe_degree: usize,
    pub max_deviation: f64,
    pub weight_sum_error: f64,
}

/// Largest deviation of the harmonic Gram matrix from the identity for all
/// degrees up to `L / 2`. Report-only: never fails on inexact rules.
pub fn verify_quadrature_exactness(rule: &QuadratureRule, probe_degree: usize) -> ExactnessReport {
    let half = probe_degree / 2;
    let max_deviation = match rule.rings() {
        Some(r) => ring_gram_deviation(r, half),
        None => scattered_gram_deviation(rule, half),
    };
    ExactnessReport {
        probe_degree,
        max_deviation,
        weight_sum_error: (rule.weight_sum() - 4.0 * PI).abs(),
    }
}

/// On a ring rule the longitude sum of `e^{i(m'-m)φ}` is `n_lon` when
/// `m' ≡ m (mod n_lon)` and zero otherwise, so only aliased order pairs matter.
fn ring_gram_deviation(r: &RingLayout, half: usize) -> f64 {
    let tables: Vec<LegendreTable> = r
        .cos_theta
        .iter()
        .zip(&r.sin_theta)
        .map(|(&c, &s)| LegendreTable::new(c, s, half))
        .collect();
    let n_lon = r.n_lon as i64;
    let h = half as i64;
    let mut worst: f64 = 0.0;
    for m in -h..=h {
        for mp in -h..=h {
            if (mp - m).rem_euclid(n_lon) != 0 {
                continue;
            }
            for l in m.unsigned_abs() as usize..=half {
                for lp in mp.unsigned_abs() as usize..=half {
                    let mut g = 0.0;
                    for (i, t) in tables.iter().enumerate() {
                        g += r.ring_weight[i] * t.signed(l, m).0 * t.signed(lp, mp).0;
                    }
                    g *= r.n_lon as f64;
                    let target = if l == lp && m == mp { 1.0 } else { 0.0 };
                    worst = worst.max((g - target).abs());
                }
            }
        }
    }
    worst
}

fn scattered_gram_deviation(rule: &QuadratureRule, half: usize) -> f64 {
    let k = (half + 1) * (half + 1);
    let n = rule.len();
    // Rows of sqrt(w) * Y, split into real and imaginary parts.
    let mut re = vec![0.0; n * k];
    let mut im = vec![0.0; n * k];
    for (idx, (p, &w)) in rule.points().iter().zip(rule.weights()).enumerate() {
        let (c, s) = p.cos_sin_theta();
        let t = LegendreTable::new(c, s, half);
        let phi = p.longitude();
        let sw = w.sqrt();
        for l in 0..=half {
            for m in -(l as i64)..=(l as i64) {
                let col = l * l + (m + l as i64) as usize;
                let (sm, cm) = (m as f64 * phi).sin_cos();
                let v = sw * t.signed(l, m).0;
                re[idx * k + col] = v * cm;
                im[idx * k + col] = v * sm;
            }
        }
    }
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in a..k {
            let (mut gr, mut gi) = (0.0, 0.0);
            for i in 0..n {
                let (ar, ai) = (re[i * k + a], im[i * k + a]);
                let (br, bi) = (re[i * k + b], im[i * k + b]);
                gr += ar * br + ai * bi;
                gi += ar * bi - ai * br;
            }
            let target = if a == b { 1.0 } else { 0.0 };
            worst = worst.max((gr - target).hypot(gi));
        }
    }
    worst
}
