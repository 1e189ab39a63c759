//! Divergence-free and curl-free vector spherical harmonics.
//!
//! `y1 = x × ∇Y / √λ` and `y2 = ∇Y / √λ` with `λ = ℓ(ℓ+1)`. The gradient
//! route below is the canonical basis; [`cg`] builds the same functions from
//! Clebsch–Gordan sums and serves as an independent check.

pub mod cg;
mod transform;

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::legendre::LegendreTable;
use crate::sphere_geom::{QuadratureRule, SpherePoint};

pub use cg::{cg_coefficient, eval_vsh_cg, wigner_3j, CgTable};
pub use transform::{
    project_bandlimited, vsh_analysis, vsh_eval_points, vsh_synthesis, Projection, VshAnalysis,
};

/// Complex Cartesian 3-vector.
pub type Vec3 = [C64; 3];

pub(crate) const ZERO3: Vec3 = [C64 { re: 0.0, im: 0.0 }; 3];

#[inline]
pub(crate) fn dot_xyz(v: &Vec3, x: &[f64; 3]) -> C64 {
    v[0] * x[0] + v[1] * x[1] + v[2] * x[2]
}

#[inline]
pub fn norm_sqr3(v: &Vec3) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum()
}

/// Coefficient pair for degrees `1..=L`, stored at `ℓ² + ℓ + m - 1`.
/// `div` multiplies `y1` (divergence-free), `curl` multiplies `y2` (curl-free).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorCoeffPair {
    l_max: usize,
    div: Vec<C64>,
    curl: Vec<C64>,
}

impl VectorCoeffPair {
    pub fn zeros(l_max: usize) -> Self {
        let n = Self::family_len(l_max);
        VectorCoeffPair {
            l_max,
            div: vec![C64::new(0.0, 0.0); n],
            curl: vec![C64::new(0.0, 0.0); n],
        }
    }

    pub fn from_parts(l_max: usize, div: Vec<C64>, curl: Vec<C64>) -> Result<Self> {
        let n = Self::family_len(l_max);
        for v in [&div, &curl] {
            if v.len() != n {
                return Err(Error::Shape { expected: n, got: v.len() });
            }
        }
        Ok(VectorCoeffPair { l_max, div, curl })
    }

    /// Entries per family: `(L+1)² - 1`.
    pub fn family_len(l_max: usize) -> usize {
        (l_max + 1) * (l_max + 1) - 1
    }

    #[inline]
    pub fn index(l: usize, m: i64) -> usize {
        ((l * l + l) as i64 + m - 1) as usize
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn div(&self) -> &[C64] {
        &self.div
    }

    pub fn curl(&self) -> &[C64] {
        &self.curl
    }

    pub fn div_mut(&mut self) -> &mut [C64] {
        &mut self.div
    }

    pub fn curl_mut(&mut self) -> &mut [C64] {
        &mut self.curl
    }

    pub fn get_div(&self, l: usize, m: i64) -> C64 {
        self.div[Self::index(l, m)]
    }

    pub fn get_curl(&self, l: usize, m: i64) -> C64 {
        self.curl[Self::index(l, m)]
    }

    pub fn set_div(&mut self, l: usize, m: i64, v: C64) {
        self.div[Self::index(l, m)] = v;
    }

    pub fn set_curl(&mut self, l: usize, m: i64, v: C64) {
        self.curl[Self::index(l, m)] = v;
    }

    /// `Σ |div|² + |curl|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.div.iter().chain(&self.curl).map(|c| c.norm_sqr()).sum()
    }

    /// Energy carried by degrees above `l`.
    pub fn mass_above(&self, l: usize) -> f64 {
        let start = Self::family_len(l.min(self.l_max));
        self.div[start..]
            .iter()
            .chain(&self.curl[start..])
            .map(|c| c.norm_sqr())
            .sum()
    }

    /// Copy restricted or zero-extended to bandlimit `l`.
    pub fn resized(&self, l: usize) -> Self {
        let mut out = Self::zeros(l);
        let n = Self::family_len(l.min(self.l_max));
        out.div[..n].copy_from_slice(&self.div[..n]);
        out.curl[..n].copy_from_slice(&self.curl[..n]);
        out
    }

    /// Multiplies degree `ℓ` of both families by `f(ℓ)`.
    pub fn scale_by_degree(&self, f: impl Fn(usize) -> C64) -> Self {
        let mut out = self.clone();
        for l in 1..=self.l_max {
            let g = f(l);
            let a = Self::index(l, -(l as i64));
            let b = Self::index(l, l as i64);
            for k in a..=b {
                out.div[k] *= g;
                out.curl[k] *= g;
            }
        }
        out
    }

    /// Elementwise `self + other`; the result has the larger bandlimit.
    pub fn add(&self, other: &Self) -> Self {
        let l = self.l_max.max(other.l_max);
        let mut out = self.resized(l);
        for (o, v) in out.div.iter_mut().zip(&other.div) {
            *o += v;
        }
        for (o, v) in out.curl.iter_mut().zip(&other.curl) {
            *o += v;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let l = self.l_max.max(other.l_max);
        let (a, b) = (self.resized(l), other.resized(l));
        a.div
            .iter()
            .zip(&b.div)
            .chain(a.curl.iter().zip(&b.curl))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    /// Largest `|c_{ℓ,-m} - (-1)^m conj(c_ℓm)|` over both families. Zero for
    /// coefficients of a real tangent field.
    pub fn real_field_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for fam in [&self.div, &self.curl] {
            for l in 1..=self.l_max {
                for m in 0..=(l as i64) {
                    let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                    let d = fam[Self::index(l, -m)] - fam[Self::index(l, m)].conj() * s;
                    worst = worst.max(d.norm());
                }
            }
        }
        worst
    }
}

/// Node values of a tangent field, each already multiplied by `√w_k`.
#[derive(Debug, Clone)]
pub struct TangentSampleSeq {
    rule: Arc<QuadratureRule>,
    values: Vec<Vec3>,
    bandlimit: usize,
    certified: bool,
}

impl TangentSampleSeq {
    /// Wraps weighted values. `certified` should only be set when the values
    /// are the weighted synthesis of degree-`bandlimit` coefficients on a rule
    /// exact to `2 * bandlimit`.
    pub fn new(rule: Arc<QuadratureRule>, values: Vec<Vec3>, bandlimit: usize, certified: bool) -> Result<Self> {
        if values.len() != rule.len() {
            return Err(Error::Shape {
                expected: rule.len(),
                got: values.len(),
            });
        }
        let certified = certified && rule.exactness_degree() >= 2 * bandlimit;
        Ok(TangentSampleSeq {
            rule,
            values,
            bandlimit,
            certified,
        })
    }

    /// Weights raw (pointwise) node values by `√w_k`. Uncertified.
    pub fn from_unweighted(rule: Arc<QuadratureRule>, raw: &[Vec3], bandlimit: usize) -> Result<Self> {
        if raw.len() != rule.len() {
            return Err(Error::Shape {
                expected: rule.len(),
                got: raw.len(),
            });
        }
        let values = raw
            .iter()
            .zip(rule.weights())
            .map(|(v, &w)| {
                let s = w.sqrt();
                [v[0] * s, v[1] * s, v[2] * s]
            })
            .collect();
        Ok(TangentSampleSeq {
            rule,
            values,
            bandlimit,
            certified: false,
        })
    }

    pub fn zeros(rule: Arc<QuadratureRule>, bandlimit: usize) -> Self {
        let n = rule.len();
        let certified = rule.exactness_degree() >= 2 * bandlimit;
        TangentSampleSeq {
            rule,
            values: vec![ZERO3; n],
            bandlimit,
            certified,
        }
    }

    pub fn rule(&self) -> &Arc<QuadratureRule> {
        &self.rule
    }

    pub fn values(&self) -> &[Vec3] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Vec3> {
        self.values
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn is_certified(&self) -> bool {
        self.certified
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Sequence 2-norm squared, `Σ_k |v_k|²`.
    pub fn norm_sqr(&self) -> f64 {
        self.values.iter().map(norm_sqr3).sum()
    }

    /// Values divided by `√w_k`.
    pub fn unweighted(&self) -> Vec<Vec3> {
        self.values
            .iter()
            .zip(self.rule.weights())
            .map(|(v, &w)| {
                let s = 1.0 / w.sqrt();
                [v[0] * s, v[1] * s, v[2] * s]
            })
            .collect()
    }

    /// Largest `|v_k · x_k| / |v_k|` over nonzero samples.
    pub fn tangency_defect(&self) -> f64 {
        self.values
            .iter()
            .zip(self.rule.points())
            .filter_map(|(v, p)| {
                let n = norm_sqr3(v).sqrt();
                (n > 0.0).then(|| dot_xyz(v, &p.xyz()).norm() / n)
            })
            .fold(0.0, f64::max)
    }
}

/// `y1_ℓm` and `y2_ℓm` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VshValue {
    pub y1: Vec3,
    pub y2: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VshRoute {
    GradCurl,
    ClebschGordan,
}

/// Unit vectors `e_θ` (southward) and `e_φ` (eastward). At the poles the
/// frame of longitude zero is used, which matches the pole limits of the
/// Legendre table.
#[inline]
pub(crate) fn spherical_frame(cos_t: f64, sin_t: f64, phi: f64) -> ([f64; 3], [f64; 3]) {
    let (sp, cp) = phi.sin_cos();
    ([cos_t * cp, cos_t * sp, -sin_t], [-sp, cp, 0.0])
}

#[inline]
pub(crate) fn combine(a: C64, e1: &[f64; 3], b: C64, e2: &[f64; 3]) -> Vec3 {
    [a * e1[0] + b * e2[0], a * e1[1] + b * e2[1], a * e1[2] + b * e2[2]]
}

/// Gradient-route evaluation, pole-safe through the Legendre limits.
pub(crate) fn vsh_grad_curl(l: usize, m: i64, p: &SpherePoint) -> VshValue {
    let (c, s) = p.cos_sin_theta();
    let phi = p.longitude();
    let t = LegendreTable::new(c, s, l);
    let (_, d, ms) = t.signed(l, m);
    let inv = 1.0 / ((l * (l + 1)) as f64).sqrt();
    let e = C64::from_polar(inv, m as f64 * phi);
    let (et, ep) = spherical_frame(c, s, phi);
    let i_ms = C64::new(0.0, ms);
    VshValue {
        y1: combine(-i_ms * e, &et, e * d, &ep),
        y2: combine(e * d, &et, i_ms * e, &ep),
    }
}

/// `y1_ℓm(p)` and `y2_ℓm(p)` for `ℓ ≥ 1`, `|m| ≤ ℓ`.
///
/// The gradient route divides by `sin θ` and rejects poles; the
/// Clebsch–Gordan route is pole-safe.
pub fn eval_vsh(l: usize, m: i64, p: &SpherePoint, route: VshRoute) -> Result<VshValue> {
    if l == 0 || m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("no vector harmonic of degree {l}, order {m}")));
    }
    match route {
        VshRoute::GradCurl => {
            if p.is_pole() {
                return Err(Error::DegenerateFrame);
            }
            Ok(vsh_grad_curl(l, m, p))
        }
        VshRoute::ClebschGordan => eval_vsh_cg(&CgTable::new(l), l, m, p),
    }
}

/// Outcome of comparing the two constructions after fitting one unimodular
/// phase per family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossRouteReport {
    pub phase_y1: C64,
    pub phase_y2: C64,
    pub max_deviation: f64,
}

/// Fits `phase_f` so that `phase_f * grad_route ≈ cg_route` for each family
/// over all `1 ≤ ℓ ≤ l_max` at the given points, then reports the largest
/// pointwise residual.
pub fn cross_route_check(l_max: usize, points: &[SpherePoint]) -> CrossRouteReport {
    let table = CgTable::new(l_max);
    let mut pairs = Vec::new();
    for p in points {
        for l in 1..=l_max {
            for m in -(l as i64)..=(l as i64) {
                let g = vsh_grad_curl(l, m, p);
                let c = eval_vsh_cg(&table, l, m, p).expect("valid degree");
                pairs.push((g, c));
            }
        }
    }
    let fit = |pick: fn(&VshValue) -> Vec3| -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for (g, c) in &pairs {
            let (a, b) = (pick(g), pick(c));
            for k in 0..3 {
                acc += a[k].conj() * b[k];
            }
        }
        if acc.norm() == 0.0 {
            C64::new(1.0, 0.0)
        } else {
            acc / acc.norm()
        }
    };
    let p1 = fit(|v| v.y1);
    let p2 = fit(|v| v.y2);
    let mut worst: f64 = 0.0;
    for (g, c) in &pairs {
        for k in 0..3 {
            worst = worst.max((g.y1[k] * p1 - c.y1[k]).norm());
            worst = worst.max((g.y2[k] * p2 - c.y2[k]).norm());
        }
    }
    CrossRouteReport {
        phase_y1: p1,
        phase_y2: p2,
        max_deviation: worst,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar_harmonics::eval_ylm_grad;
    use crate::sphere_geom::gauss_legendre_rule;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn random_points(n: usize, seed: u64) -> Vec<SpherePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = rng.gen_range(-1.0..1.0);
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                let s = (1.0 - z * z).sqrt();
                SpherePoint::from_xyz(s * phi.cos(), s * phi.sin(), z).unwrap()
            })
            .collect()
    }

    fn cross(a: &[f64; 3], b: &Vec3) -> Vec3 {
        [
            b[2] * a[1] - b[1] * a[2],
            b[0] * a[2] - b[2] * a[0],
            b[1] * a[0] - b[0] * a[1],
        ]
    }

    #[test]
    fn tangency_and_curl_relation() {
        for p in random_points(50, 1) {
            for l in 1..=10 {
                for m in -(l as i64)..=(l as i64) {
                    let v = eval_vsh(l, m, &p, VshRoute::GradCurl).unwrap();
                    assert!(dot_xyz(&v.y1, &p.xyz()).norm() < 1e-12);
                    assert!(dot_xyz(&v.y2, &p.xyz()).norm() < 1e-12);
                    let c = cross(&p.xyz(), &v.y2);
                    for k in 0..3 {
                        assert!((c[k] - v.y1[k]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn y2_is_scaled_surface_gradient() {
        // Independent assembly from the scalar θ/φ derivatives.
        for p in random_points(20, 2) {
            let (c, s) = p.cos_sin_theta();
            let phi = p.longitude();
            let et = [c * phi.cos(), c * phi.sin(), -s];
            let ep = [-phi.sin(), phi.cos(), 0.0];
            for l in 1..=6usize {
                for m in -(l as i64)..=(l as i64) {
                    let (_, dt, dp) = eval_ylm_grad(l, m, &p).unwrap();
                    let inv = 1.0 / ((l * (l + 1)) as f64).sqrt();
                    let v = eval_vsh(l, m, &p, VshRoute::GradCurl).unwrap();
                    for k in 0..3 {
                        let g = (dt * et[k] + dp / s * ep[k]) * inv;
                        assert!((g - v.y2[k]).norm() < 1e-13);
                    }
                }
            }
        }
    }

    #[test]
    fn pole_handling() {
        let north = SpherePoint::from_xyz(0.0, 0.0, 1.0).unwrap();
        assert!(matches!(eval_vsh(2, 1, &north, VshRoute::GradCurl), Err(Error::DegenerateFrame)));
        let v = eval_vsh(2, 1, &north, VshRoute::ClebschGordan).unwrap();
        assert!(dot_xyz(&v.y1, &north.xyz()).norm() < 1e-14);
        assert!(matches!(eval_vsh(0, 0, &north, VshRoute::ClebschGordan), Err(Error::Domain(_))));
        // The internal pole limit agrees with the nearby off-pole value.
        let near = SpherePoint::from_angles(1e-9, 0.0).unwrap();
        for m in -3i64..=3 {
            let a = vsh_grad_curl(3, m, &north);
            let b = vsh_grad_curl(3, m, &near);
            for k in 0..3 {
                assert!((a.y1[k] - b.y1[k]).norm() < 1e-7);
                assert!((a.y2[k] - b.y2[k]).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn quadrature_norm_of_y1_32() {
        let rule = gauss_legendre_rule(4).unwrap();
        let s: f64 = rule
            .points()
            .iter()
            .zip(rule.weights())
            .map(|(p, w)| w * norm_sqr3(&vsh_grad_curl(3, 2, p).y1))
            .sum();
        assert!((s - 1.0).abs() < 1e-11);
    }

    #[test]
    fn routes_agree_up_to_phase() {
        let pts = random_points(100, 7);
        let r = cross_route_check(8, &pts);
        assert!(r.max_deviation < 1e-10, "{r:?}");
        assert!((r.phase_y1.norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn coeff_pair_layout() {
        let c = VectorCoeffPair::zeros(8);
        assert_eq!(c.div().len(), 80);
        assert_eq!(VectorCoeffPair::index(1, -1), 0);
        assert_eq!(VectorCoeffPair::index(8, 8), 79);
        assert!(matches!(
            VectorCoeffPair::from_parts(2, vec![C64::new(0.0, 0.0); 3], vec![C64::new(0.0, 0.0); 8]),
            Err(Error::Shape { .. })
        ));
    }
}
