//! Synthetic tangent fields built from stream functions and velocity
//! potentials, plus lat-lon wind grids.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};
use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar_harmonics::{scalar_analysis, scalar_synthesis, ScalarCoeffs};
use crate::sphere_geom::{gauss_legendre_rule, local_frame, QuadratureRule, SpherePoint};
use crate::vsh::{vsh_eval_points, vsh_synthesis, TangentSampleSeq, Vec3, VectorCoeffPair};

/// Default analysis degree used to put Fields B and C into coefficient form.
pub const REFERENCE_DEGREE: usize = 128;
/// Gauss–Legendre level carrying the reference analysis (exact to 256).
pub const REFERENCE_LEVEL: u32 = 7;

/// `divc = √λ ŝ`, `curlc = √λ p̂`. Degree-zero entries are dropped.
pub fn field_from_potentials(stream: &ScalarCoeffs, potential: &ScalarCoeffs) -> VectorCoeffPair {
    let l_max = stream.l_max().max(potential.l_max());
    let mut out = VectorCoeffPair::zeros(l_max);
    for l in 1..=l_max {
        let root = ((l * (l + 1)) as f64).sqrt();
        for m in -(l as i64)..=(l as i64) {
            if l <= stream.l_max() {
                out.set_div(l, m, stream.get(l, m) * root);
            }
            if l <= potential.l_max() {
                out.set_curl(l, m, potential.get(l, m) * root);
            }
        }
    }
    out
}

/// Rossby–Haurwitz stream function coefficients, completed to a real field.
pub fn rossby_haurwitz() -> ScalarCoeffs {
    let mut s = ScalarCoeffs::zeros(5);
    s.set(1, 0, C64::new(-1.0 / 3f64.sqrt(), 0.0));
    s.set_real_pair(5, 4, C64::new(8.0 * 2f64.sqrt() / (3.0 * 385f64.sqrt()), 0.0));
    s
}

/// Field A scalar potentials `(stream, potential)`.
pub fn field_a_potentials() -> (ScalarCoeffs, ScalarCoeffs) {
    let mut p = ScalarCoeffs::zeros(6);
    p.set(4, 0, C64::new(1.0 / 25.0, 0.0));
    p.set_real_pair(6, -3, C64::new(1.0 / 25.0, 0.0));
    (rossby_haurwitz(), p)
}

/// Field A coefficients, bandlimit 6.
pub fn field_a() -> VectorCoeffPair {
    let (s, p) = field_a_potentials();
    field_from_potentials(&s, &p)
}

fn real_synthesis(c: &ScalarCoeffs, p: &SpherePoint) -> f64 {
    scalar_synthesis(c, std::slice::from_ref(p))[0].re
}

/// Point on the sphere at latitude `lat` and longitude `lon` (radians).
pub fn point_from_lat_lon(lat: f64, lon: f64) -> SpherePoint {
    let (sl, cl) = lat.sin_cos();
    let (so, co) = lon.sin_cos();
    SpherePoint::normalized([cl * co, cl * so, sl])
}

fn latitude(p: &SpherePoint) -> f64 {
    let [x, y, z] = p.xyz();
    z.atan2(x.hypot(y))
}

/// Distance used inside the Field B bump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BumpDistance {
    #[default]
    Geodesic,
    Chord,
}

/// Cubic B-spline bump `σ³/12 Σ_j (-1)^j C(4,j) |r - (j-2)/σ|³` centred at
/// latitude `lat_c`, longitude `lon_c`. Zero for `r ≥ 2/σ`.
pub fn bump(p: &SpherePoint, sigma: f64, lat_c: f64, lon_c: f64, dist: BumpDistance) -> f64 {
    let c = point_from_lat_lon(lat_c, lon_c);
    let r = match dist {
        BumpDistance::Geodesic => geodesic(p, &c),
        BumpDistance::Chord => chord(p, &c),
    };
    if r >= 2.0 / sigma {
        return 0.0;
    }
    const BINOM: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
    let mut s = 0.0;
    for (j, b) in BINOM.iter().enumerate() {
        let t = (r - (j as f64 - 2.0) / sigma).abs().powi(3);
        s += if j % 2 == 0 { b * t } else { -b * t };
    }
    sigma.powi(3) / 12.0 * s
}

fn chord(p: &SpherePoint, c: &SpherePoint) -> f64 {
    let a = p.xyz();
    let b = c.xyz();
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

fn geodesic(p: &SpherePoint, c: &SpherePoint) -> f64 {
    // atan2 form stays accurate near 0 and π.
    let a = p.xyz();
    let b = c.xyz();
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let s = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    s.atan2(p.dot(&b))
}

/// Field B velocity potential.
pub fn field_b_potential(p: &SpherePoint, dist: BumpDistance) -> f64 {
    bump(p, 5.0, FRAC_PI_6, 0.0, dist) / 8.0 - bump(p, 3.0, PI / 5.0, PI / 7.0, dist) / 7.0
        + bump(p, 5.0, -FRAC_PI_6, FRAC_PI_2, dist) / 9.0
        - bump(p, 3.0, -PI / 5.0, PI / 3.0, dist) / 8.0
}

/// Field B stream function (same wave as Field A).
pub fn field_b_stream(p: &SpherePoint) -> f64 {
    real_synthesis(&rossby_haurwitz(), p)
}

/// Field A stream and potential as point functions.
pub fn field_a_stream(p: &SpherePoint) -> f64 {
    real_synthesis(&field_a_potentials().0, p)
}

pub fn field_a_potential(p: &SpherePoint) -> f64 {
    real_synthesis(&field_a_potentials().1, p)
}

/// `g(x; lat_c, lon_c)` with `t = x·x_c`, `a = 1 - t`. The logarithmic
/// terms are merged into `(3t-1) a ln(1 + √(2/a))`, which tends to 0 as
/// `a → 0`, so `g → 1/2` at the centre.
pub fn g_kernel(p: &SpherePoint, lat_c: f64, lon_c: f64) -> f64 {
    let c = point_from_lat_lon(lat_c, lon_c);
    let d = chord(p, &c);
    let a = 0.5 * d * d;
    let t = 1.0 - a;
    let log_part = if a > 0.0 { (3.0 * t - 1.0) * a * (2.0 / a).sqrt().ln_1p() } else { 0.0 };
    -0.5 * (3.0 * t + 3.0 * 2f64.sqrt() * a.powf(1.5) - 4.0 + log_part)
}

/// `∫_{-π/2}^{lat} sin¹⁴(2ξ) dξ`.
pub fn sin14_integral(lat: f64) -> f64 {
    quadrature::double_exponential::integrate(|x| (2.0 * x).sin().powi(14), -FRAC_PI_2, lat, 1e-13).integral
}

/// Field C stream function.
pub fn field_c_stream(p: &SpherePoint) -> f64 {
    sin14_integral(latitude(p)) - 3.0 * g_kernel(p, FRAC_PI_4, -PI / 12.0)
}

/// Field C velocity potential.
pub fn field_c_potential(p: &SpherePoint) -> f64 {
    2.5 * g_kernel(p, FRAC_PI_4, 0.0) - 1.75 * g_kernel(p, FRAC_PI_6, PI / 9.0)
        - 1.5 * g_kernel(p, 5.0 * PI / 16.0, PI / 10.0)
}

pub type ScalarFn = Arc<dyn Fn(&SpherePoint) -> f64 + Send + Sync>;

/// One scalar potential, as a point function or as coefficients.
#[derive(Clone)]
pub enum Potential {
    Function(ScalarFn),
    Coeffs(ScalarCoeffs),
}

impl Potential {
    pub fn function(f: impl Fn(&SpherePoint) -> f64 + Send + Sync + 'static) -> Self {
        Potential::Function(Arc::new(f))
    }

    pub fn zero() -> Self {
        Potential::Coeffs(ScalarCoeffs::zeros(0))
    }

    fn analyse(&self, rule: &QuadratureRule, l_max: usize) -> Result<ScalarCoeffs> {
        match self {
            Potential::Coeffs(c) => {
                if !c.is_real_field(1e-12) {
                    return Err(Error::Domain("potential coefficients do not describe a real field".into()));
                }
                let mut out = ScalarCoeffs::zeros(l_max);
                for l in 0..=l_max.min(c.l_max()) {
                    for m in -(l as i64)..=(l as i64) {
                        out.set(l, m, c.get(l, m));
                    }
                }
                Ok(out)
            }
            Potential::Function(f) => {
                let samples: Vec<C64> = rule.points().par_iter().map(|p| C64::new(f(p), 0.0)).collect();
                scalar_analysis(&samples, rule, l_max)
            }
        }
    }
}

impl std::fmt::Debug for Potential {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Potential::Function(_) => f.write_str("Potential::Function"),
            Potential::Coeffs(c) => write!(f, "Potential::Coeffs(L={})", c.l_max()),
        }
    }
}

/// Stream function and velocity potential of a tangent field.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    pub stream: Potential,
    pub potential: Potential,
}

/// Coefficients of the field generated by `spec`, from scalar analyses at
/// degree `l_prime` on `rule`.
pub fn spectral_field(spec: &PotentialSpec, l_prime: usize, rule: &QuadratureRule) -> Result<VectorCoeffPair> {
    if rule.exactness_degree() < 2 * l_prime {
        return Err(Error::Domain(format!(
            "rule exact to degree {} cannot analyse to degree {l_prime}",
            rule.exactness_degree()
        )));
    }
    let s = spec.stream.analyse(rule, l_prime)?;
    let p = spec.potential.analyse(rule, l_prime)?;
    Ok(field_from_potentials(&s, &p))
}

/// The three synthetic test fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticField {
    A,
    B,
    C,
}

impl SyntheticField {
    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(SyntheticField::A),
            "b" => Ok(SyntheticField::B),
            "c" => Ok(SyntheticField::C),
            _ => Err(Error::Config(format!("unknown field `{s}`"))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SyntheticField::A => "A",
            SyntheticField::B => "B",
            SyntheticField::C => "C",
        }
    }

    pub fn potentials(&self, dist: BumpDistance) -> PotentialSpec {
        match self {
            SyntheticField::A => {
                let (s, p) = field_a_potentials();
                PotentialSpec {
                    stream: Potential::Coeffs(s),
                    potential: Potential::Coeffs(p),
                }
            }
            SyntheticField::B => PotentialSpec {
                stream: Potential::Coeffs(rossby_haurwitz()),
                potential: Potential::function(move |p| field_b_potential(p, dist)),
            },
            SyntheticField::C => PotentialSpec {
                stream: Potential::function(field_c_stream),
                potential: Potential::function(field_c_potential),
            },
        }
    }

    /// Coefficients of the field. Field A is exact; B and C are analysed at
    /// `l_prime` on the Gauss–Legendre rule of the smallest sufficient level.
    pub fn coeffs(&self, l_prime: usize, dist: BumpDistance) -> Result<VectorCoeffPair> {
        match self {
            SyntheticField::A => Ok(field_a()),
            _ => {
                let mut level = 1;
                while (1usize << (level + 1)) < 2 * l_prime {
                    level += 1;
                }
                let rule = gauss_legendre_rule(level)?;
                spectral_field(&self.potentials(dist), l_prime, &rule)
            }
        }
    }

    pub fn reference_coeffs(&self) -> Result<VectorCoeffPair> {
        self.coeffs(REFERENCE_DEGREE, BumpDistance::Geodesic)
    }
}

/// Unweighted node values together with the weighted sequence.
#[derive(Debug, Clone)]
pub struct SampledField {
    pub raw: Vec<Vec3>,
    pub seq: TangentSampleSeq,
}

pub fn sample_field(coeffs: &VectorCoeffPair, rule: &Arc<QuadratureRule>) -> SampledField {
    let seq = vsh_synthesis(coeffs, rule);
    let raw = seq.unweighted();
    SampledField { raw, seq }
}

/// Real parts of pointwise field values.
pub fn eval_field_real(coeffs: &VectorCoeffPair, points: &[SpherePoint]) -> Vec<[f64; 3]> {
    vsh_eval_points(coeffs, points)
        .into_iter()
        .map(|v| [v[0].re, v[1].re, v[2].re])
        .collect()
}

/// `u·east + v·north`.
pub fn wind_to_tangent(u: f64, v: f64, p: &SpherePoint) -> Result<[f64; 3]> {
    let f = local_frame(p)?;
    Ok(std::array::from_fn(|i| u * f.east[i] + v * f.north[i]))
}

/// East and north at geographic coordinates (radians); defined at the poles
/// through the longitude.
fn lat_lon_frame(lat: f64, lon: f64) -> ([f64; 3], [f64; 3]) {
    let (sl, cl) = lat.sin_cos();
    let (so, co) = lon.sin_cos();
    ([-so, co, 0.0], [-sl * co, -sl * so, cl])
}

/// Zonal and meridional wind on a regular lat-lon grid (degrees, m/s).
/// `u` and `v` are stored latitude-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WindGrid {
    lats: Vec<f64>,
    lons: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

#[derive(serde::Serialize, serde::Deserialize)]
struct WindRow {
    lat: f64,
    lon: f64,
    u: f64,
    v: f64,
}

fn strictly_increasing(a: &[f64]) -> bool {
    a.windows(2).all(|w| w[0] < w[1])
}

impl WindGrid {
    pub fn new(lats: Vec<f64>, lons: Vec<f64>, u: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if lats.is_empty() || lons.is_empty() {
            return Err(Error::Format("wind grid has an empty axis".into()));
        }
        if !strictly_increasing(&lats) || !strictly_increasing(&lons) {
            return Err(Error::Format("wind grid axes must be strictly increasing".into()));
        }
        let n = lats.len() * lons.len();
        for arr in [&u, &v] {
            if arr.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    got: arr.len(),
                });
            }
        }
        if u.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Format("wind grid contains non-finite values".into()));
        }
        if lats[0] < -90.0 || *lats.last().unwrap() > 90.0 {
            return Err(Error::Format("latitudes must lie in [-90, 90]".into()));
        }
        if lons.last().unwrap() - lons[0] >= 360.0 {
            return Err(Error::Format("longitudes must span less than 360 degrees".into()));
        }
        Ok(WindGrid { lats, lons, u, v })
    }

    /// Samples a coefficient field at the grid cells.
    pub fn from_coeffs(coeffs: &VectorCoeffPair, lats: Vec<f64>, lons: Vec<f64>) -> Result<Self> {
        let mut points = Vec::with_capacity(lats.len() * lons.len());
        let mut frames = Vec::with_capacity(points.capacity());
        for &la in &lats {
            for &lo in &lons {
                let (la, lo) = (la.to_radians(), lo.to_radians());
                points.push(point_from_lat_lon(la, lo));
                frames.push(lat_lon_frame(la, lo));
            }
        }
        let vals = eval_field_real(coeffs, &points);
        let dot = |a: &[f64; 3], b: &[f64; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let u = vals.iter().zip(&frames).map(|(t, (e, _))| dot(t, e)).collect();
        let v = vals.iter().zip(&frames).map(|(t, (_, n))| dot(t, n)).collect();
        Self::new(lats, lons, u, v)
    }

    /// Regular grid with spacing `step` degrees, poles included.
    pub fn regular_axes(step: f64) -> (Vec<f64>, Vec<f64>) {
        let n_lat = (180.0 / step).round() as usize + 1;
        let n_lon = (360.0 / step).round() as usize;
        let lats = (0..n_lat).map(|i| -90.0 + i as f64 * step).collect();
        let lons = (0..n_lon).map(|j| j as f64 * step).collect();
        (lats, lons)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.lats.len(), self.lons.len())
    }

    pub fn lats(&self) -> &[f64] {
        &self.lats
    }

    pub fn lons(&self) -> &[f64] {
        &self.lons
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Reads `lat,lon,u,v` rows. Every cell of the lat-lon product must be
    /// present exactly once.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let expect = ["lat", "lon", "u", "v"];
        if headers.len() != 4 || headers.iter().zip(expect).any(|(h, e)| h != e) {
            return Err(Error::Format(format!("wind CSV header must be `lat,lon,u,v`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let mut rows = Vec::new();
        for r in rdr.deserialize::<WindRow>() {
            rows.push(r.map_err(csv_err)?);
        }
        let axis = |key: fn(&WindRow) -> f64| {
            let mut a: Vec<f64> = rows.iter().map(key).collect();
            a.sort_by(|x, y| x.total_cmp(y));
            a.dedup();
            a
        };
        let lats = axis(|r| r.lat);
        let lons = axis(|r| r.lon);
        let n = lats.len() * lons.len();
        if rows.len() != n {
            return Err(Error::Format(format!(
                "wind CSV has {} rows for a {}x{} grid",
                rows.len(),
                lats.len(),
                lons.len()
            )));
        }
        let mut u = vec![f64::NAN; n];
        let mut v = vec![f64::NAN; n];
        let mut seen = vec![false; n];
        for r in &rows {
            let i = lats.binary_search_by(|x| x.total_cmp(&r.lat)).unwrap();
            let j = lons.binary_search_by(|x| x.total_cmp(&r.lon)).unwrap();
            let k = i * lons.len() + j;
            if seen[k] {
                return Err(Error::Format(format!("duplicate wind cell ({}, {})", r.lat, r.lon)));
            }
            seen[k] = true;
            u[k] = r.u;
            v[k] = r.v;
        }
        Self::new(lats, lons, u, v)
    }

    pub fn to_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for (i, &lat) in self.lats.iter().enumerate() {
            for (j, &lon) in self.lons.iter().enumerate() {
                let k = i * self.lons.len() + j;
                w.serialize(WindRow {
                    lat,
                    lon,
                    u: self.u[k],
                    v: self.v[k],
                })
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Bilinear interpolation of `(u, v)`; periodic in longitude, clamped
    /// in latitude.
    pub fn interpolate(&self, lat_deg: f64, lon_deg: f64) -> (f64, f64) {
        let (i0, i1, fi) = bracket_clamped(&self.lats, lat_deg);
        let (j0, j1, fj) = self.bracket_lon(lon_deg);
        let nl = self.lons.len();
        let at = |a: &[f64], i: usize, j: usize| a[i * nl + j];
        let mix = |a: &[f64]| {
            let lo = at(a, i0, j0) * (1.0 - fj) + at(a, i0, j1) * fj;
            let hi = at(a, i1, j0) * (1.0 - fj) + at(a, i1, j1) * fj;
            lo * (1.0 - fi) + hi * fi
        };
        (mix(&self.u), mix(&self.v))
    }

    fn bracket_lon(&self, lon: f64) -> (usize, usize, f64) {
        let n = self.lons.len();
        if n == 1 {
            return (0, 0, 0.0);
        }
        let base = self.lons[0];
        let x = (lon - base).rem_euclid(360.0) + base;
        let last = self.lons[n - 1];
        if x >= last {
            let span = base + 360.0 - last;
            return (n - 1, 0, (x - last) / span);
        }
        let j = self.lons.partition_point(|&l| l <= x) - 1;
        (j, j + 1, (x - self.lons[j]) / (self.lons[j + 1] - self.lons[j]))
    }

    /// Tangent vectors at every node of `rule`.
    pub fn tangent_on_rule(&self, rule: &QuadratureRule) -> Result<Vec<Vec3>> {
        rule.points()
            .iter()
            .map(|p| {
                let lat = latitude(p).to_degrees();
                let lon = p.longitude().to_degrees();
                let (u, v) = self.interpolate(lat, lon);
                let t = wind_to_tangent(u, v, p)?;
                Ok(t.map(|x| C64::new(x, 0.0)))
            })
            .collect()
    }
}

fn bracket_clamped(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let i = axis.partition_point(|&a| a <= x) - 1;
    (i, i + 1, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// `‖a - b‖ / ‖a‖` over node values.
pub fn relative_l2(reference: &[Vec3], other: &[Vec3]) -> f64 {
    let num: f64 = reference
        .iter()
        .zip(other)
        .map(|(x, y)| (0..3).map(|k| (x[k] - y[k]).norm_sqr()).sum::<f64>())
        .sum();
    let den: f64 = reference.iter().map(crate::vsh::norm_sqr3).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// `max_k |T_k·x_k| / |T_k|` over nonzero values.
pub fn max_tangency_defect(values: &[Vec3], points: &[SpherePoint]) -> f64 {
    values
        .iter()
        .zip(points)
        .map(|(v, p)| {
            let x = p.xyz();
            let n = crate::vsh::norm_sqr3(v).sqrt();
            if n == 0.0 {
                0.0
            } else {
                (v[0] * x[0] + v[1] * x[1] + v[2] * x[2]).norm() / n
            }
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_geom::gauss_legendre_rule;
    use crate::vsh::vsh_analysis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_points(n: usize, seed: u64) -> Vec<SpherePoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = rng.gen_range(-0.95..0.95);
                let phi: f64 = rng.gen_range(0.0..2.0 * PI);
                SpherePoint::from_angles(z.acos(), phi).unwrap()
            })
            .collect()
    }

    /// `x × ∇*s` and `∇*s` by central differences of `s(y/|y|)` in R³.
    fn fd_curl_grad(s: &dyn Fn(&SpherePoint) -> f64, p: &SpherePoint) -> ([f64; 3], [f64; 3]) {
        let h = 1e-5;
        let x = p.xyz();
        let mut g = [0.0; 3];
        for (k, gk) in g.iter_mut().enumerate() {
            let mut a = x;
            let mut b = x;
            a[k] += h;
            b[k] -= h;
            *gk = (s(&SpherePoint::normalized(a)) - s(&SpherePoint::normalized(b))) / (2.0 * h);
        }
        let d = g[0] * x[0] + g[1] * x[1] + g[2] * x[2];
        let gt = [g[0] - d * x[0], g[1] - d * x[1], g[2] - d * x[2]];
        let c = [
            x[1] * gt[2] - x[2] * gt[1],
            x[2] * gt[0] - x[0] * gt[2],
            x[0] * gt[1] - x[1] * gt[0],
        ];
        (c, gt)
    }

    #[test]
    fn degree_one_stream() {
        let mut s = ScalarCoeffs::zeros(1);
        s.set(1, 0, C64::new(0.7, 0.0));
        let c = field_from_potentials(&s, &ScalarCoeffs::zeros(0));
        assert!((c.get_div(1, 0).re - 0.7 * 2f64.sqrt()).abs() < 1e-15);
        assert!(c.curl().iter().all(|v| v.norm() == 0.0));
        let nonzero = c.div().iter().filter(|v| v.norm() > 0.0).count();
        assert_eq!(nonzero, 1);
    }

    #[test]
    fn finite_difference_operators() {
        let (s, p) = field_a_potentials();
        let pts = random_points(200, 1);
        let stream_only = field_from_potentials(&s, &ScalarCoeffs::zeros(0));
        let pot_only = field_from_potentials(&ScalarCoeffs::zeros(0), &p);
        let ts = eval_field_real(&stream_only, &pts);
        let tp = eval_field_real(&pot_only, &pts);
        let sf = |q: &SpherePoint| real_synthesis(&s, q);
        let pf = |q: &SpherePoint| real_synthesis(&p, q);
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for (k, q) in pts.iter().enumerate() {
            let (curl, _) = fd_curl_grad(&sf, q);
            let (_, grad) = fd_curl_grad(&pf, q);
            for i in 0..3 {
                worst = worst.max((curl[i] - ts[k][i]).abs()).max((grad[i] - tp[k][i]).abs());
            }
            scale = scale.max(crate::vsh::norm_sqr3(&ts[k].map(|x| C64::new(x, 0.0))).sqrt());
        }
        assert!(worst / scale < 1e-6, "{worst} / {scale}");
    }

    #[test]
    fn field_a_shape() {
        let c = field_a();
        assert_eq!(c.l_max(), 6);
        assert!(c.real_field_defect() < 1e-15);
        let rule = Arc::new(gauss_legendre_rule(4).unwrap());
        let sf = sample_field(&c, &rule);
        assert!(max_tangency_defect(&sf.raw, rule.points()) < 1e-12);
        let rule5 = Arc::new(gauss_legendre_rule(5).unwrap());
        let sf5 = sample_field(&c, &rule5);
        let imag = sf5.raw.iter().flatten().map(|z| z.im.abs()).fold(0.0, f64::max);
        assert!(imag < 1e-11);
        let maxn = sf5.raw.iter().map(crate::vsh::norm_sqr3).fold(0.0, f64::max);
        assert!(maxn.is_finite() && maxn > 0.0);
        for (k, w) in rule5.weights().iter().enumerate() {
            for i in 0..3 {
                assert!((sf5.raw[k][i] * w.sqrt() - sf5.seq.values()[k][i]).norm() < 1e-15);
            }
        }
        // Energy split survives a transform round trip.
        let back = vsh_analysis(&sf5.seq, 6).coeffs;
        let (s, p) = field_a_potentials();
        let energy = |c: &ScalarCoeffs| -> f64 {
            (1..=c.l_max())
                .flat_map(|l| (-(l as i64)..=l as i64).map(move |m| (l, m)))
                .map(|(l, m)| (l * (l + 1)) as f64 * c.get(l, m).norm_sqr())
                .sum()
        };
        let (es, ep) = (energy(&s), energy(&p));
        let got_s: f64 = back.div().iter().map(|z| z.norm_sqr()).sum();
        let got_p: f64 = back.curl().iter().map(|z| z.norm_sqr()).sum();
        assert!((got_s - es).abs() < 1e-11 && (got_p - ep).abs() < 1e-11);
    }

    #[test]
    fn spectral_field_reproduces_field_a() {
        let spec = PotentialSpec {
            stream: Potential::function(field_a_stream),
            potential: Potential::function(field_a_potential),
        };
        let rule = gauss_legendre_rule(3).unwrap();
        let c = spectral_field(&spec, 6, &rule).unwrap();
        assert!(c.max_abs_diff(&field_a()) < 1e-11);
        let zero = PotentialSpec {
            stream: Potential::zero(),
            potential: Potential::function(|_| 0.0),
        };
        let z = spectral_field(&zero, 6, &rule).unwrap();
        assert!(z.norm_sqr() == 0.0);
        assert!(matches!(spectral_field(&spec, 9, &rule), Err(Error::Domain(_))));
    }

    #[test]
    fn g_limit_at_centre() {
        let lat = FRAC_PI_4;
        let c = point_from_lat_lon(lat, 0.0);
        assert_eq!(g_kernel(&c, lat, 0.0), 0.5);
        // Printed form evaluated directly near the centre.
        let printed = |a: f64| {
            let t = 1.0 - a;
            -0.5 * ((3.0 * t + 3.0 * 2f64.sqrt() * a.powf(1.5) - 4.0)
                + (3.0 * t * t - 4.0 * t + 1.0) * a.ln()
                + (3.0 * t - 1.0) * a * ((2.0 * a).sqrt() + a).ln())
        };
        for a in [1e-8, 1e-10, 1e-12] {
            assert!((printed(a) - 0.5).abs() < 1e-6, "{a}");
        }
        // Agreement away from the centre.
        for p in random_points(50, 2) {
            let d = chord(&p, &c);
            let a = 0.5 * d * d;
            assert!((g_kernel(&p, lat, 0.0) - printed(a)).abs() < 1e-12);
        }
    }

    #[test]
    fn bump_support_and_shape() {
        // Direct sign pattern of the five cubes.
        let raw = |r: f64, s: f64| -> f64 {
            let terms = [1.0, -4.0, 6.0, -4.0, 1.0];
            terms.iter().enumerate().map(|(j, b)| b * (r - (j as f64 - 2.0) / s).abs().powi(3)).sum::<f64>() * s.powi(3) / 12.0
        };
        for s in [3.0, 5.0] {
            for k in 0..40 {
                let r = 2.0 / s + k as f64 * 0.05;
                assert!(raw(r, s).abs() < 1e-12);
            }
            assert!((raw(0.0, s) - 2.0 / 3.0).abs() < 1e-14);
        }
        let c = point_from_lat_lon(FRAC_PI_6, 0.0);
        assert!((bump(&c, 5.0, FRAC_PI_6, 0.0, BumpDistance::Geodesic) - 2.0 / 3.0).abs() < 1e-14);
        for p in random_points(300, 3) {
            let r = geodesic(&p, &c);
            let b = bump(&p, 5.0, FRAC_PI_6, 0.0, BumpDistance::Geodesic);
            if r >= 0.4 {
                assert_eq!(b, 0.0);
            } else {
                assert!((b - raw(r, 5.0)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn field_b_potential_continuous_at_centres() {
        let centres = [(FRAC_PI_6, 0.0), (PI / 5.0, PI / 7.0), (-FRAC_PI_6, FRAC_PI_2), (-PI / 5.0, PI / 3.0)];
        for (la, lo) in centres {
            let c = point_from_lat_lon(la, lo);
            let v0 = field_b_potential(&c, BumpDistance::Geodesic);
            assert!(v0.is_finite());
            // Symmetric offsets cancel the smooth gradient; a jump would not cancel.
            for (dla, dlo) in [(1e-6, 0.0), (0.0, 1e-6)] {
                let a = field_b_potential(&point_from_lat_lon(la + dla, lo + dlo), BumpDistance::Geodesic);
                let b = field_b_potential(&point_from_lat_lon(la - dla, lo - dlo), BumpDistance::Geodesic);
                assert!((a + b - 2.0 * v0).abs() < 1e-8);
                assert!((a - v0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn sin14_integral_matches_power_reduction() {
        // sin^{14}u = 2^{-14} [C(14,7) + 2 Σ_{k<7} (-1)^{7-k} C(14,k) cos(2(7-k)u)]
        let binom = |n: u64, k: u64| -> f64 { (1..=k).fold(1.0, |acc, i| acc * (n - k + i) as f64 / i as f64) };
        let anti = |xi: f64| -> f64 {
            let mut s = binom(14, 7) * xi;
            for k in 0..7u64 {
                let f = 2.0 * (7 - k) as f64;
                let sign = if (7 - k) % 2 == 0 { 1.0 } else { -1.0 };
                // u = 2ξ, cos(f u) = cos(2 f ξ)
                s += 2.0 * sign * binom(14, k) * (2.0 * f * xi).sin() / (2.0 * f);
            }
            s / 2f64.powi(14)
        };
        for lat in [-1.2, -0.3, 0.0, 0.7, FRAC_PI_2] {
            let exact = anti(lat) - anti(-FRAC_PI_2);
            assert!((sin14_integral(lat) - exact).abs() < 1e-12, "{lat}");
        }
    }

    #[test]
    fn field_c_spectral_convergence() {
        let probe = random_points(60, 4);
        let fine = SyntheticField::C.coeffs(64, BumpDistance::Geodesic).unwrap();
        let reference = vsh_eval_points(&fine, &probe);
        let mut prev = f64::INFINITY;
        for l in [8, 16, 32] {
            let c = SyntheticField::C.coeffs(l, BumpDistance::Geodesic).unwrap();
            let e = relative_l2(&reference, &vsh_eval_points(&c, &probe));
            assert!(e < prev, "{l}: {e} >= {prev}");
            prev = e;
        }
    }

    #[test]
    fn wind_conversion() {
        let p = SpherePoint::from_angles(FRAC_PI_2, 0.0).unwrap();
        let t = wind_to_tangent(1.0, 0.0, &p).unwrap();
        assert!((t[0]).abs() < 1e-15 && (t[1] - 1.0).abs() < 1e-15 && t[2].abs() < 1e-15);
        for (k, q) in random_points(50, 5).iter().enumerate() {
            let (u, v) = (k as f64 * 0.3 - 4.0, 2.5 - k as f64 * 0.1);
            let t = wind_to_tangent(u, v, q).unwrap();
            assert!(q.dot(&t).abs() < 1e-14);
            let n = (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt();
            assert!((n - u.hypot(v)).abs() < 1e-14);
        }
        let pole = SpherePoint::from_xyz(0.0, 0.0, 1.0).unwrap();
        assert!(matches!(wind_to_tangent(1.0, 1.0, &pole), Err(Error::DegenerateFrame)));
    }

    #[test]
    fn wind_grid_csv_and_interpolation() {
        let (lats, lons) = WindGrid::regular_axes(30.0);
        assert_eq!((lats.len(), lons.len()), (7, 12));
        let n = lats.len() * lons.len();
        // Linear data in (lat, lon) away from the seam is reproduced exactly.
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for la in &lats {
            for lo in &lons {
                u.push(2.0 * la + 0.5 * lo);
                v.push(-la);
            }
        }
        let g = WindGrid::new(lats, lons, u, v).unwrap();
        let (a, b) = g.interpolate(12.5, 100.0);
        assert!((a - (25.0 + 50.0)).abs() < 1e-12 && (b + 12.5).abs() < 1e-12);
        // Clamped beyond the last latitude row is impossible; periodic seam.
        let (a0, _) = g.interpolate(0.0, 345.0);
        assert!((a0 - (0.5 * 330.0 * 0.5 + 0.5 * 0.0 * 0.5)).abs() < 1e-12);
        let (w1, _) = g.interpolate(0.0, -15.0);
        assert_eq!(w1, a0);
        let mut buf = Vec::new();
        g.to_csv(&mut buf).unwrap();
        assert!(buf.starts_with(b"lat,lon,u,v\n"));
        let back = WindGrid::from_csv(&buf[..]).unwrap();
        assert_eq!(back, g);
        assert!(WindGrid::from_csv(&b"lat,lon,x,v\n0,0,1,1\n"[..]).is_err());
        assert!(WindGrid::from_csv(&b"lat,lon,u,v\n0,0,1,1\n0,10,1,1\n10,0,1,1\n"[..]).is_err());
        assert!(WindGrid::new(vec![1.0, 0.0], vec![0.0], vec![0.0; 2], vec![0.0; 2]).is_err());
    }

    #[test]
    fn wind_grid_from_field_recovers_field_at_cells() {
        let c = field_a();
        let g = WindGrid::from_coeffs(&c, vec![-30.0, 10.0, 45.0], vec![0.0, 120.0, 240.0]).unwrap();
        // Row 1 (lat 10), column 2 (lon 240).
        let k = 3 + 2;
        let p = point_from_lat_lon(10f64.to_radians(), 240f64.to_radians());
        let t = wind_to_tangent(g.u()[k], g.v()[k], &p).unwrap();
        let want = eval_field_real(&c, &[p])[0];
        for i in 0..3 {
            assert!((t[i] - want[i]).abs() < 1e-13);
        }
    }
}
