//! Complex scalar spherical harmonics and their transforms over quadrature rules.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::legendre::LegendreTable;
use crate::rings::{bin, sectoral_table, Column, RingFft};
use crate::sphere_geom::{QuadratureRule, SpherePoint};

/// Points per task in the scattered transforms. Partial sums are combined in
/// chunk order, so results are independent of the thread count.
pub(crate) const CHUNK: usize = 256;

/// Coefficients `c_ℓm`, `0 ≤ ℓ ≤ L`, stored at `ℓ² + ℓ + m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarCoeffs {
    l_max: usize,
    data: Vec<C64>,
}

impl ScalarCoeffs {
    pub fn zeros(l_max: usize) -> Self {
        ScalarCoeffs {
            l_max,
            data: vec![C64::new(0.0, 0.0); (l_max + 1) * (l_max + 1)],
        }
    }

    pub fn from_vec(l_max: usize, data: Vec<C64>) -> Result<Self> {
        let expected = (l_max + 1) * (l_max + 1);
        if data.len() != expected {
            return Err(Error::Shape {
                expected,
                got: data.len(),
            });
        }
        Ok(ScalarCoeffs { l_max, data })
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    #[inline]
    pub fn index(l: usize, m: i64) -> usize {
        idx(l, m)
    }

    pub fn get(&self, l: usize, m: i64) -> C64 {
        self.data[idx(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, v: C64) {
        self.data[idx(l, m)] = v;
    }

    /// Sets `c_ℓm = v` and its partner `c_{ℓ,-m} = (-1)^m conj(v)`.
    pub fn set_real_pair(&mut self, l: usize, m: i64, v: C64) {
        self.set(l, m, v);
        let s = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        if m != 0 {
            self.set(l, -m, v.conj() * s);
        } else {
            self.set(l, 0, C64::new(v.re, 0.0));
        }
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    /// Largest `|c_{ℓ,-m} - (-1)^m conj(c_ℓm)|`; zero for coefficients of a
    /// real-valued function.
    pub fn real_field_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for l in 0..=self.l_max {
            for m in 0..=(l as i64) {
                let s = if m % 2 == 0 { 1.0 } else { -1.0 };
                let d = self.get(l, -m) - self.get(l, m).conj() * s;
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn is_real_field(&self, tol: f64) -> bool {
        self.real_field_defect() <= tol
    }
}

#[inline]
pub(crate) fn idx(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

fn check_order(l: usize, m: i64) -> Result<()> {
    if m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("order {m} exceeds degree {l}")));
    }
    Ok(())
}

/// `Y_ℓm(p)`.
pub fn eval_ylm(l: usize, m: i64, p: &SpherePoint) -> Result<C64> {
    Ok(eval_ylm_grad(l, m, p)?.0)
}

/// `(Y, ∂Y/∂θ, ∂Y/∂φ)` at `p`. Finite at the poles.
pub fn eval_ylm_grad(l: usize, m: i64, p: &SpherePoint) -> Result<(C64, C64, C64)> {
    check_order(l, m)?;
    let (c, s) = p.cos_sin_theta();
    let t = LegendreTable::new(c, s, l);
    let (v, d, _) = t.signed(l, m);
    let e = C64::from_polar(1.0, m as f64 * p.longitude());
    let y = e * v;
    Ok((y, e * d, C64::new(0.0, m as f64) * y))
}

/// `f(x) = Σ c_ℓm Y_ℓm(x)` at arbitrary points.
pub fn scalar_synthesis(coeffs: &ScalarCoeffs, points: &[SpherePoint]) -> Vec<C64> {
    let l_max = coeffs.l_max;
    points
        .par_iter()
        .map(|p| {
            let (c, s) = p.cos_sin_theta();
            let t = LegendreTable::new(c, s, l_max);
            let phi = p.longitude();
            let mut acc = C64::new(0.0, 0.0);
            for m in -(l_max as i64)..=(l_max as i64) {
                let am = m.unsigned_abs() as usize;
                let mut g = C64::new(0.0, 0.0);
                for l in am..=l_max {
                    g += coeffs.get(l, m) * t.signed(l, m).0;
                }
                acc += g * C64::from_polar(1.0, m as f64 * phi);
            }
            acc
        })
        .collect()
}

/// Synthesis at the nodes of a rule, on the ring path when available.
pub fn scalar_synthesis_on_rule(coeffs: &ScalarCoeffs, rule: &QuadratureRule) -> Vec<C64> {
    let Some(r) = rule.rings() else {
        return scalar_synthesis(coeffs, rule.points());
    };
    let l_max = coeffs.l_max;
    let n_lat = r.n_lat();
    let n_lon = r.n_lon;
    let sect = sectoral_table(r, l_max);
    // Phase 1: per order, the Legendre sum on every ring.
    let per_m: Vec<Vec<C64>> = (-(l_max as i64)..=(l_max as i64))
        .into_par_iter()
        .map(|m| {
            let am = m.unsigned_abs() as usize;
            let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
            let mut col = Column::new(l_max);
            let mut out = vec![C64::new(0.0, 0.0); n_lat];
            for (i, o) in out.iter_mut().enumerate() {
                col.fill(r, &sect, i, am, l_max);
                let mut g = C64::new(0.0, 0.0);
                for l in am..=l_max {
                    g += coeffs.get(l, m) * col.value[l - am];
                }
                *o = g * sign;
            }
            out
        })
        .collect();
    // Phase 2: fold orders into DFT bins and invert ring by ring.
    let mut grid = vec![C64::new(0.0, 0.0); n_lat * n_lon];
    grid.par_chunks_mut(n_lon).enumerate().for_each(|(i, ring)| {
        for (k, m) in (-(l_max as i64)..=(l_max as i64)).enumerate() {
            ring[bin(m, n_lon)] += per_m[k][i];
        }
    });
    RingFft::new(n_lon).inverse_rings(&mut grid);
    grid
}

/// `c_ℓm = Σ_k w_k f(x_k) conj(Y_ℓm(x_k))` for `ℓ ≤ l_max`.
pub fn scalar_analysis(samples: &[C64], rule: &QuadratureRule, l_max: usize) -> Result<ScalarCoeffs> {
    if samples.len() != rule.len() {
        return Err(Error::Shape {
            expected: rule.len(),
            got: samples.len(),
        });
    }
    let Some(r) = rule.rings() else {
        return Ok(scattered_analysis(samples, rule, l_max));
    };
    let n_lat = r.n_lat();
    let n_lon = r.n_lon;
    let mut spectra = samples.to_vec();
    RingFft::new(n_lon).forward_rings(&mut spectra);
    let sect = sectoral_table(r, l_max);
    let per_m: Vec<Vec<C64>> = (-(l_max as i64)..=(l_max as i64))
        .into_par_iter()
        .map(|m| {
            let am = m.unsigned_abs() as usize;
            let sign = if m < 0 && am % 2 == 1 { -1.0 } else { 1.0 };
            let b = bin(m, n_lon);
            let mut col = Column::new(l_max);
            let mut acc = vec![C64::new(0.0, 0.0); l_max + 1 - am];
            for i in 0..n_lat {
                col.fill(r, &sect, i, am, l_max);
                let f = spectra[i * n_lon + b] * (r.ring_weight[i] * sign);
                for (a, v) in acc.iter_mut().zip(&col.value) {
                    *a += f * *v;
                }
            }
            acc
        })
        .collect();
    let mut out = ScalarCoeffs::zeros(l_max);
    for (k, m) in (-(l_max as i64)..=(l_max as i64)).enumerate() {
        let am = m.unsigned_abs() as usize;
        for (off, v) in per_m[k].iter().enumerate() {
            out.set(am + off, m, *v);
        }
    }
    Ok(out)
}

fn scattered_analysis(samples: &[C64], rule: &QuadratureRule, l_max: usize) -> ScalarCoeffs {
    let n = (l_max + 1) * (l_max + 1);
    let partials: Vec<Vec<C64>> = rule
        .points()
        .par_chunks(CHUNK)
        .zip(rule.weights().par_chunks(CHUNK))
        .zip(samples.par_chunks(CHUNK))
        .map(|((pts, ws), fs)| {
            let mut acc = vec![C64::new(0.0, 0.0); n];
            for ((p, &w), &f) in pts.iter().zip(ws).zip(fs) {
                let (c, s) = p.cos_sin_theta();
                let t = LegendreTable::new(c, s, l_max);
                let phi = p.longitude();
                let wf = f * w;
                for m in -(l_max as i64)..=(l_max as i64) {
                    let e = wf * C64::from_polar(1.0, -(m as f64) * phi);
                    for l in (m.unsigned_abs() as usize)..=l_max {
                        acc[idx(l, m)] += e * t.signed(l, m).0;
                    }
                }
            }
            acc
        })
        .collect();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for part in partials {
        for (o, v) in out.iter_mut().zip(part) {
            *o += v;
        }
    }
    ScalarCoeffs { l_max, data: out }
}
