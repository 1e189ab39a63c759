//! Vector synthesis `F` and its adjoint `F*` over a quadrature rule.
//!
//! Ring rules go through a longitude DFT per ring plus a dense Legendre
//! contraction per order; scattered rules use direct sums. Both paths fix the
//! reduction order, so output does not depend on the thread count.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::{combine, spherical_frame, TangentSampleSeq, Vec3, VectorCoeffPair, ZERO3};
use crate::error::{Error, Result};
use crate::legendre::LegendreTable;
use crate::rings::{bin, sectoral_table, Column, RingFft};
use crate::scalar_harmonics::CHUNK;
use crate::sphere_geom::{QuadratureRule, RingLayout, SpherePoint};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn inv_sqrt_lambda(l_max: usize) -> Vec<f64> {
    (0..=l_max)
        .map(|l| if l == 0 { 0.0 } else { 1.0 / ((l * (l + 1)) as f64).sqrt() })
        .collect()
}

/// Signs that turn an unsigned-order column into order `m`: value and
/// derivative pick up `(-1)^m` for negative `m`, the `m/sin θ` column also
/// flips with the sign of `m`.
#[inline]
fn order_signs(m: i64) -> (f64, f64) {
    let odd = m.unsigned_abs() % 2 == 1;
    let s = if m < 0 && odd { -1.0 } else { 1.0 };
    (s, if m < 0 { -s } else { s })
}

/// `value_k = √w_k Σ (div y1 + curl y2)(x_k)`.
pub fn vsh_synthesis(coeffs: &VectorCoeffPair, rule: &Arc<QuadratureRule>) -> TangentSampleSeq {
    let values = match rule.rings() {
        Some(r) => ring_synthesis(coeffs, r),
        None => scattered_synthesis(coeffs, rule.points(), Some(rule.weights())),
    };
    let l = coeffs.l_max();
    let certified = rule.exactness_degree() >= 2 * l;
    TangentSampleSeq::new(rule.clone(), values, l, certified).expect("synthesis matches rule size")
}

/// Unweighted pointwise synthesis at arbitrary points.
pub fn vsh_eval_points(coeffs: &VectorCoeffPair, points: &[SpherePoint]) -> Vec<Vec3> {
    scattered_synthesis(coeffs, points, None)
}

/// Adjoint transform output. `certified` is false when the rule is not
/// exact to twice the requested bandlimit, in which case the coefficients are
/// a best-effort projection rather than an exact inverse.
#[derive(Debug, Clone)]
pub struct VshAnalysis {
    pub coeffs: VectorCoeffPair,
    pub certified: bool,
}

/// `div_ℓm = Σ_k √w_k value_k · conj(y1_ℓm(x_k))`, likewise `curl` with `y2`.
pub fn vsh_analysis(seq: &TangentSampleSeq, l_max: usize) -> VshAnalysis {
    let rule = seq.rule();
    let coeffs = match rule.rings() {
        Some(r) => ring_analysis(seq.values(), r, l_max),
        None => scattered_analysis(seq.values(), rule.points(), rule.weights(), l_max),
    };
    VshAnalysis {
        coeffs,
        certified: rule.exactness_degree() >= 2 * l_max,
    }
}

/// Orthogonal projection onto degree `≤ l_max`.
#[derive(Debug, Clone)]
pub struct Projection {
    /// `F F* (√w raw)`.
    pub projected: TangentSampleSeq,
    /// Spectral mirror of `projected`.
    pub coeffs: VectorCoeffPair,
    /// `√w raw - projected`, as a weighted sequence.
    pub residual: Vec<Vec3>,
}

/// Weights raw node values by `√w`, then applies `F F*`.
pub fn project_bandlimited(raw: &[Vec3], rule: &Arc<QuadratureRule>, l_max: usize) -> Result<Projection> {
    if rule.exactness_degree() < 2 * l_max {
        return Err(Error::Domain(format!(
            "rule exact to degree {} cannot project onto degree {l_max}",
            rule.exactness_degree()
        )));
    }
    let seq = TangentSampleSeq::from_unweighted(rule.clone(), raw, l_max)?;
    let coeffs = vsh_analysis(&seq, l_max).coeffs;
    let projected = vsh_synthesis(&coeffs, rule);
    let residual = seq
        .values()
        .iter()
        .zip(projected.values())
        .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
        .collect();
    Ok(Projection {
        projected,
        coeffs,
        residual,
    })
}

fn ring_synthesis(coeffs: &VectorCoeffPair, r: &RingLayout) -> Vec<Vec3> {
    let l_max = coeffs.l_max();
    let n_lat = r.n_lat();
    let n_lon = r.n_lon;
    let sect = sectoral_table(r, l_max);
    let isl = inv_sqrt_lambda(l_max);
    let ml = l_max as i64;

    // Phase 1: (F_θ, F_φ) per order and ring. Orders ±m share a column.
    let per_am: Vec<[Vec<(C64, C64)>; 2]> = (0..=l_max)
        .into_par_iter()
        .map(|am| {
            let orders: &[i64] = if am == 0 { &[0] } else { &[am as i64, -(am as i64)] };
            let l0 = am.max(1);
            let mut col = Column::new(l_max);
            let mut out = [Vec::with_capacity(n_lat), Vec::with_capacity(n_lat)];
            for i in 0..n_lat {
                col.fill(r, &sect, i, am, l_max);
                for (slot, &m) in orders.iter().enumerate() {
                    let (sv, sq) = order_signs(m);
                    let (mut ft, mut fp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                    for l in l0..=l_max {
                        let k = VectorCoeffPair::index(l, m);
                        let (dv, cv) = (coeffs.div()[k], coeffs.curl()[k]);
                        let d = sv * col.d_theta[l - am] * isl[l];
                        let ims = I * (sq * col.m_over_sin[l - am] * isl[l]);
                        ft += cv * d - dv * ims;
                        fp += dv * d + cv * ims;
                    }
                    out[slot].push((ft, fp));
                }
            }
            out
        })
        .collect();
    let column = |m: i64| -> &Vec<(C64, C64)> {
        let am = m.unsigned_abs() as usize;
        &per_am[am][usize::from(m < 0)]
    };

    // Phase 2: fold into bins, inverse DFT, rotate into Cartesian.
    let mut gt = vec![C64::new(0.0, 0.0); n_lat * n_lon];
    let mut gp = vec![C64::new(0.0, 0.0); n_lat * n_lon];
    gt.par_chunks_mut(n_lon)
        .zip(gp.par_chunks_mut(n_lon))
        .enumerate()
        .for_each(|(i, (rt, rp))| {
            for m in -ml..=ml {
                let b = bin(m, n_lon);
                let (ft, fp) = column(m)[i];
                rt[b] += ft;
                rp[b] += fp;
            }
        });
    let fft = RingFft::new(n_lon);
    fft.inverse_rings(&mut gt);
    fft.inverse_rings(&mut gp);

    let lon = longitudes(n_lon);
    let mut out = vec![ZERO3; n_lat * n_lon];
    out.par_chunks_mut(n_lon).enumerate().for_each(|(i, ring)| {
        let sw = r.ring_weight[i].sqrt();
        let (c, s) = (r.cos_theta[i], r.sin_theta[i]);
        for (j, o) in ring.iter_mut().enumerate() {
            let (sp, cp) = lon[j];
            let et = [c * cp, c * sp, -s];
            let ep = [-sp, cp, 0.0];
            let k = i * n_lon + j;
            *o = combine(gt[k] * sw, &et, gp[k] * sw, &ep);
        }
    });
    out
}

fn ring_analysis(values: &[Vec3], r: &RingLayout, l_max: usize) -> VectorCoeffPair {
    let n_lat = r.n_lat();
    let n_lon = r.n_lon;
    let lon = longitudes(n_lon);

    // Phase 1: weighted frame components, forward DFT per ring.
    let mut vt = vec![C64::new(0.0, 0.0); n_lat * n_lon];
    let mut vp = vec![C64::new(0.0, 0.0); n_lat * n_lon];
    vt.par_chunks_mut(n_lon)
        .zip(vp.par_chunks_mut(n_lon))
        .enumerate()
        .for_each(|(i, (rt, rp))| {
            let sw = r.ring_weight[i].sqrt();
            let (c, s) = (r.cos_theta[i], r.sin_theta[i]);
            for j in 0..n_lon {
                let (sp, cp) = lon[j];
                let v = &values[i * n_lon + j];
                rt[j] = (v[0] * (c * cp) + v[1] * (c * sp) - v[2] * s) * sw;
                rp[j] = (v[1] * cp - v[0] * sp) * sw;
            }
        });
    let fft = RingFft::new(n_lon);
    fft.forward_rings(&mut vt);
    fft.forward_rings(&mut vp);

    // Phase 2: per order, accumulate over rings in ring order.
    let sect = sectoral_table(r, l_max);
    let isl = inv_sqrt_lambda(l_max);
    let ml = l_max as i64;
    let per_am: Vec<[Vec<(C64, C64)>; 2]> = (0..=l_max)
        .into_par_iter()
        .map(|am| {
            let orders: &[i64] = if am == 0 { &[0] } else { &[am as i64, -(am as i64)] };
            let l0 = am.max(1);
            let mut col = Column::new(l_max);
            let mut acc = [
                vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); l_max + 1 - am],
                vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); if am == 0 { 0 } else { l_max + 1 - am }],
            ];
            for i in 0..n_lat {
                col.fill(r, &sect, i, am, l_max);
                for (slot, &m) in orders.iter().enumerate() {
                    let (sv, sq) = order_signs(m);
                    let b = bin(m, n_lon);
                    let (ft, fp) = (vt[i * n_lon + b], vp[i * n_lon + b]);
                    for l in l0..=l_max {
                        let d = sv * col.d_theta[l - am] * isl[l];
                        let ims = I * (sq * col.m_over_sin[l - am] * isl[l]);
                        let a = &mut acc[slot][l - am];
                        a.0 += ft * ims + fp * d;
                        a.1 += ft * d - fp * ims;
                    }
                }
            }
            acc
        })
        .collect();

    let mut out = VectorCoeffPair::zeros(l_max);
    for m in -ml..=ml {
        let am = m.unsigned_abs() as usize;
        let acc = &per_am[am][usize::from(m < 0)];
        for l in am.max(1)..=l_max {
            let idx = VectorCoeffPair::index(l, m);
            out.div_mut()[idx] = acc[l - am].0;
            out.curl_mut()[idx] = acc[l - am].1;
        }
    }
    out
}

fn longitudes(n_lon: usize) -> Vec<(f64, f64)> {
    let d = 2.0 * std::f64::consts::PI / n_lon as f64;
    (0..n_lon).map(|j| (j as f64 * d).sin_cos()).collect()
}

fn scattered_synthesis(coeffs: &VectorCoeffPair, points: &[SpherePoint], weights: Option<&[f64]>) -> Vec<Vec3> {
    let l_max = coeffs.l_max();
    let isl = inv_sqrt_lambda(l_max);
    let ml = l_max as i64;
    points
        .par_iter()
        .enumerate()
        .map(|(k, p)| {
            let (c, s) = p.cos_sin_theta();
            let phi = p.longitude();
            let t = LegendreTable::new(c, s, l_max);
            let (mut ft, mut fp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            for m in -ml..=ml {
                let e = C64::from_polar(1.0, m as f64 * phi);
                let (mut gt, mut gp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for l in (m.unsigned_abs() as usize).max(1)..=l_max {
                    let idx = VectorCoeffPair::index(l, m);
                    let (dv, cv) = (coeffs.div()[idx], coeffs.curl()[idx]);
                    let (_, d, ms) = t.signed(l, m);
                    let d = d * isl[l];
                    let ims = I * (ms * isl[l]);
                    gt += cv * d - dv * ims;
                    gp += dv * d + cv * ims;
                }
                ft += gt * e;
                fp += gp * e;
            }
            let sw = weights.map_or(1.0, |w| w[k].sqrt());
            let (et, ep) = spherical_frame(c, s, phi);
            combine(ft * sw, &et, fp * sw, &ep)
        })
        .collect()
}

fn scattered_analysis(values: &[Vec3], points: &[SpherePoint], weights: &[f64], l_max: usize) -> VectorCoeffPair {
    let n = VectorCoeffPair::family_len(l_max);
    let isl = inv_sqrt_lambda(l_max);
    let ml = l_max as i64;
    let partials: Vec<(Vec<C64>, Vec<C64>)> = points
        .par_chunks(CHUNK)
        .zip(weights.par_chunks(CHUNK))
        .zip(values.par_chunks(CHUNK))
        .map(|((pts, ws), vs)| {
            let mut dacc = vec![C64::new(0.0, 0.0); n];
            let mut cacc = vec![C64::new(0.0, 0.0); n];
            for ((p, &w), v) in pts.iter().zip(ws).zip(vs) {
                let (c, s) = p.cos_sin_theta();
                let phi = p.longitude();
                let t = LegendreTable::new(c, s, l_max);
                let (et, ep) = spherical_frame(c, s, phi);
                let sw = w.sqrt();
                let vt = (v[0] * et[0] + v[1] * et[1] + v[2] * et[2]) * sw;
                let vp = (v[0] * ep[0] + v[1] * ep[1] + v[2] * ep[2]) * sw;
                for m in -ml..=ml {
                    let e = C64::from_polar(1.0, -(m as f64) * phi);
                    let (ft, fp) = (vt * e, vp * e);
                    for l in (m.unsigned_abs() as usize).max(1)..=l_max {
                        let (_, d, ms) = t.signed(l, m);
                        let d = d * isl[l];
                        let ims = I * (ms * isl[l]);
                        let idx = VectorCoeffPair::index(l, m);
                        dacc[idx] += ft * ims + fp * d;
                        cacc[idx] += ft * d - fp * ims;
                    }
                }
            }
            (dacc, cacc)
        })
        .collect();
    let mut out = VectorCoeffPair::zeros(l_max);
    for (d, c) in partials {
        for (o, v) in out.div_mut().iter_mut().zip(d) {
            *o += v;
        }
        for (o, v) in out.curl_mut().iter_mut().zip(c) {
            *o += v;
        }
    }
    out
}
