//! Orthonormal associated Legendre functions in colatitude form.
//!
//! Everything here returns `Θ_ℓm(θ) = (-1)^m N_ℓm P_ℓ^m(cos θ)` for `m ≥ 0`,
//! with `N_ℓm = sqrt((2ℓ+1)/(4π) (ℓ-m)!/(ℓ+m)!)`, so that
//! `Y_ℓm(θ, φ) = Θ_ℓm(θ) e^{imφ}`. The Condon–Shortley phase is included.
//!
//! Recurrences run directly on normalized values (no factorials), which keeps
//! them finite well past degree 1000. Sectoral values `∝ sin^m θ` underflow
//! to zero near the poles at high order; the true values are below `1e-300`
//! there, so this is harmless.

use std::f64::consts::PI;

/// Flat index of `(ℓ, m)` with `0 ≤ m ≤ ℓ` in a triangular table.
#[inline]
pub fn tri(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

#[inline]
fn cs_sign(m: usize) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `Θ_ℓm`, `dΘ_ℓm/dθ` and `m Θ_ℓm / sin θ` for all `0 ≤ m ≤ ℓ ≤ l_max` at a
/// single colatitude. Pole-safe: the last column takes its limit at `sin θ = 0`.
#[derive(Debug, Clone)]
pub struct LegendreTable {
    l_max: usize,
    value: Vec<f64>,
    d_theta: Vec<f64>,
    m_over_sin: Vec<f64>,
}

impl LegendreTable {
    pub fn new(cos_t: f64, sin_t: f64, l_max: usize) -> Self {
        let n = tri(l_max, l_max) + 1;
        // Unsigned normalized values first; the phase is applied at the end.
        let mut p = vec![0.0; n];
        p[0] = 0.5 / PI.sqrt();
        for m in 1..=l_max {
            let mf = m as f64;
            p[tri(m, m)] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * p[tri(m - 1, m - 1)];
        }
        for m in 0..=l_max {
            fill_column(m, cos_t, l_max, &mut p);
        }

        let mut d_theta = vec![0.0; n];
        let mut m_over_sin = vec![0.0; n];
        for l in 0..=l_max {
            let lf = l as f64;
            for m in 0..=l {
                let mf = m as f64;
                let dp = if m == 0 {
                    if l == 0 {
                        0.0
                    } else {
                        -(lf * (lf + 1.0)).sqrt() * p[tri(l, 1)]
                    }
                } else {
                    let lower = ((lf + mf) * (lf - mf + 1.0)).sqrt() * p[tri(l, m - 1)];
                    let upper = if m < l {
                        ((lf + mf + 1.0) * (lf - mf)).sqrt() * p[tri(l, m + 1)]
                    } else {
                        0.0
                    };
                    0.5 * (lower - upper)
                };
                let ms = if sin_t > 0.0 {
                    mf * p[tri(l, m)] / sin_t
                } else if m == 1 {
                    // P̄_ℓ^1 / sin θ → N_ℓ1 P_ℓ'(±1) = (±1)^{ℓ+1} N_ℓ1 ℓ(ℓ+1)/2
                    let sign = if cos_t < 0.0 && l % 2 == 0 { -1.0 } else { 1.0 };
                    sign * ((2.0 * lf + 1.0) / (4.0 * PI)).sqrt() * (lf * (lf + 1.0)).sqrt() / 2.0
                } else {
                    0.0
                };
                let s = cs_sign(m);
                let k = tri(l, m);
                d_theta[k] = s * dp;
                m_over_sin[k] = s * ms;
            }
        }
        for l in 0..=l_max {
            for m in 1..=l {
                p[tri(l, m)] *= cs_sign(m);
            }
        }
        LegendreTable {
            l_max,
            value: p,
            d_theta,
            m_over_sin,
        }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// `Θ_ℓm` for `0 ≤ m ≤ ℓ`.
    #[inline]
    pub fn value(&self, l: usize, m: usize) -> f64 {
        self.value[tri(l, m)]
    }

    #[inline]
    pub fn d_theta(&self, l: usize, m: usize) -> f64 {
        self.d_theta[tri(l, m)]
    }

    #[inline]
    pub fn m_over_sin(&self, l: usize, m: usize) -> f64 {
        self.m_over_sin[tri(l, m)]
    }

    /// Signed-order accessors: `Θ_{ℓ,-m} = (-1)^m Θ_{ℓ,m}`, and the same factor
    /// carries over to the derivative. The `m/sin θ` column flips sign with `m`.
    #[inline]
    pub fn signed(&self, l: usize, m: i64) -> (f64, f64, f64) {
        let am = m.unsigned_abs() as usize;
        let k = tri(l, am);
        if m >= 0 {
            (self.value[k], self.d_theta[k], self.m_over_sin[k])
        } else {
            let s = cs_sign(am);
            (s * self.value[k], s * self.d_theta[k], -s * self.m_over_sin[k])
        }
    }
}

/// Three-term recurrence in ℓ for fixed `m`, given `p[tri(m, m)]`.
fn fill_column(m: usize, x: f64, l_max: usize, p: &mut [f64]) {
    if m + 1 > l_max {
        return;
    }
    let mf = m as f64;
    p[tri(m + 1, m)] = (2.0 * mf + 3.0).sqrt() * x * p[tri(m, m)];
    for l in (m + 2)..=l_max {
        let lf = l as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        p[tri(l, m)] = a * (x * p[tri(l - 1, m)] - b * p[tri(l - 2, m)]);
    }
}

/// Unsigned normalized sectoral values `N_mm P_m^m` (no phase) for `m = 0..=l_max`.
pub fn sectoral(sin_t: f64, l_max: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(l_max + 1);
    out.push(0.5 / PI.sqrt());
    for m in 1..=l_max {
        let mf = m as f64;
        let prev = out[m - 1];
        out.push(((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * sin_t * prev);
    }
    out
}

/// One order `m` of the table at a ring strictly away from the poles.
///
/// Writes `Θ_ℓm`, `dΘ_ℓm/dθ` and `m Θ_ℓm / sin θ` for `ℓ = m..=l_max` into the
/// first `l_max - m + 1` slots of the output slices. `sectoral_mm` is the
/// unsigned value from [`sectoral`].
pub fn column(
    m: usize,
    cos_t: f64,
    sin_t: f64,
    sectoral_mm: f64,
    l_max: usize,
    value: &mut [f64],
    d_theta: &mut [f64],
    m_over_sin: &mut [f64],
) {
    debug_assert!(sin_t > 0.0);
    if m > l_max {
        return;
    }
    let mf = m as f64;
    let count = l_max - m + 1;
    value[0] = sectoral_mm;
    if count > 1 {
        value[1] = (2.0 * mf + 3.0).sqrt() * cos_t * sectoral_mm;
    }
    for i in 2..count {
        let lf = (m + i) as f64;
        let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
        let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0)).sqrt();
        value[i] = a * (cos_t * value[i - 1] - b * value[i - 2]);
    }
    let inv_sin = 1.0 / sin_t;
    let s = cs_sign(m);
    for i in 0..count {
        let lf = (m + i) as f64;
        let prev = if i == 0 { 0.0 } else { value[i - 1] };
        let c = ((2.0 * lf + 1.0) * (lf * lf - mf * mf) / (2.0 * lf - 1.0)).sqrt();
        let c = if c.is_finite() { c } else { 0.0 };
        d_theta[i] = s * inv_sin * (lf * cos_t * value[i] - c * prev);
        m_over_sin[i] = s * mf * value[i] * inv_sin;
    }
    for v in value.iter_mut().take(count) {
        *v *= s;
    }
}
