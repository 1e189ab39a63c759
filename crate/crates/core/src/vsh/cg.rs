//! Wigner 3j symbols, Clebsch–Gordan coefficients with `j2 = 1`, and the
//! Clebsch–Gordan construction of the vector harmonics.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;

use super::{Vec3, VshValue};
use crate::error::{Error, Result};
use crate::legendre::LegendreTable;
use crate::sphere_geom::SpherePoint;

fn ln_factorial(n: i64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Wigner 3j symbol for integer arguments by the Racah sum.
pub fn wigner_3j(j1: i64, j2: i64, j3: i64, m1: i64, m2: i64, m3: i64) -> f64 {
    if m1 + m2 + m3 != 0 || m1.abs() > j1 || m2.abs() > j2 || m3.abs() > j3 {
        return 0.0;
    }
    if j3 > j1 + j2 || j3 < (j1 - j2).abs() {
        return 0.0;
    }
    let ln_delta = ln_factorial(j1 + j2 - j3) + ln_factorial(j1 - j2 + j3) + ln_factorial(-j1 + j2 + j3)
        - ln_factorial(j1 + j2 + j3 + 1);
    let ln_m = ln_factorial(j1 + m1)
        + ln_factorial(j1 - m1)
        + ln_factorial(j2 + m2)
        + ln_factorial(j2 - m2)
        + ln_factorial(j3 + m3)
        + ln_factorial(j3 - m3);
    let pre = 0.5 * (ln_delta + ln_m);
    let k_min = 0.max(j2 - j3 - m1).max(j1 - j3 + m2);
    let k_max = (j1 + j2 - j3).min(j1 - m1).min(j2 + m2);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let den = ln_factorial(k)
            + ln_factorial(j3 - j2 + k + m1)
            + ln_factorial(j3 - j1 + k - m2)
            + ln_factorial(j1 + j2 - j3 - k)
            + ln_factorial(j1 - k - m1)
            + ln_factorial(j2 - k + m2);
        let term = (pre - den).exp();
        sum += if k % 2 == 0 { term } else { -term };
    }
    if (j1 - j2 - m3).rem_euclid(2) == 1 {
        -sum
    } else {
        sum
    }
}

/// `C^{ℓ,m}_{j1,m1,1,m2} = (-1)^{m+j1-1} sqrt(2ℓ+1) (j1 1 ℓ; m1 m2 -m)`.
/// Zero whenever `m1 + m2 ≠ m`.
pub fn cg_coefficient(l: i64, m: i64, j1: i64, m1: i64, m2: i64) -> f64 {
    if m1 + m2 != m {
        return 0.0;
    }
    let w = wigner_3j(j1, 1, l, m1, m2, -m);
    let s = if (m + j1 - 1).rem_euclid(2) == 1 { -1.0 } else { 1.0 };
    s * ((2 * l + 1) as f64).sqrt() * w
}

/// Dense table of every `C^{ℓ,m}_{ℓ+δ, m-q, 1, q}` with `δ, q ∈ {-1, 0, 1}`.
#[derive(Debug, Clone)]
pub struct CgTable {
    l_max: usize,
    data: Vec<f64>,
}

impl CgTable {
    pub fn new(l_max: usize) -> Self {
        let mut data = Vec::with_capacity(((l_max + 1) * (l_max + 1)) * 9);
        for l in 0..=l_max as i64 {
            for m in -l..=l {
                for dj in -1..=1 {
                    for q in -1..=1 {
                        data.push(cg_coefficient(l, m, l + dj, m - q, q));
                    }
                }
            }
        }
        CgTable { l_max, data }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    /// `C^{ℓ,m}_{ℓ+dj, m-q, 1, q}`.
    pub fn get(&self, l: usize, m: i64, dj: i64, q: i64) -> f64 {
        let base = ((l * l + l) as i64 + m) as usize * 9;
        self.data[base + ((dj + 1) * 3 + (q + 1)) as usize]
    }
}

fn ylm(t: &LegendreTable, l: i64, m: i64, phi: f64) -> C64 {
    if l < 0 || m.abs() > l {
        return C64::new(0.0, 0.0);
    }
    C64::from_polar(t.signed(l as usize, m).0, m as f64 * phi)
}

fn spherical_to_cartesian(plus: C64, zero: C64, minus: C64) -> Vec3 {
    [
        -(plus - minus) * FRAC_1_SQRT_2,
        -(plus + minus) * C64::new(0.0, FRAC_1_SQRT_2),
        zero,
    ]
}

/// The B- and D-combinations at `p`, as Cartesian vectors, in that order.
pub fn cg_families(table: &CgTable, l: usize, m: i64, p: &SpherePoint) -> Result<(Vec3, Vec3)> {
    if l == 0 || m.unsigned_abs() as usize > l {
        return Err(Error::Domain(format!("no vector harmonic of degree {l}, order {m}")));
    }
    if l > table.l_max() {
        return Err(Error::Domain(format!("degree {l} beyond table bandlimit {}", table.l_max())));
    }
    let (c, s) = p.cos_sin_theta();
    let phi = p.longitude();
    let t = LegendreTable::new(c, s, l + 1);
    let li = l as i64;
    let lf = l as f64;
    let cl = ((lf + 1.0) / (2.0 * lf + 1.0)).sqrt();
    let dl = (lf / (2.0 * lf + 1.0)).sqrt();
    let mut b = [C64::new(0.0, 0.0); 3];
    let mut d = [C64::new(0.0, 0.0); 3];
    for (slot, q) in [1i64, 0, -1].into_iter().enumerate() {
        let m1 = m - q;
        b[slot] = ylm(&t, li - 1, m1, phi) * (cl * table.get(l, m, -1, q))
            + ylm(&t, li + 1, m1, phi) * (dl * table.get(l, m, 1, q));
        d[slot] = ylm(&t, li, m1, phi) * C64::new(0.0, table.get(l, m, 0, q));
    }
    Ok((spherical_to_cartesian(b[0], b[1], b[2]), spherical_to_cartesian(d[0], d[1], d[2])))
}

/// Vector harmonics through the Clebsch–Gordan construction. The D-family is
/// the surface curl and fills `y1`; the B-family is the surface gradient and
/// fills `y2`.
pub fn eval_vsh_cg(table: &CgTable, l: usize, m: i64, p: &SpherePoint) -> Result<VshValue> {
    let (b, d) = cg_families(table, l, m, p)?;
    Ok(VshValue { y1: d, y2: b })
}
