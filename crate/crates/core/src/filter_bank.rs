//! Spectral filter banks and the checks that make a bank usable for a tight frame.
//!
//! Masks `â, b̂ⁿ` live on `[0, 1/2]`; generators `α̂, β̂ⁿ` on `[0, 1]`. The
//! shipped bank has two high-pass channels built from the smooth step [`nu`].

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Identifier of the shipped bank.
pub const STANDARD_BANK_ID: &str = "std-r2";

/// Tolerance used by [`FilterBank::certify`].
pub const CERTIFY_TOL: f64 = 1e-12;

/// `ν(t) = t⁴(35 - 84t + 70t² - 20t³)`.
pub fn nu(t: f64) -> f64 {
    let t2 = t * t;
    t2 * t2 * (35.0 - 84.0 * t + 70.0 * t2 - 20.0 * t2 * t)
}

type ProfileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Real profile on `ξ ≥ 0` that vanishes outside `[support.0, support.1]`.
#[derive(Clone)]
pub struct SpectralProfile {
    f: Arc<ProfileFn>,
    support: (f64, f64),
}

impl SpectralProfile {
    pub fn new(support: (f64, f64), f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        SpectralProfile {
            f: Arc::new(f),
            support,
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn eval(&self, xi: f64) -> f64 {
        let xi = xi.abs();
        if xi < self.support.0 || xi > self.support.1 {
            0.0
        } else {
            (self.f)(xi)
        }
    }

    /// The profile used by the adjoint filters. Profiles are real, so this is
    /// the profile itself.
    pub fn conj_eval(&self, xi: f64) -> f64 {
        self.eval(xi)
    }

    fn scaled(&self, factor: f64) -> Self {
        let f = self.f.clone();
        SpectralProfile {
            f: Arc::new(move |x| factor * f(x)),
            support: self.support,
        }
    }
}

impl fmt::Debug for SpectralProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralProfile").field("support", &self.support).finish()
    }
}

/// Which profile of a bank to evaluate. High-pass channels are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    Low,
    High(usize),
    GenLow,
    GenHigh(usize),
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    id: String,
    low: SpectralProfile,
    high: Vec<SpectralProfile>,
    gen_low: SpectralProfile,
    gen_high: Vec<SpectralProfile>,
}

fn half_cos(t: f64) -> f64 {
    (FRAC_PI_2 * nu(t)).cos()
}

fn half_sin(t: f64) -> f64 {
    (FRAC_PI_2 * nu(t)).sin()
}

impl FilterBank {
    /// Two high-pass channels with smooth transitions at 1/8, 1/4, 1/2.
    pub fn standard() -> Self {
        let low = SpectralProfile::new((0.0, 0.25), |x| if x < 0.125 { 1.0 } else { half_cos(8.0 * x - 1.0) });
        let b1 = SpectralProfile::new((0.125, 0.5), |x| {
            if x <= 0.25 {
                half_sin(8.0 * x - 1.0)
            } else {
                half_cos(4.0 * x - 1.0)
            }
        });
        let b2 = SpectralProfile::new((0.25, 0.5), |x| half_sin(4.0 * x - 1.0));
        let gen_low = SpectralProfile::new((0.0, 0.5), |x| if x < 0.25 { 1.0 } else { half_cos(4.0 * x - 1.0) });
        let g1 = SpectralProfile::new((0.25, 1.0), |x| {
            if x < 0.5 {
                half_sin(4.0 * x - 1.0)
            } else {
                half_cos(2.0 * x - 1.0).powi(2)
            }
        });
        let g2 = SpectralProfile::new((0.5, 1.0), |x| half_cos(2.0 * x - 1.0) * half_sin(2.0 * x - 1.0));
        FilterBank {
            id: STANDARD_BANK_ID.to_string(),
            low,
            high: vec![b1, b2],
            gen_low,
            gen_high: vec![g1, g2],
        }
    }

    /// A bank assembled from user profiles. Nothing is validated here; run
    /// [`FilterBank::certify`] before relying on it.
    pub fn custom(
        id: impl Into<String>,
        low: SpectralProfile,
        high: Vec<SpectralProfile>,
        gen_low: SpectralProfile,
        gen_high: Vec<SpectralProfile>,
    ) -> Result<Self> {
        let id = id.into();
        if high.is_empty() || high.len() != gen_high.len() {
            return Err(Error::Config(format!(
                "bank `{id}` needs matching nonempty high-pass lists, got {} masks and {} generators",
                high.len(),
                gen_high.len()
            )));
        }
        if id == STANDARD_BANK_ID {
            return Err(Error::Config(format!("id `{id}` is reserved")));
        }
        Ok(FilterBank {
            id,
            low,
            high,
            gen_low,
            gen_high,
        })
    }

    /// Looks up a known bank by id.
    pub fn by_id(id: &str) -> Result<Self> {
        if id == STANDARD_BANK_ID {
            Ok(Self::standard())
        } else {
            Err(Error::UnknownBank(id.to_string()))
        }
    }

    /// Copy with high-pass mask `n` (1-based) multiplied by `factor`, for
    /// defect injection. Generators are left untouched.
    pub fn with_high_scaled(&self, n: usize, factor: f64) -> Result<Self> {
        if n == 0 || n > self.high.len() {
            return Err(Error::Domain(format!("bank has no high-pass channel {n}")));
        }
        let mut out = self.clone();
        out.high[n - 1] = self.high[n - 1].scaled(factor);
        out.id = format!("{}~b{n}x{factor}", self.id);
        Ok(out)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Number of high-pass channels.
    pub fn channels(&self) -> usize {
        self.high.len()
    }

    pub fn low(&self) -> &SpectralProfile {
        &self.low
    }

    pub fn high(&self, n: usize) -> &SpectralProfile {
        &self.high[n - 1]
    }

    pub fn gen_low(&self) -> &SpectralProfile {
        &self.gen_low
    }

    pub fn gen_high(&self, n: usize) -> &SpectralProfile {
        &self.gen_high[n - 1]
    }

    pub fn profile(&self, which: Filter) -> Result<&SpectralProfile> {
        let r = self.high.len();
        match which {
            Filter::Low => Ok(&self.low),
            Filter::GenLow => Ok(&self.gen_low),
            Filter::High(n) if (1..=r).contains(&n) => Ok(&self.high[n - 1]),
            Filter::GenHigh(n) if (1..=r).contains(&n) => Ok(&self.gen_high[n - 1]),
            _ => Err(Error::Domain(format!("bank `{}` has no filter {which:?}", self.id))),
        }
    }

    /// Runs all three validators on a `10⁴`-point grid.
    pub fn certify(&self) -> BankReport {
        let grid = 10_000;
        let partition = validate_partition(self, grid);
        let refinement = validate_refinement(self, grid);
        let telescoping = validate_telescoping(self, grid);
        BankReport {
            partition,
            refinement,
            telescoping,
            passed: partition < CERTIFY_TOL && refinement < CERTIFY_TOL && telescoping < CERTIFY_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankReport {
    pub partition: f64,
    pub refinement: f64,
    pub telescoping: f64,
    pub passed: bool,
}

/// Value of one profile of `bank` at `ξ`. Unknown channels evaluate to 0.
pub fn eval_filter(bank: &FilterBank, which: Filter, xi: f64) -> f64 {
    bank.profile(which).map_or(0.0, |p| p.eval(xi))
}

fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let n = n.max(2);
    (0..n).map(move |k| lo + (hi - lo) * k as f64 / (n - 1) as f64)
}

/// `max | |â|² + Σ|b̂ⁿ|² - 1 |` over a uniform grid on `[0, 1/2]`.
pub fn validate_partition(bank: &FilterBank, grid_size: usize) -> f64 {
    grid(0.0, 0.5, grid_size)
        .map(|x| {
            let s: f64 = bank.low.eval(x).powi(2) + bank.high.iter().map(|h| h.eval(x).powi(2)).sum::<f64>();
            (s - 1.0).abs()
        })
        .fold(0.0, f64::max)
}

/// `max |α̂(2ξ) - α̂(ξ)â(ξ)|` and `|β̂ⁿ(2ξ) - α̂(ξ)b̂ⁿ(ξ)|` over `[0, 1/2]`.
pub fn validate_refinement(bank: &FilterBank, grid_size: usize) -> f64 {
    grid(0.0, 0.5, grid_size)
        .map(|x| {
            let a = bank.gen_low.eval(x);
            let mut d = (bank.gen_low.eval(2.0 * x) - a * bank.low.eval(x)).abs();
            for (g, h) in bank.gen_high.iter().zip(&bank.high) {
                d = d.max((g.eval(2.0 * x) - a * h.eval(x)).abs());
            }
            d
        })
        .fold(0.0, f64::max)
}

/// `max | |α̂(ξ/2)|² - |α̂(ξ)|² - Σ|β̂ⁿ(ξ)|² |` over `[0, 1]`.
pub fn validate_telescoping(bank: &FilterBank, grid_size: usize) -> f64 {
    grid(0.0, 1.0, grid_size)
        .map(|x| {
            let lhs = bank.gen_low.eval(0.5 * x).powi(2);
            let rhs = bank.gen_low.eval(x).powi(2) + bank.gen_high.iter().map(|g| g.eval(x).powi(2)).sum::<f64>();
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}
