//! Multilevel decomposition and reconstruction of tangent fields.
//!
//! All filtering is done on coefficient pairs. Level `j` carries degrees up
//! to `L_j` on its own rule; detail sequences produced while stepping from
//! level `j` to `j - 1` are stored on the level-`j` rule.

use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::filter_bank::{FilterBank, SpectralProfile};
use crate::sphere_geom::{gauss_legendre_rule, QuadratureRule, RuleKind, SpherePoint};
use crate::vsh::{vsh_analysis, vsh_grad_curl, vsh_synthesis, TangentSampleSeq, VectorCoeffPair, VshAnalysis};

/// Relative energy above the target bandlimit that `downsample` tolerates.
pub const TRUNCATION_TOL: f64 = 1e-10;

/// How degree `ℓ` maps to a filter argument at level `j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ArgConvention {
    /// `ℓ / 2^j`.
    #[default]
    Degree,
    /// `ℓ(ℓ+1) / 2^j`.
    Eigenvalue,
}

impl ArgConvention {
    pub fn label(&self) -> &'static str {
        match self {
            ArgConvention::Degree => "degree",
            ArgConvention::Eigenvalue => "eigenvalue",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "degree" => Ok(ArgConvention::Degree),
            "eigenvalue" => Ok(ArgConvention::Eigenvalue),
            _ => Err(Error::Config(format!("unknown convention `{s}` (expected degree or eigenvalue)"))),
        }
    }
}

/// Levels `J0..=J`, their rules and bandlimits.
#[derive(Debug, Clone)]
pub struct LevelScheme {
    j0: u32,
    j: u32,
    convention: ArgConvention,
    rules: Vec<Arc<QuadratureRule>>,
}

impl LevelScheme {
    /// Gauss–Legendre rules at every level.
    pub fn gauss_legendre(j0: u32, j: u32, convention: ArgConvention) -> Result<Self> {
        Self::check_levels(j0, j)?;
        let rules = (j0..=j)
            .map(|l| gauss_legendre_rule(l).map(Arc::new))
            .collect::<Result<Vec<_>>>()?;
        Self::with_rules(j0, j, convention, rules)
    }

    /// Explicit rules for levels `j0..=j`, in order. Each must be exact to
    /// degree `2^{level+1}`.
    pub fn with_rules(j0: u32, j: u32, convention: ArgConvention, rules: Vec<Arc<QuadratureRule>>) -> Result<Self> {
        Self::check_levels(j0, j)?;
        if rules.len() != (j - j0 + 1) as usize {
            return Err(Error::Config(format!(
                "levels {j0}..={j} need {} rules, got {}",
                j - j0 + 1,
                rules.len()
            )));
        }
        for (lvl, r) in (j0..=j).zip(&rules) {
            let need = 1usize << (lvl + 1);
            if r.exactness_degree() < need {
                return Err(Error::Config(format!(
                    "rule for level {lvl} is exact to degree {}, needs {need}",
                    r.exactness_degree()
                )));
            }
        }
        Ok(LevelScheme {
            j0,
            j,
            convention,
            rules,
        })
    }

    fn check_levels(j0: u32, j: u32) -> Result<()> {
        if j0 < 1 {
            return Err(Error::Config("coarsest level must be at least 1".into()));
        }
        if j < j0 {
            return Err(Error::Config(format!("finest level {j} is below coarsest level {j0}")));
        }
        if j > 30 {
            return Err(Error::Resource(format!("level {j} is out of range")));
        }
        Ok(())
    }

    pub fn coarsest(&self) -> u32 {
        self.j0
    }

    pub fn finest(&self) -> u32 {
        self.j
    }

    pub fn convention(&self) -> ArgConvention {
        self.convention
    }

    pub fn rule(&self, level: u32) -> &Arc<QuadratureRule> {
        &self.rules[(level - self.j0) as usize]
    }

    pub fn rules(&self) -> &[Arc<QuadratureRule>] {
        &self.rules
    }

    /// Filter argument for degree `l` at level `level`.
    pub fn arg(&self, level: u32, l: usize) -> f64 {
        let scale = (level as f64).exp2();
        match self.convention {
            ArgConvention::Degree => l as f64 / scale,
            ArgConvention::Eigenvalue => (l * (l + 1)) as f64 / scale,
        }
    }

    /// Largest degree whose argument at `level` is at most `1/2`.
    pub fn bandlimit(&self, level: u32) -> usize {
        bandlimit_for(self.convention, level)
    }

    /// Per-family coefficient count `(2^J + 1)² - 1` of the level-`J` rule.
    pub fn coefficient_count(level: u32) -> usize {
        let n = (1usize << level) + 1;
        n * n - 1
    }

    /// Compact identity used to match decompositions with schemes.
    pub fn signature(&self) -> SchemeSignature {
        SchemeSignature {
            j0: self.j0,
            j: self.j,
            convention: self.convention,
            rules: self.rules.iter().map(|r| (r.kind(), r.len())).collect(),
        }
    }
}

pub fn bandlimit_for(convention: ArgConvention, level: u32) -> usize {
    let half = 1usize << (level - 1);
    match convention {
        ArgConvention::Degree => half,
        ArgConvention::Eigenvalue => {
            let mut l = 0;
            while (l + 1) * (l + 2) <= half {
                l += 1;
            }
            l
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemeSignature {
    pub j0: u32,
    pub j: u32,
    pub convention: ArgConvention,
    pub rules: Vec<(RuleKind, usize)>,
}

/// `c_ℓm · conj(profile(arg_j(ℓ)))` for both families.
pub fn spectral_convolve(c: &VectorCoeffPair, profile: &SpectralProfile, scheme: &LevelScheme, level: u32) -> VectorCoeffPair {
    c.scale_by_degree(|l| C64::new(profile.conj_eval(scheme.arg(level, l)), 0.0))
}

fn check_truncation(c: &VectorCoeffPair, target: usize) -> Result<()> {
    let total = c.norm_sqr();
    let above = c.mass_above(target);
    if above > TRUNCATION_TOL * TRUNCATION_TOL * total.max(f64::MIN_POSITIVE) && above > 0.0 {
        let rel = (above / total).sqrt();
        if rel > TRUNCATION_TOL {
            return Err(Error::Contract(format!(
                "relative energy {rel:.3e} above degree {target} would be discarded; apply the low-pass filter first"
            )));
        }
    }
    Ok(())
}

/// Truncates level-`level` coefficients to `L_{level-1}` and synthesizes them
/// on the level-`(level-1)` rule.
pub fn downsample(c: &VectorCoeffPair, scheme: &LevelScheme, level: u32) -> Result<TangentSampleSeq> {
    if level <= scheme.j0 || level > scheme.j {
        return Err(Error::Config(format!("cannot downsample from level {level}")));
    }
    let target = scheme.bandlimit(level - 1);
    check_truncation(c, target)?;
    Ok(vsh_synthesis(&c.resized(target), scheme.rule(level - 1)))
}

/// Analysis of a level-`(level-1)` sequence, embedded at bandlimit `L_level`.
pub fn upsample(seq: &TangentSampleSeq, scheme: &LevelScheme, level: u32) -> Result<VshAnalysis> {
    if level <= scheme.j0 || level > scheme.j {
        return Err(Error::Config(format!("cannot upsample to level {level}")));
    }
    let lo = scheme.bandlimit(level - 1);
    let a = vsh_analysis(seq, lo);
    Ok(VshAnalysis {
        coeffs: a.coeffs.resized(scheme.bandlimit(level)),
        certified: a.certified && seq.is_certified(),
    })
}

/// Output of the decomposition: one coarse sequence plus `r` detail sequences
/// per level, with their coefficient mirrors.
#[derive(Debug, Clone)]
pub struct NeedletDecomposition {
    signature: SchemeSignature,
    bank_id: String,
    approx: TangentSampleSeq,
    approx_coeffs: Option<VectorCoeffPair>,
    /// `details[j - J0][n - 1]` is `wⁿ_j`, stored on the level-`(j+1)` rule.
    details: Vec<Vec<TangentSampleSeq>>,
    detail_coeffs: Option<Vec<Vec<VectorCoeffPair>>>,
}

impl NeedletDecomposition {
    /// Assembles a decomposition from stored parts, for deserialization.
    pub fn from_parts(
        scheme: &LevelScheme,
        bank_id: impl Into<String>,
        approx: TangentSampleSeq,
        details: Vec<Vec<TangentSampleSeq>>,
    ) -> Result<Self> {
        let levels = (scheme.j - scheme.j0) as usize;
        if details.len() != levels {
            return Err(Error::Config(format!("expected {levels} detail levels, found {}", details.len())));
        }
        if approx.len() != scheme.rule(scheme.j0).len() {
            return Err(Error::Config("approximation does not match the coarse rule".into()));
        }
        for (i, lvl) in details.iter().enumerate() {
            let rule = scheme.rule(scheme.j0 + i as u32 + 1);
            if lvl.iter().any(|s| s.len() != rule.len()) {
                return Err(Error::Config(format!("detail level {} does not match its rule", scheme.j0 + i as u32)));
            }
        }
        Ok(NeedletDecomposition {
            signature: scheme.signature(),
            bank_id: bank_id.into(),
            approx,
            approx_coeffs: None,
            details,
            detail_coeffs: None,
        })
    }

    /// Attaches coefficient mirrors, for example read back from disk.
    pub fn with_mirrors(mut self, approx: VectorCoeffPair, details: Vec<Vec<VectorCoeffPair>>) -> Result<Self> {
        if details.len() != self.details.len() || details.iter().zip(&self.details).any(|(a, b)| a.len() != b.len()) {
            return Err(Error::Config("mirror layout does not match the stored sequences".into()));
        }
        self.approx_coeffs = Some(approx);
        self.detail_coeffs = Some(details);
        Ok(self)
    }

    pub fn signature(&self) -> &SchemeSignature {
        &self.signature
    }

    pub fn bank_id(&self) -> &str {
        &self.bank_id
    }

    pub fn approx(&self) -> &TangentSampleSeq {
        &self.approx
    }

    pub fn details(&self) -> &[Vec<TangentSampleSeq>] {
        &self.details
    }

    pub fn detail(&self, level: u32, n: usize) -> &TangentSampleSeq {
        &self.details[(level - self.signature.j0) as usize][n - 1]
    }

    pub fn approx_coeffs(&self) -> Option<&VectorCoeffPair> {
        self.approx_coeffs.as_ref()
    }

    pub fn detail_coeffs(&self) -> Option<&[Vec<VectorCoeffPair>]> {
        self.detail_coeffs.as_deref()
    }

    pub fn has_mirrors(&self) -> bool {
        self.approx_coeffs.is_some() && self.detail_coeffs.is_some()
    }

    /// Copy without the cached coefficient mirrors.
    pub fn without_mirrors(&self) -> Self {
        NeedletDecomposition {
            approx_coeffs: None,
            detail_coeffs: None,
            ..self.clone()
        }
    }

    /// Copy with every detail sequence zeroed.
    pub fn without_details(&self) -> Self {
        let details = self
            .details
            .iter()
            .map(|lvl| lvl.iter().map(|s| TangentSampleSeq::zeros(s.rule().clone(), s.bandlimit())).collect())
            .collect();
        let detail_coeffs = self
            .detail_coeffs
            .as_ref()
            .map(|d| d.iter().map(|lvl| lvl.iter().map(|c| VectorCoeffPair::zeros(c.l_max())).collect()).collect());
        NeedletDecomposition {
            details,
            detail_coeffs,
            ..self.clone()
        }
    }

    /// Coefficient entries per family across all stored sequences.
    pub fn total_coefficients(&self) -> usize {
        self.approx.len() + self.details.iter().flatten().map(|s| s.len()).sum::<usize>()
    }

    /// Every stored sequence is certified.
    pub fn is_certified(&self) -> bool {
        self.approx.is_certified() && self.details.iter().flatten().all(|s| s.is_certified())
    }
}

fn check_input(seq: &TangentSampleSeq, scheme: &LevelScheme) -> Result<()> {
    let rule = scheme.rule(scheme.j);
    if !Arc::ptr_eq(seq.rule(), rule) && **seq.rule() != **rule {
        return Err(Error::Config("input sequence does not live on the finest rule of the scheme".into()));
    }
    if seq.bandlimit() > scheme.bandlimit(scheme.j) {
        return Err(Error::Contract(format!(
            "input bandlimit {} exceeds the finest level bandlimit {}; project first",
            seq.bandlimit(),
            scheme.bandlimit(scheme.j)
        )));
    }
    if !seq.is_certified() {
        return Err(Error::Contract("input sequence is not certified; project it first".into()));
    }
    Ok(())
}

/// Multilevel decomposition of a certified sequence on the finest rule.
pub fn decompose(v: &TangentSampleSeq, scheme: &LevelScheme, bank: &FilterBank) -> Result<NeedletDecomposition> {
    check_input(v, scheme)?;
    let coeffs = vsh_analysis(v, scheme.bandlimit(scheme.j)).coeffs;
    decompose_coeffs(&coeffs, scheme, bank)
}

/// Multilevel decomposition starting from the finest-level coefficients.
pub fn decompose_coeffs(c: &VectorCoeffPair, scheme: &LevelScheme, bank: &FilterBank) -> Result<NeedletDecomposition> {
    let lj = scheme.bandlimit(scheme.j);
    check_truncation(c, lj)?;
    let mut vj = c.resized(lj);
    let r = bank.channels();
    let levels = (scheme.j - scheme.j0) as usize;
    let mut details: Vec<Vec<TangentSampleSeq>> = vec![Vec::new(); levels];
    let mut detail_coeffs: Vec<Vec<VectorCoeffPair>> = vec![Vec::new(); levels];
    for level in ((scheme.j0 + 1)..=scheme.j).rev() {
        let low = spectral_convolve(&vj, bank.low(), scheme, level);
        let target = scheme.bandlimit(level - 1);
        check_truncation(&low, target)?;
        let slot = (level - 1 - scheme.j0) as usize;
        for n in 1..=r {
            let w = spectral_convolve(&vj, bank.high(n), scheme, level);
            details[slot].push(vsh_synthesis(&w, scheme.rule(level)));
            detail_coeffs[slot].push(w);
        }
        vj = low.resized(target);
    }
    let approx = vsh_synthesis(&vj, scheme.rule(scheme.j0));
    Ok(NeedletDecomposition {
        signature: scheme.signature(),
        bank_id: bank.id().to_string(),
        approx,
        approx_coeffs: Some(vj),
        details,
        detail_coeffs: Some(detail_coeffs),
    })
}

fn check_compatible(d: &NeedletDecomposition, scheme: &LevelScheme, bank: &FilterBank) -> Result<()> {
    if d.signature != scheme.signature() {
        return Err(Error::Config("decomposition was produced under a different level scheme".into()));
    }
    if d.bank_id != bank.id() {
        return Err(Error::Config(format!(
            "decomposition used bank `{}`, reconstruction was given `{}`",
            d.bank_id,
            bank.id()
        )));
    }
    if d.details.iter().any(|lvl| lvl.len() != bank.channels()) {
        return Err(Error::Config("detail channel count does not match the bank".into()));
    }
    Ok(())
}

/// Multilevel reconstruction onto the finest rule. Uses the cached mirrors
/// when present.
pub fn reconstruct(d: &NeedletDecomposition, scheme: &LevelScheme, bank: &FilterBank) -> Result<TangentSampleSeq> {
    let c = reconstruct_coeffs(d, scheme, bank)?;
    Ok(vsh_synthesis(&c, scheme.rule(scheme.j)))
}

/// Same as [`reconstruct`] but always re-analyses the stored sequences.
pub fn reconstruct_from_sequences(d: &NeedletDecomposition, scheme: &LevelScheme, bank: &FilterBank) -> Result<TangentSampleSeq> {
    reconstruct(&d.without_mirrors(), scheme, bank)
}

/// Finest-level coefficients of the reconstruction.
pub fn reconstruct_coeffs(d: &NeedletDecomposition, scheme: &LevelScheme, bank: &FilterBank) -> Result<VectorCoeffPair> {
    check_compatible(d, scheme, bank)?;
    let mut v = match &d.approx_coeffs {
        Some(c) => c.clone(),
        None => vsh_analysis(&d.approx, scheme.bandlimit(scheme.j0)).coeffs,
    };
    for level in (scheme.j0 + 1)..=scheme.j {
        let lj = scheme.bandlimit(level);
        let slot = (level - 1 - scheme.j0) as usize;
        let mut next = spectral_low_up(&v.resized(lj), bank, scheme, level);
        for n in 1..=bank.channels() {
            let w = match &d.detail_coeffs {
                Some(dc) => dc[slot][n - 1].clone(),
                None => vsh_analysis(&d.details[slot][n - 1], lj).coeffs,
            };
            next = next.add(&w.resized(lj).scale_by_degree(|l| C64::new(bank.high(n).eval(scheme.arg(level, l)), 0.0)));
        }
        v = next;
    }
    Ok(v)
}

fn spectral_low_up(c: &VectorCoeffPair, bank: &FilterBank, scheme: &LevelScheme, level: u32) -> VectorCoeffPair {
    c.scale_by_degree(|l| C64::new(bank.low().eval(scheme.arg(level, l)), 0.0))
}

/// Which needlet family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NeedletKind {
    Low,
    High(usize),
}

/// 3×3 complex matrix, row-major.
pub type Mat3 = [[C64; 3]; 3];

/// Needlet at level `level` centred at node `k`, evaluated at `x`.
///
/// `Low` uses the generator `α̂` and the level-`level` rule; `High(n)` uses
/// `β̂ⁿ` and the level-`(level+1)` rule.
pub fn eval_needlet(
    scheme: &LevelScheme,
    bank: &FilterBank,
    level: u32,
    k: usize,
    kind: NeedletKind,
    x: &SpherePoint,
) -> Result<Mat3> {
    let (profile, rule_level) = match kind {
        NeedletKind::Low => (bank.gen_low(), level),
        NeedletKind::High(n) => {
            if n == 0 || n > bank.channels() {
                return Err(Error::Domain(format!("bank has no high-pass channel {n}")));
            }
            (bank.gen_high(n), level + 1)
        }
    };
    if rule_level < scheme.j0 || rule_level > scheme.j {
        return Err(Error::Domain(format!("no rule for level {rule_level} in the scheme")));
    }
    let rule = scheme.rule(rule_level);
    if k >= rule.len() {
        return Err(Error::Domain(format!("node index {k} out of range for a rule of {} nodes", rule.len())));
    }
    let node = rule.points()[k];
    let sw = rule.weights()[k].sqrt();
    // Generators vanish past argument 1.
    let mut l_top = 1;
    while scheme.arg(level, l_top + 1) <= 1.0 {
        l_top += 1;
    }
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for l in 1..=l_top {
        let g = profile.eval(scheme.arg(level, l));
        if g == 0.0 {
            continue;
        }
        for m in -(l as i64)..=(l as i64) {
            let a = vsh_grad_curl(l, m, x);
            let b = vsh_grad_curl(l, m, &node);
            for i in 0..3 {
                for j in 0..3 {
                    out[i][j] += (a.y1[i] * b.y1[j].conj() + a.y2[i] * b.y2[j].conj()) * (g * sw);
                }
            }
        }
    }
    Ok(out)
}

/// Energy split of a decomposition against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsevalReport {
    pub approx: f64,
    /// `detail[j - J0][n - 1] = ‖wⁿ_j‖²`.
    pub detail: Vec<Vec<f64>>,
    pub total: f64,
    pub reference: f64,
    pub relative_deviation: f64,
}

/// Sums sequence energies and compares them with `reference` (normally
/// `‖v_J‖²`). Report-only.
pub fn parseval_report(d: &NeedletDecomposition, reference: f64) -> ParsevalReport {
    let approx = d.approx.norm_sqr();
    let detail: Vec<Vec<f64>> = d.details.iter().map(|lvl| lvl.iter().map(|s| s.norm_sqr()).collect()).collect();
    let total = approx + detail.iter().flatten().sum::<f64>();
    let relative_deviation = if reference > 0.0 {
        (total - reference).abs() / reference
    } else {
        total.abs()
    };
    ParsevalReport {
        approx,
        detail,
        total,
        reference,
        relative_deviation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter_bank::FilterBank;
    use crate::vsh::{norm_sqr3, Vec3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(l_max: usize, seed: u64) -> VectorCoeffPair {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = VectorCoeffPair::zeros(l_max);
        for v in c.div_mut() {
            *v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        for v in c.curl_mut() {
            *v = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        c
    }

    fn rel_err(a: &[Vec3], b: &[Vec3]) -> f64 {
        let num: f64 = a
            .iter()
            .zip(b)
            .map(|(x, y)| (0..3).map(|k| (x[k] - y[k]).norm_sqr()).sum::<f64>())
            .sum();
        let den: f64 = a.iter().map(norm_sqr3).sum();
        (num / den).sqrt()
    }

    fn scheme(j0: u32, j: u32) -> LevelScheme {
        LevelScheme::gauss_legendre(j0, j, ArgConvention::Degree).unwrap()
    }

    #[test]
    fn bookkeeping() {
        let expect = [(5, 1088usize), (6, 4224), (7, 16640), (8, 66048)];
        for (j, m) in expect {
            assert_eq!(LevelScheme::coefficient_count(j), m);
        }
        assert_eq!(bandlimit_for(ArgConvention::Degree, 5), 16);
        assert_eq!(bandlimit_for(ArgConvention::Eigenvalue, 5), 3);
        assert!(LevelScheme::gauss_legendre(0, 3, ArgConvention::Degree).is_err());
        assert!(LevelScheme::gauss_legendre(4, 3, ArgConvention::Degree).is_err());
        let r = vec![Arc::new(gauss_legendre_rule(2).unwrap()), Arc::new(gauss_legendre_rule(2).unwrap())];
        assert!(matches!(LevelScheme::with_rules(2, 3, ArgConvention::Degree, r), Err(Error::Config(_))));
    }

    #[test]
    fn perfect_reconstruction_and_parseval() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        let c = random_pair(s.bandlimit(5), 1);
        let v = vsh_synthesis(&c, s.rule(5));
        let d = decompose(&v, &s, &bank).unwrap();
        assert!(d.is_certified());
        let rec = reconstruct(&d, &s, &bank).unwrap();
        assert!(rel_err(v.values(), rec.values()) < 1e-10);
        let p = parseval_report(&d, v.norm_sqr());
        assert!(p.relative_deviation < 1e-10, "{p:?}");
        let rec2 = reconstruct_from_sequences(&d, &s, &bank).unwrap();
        let diff = rec
            .values()
            .iter()
            .zip(rec2.values())
            .map(|(a, b)| (0..3).map(|k| (a[k] - b[k]).norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        assert!(diff < 1e-13, "{diff}");
    }

    #[test]
    fn other_depths_and_eigenvalue_convention() {
        let bank = FilterBank::standard();
        for (j0, j) in [(2, 3), (2, 4), (2, 5)] {
            for conv in [ArgConvention::Degree, ArgConvention::Eigenvalue] {
                let s = LevelScheme::gauss_legendre(j0, j, conv).unwrap();
                let c = random_pair(s.bandlimit(j), 2);
                let v = vsh_synthesis(&c, s.rule(j));
                let d = decompose(&v, &s, &bank).unwrap();
                let rec = reconstruct(&d, &s, &bank).unwrap();
                assert!(rel_err(v.values(), rec.values()) < 1e-10);
                assert!(parseval_report(&d, v.norm_sqr()).relative_deviation < 1e-10);
            }
        }
    }

    #[test]
    fn single_level_identity_on_coefficients() {
        let s = scheme(3, 4);
        let bank = FilterBank::standard();
        let c = random_pair(s.bandlimit(4), 3);
        let d = decompose_coeffs(&c, &s, &bank).unwrap();
        let back = reconstruct_coeffs(&d, &s, &bank).unwrap();
        assert!(back.max_abs_diff(&c) < 1e-12);
    }

    #[test]
    fn zero_field_and_low_degree_content() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        let z = vsh_synthesis(&VectorCoeffPair::zeros(16), s.rule(5));
        let d = decompose(&z, &s, &bank).unwrap();
        assert_eq!(parseval_report(&d, 0.0).total, 0.0);
        assert_eq!(reconstruct(&d, &s, &bank).unwrap().norm_sqr(), 0.0);

        let mut c = VectorCoeffPair::zeros(16);
        c.set_div(1, 0, C64::new(1.0, 0.0));
        c.set_curl(1, -1, C64::new(0.0, 2.0));
        let d = decompose(&vsh_synthesis(&c, s.rule(5)), &s, &bank).unwrap();
        for s in d.details().iter().flatten() {
            assert!(s.values().iter().all(|v| norm_sqr3(v).sqrt() < 1e-12));
        }
    }

    #[test]
    fn dropping_details_gives_low_pass() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        let c = random_pair(16, 4);
        let d = decompose_coeffs(&c, &s, &bank).unwrap().without_details();
        let got = reconstruct_coeffs(&d, &s, &bank).unwrap();
        // Direct multiplier Π_{j=J0+1..J} |â(ℓ/2^j)|².
        let expect = c.scale_by_degree(|l| {
            let mut g = 1.0;
            for j in 4..=5 {
                g *= bank.low().eval(s.arg(j, l)).powi(2);
            }
            C64::new(g, 0.0)
        });
        assert!(got.max_abs_diff(&expect) < 1e-11);
    }

    #[test]
    fn family_separation_in_mirrors() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        let mut c = random_pair(16, 5);
        for v in c.curl_mut() {
            *v = C64::new(0.0, 0.0);
        }
        let d = decompose(&vsh_synthesis(&c, s.rule(5)), &s, &bank).unwrap().without_mirrors();
        for lvl in d.details() {
            for seq in lvl {
                let back = vsh_analysis(seq, seq.bandlimit()).coeffs;
                assert!(back.curl().iter().all(|v| v.norm() < 1e-11));
            }
        }
    }

    #[test]
    fn contract_and_config_errors() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        // Unfiltered coefficients above L_{j-1}.
        let c = random_pair(16, 6);
        assert!(matches!(downsample(&c, &s, 5), Err(Error::Contract(_))));
        // Low-passed coefficients pass and round-trip through upsample.
        let low = spectral_convolve(&c, bank.low(), &s, 5);
        let seq = downsample(&low, &s, 5).unwrap();
        let up = upsample(&seq, &s, 5).unwrap();
        assert!(up.certified);
        assert!(up.coeffs.max_abs_diff(&low) < 1e-11);
        assert!((seq.norm_sqr() - low.norm_sqr()).abs() < 1e-11 * low.norm_sqr());
        let zero = downsample(&VectorCoeffPair::zeros(16), &s, 5).unwrap();
        assert_eq!(zero.norm_sqr(), 0.0);

        // Scheme and bank mismatches.
        let d = decompose_coeffs(&c, &s, &bank).unwrap();
        let other = scheme(2, 5);
        assert!(matches!(reconstruct(&d, &other, &bank), Err(Error::Config(_))));
        let bad = bank.with_high_scaled(1, 0.5).unwrap();
        assert!(matches!(reconstruct(&d, &s, &bad), Err(Error::Config(_))));
        let wrong_rule = vsh_synthesis(&VectorCoeffPair::zeros(8), s.rule(4));
        assert!(matches!(decompose(&wrong_rule, &s, &bank), Err(Error::Config(_))));
    }

    #[test]
    fn degenerate_scheme() {
        let s = scheme(4, 4);
        let bank = FilterBank::standard();
        let c = random_pair(8, 7);
        let v = vsh_synthesis(&c, s.rule(4));
        let d = decompose(&v, &s, &bank).unwrap();
        assert!(d.details().is_empty());
        let rec = reconstruct(&d, &s, &bank).unwrap();
        assert!(rel_err(v.values(), rec.values()) < 1e-13);
    }

    #[test]
    fn injected_defect_shows_in_parseval() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard().with_high_scaled(1, 0.9).unwrap();
        let c = random_pair(16, 8);
        let v = vsh_synthesis(&c, s.rule(5));
        let d = decompose(&v, &s, &bank).unwrap();
        let p = parseval_report(&d, v.norm_sqr());
        assert!(p.relative_deviation > 1e-3);
        assert!(p.relative_deviation < 0.19);
    }

    #[test]
    fn linearity() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        let c = random_pair(16, 9);
        let d1 = decompose_coeffs(&c, &s, &bank).unwrap();
        let d2 = decompose_coeffs(&c.scale_by_degree(|_| C64::new(3.5, 0.0)), &s, &bank).unwrap();
        for (a, b) in d1.details().iter().flatten().zip(d2.details().iter().flatten()) {
            for (x, y) in a.values().iter().zip(b.values()) {
                for k in 0..3 {
                    assert!((x[k] * 3.5 - y[k]).norm() < 1e-13);
                }
            }
        }
    }

    #[test]
    fn needlet_inner_products_match_details() {
        // v_J = f̂ α̂(ℓ/2^J) for a bandlimited f; then each stored coefficient
        // equals the quadrature inner product with the matching needlet.
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        let f = random_pair(16, 10);
        let vj = f.scale_by_degree(|l| C64::new(bank.gen_low().eval(s.arg(5, l)), 0.0));
        let d = decompose_coeffs(&vj, &s, &bank).unwrap();
        let fine = s.rule(5);
        let fvals = crate::vsh::vsh_eval_points(&f, fine.points());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let inner = |level: u32, k: usize, kind: NeedletKind| -> Vec3 {
            let mut acc = [C64::new(0.0, 0.0); 3];
            for (q, (x, w)) in fine.points().iter().zip(fine.weights()).enumerate() {
                let psi = eval_needlet(&s, &bank, level, k, kind, x).unwrap();
                for i in 0..3 {
                    for j in 0..3 {
                        acc[i] += psi[j][i].conj() * fvals[q][j] * *w;
                    }
                }
            }
            acc
        };
        for _ in 0..10 {
            let pick = rng.gen_range(0..3);
            let (level, kind, seq) = match pick {
                0 => (3, NeedletKind::Low, d.approx()),
                1 => {
                    let j = rng.gen_range(3..5);
                    (j, NeedletKind::High(1), d.detail(j, 1))
                }
                _ => {
                    let j = rng.gen_range(3..5);
                    (j, NeedletKind::High(2), d.detail(j, 2))
                }
            };
            let k = rng.gen_range(0..seq.len());
            let got = inner(level, k, kind);
            for i in 0..3 {
                assert!((got[i] - seq.values()[k][i]).norm() < 1e-9, "{kind:?} level {level} node {k}");
            }
        }
    }

    #[test]
    fn needlet_symmetry_and_errors() {
        let s = scheme(3, 5);
        let bank = FilterBank::standard();
        let x = SpherePoint::from_angles(1.0, 2.0).unwrap();
        let k = 17;
        let node = s.rule(4).points()[k];
        let a = eval_needlet(&s, &bank, 3, k, NeedletKind::High(1), &x).unwrap();
        // Swap the roles of x and node by building the kernel with node as
        // evaluation point and x's value on the other side.
        let w = s.rule(4).weights()[k].sqrt();
        let mut b = [[C64::new(0.0, 0.0); 3]; 3];
        for l in 1..=16usize {
            let g = bank.gen_high(1).eval(s.arg(3, l));
            for m in -(l as i64)..=(l as i64) {
                let p = vsh_grad_curl(l, m, &node);
                let q = vsh_grad_curl(l, m, &x);
                for i in 0..3 {
                    for j in 0..3 {
                        b[i][j] += (p.y1[i] * q.y1[j].conj() + p.y2[i] * q.y2[j].conj()) * (g * w);
                    }
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                assert!((a[i][j] - b[j][i].conj()).norm() < 1e-12);
            }
        }
        assert!(matches!(
            eval_needlet(&s, &bank, 3, 1_000_000, NeedletKind::Low, &x),
            Err(Error::Domain(_))
        ));
        assert!(matches!(eval_needlet(&s, &bank, 5, 0, NeedletKind::High(1), &x), Err(Error::Domain(_))));
    }
}
