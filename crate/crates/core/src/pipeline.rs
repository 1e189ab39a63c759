//! Sample, project, decompose, reconstruct, and measure.

use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::error::Result;
use crate::fields::{max_tangency_defect, relative_l2};
use crate::filter_bank::FilterBank;
use crate::needlet_transform::{decompose, parseval_report, reconstruct, LevelScheme, NeedletDecomposition, ParsevalReport};
use crate::sphere_geom::QuadratureRule;
use crate::vsh::{norm_sqr3, project_bandlimited, vsh_synthesis, TangentSampleSeq, Vec3, VectorCoeffPair};

/// Outcome of one projected round trip on the finest rule.
#[derive(Debug, Clone)]
pub struct RoundTrip {
    /// Unweighted values of the raw input.
    pub raw: Vec<Vec3>,
    /// Unweighted values of the bandlimited projection.
    pub projected: Vec<Vec3>,
    /// Unweighted reconstruction.
    pub reconstructed: Vec<Vec3>,
    pub decomposition: NeedletDecomposition,
    /// `‖raw - projected‖ / ‖raw‖`.
    pub projection_error: f64,
    /// `‖projected - reconstructed‖ / ‖raw‖`.
    pub transform_error: f64,
    /// `‖raw - reconstructed‖ / ‖raw‖`.
    pub total_error: f64,
    pub parseval: ParsevalReport,
    /// Largest `|T·x|/|T|` over projected and reconstructed values.
    pub tangency: f64,
    pub t_dec: Duration,
    pub t_rec: Duration,
}

/// Projects raw node values on the finest rule onto `L_J`, then runs the
/// decomposition and reconstruction. `drop_details` zeroes every detail
/// sequence before reconstructing.
pub fn round_trip(raw: &[Vec3], scheme: &LevelScheme, bank: &FilterBank, drop_details: bool) -> Result<RoundTrip> {
    let rule = scheme.rule(scheme.finest());
    let proj = project_bandlimited(raw, rule, scheme.bandlimit(scheme.finest()))?;
    let t0 = Instant::now();
    let d = decompose(&proj.projected, scheme, bank)?;
    let t_dec = t0.elapsed();
    let parseval = parseval_report(&d, proj.projected.norm_sqr());
    let used = if drop_details { d.without_details() } else { d.clone() };
    let t1 = Instant::now();
    let rec = reconstruct(&used, scheme, bank)?;
    let t_rec = t1.elapsed();
    let projected = proj.projected.unweighted();
    let reconstructed = rec.unweighted();
    let scale: f64 = raw.iter().map(norm_sqr3).sum::<f64>().sqrt();
    let abs = |a: &[Vec3], b: &[Vec3]| relative_l2(a, b) * (a.iter().map(norm_sqr3).sum::<f64>()).sqrt();
    let rel = |x: f64| if scale > 0.0 { x / scale } else { x };
    let tangency = max_tangency_defect(&projected, rule.points()).max(max_tangency_defect(&reconstructed, rule.points()));
    Ok(RoundTrip {
        projection_error: rel(abs(raw, &projected)),
        transform_error: rel(abs(&projected, &reconstructed)),
        total_error: rel(abs(raw, &reconstructed)),
        raw: raw.to_vec(),
        projected,
        reconstructed,
        decomposition: d,
        parseval,
        tangency,
        t_dec,
        t_rec,
    })
}

/// Unweighted values of `coeffs` on every node of `rule`.
pub fn sample_raw(coeffs: &VectorCoeffPair, rule: &Arc<QuadratureRule>) -> Vec<Vec3> {
    vsh_synthesis(coeffs, rule).unweighted()
}

/// Times decomposition and reconstruction of a certified sequence: one
/// warmup run, then the median of `runs`.
pub fn time_transforms(v: &TangentSampleSeq, scheme: &LevelScheme, bank: &FilterBank, runs: usize) -> Result<(Duration, Duration)> {
    let d = decompose(v, scheme, bank)?;
    reconstruct(&d, scheme, bank)?;
    let mut dec = Vec::with_capacity(runs);
    let mut rec = Vec::with_capacity(runs);
    for _ in 0..runs.max(1) {
        let t = Instant::now();
        let d = decompose(v, scheme, bank)?;
        dec.push(t.elapsed());
        let t = Instant::now();
        reconstruct(&d, scheme, bank)?;
        rec.push(t.elapsed());
    }
    dec.sort();
    rec.sort();
    Ok((dec[dec.len() / 2], rec[rec.len() / 2]))
}
