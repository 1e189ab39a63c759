//! Longitude DFTs over the rings of a tensor rule.
//!
//! Both transforms split into two phases with a fixed reduction order so the
//! result does not depend on how rayon schedules the work.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::legendre;
use crate::sphere_geom::RingLayout;

pub(crate) struct RingFft {
    n_lon: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl RingFft {
    pub(crate) fn new(n_lon: usize) -> Self {
        let mut planner = FftPlanner::new();
        RingFft {
            n_lon,
            fwd: planner.plan_fft_forward(n_lon),
            inv: planner.plan_fft_inverse(n_lon),
        }
    }

    /// In-place `X_k = Σ_j x_j e^{-2πijk/n}` on each ring-major block.
    pub(crate) fn forward_rings(&self, data: &mut [C64]) {
        data.par_chunks_mut(self.n_lon).for_each(|ring| self.fwd.process(ring));
    }

    /// In-place `x_j = Σ_k X_k e^{+2πijk/n}` (unnormalized) on each block.
    pub(crate) fn inverse_rings(&self, data: &mut [C64]) {
        data.par_chunks_mut(self.n_lon).for_each(|ring| self.inv.process(ring));
    }
}

/// Bin of order `m` in a length-`n` DFT.
#[inline]
pub(crate) fn bin(m: i64, n: usize) -> usize {
    m.rem_euclid(n as i64) as usize
}

/// Per-ring unsigned sectoral start values, `sect[i][m]`.
pub(crate) fn sectoral_table(r: &RingLayout, l_max: usize) -> Vec<Vec<f64>> {
    r.sin_theta.iter().map(|&s| legendre::sectoral(s, l_max)).collect()
}

/// Legendre column buffers for one order, reused across rings.
pub(crate) struct Column {
    pub value: Vec<f64>,
    pub d_theta: Vec<f64>,
    pub m_over_sin: Vec<f64>,
}

impl Column {
    pub(crate) fn new(l_max: usize) -> Self {
        Column {
            value: vec![0.0; l_max + 1],
            d_theta: vec![0.0; l_max + 1],
            m_over_sin: vec![0.0; l_max + 1],
        }
    }

    /// Fills entries `ℓ = m..=l_max` (stored from index 0) at ring `i`.
    pub(crate) fn fill(&mut self, r: &RingLayout, sect: &[Vec<f64>], i: usize, m: usize, l_max: usize) {
        legendre::column(
            m,
            r.cos_theta[i],
            r.sin_theta[i],
            sect[i][m],
            l_max,
            &mut self.value,
            &mut self.d_theta,
            &mut self.m_over_sin,
        );
    }
}
