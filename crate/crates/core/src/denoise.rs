//! NL-means with a-contrario patch selection.
//!
//! A patch `ω` is denoised by averaging the patches `t + ω`, `‖t‖_∞ ≤ c`,
//! whose auto-similarity stays below `σ² a(t)`. The thresholds `a(t)` are
//! quantiles at `1 − NFA_max/|T|` of the auto-similarity law under unit white
//! noise, so that on average `NFA_max` offsets per patch are rejected when the
//! image is pure noise. Patches never wrap around the image border.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::{white_noise_chain_eigenvalues, white_noise_eigenvalues, Eigenvalue, QuadFormLaw};
use crate::error::{Error, Result};
use crate::grid::{Image, Offset, PatchDomain};
use crate::quadform::fit;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdMode {
    PerOffset,
    /// Every offset uses the mean of `a(t)` over `t ≠ 0`.
    ConstantMean,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenoiseConfig {
    pub sigma: f64,
    pub patch: usize,
    pub search_radius: usize,
    pub nfa_max: f64,
    pub mode: ThresholdMode,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        DenoiseConfig { sigma: 10.0, patch: 8, search_radius: 10, nfa_max: 4.41, mode: ThresholdMode::ConstantMean }
    }
}

impl DenoiseConfig {
    pub fn with_sigma(sigma: f64) -> Self {
        DenoiseConfig { sigma, ..Default::default() }
    }

    /// `|T| = (2c + 1)²`.
    pub fn search_size(&self) -> usize {
        (2 * self.search_radius + 1).pow(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.patch == 0 {
            return Err(Error::EmptyPatch);
        }
        check_nfa(self.nfa_max, self.search_size())
    }
}

fn check_nfa(nfa_max: f64, search_size: usize) -> Result<()> {
    if !(nfa_max >= 0.0 && nfa_max < search_size as f64) {
        return Err(Error::InvalidParameter(format!(
            "nfa_max must lie in [0, |T| = {search_size}), got {nfa_max}"
        )));
    }
    Ok(())
}

/// Unit-variance thresholds `a(t)` on the search window `‖t‖_∞ ≤ c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AprioriThresholds {
    pub patch: usize,
    pub search_radius: usize,
    pub nfa_max: f64,
    /// Raster order over `t ∈ [−c, c]²`; `a(0) = 0`.
    pub values: Vec<f64>,
    /// Mean over `t ≠ 0`.
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl AprioriThresholds {
    pub fn get(&self, t: Offset) -> f64 {
        let c = self.search_radius as i64;
        let side = 2 * c + 1;
        self.values[((t.y + c) * side + t.x + c) as usize]
    }

    /// `max/min − 1` over `t ≠ 0`.
    pub fn spread(&self) -> f64 {
        self.max / self.min - 1.0
    }
}

/// Eigenvalues of `C_t` for unit white noise on a `p x p` patch.
pub fn white_noise_patch_eigenvalues(p: usize, t: Offset) -> Result<Vec<Eigenvalue>> {
    if t.x != 0 && t.y != 0 || t.linf() >= p as i64 {
        white_noise_eigenvalues(p, t)
    } else {
        Ok(white_noise_chain_eigenvalues(&PatchDomain::square(0, 0, p)?, t))
    }
}

pub fn nlmeans_a_priori_threshold(p: usize, c: usize, nfa_max: f64) -> Result<AprioriThresholds> {
    if p == 0 {
        return Err(Error::EmptyPatch);
    }
    let side = 2 * c + 1;
    check_nfa(nfa_max, side * side)?;
    let q = 1.0 - nfa_max / (side * side) as f64;
    let ci = c as i64;
    // a(t) = a(−t): evaluate the first half of the window in raster order.
    let half: Vec<Offset> = (0..side * side / 2)
        .map(|i| Offset::new((i % side) as i64 - ci, (i / side) as i64 - ci))
        .collect();
    let computed: Vec<f64> = half
        .par_iter()
        .map(|&t| {
            if q >= 1.0 {
                return Ok(f64::INFINITY);
            }
            let law = QuadFormLaw::from_eigenvalues(white_noise_patch_eigenvalues(p, t)?);
            fit(&law)?.quantile(q)
        })
        .collect::<Result<_>>()?;
    let mut values = vec![0.0; side * side];
    for (i, &a) in computed.iter().enumerate() {
        values[i] = a;
        values[side * side - 1 - i] = a;
    }
    let others = || computed.iter().copied();
    let mean = others().sum::<f64>() / computed.len().max(1) as f64;
    let min = others().fold(f64::INFINITY, f64::min);
    let max = others().fold(f64::NEG_INFINITY, f64::max);
    Ok(AprioriThresholds { patch: p, search_radius: c, nfa_max, values, mean, min, max })
}

#[derive(Clone, Debug)]
pub struct DenoiseReport {
    pub denoised: Image,
    /// Accepted offsets per patch anchor, `(W − p + 1) x (H − p + 1)` raster.
    pub selected: Vec<u32>,
    /// Candidate offsets `|T(ω)|` per patch anchor.
    pub candidates: Vec<u32>,
    pub anchors_width: usize,
    pub anchors_height: usize,
    pub psnr: Option<f64>,
    pub thresholds: Option<AprioriThresholds>,
}

impl DenoiseReport {
    /// Mean over anchors of the rejected fraction `1 − N/|T(ω)|`.
    pub fn mean_rejected_fraction(&self) -> f64 {
        let total: f64 = self
            .selected
            .iter()
            .zip(&self.candidates)
            .map(|(&n, &t)| 1.0 - n as f64 / t as f64)
            .sum();
        total / self.selected.len() as f64
    }

    /// Histogram of `N` (index = number of accepted offsets).
    pub fn selected_histogram(&self) -> Vec<usize> {
        let top = self.selected.iter().copied().max().unwrap_or(0) as usize;
        let mut h = vec![0; top + 1];
        for &n in &self.selected {
            h[n as usize] += 1;
        }
        h
    }
}

/// Squared distance between the `p x p` patches at `(ax, ay)` and `(bx, by)`.
fn patch_distance(u: &Image, p: usize, a: (usize, usize), b: (usize, usize)) -> f64 {
    let w = u.width();
    let px = u.pixels();
    let mut s = 0.0;
    for dy in 0..p {
        let ra = &px[(a.1 + dy) * w + a.0..][..p];
        let rb = &px[(b.1 + dy) * w + b.0..][..p];
        for (x, y) in ra.iter().zip(rb) {
            let d = x - y;
            s += d * d;
        }
    }
    s
}

/// Shared patch loop: each anchor averages its candidates with `weight(t, AS)`,
/// then pixel estimates are the plain average over the patches covering them.
fn aggregate<F>(u: &Image, cfg: &DenoiseConfig, weight: F) -> Result<DenoiseReport>
where
    F: Fn(Offset, f64) -> f64 + Sync,
{
    let (w, h) = u.dims();
    let p = cfg.patch;
    if w < p || h < p {
        return Err(Error::ImageSmallerThanPatch { width: w, height: h, patch: p });
    }
    let (aw, ah) = (w - p + 1, h - p + 1);
    let c = cfg.search_radius as i64;
    let mut sum = vec![0.0; w * h];
    let mut cover = vec![0u32; w * h];
    let mut selected = vec![0u32; aw * ah];
    let mut candidates = vec![0u32; aw * ah];
    let px = u.pixels();

    const ROWS_PER_BATCH: usize = 16;
    for batch in (0..ah).step_by(ROWS_PER_BATCH) {
        let rows: Vec<usize> = (batch..(batch + ROWS_PER_BATCH).min(ah)).collect();
        let estimates: Vec<Vec<(Vec<f64>, u32, u32)>> = rows
            .par_iter()
            .map(|&ay| {
                (0..aw)
                    .map(|ax| {
                        let mut acc = vec![0.0; p * p];
                        let mut total = 0.0;
                        let (mut n, mut cand) = (0u32, 0u32);
                        let y0 = (ay as i64 - c).max(0) as usize;
                        let y1 = (ay as i64 + c).min(ah as i64 - 1) as usize;
                        let x0 = (ax as i64 - c).max(0) as usize;
                        let x1 = (ax as i64 + c).min(aw as i64 - 1) as usize;
                        for by in y0..=y1 {
                            for bx in x0..=x1 {
                                let t = Offset::new(bx as i64 - ax as i64, by as i64 - ay as i64);
                                let d = if t.is_zero() { 0.0 } else { patch_distance(u, p, (ax, ay), (bx, by)) };
                                let lw = weight(t, d);
                                cand += 1;
                                if lw > 0.0 {
                                    n += 1;
                                    total += lw;
                                    for dy in 0..p {
                                        let row = &px[(by + dy) * w + bx..][..p];
                                        for (a, v) in acc[dy * p..(dy + 1) * p].iter_mut().zip(row) {
                                            *a += lw * v;
                                        }
                                    }
                                }
                            }
                        }
                        for a in acc.iter_mut() {
                            *a /= total;
                        }
                        (acc, n, cand)
                    })
                    .collect()
            })
            .collect();
        for (&ay, row) in rows.iter().zip(estimates) {
            for (ax, (patch, n, cand)) in row.into_iter().enumerate() {
                selected[ay * aw + ax] = n;
                candidates[ay * aw + ax] = cand;
                for dy in 0..p {
                    for dx in 0..p {
                        let k = (ay + dy) * w + ax + dx;
                        sum[k] += patch[dy * p + dx];
                        cover[k] += 1;
                    }
                }
            }
        }
    }
    let values = sum.iter().zip(&cover).map(|(s, &n)| s / n as f64).collect();
    Ok(DenoiseReport {
        denoised: Image::new(w, h, values)?,
        selected,
        candidates,
        anchors_width: aw,
        anchors_height: ah,
        psnr: None,
        thresholds: None,
    })
}

/// Threshold NL-means: offset `t` joins the average iff `AS ≤ σ² a(t)`.
pub fn nlmeans_threshold(u: &Image, cfg: &DenoiseConfig) -> Result<DenoiseReport> {
    cfg.validate()?;
    let th = nlmeans_a_priori_threshold(cfg.patch, cfg.search_radius, cfg.nfa_max)?;
    let s2 = cfg.sigma * cfg.sigma;
    let mode = cfg.mode;
    let mut report = aggregate(u, cfg, |t, d| {
        let a = match mode {
            _ if t.is_zero() => return 1.0,
            ThresholdMode::PerOffset => th.get(t),
            ThresholdMode::ConstantMean => th.mean,
        };
        if d <= s2 * a {
            1.0
        } else {
            0.0
        }
    })?;
    report.thresholds = Some(th);
    Ok(report)
}

/// Classical NL-means with weights `exp(−AS / h²)`.
pub fn nlmeans_classic(u: &Image, cfg: &DenoiseConfig, h: f64) -> Result<DenoiseReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth h must be positive, got {h}")));
    }
    if !(cfg.sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", cfg.sigma)));
    }
    let h2 = h * h;
    aggregate(u, cfg, |_, d| (-d / h2).exp())
}

/// `10 log₁₀(max u² / MSE)`; `+∞` when `v = u`.
pub fn psnr(reference: &Image, v: &Image) -> Result<f64> {
    if reference.dims() != v.dims() {
        return Err(Error::DimensionMismatch(format!("{:?} vs {:?}", reference.dims(), v.dims())));
    }
    let peak = reference.pixels().iter().map(|x| x * x).fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(Error::InvalidImage("PSNR reference is identically zero".into()));
    }
    let mse = reference.pixels().iter().zip(v.pixels()).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        / reference.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (peak / mse).log10())
}

/// `σ(√a_T + √a_W)`, `a_T = max_t a(t)`, `a_W` the `χ²_{|ω|}` quantile at `1 − ε`.
pub fn reconstruction_bound(cfg: &DenoiseConfig, eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidProbability(eps));
    }
    cfg.validate()?;
    let th = nlmeans_a_priori_threshold(cfg.patch, cfg.search_radius, cfg.nfa_max)?;
    let chi2 = QuadFormLaw::from_eigenvalues(vec![Eigenvalue { value: 1.0, multiplicity: cfg.patch * cfg.patch }]);
    let a_w = fit(&chi2)?.quantile(1.0 - eps)?;
    Ok(cfg.sigma * (th.max.sqrt() + a_w.sqrt()))
}
