//! A-contrario auto-similarity detection.
//!
//! An offset `t` is detected when `P₀[AS(U, t, ω) ≤ AS(u, t, ω)] ≤ NFA_max / |Ω|`,
//! so that the expected number of detections under the background model is
//! at most `NFA_max`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::{MicrotextureModel, ModelKind};
use crate::error::{Error, Result};
use crate::grid::{as_map, Image, Offset, OffsetMap, PatchDomain};
use crate::quadform::{fit, Fallback, WoodFParams};

/// Restricts which offsets are evaluated. Masked offsets are never detected.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OffsetMask {
    All,
    /// Centered offsets whose components are both multiples of the stride.
    Stride(usize),
    /// Centered offsets with `‖t‖_∞ ≤ r`.
    Window(usize),
    /// Explicit flags in raw offset order.
    Custom(Vec<bool>),
}

impl OffsetMask {
    pub fn includes(&self, index: usize, width: usize, height: usize) -> bool {
        let t = crate::grid::centered_offset(index, width, height);
        match self {
            OffsetMask::All => true,
            OffsetMask::Stride(s) => {
                let s = (*s).max(1) as i64;
                t.x % s == 0 && t.y % s == 0
            }
            OffsetMask::Window(r) => t.linf() <= *r as i64,
            OffsetMask::Custom(flags) => flags.get(index).copied().unwrap_or(false),
        }
    }

    fn validate(&self, len: usize) -> Result<()> {
        match self {
            OffsetMask::Custom(flags) if flags.len() != len => Err(Error::DimensionMismatch(
                format!("mask has {} entries, image has {len} offsets", flags.len()),
            )),
            OffsetMask::Stride(0) => Err(Error::InvalidParameter("mask stride must be positive".into())),
            _ => Ok(()),
        }
    }
}

/// `AP(t, ω, value)`: the background CDF of `AS(U, t, ω)` at `value`.
pub fn ap(model: &MicrotextureModel, t: Offset, omega: &PatchDomain, value: f64) -> Result<f64> {
    Ok(fit(&model.cumulants(t, omega)?)?.cdf(value))
}

/// `AP⁻¹(t, ω, q)`.
pub fn threshold_a(model: &MicrotextureModel, t: Offset, omega: &PatchDomain, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidProbability(q));
    }
    fit(&model.cumulants(t, omega)?)?.quantile(q)
}

/// Fitted background laws for every evaluated offset, reusable across images
/// and patch anchors that share the model and the patch shape.
#[derive(Clone, Debug)]
pub struct DetectionLaws {
    width: usize,
    height: usize,
    omega_len: usize,
    laws: Vec<Option<WoodFParams>>,
    mask: OffsetMask,
}

impl DetectionLaws {
    pub fn compute(model: &MicrotextureModel, omega: &PatchDomain, mask: &OffsetMask) -> Result<Self> {
        let (w, h) = model.dims();
        mask.validate(w * h)?;
        if omega.len() > w * h {
            return Err(Error::InvalidParameter(format!(
                "patch of {} pixels exceeds the {w}x{h} image",
                omega.len()
            )));
        }
        let shape = omega.moved_to(0, 0);
        let probe = OffsetMap::filled(w, h, 0.0);
        // Law(t) = Law(−t): fit one representative per pair.
        let representative: Vec<usize> =
            (0..w * h).map(|i| i.min(probe.raw_index(-probe.raw_offset(i)))).collect();
        let needed: Vec<usize> = (0..w * h)
            .filter(|&i| {
                representative[i] == i
                    && (mask.includes(i, w, h) || mask.includes(probe.raw_index(-probe.raw_offset(i)), w, h))
            })
            .collect();
        let fitted: Vec<(usize, WoodFParams)> = needed
            .par_iter()
            .map(|&i| {
                let t = probe.raw_offset(i);
                Ok((i, fit(&model.cumulants(t, &shape)?)?))
            })
            .collect::<Result<_>>()?;
        let mut by_rep = vec![None; w * h];
        for (i, p) in fitted {
            by_rep[i] = Some(p);
        }
        let laws = (0..w * h)
            .map(|i| if mask.includes(i, w, h) { by_rep[representative[i]] } else { None })
            .collect();
        Ok(DetectionLaws { width: w, height: h, omega_len: omega.len(), laws, mask: mask.clone() })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn mask(&self) -> &OffsetMask {
        &self.mask
    }

    /// Fitted law at raw index `i`, `None` when masked.
    pub fn law(&self, index: usize) -> Option<&WoodFParams> {
        self.laws[index].as_ref()
    }

    pub fn fallback_counts(&self) -> FallbackCounts {
        let mut c = FallbackCounts::default();
        for law in &self.laws {
            match law.map(|p| p.fallback) {
                None => c.masked += 1,
                Some(Fallback::None) => c.wood_f += 1,
                Some(Fallback::GammaTwoMoment) => c.gamma += 1,
                Some(Fallback::PointMass) => c.point_mass += 1,
            }
        }
        c
    }

    /// Thresholds `AP⁻¹(t, ω, q)` per offset; masked offsets get `None`.
    pub fn thresholds(&self, q: f64) -> Result<Vec<Option<f64>>> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidProbability(q));
        }
        self.laws.iter().map(|law| law.map(|p| p.quantile(q)).transpose()).collect()
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FallbackCounts {
    pub wood_f: usize,
    pub gamma: usize,
    pub point_mass: usize,
    pub masked: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelDescriptor {
    pub kind: ModelKind,
    pub width: usize,
    pub height: usize,
    pub variance: f64,
}

impl ModelDescriptor {
    pub fn of(model: &MicrotextureModel) -> Self {
        let (width, height) = model.dims();
        ModelDescriptor { kind: model.kind(), width, height, variance: model.variance() }
    }
}

#[derive(Clone, Debug)]
pub struct DetectionResult {
    pub p_map: OffsetMap,
    /// 1 where detected, 0 elsewhere.
    pub d_map: OffsetMap,
    pub as_map: OffsetMap,
    pub nfa_max: f64,
    pub patch: PatchDomain,
    pub model: ModelDescriptor,
    pub fallback_counts: FallbackCounts,
    pub warnings: Vec<String>,
}

impl DetectionResult {
    pub fn is_detected(&self, t: Offset) -> bool {
        self.d_map.get(t) != 0.0
    }

    pub fn count(&self) -> usize {
        self.d_map.values().iter().filter(|&&v| v != 0.0).count()
    }

    /// Detected offsets in centered coordinates, raster order.
    pub fn detections(&self) -> Vec<Offset> {
        (0..self.d_map.len())
            .filter(|&i| self.d_map.values()[i] != 0.0)
            .map(|i| self.d_map.centered(i))
            .collect()
    }
}

/// Algorithm of auto-similarity detection on the periodic image `u`.
pub fn autosim_detection(
    u: &Image,
    omega: &PatchDomain,
    model: &MicrotextureModel,
    nfa_max: f64,
    mask: &OffsetMask,
) -> Result<DetectionResult> {
    if model.dims() != u.dims() {
        return Err(Error::DimensionMismatch(format!(
            "model is {:?}, image is {:?}",
            model.dims(),
            u.dims()
        )));
    }
    let laws = DetectionLaws::compute(model, omega, mask)?;
    detect_with_laws(u, omega, model, &laws, nfa_max)
}

/// Detection with precomputed laws (which must match `model` and the shape of `omega`).
pub fn detect_with_laws(
    u: &Image,
    omega: &PatchDomain,
    model: &MicrotextureModel,
    laws: &DetectionLaws,
    nfa_max: f64,
) -> Result<DetectionResult> {
    if !(nfa_max >= 0.0 && nfa_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("nfa_max must be a nonnegative number, got {nfa_max}")));
    }
    if laws.dims() != u.dims() || laws.omega_len != omega.len() {
        return Err(Error::DimensionMismatch("laws were computed for another image or patch".into()));
    }
    let (w, h) = u.dims();
    let omega_size = (w * h) as f64;
    let q = nfa_max / omega_size;
    let s = as_map(u, omega);
    let mut p_map = OffsetMap::filled(w, h, 1.0);
    let mut d_map = OffsetMap::filled(w, h, 0.0);
    for i in 0..w * h {
        let Some(law) = laws.law(i) else { continue };
        let p = if i == 0 { 1.0 } else { law.cdf(s.values()[i]) };
        p_map.values_mut()[i] = p;
        if p <= q {
            d_map.values_mut()[i] = 1.0;
        }
    }
    let mut warnings = Vec::new();
    if model.is_degenerate() && nfa_max >= omega_size {
        warnings.push(format!(
            "degenerate background model with nfa_max {nfa_max} >= |Omega| = {omega_size}: every offset is trivially detected"
        ));
    }
    Ok(DetectionResult {
        p_map,
        d_map,
        as_map: s,
        nfa_max,
        patch: omega.clone(),
        model: ModelDescriptor::of(model),
        fallback_counts: laws.fallback_counts(),
        warnings,
    })
}
