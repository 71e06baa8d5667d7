//! Gaussian microtexture background models `U = f * W`.
//!
//! Under such a model the auto-similarity `AS(U, t, ω)` is distributed as a
//! weighted sum of independent `χ²₁` variables whose weights are the
//! eigenvalues of `C_t(x₁, x₂) = Δ_f(t, x₁ − x₂)` on `ω`, where
//! `Δ_f(t, x) = 2Γ_f(x) − Γ_f(x + t) − Γ_f(x − t)`. The CDF evaluation only
//! needs the first three cumulants, which are traces of powers of `C_t`, so
//! no eigendecomposition is performed on the hot path.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;
use crate::grid::{autocorrelation, Image, Offset, OffsetMap, PatchDomain};

/// Largest `|ω|` accepted by the covariance routines.
pub const DEFAULT_COVARIANCE_CAP: usize = 4096;

/// Relative level under which a law is treated as the point mass at zero.
const DEGENERATE_RELATIVE: f64 = 1e-10;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    WhiteNoise,
    ExemplarDerived,
    /// Arbitrary user kernel (e.g. a filtered exemplar or a reloaded model).
    Kernel,
}

/// Stationary Gaussian field `U = f * W` on a periodic grid.
#[derive(Clone, Debug)]
pub struct MicrotextureModel {
    kind: ModelKind,
    kernel: Image,
    gamma: OffsetMap,
    mean: f64,
}

impl MicrotextureModel {
    /// Unit white noise, `f = δ₀`.
    pub fn white_noise(width: usize, height: usize) -> Self {
        let mut kernel = Image::zeros(width, height);
        kernel.set(0, 0, 1.0);
        let mut gamma = OffsetMap::filled(width, height, 0.0);
        gamma.set(Offset::ZERO, 1.0);
        MicrotextureModel { kind: ModelKind::WhiteNoise, kernel, gamma, mean: 0.0 }
    }

    /// `f = |Ω|^{-1/2} (u − m_u)`, so that `Γ_f(0)` is the empirical variance of `u`.
    pub fn from_exemplar(u: &Image) -> Self {
        let mean = u.mean();
        let scale = 1.0 / (u.len() as f64).sqrt();
        let kernel = u.map(|v| (v - mean) * scale);
        let gamma = autocorrelation(&kernel);
        MicrotextureModel { kind: ModelKind::ExemplarDerived, kernel, gamma, mean }
    }

    pub fn from_kernel(kernel: Image) -> Self {
        let gamma = autocorrelation(&kernel);
        MicrotextureModel { kind: ModelKind::Kernel, kernel, gamma, mean: 0.0 }
    }

    pub(crate) fn with_kind(mut self, kind: ModelKind, mean: f64) -> Self {
        self.kind = kind;
        self.mean = mean;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn kernel(&self) -> &Image {
        &self.kernel
    }

    /// Autocorrelation `Γ_f` of the kernel.
    pub fn gamma(&self) -> &OffsetMap {
        &self.gamma
    }

    /// Pixel mean of the exemplar the model was built from (zero otherwise).
    pub fn exemplar_mean(&self) -> f64 {
        self.mean
    }

    pub fn dims(&self) -> (usize, usize) {
        self.kernel.dims()
    }

    /// `Γ_f(0)`, the marginal variance of `U`.
    pub fn variance(&self) -> f64 {
        self.gamma.get(Offset::ZERO)
    }

    /// True when `f ≡ 0`.
    pub fn is_degenerate(&self) -> bool {
        self.variance() <= 0.0
    }

    /// Offset correlation `Δ_f(t, x)`.
    pub fn delta(&self, t: Offset, x: Offset) -> f64 {
        2.0 * self.gamma.get(x) - self.gamma.get(x + t) - self.gamma.get(x - t)
    }

    /// The map `x ↦ Δ_f(t, x)`.
    pub fn delta_f(&self, t: Offset) -> OffsetMap {
        let (w, h) = self.dims();
        let mut out = OffsetMap::filled(w, h, 0.0);
        if t.is_zero() || (t.x % w as i64 == 0 && t.y % h as i64 == 0) {
            return out;
        }
        for i in 0..w * h {
            let x = out.raw_offset(i);
            out.values_mut()[i] = self.delta(t, x);
        }
        // Δ_f(t, 0) = 2(Γ(0) − Γ(t)) ≥ 0 up to round-off.
        let d0 = out.values()[0];
        debug_assert!(d0 >= -1e-10 * self.variance().max(1e-300), "Δ_f(t,0) = {d0}");
        out.values_mut()[0] = d0.max(0.0);
        out
    }

    /// Dense covariance `C_t` of the increment field on `ω`, raster order.
    pub fn covariance_matrix(&self, t: Offset, omega: &PatchDomain) -> Result<DMatrix<f64>> {
        self.covariance_matrix_capped(t, omega, DEFAULT_COVARIANCE_CAP)
    }

    pub fn covariance_matrix_capped(
        &self,
        t: Offset,
        omega: &PatchDomain,
        cap: usize,
    ) -> Result<DMatrix<f64>> {
        let n = omega.len();
        if n > cap {
            return Err(Error::PatchTooLarge { size: n, cap });
        }
        let coords = omega.relative_coords();
        let mut c = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let d = Offset::new(coords[i].0 - coords[j].0, coords[i].1 - coords[j].1);
                let v = self.delta(t, d);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        Ok(c)
    }

    /// Cumulants `(tr C, 2 tr C², 8 tr C³)` of `AS(U, t, ω)`.
    ///
    /// Square domains use difference-count sums over the Toeplitz structure of
    /// `C_t` (`O(p⁴)`); other domains go through the dense matrix.
    pub fn cumulants(&self, t: Offset, omega: &PatchDomain) -> Result<QuadFormLaw> {
        if omega.len() > DEFAULT_COVARIANCE_CAP {
            return Err(Error::PatchTooLarge { size: omega.len(), cap: DEFAULT_COVARIANCE_CAP });
        }
        let law = match omega.side() {
            Some(p) => self.square_cumulants(t, p),
            None => self.dense_cumulants(t, omega)?,
        };
        Ok(self.snap_degenerate(law, omega.len()))
    }

    /// Cumulants from explicit matrix products: `κ₂` from the entrywise square
    /// sum and `κ₃` from `tr(C · C²)`.
    pub fn dense_cumulants(&self, t: Offset, omega: &PatchDomain) -> Result<QuadFormLaw> {
        let c = self.covariance_matrix(t, omega)?;
        let k1 = c.trace();
        let k2 = 2.0 * c.iter().map(|v| v * v).sum::<f64>();
        let c2 = &c * &c;
        let k3 = 8.0 * c.component_mul(&c2).sum();
        Ok(QuadFormLaw::from_cumulants(k1, k2, k3))
    }

    /// Law with eigenvalues from a dense symmetric eigensolver.
    pub fn eigen_law(&self, t: Offset, omega: &PatchDomain) -> Result<QuadFormLaw> {
        let c = self.covariance_matrix(t, omega)?;
        let eig = SymmetricEigen::new(c);
        let values: Vec<f64> = eig.eigenvalues.iter().map(|&v| v.max(0.0)).collect();
        Ok(QuadFormLaw::from_weights(&values))
    }

    fn square_cumulants(&self, t: Offset, p: usize) -> QuadFormLaw {
        let n = 2 * p - 1;
        let pi = p as i64;
        let mut d = vec![0.0; n * n];
        for ax in 0..n {
            for ay in 0..n {
                let x = Offset::new(ax as i64 - (pi - 1), ay as i64 - (pi - 1));
                d[ax * n + ay] = self.delta(t, x);
            }
        }
        let center = (p - 1) * n + (p - 1);
        let k1 = (p * p) as f64 * d[center];

        let mut tr2 = 0.0;
        for ax in 0..n {
            let wx = (pi - (ax as i64 - (pi - 1)).abs()) as f64;
            for ay in 0..n {
                let wy = (pi - (ay as i64 - (pi - 1)).abs()) as f64;
                let v = d[ax * n + ay];
                tr2 += wx * wy * v * v;
            }
        }

        let triples = axis_triples(p);
        let mut tr3 = 0.0;
        for &(ax, bx, cx, wx) in &triples {
            let ra = &d[ax * n..(ax + 1) * n];
            let rb = &d[bx * n..(bx + 1) * n];
            let rc = &d[cx * n..(cx + 1) * n];
            let mut s = 0.0;
            for &(ay, by, cy, wy) in &triples {
                s += wy * ra[ay] * rb[by] * rc[cy];
            }
            tr3 += wx * s;
        }
        QuadFormLaw::from_cumulants(k1, 2.0 * tr2, 8.0 * tr3)
    }

    fn snap_degenerate(&self, law: QuadFormLaw, size: usize) -> QuadFormLaw {
        let scale = size as f64 * self.variance();
        if law.k1 <= DEGENERATE_RELATIVE * scale || scale <= 0.0 {
            QuadFormLaw::degenerate()
        } else {
            QuadFormLaw {
                k1: law.k1,
                k2: law.k2.max(0.0),
                k3: law.k3.max(0.0),
                eigenvalues: law.eigenvalues,
            }
        }
    }

    /// One draw of `f * W` with `W` i.i.d. standard normal in raster order.
    pub fn sample(&self, seed: u64) -> Image {
        let (w, h) = self.dims();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise: Vec<f64> = (0..w * h).map(|_| StandardNormal.sample(&mut rng)).collect();
        if self.kind == ModelKind::WhiteNoise {
            return Image::new(w, h, noise).expect("finite noise");
        }
        let values = fft::convolve(self.kernel.pixels(), &noise, w, h);
        Image::new(w, h, values).expect("finite sample")
    }
}

/// Per-axis index triples `(a, b, −a−b)` with their overlap count
/// `p − span{0, b, a+b}`, indices shifted by `p − 1`.
fn axis_triples(p: usize) -> Vec<(usize, usize, usize, f64)> {
    let pi = p as i64;
    let mut out = Vec::new();
    for a in -(pi - 1)..pi {
        for b in -(pi - 1)..pi {
            let hi = 0.max(b).max(a + b);
            let lo = 0.min(b).min(a + b);
            let w = pi - (hi - lo);
            if w > 0 {
                let c = -a - b;
                out.push((
                    (a + pi - 1) as usize,
                    (b + pi - 1) as usize,
                    (c + pi - 1) as usize,
                    w as f64,
                ));
            }
        }
    }
    out
}

/// One eigenvalue with its multiplicity.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub value: f64,
    pub multiplicity: usize,
}

/// Law of `Σ λ_k Z_k` with `Z_k` i.i.d. `χ²₁`, held through its first three cumulants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadFormLaw {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigenvalues: Option<Vec<Eigenvalue>>,
}

impl QuadFormLaw {
    pub fn from_cumulants(k1: f64, k2: f64, k3: f64) -> Self {
        QuadFormLaw { k1, k2, k3, eigenvalues: None }
    }

    /// Point mass at zero.
    pub fn degenerate() -> Self {
        Self::from_cumulants(0.0, 0.0, 0.0)
    }

    /// `κ_r = 2^{r−1} (r−1)! Σ λ^r`.
    pub fn from_eigenvalues(eigenvalues: Vec<Eigenvalue>) -> Self {
        let power = |r: i32| -> f64 {
            eigenvalues.iter().map(|e| e.multiplicity as f64 * e.value.powi(r)).sum()
        };
        QuadFormLaw {
            k1: power(1),
            k2: 2.0 * power(2),
            k3: 8.0 * power(3),
            eigenvalues: Some(eigenvalues),
        }
    }

    pub fn from_weights(weights: &[f64]) -> Self {
        Self::from_eigenvalues(
            weights.iter().map(|&value| Eigenvalue { value, multiplicity: 1 }).collect(),
        )
    }

    pub fn is_degenerate(&self) -> bool {
        self.k1 <= 0.0
    }

    /// Law of `s · Q`.
    pub fn scaled(&self, s: f64) -> Self {
        QuadFormLaw {
            k1: s * self.k1,
            k2: s * s * self.k2,
            k3: s * s * s * self.k3,
            eigenvalues: self.eigenvalues.as_ref().map(|ev| {
                ev.iter()
                    .map(|e| Eigenvalue { value: s * e.value, multiplicity: e.multiplicity })
                    .collect()
            }),
        }
    }

    pub fn mean(&self) -> f64 {
        self.k1
    }

    pub fn variance(&self) -> f64 {
        self.k2
    }

    /// Eigenvalues expanded by multiplicity, if known.
    pub fn weights(&self) -> Option<Vec<f64>> {
        self.eigenvalues.as_ref().map(|ev| {
            ev.iter().flat_map(|e| std::iter::repeat_n(e.value, e.multiplicity)).collect()
        })
    }
}

/// Multiplicities `(m, r_m)` of the closed-form white-noise spectrum on a
/// `p x p` patch: `λ_{m,k} = 4 sin²(kπ/2m)`, `k ∈ [1, m−1]`, each with
/// multiplicity `r_m`, for `m ∈ [2, q+1]` and `q = ⌈p / max(|t_x|, |t_y|)⌉`.
///
/// `r_m = 2|t_x||t_y|` for `m < q`, `r_{q+1} = r_x r_y`, and `r_q` completes
/// `Σ (m−1) r_m = p²`. Requires `0 < |t_x|, |t_y| < p`.
pub fn white_noise_multiplicities(p: usize, t: Offset) -> Result<Vec<(usize, usize)>> {
    if p == 0 {
        return Err(Error::EmptyPatch);
    }
    let (ax, ay) = (t.x.unsigned_abs() as usize, t.y.unsigned_abs() as usize);
    if ax == 0 || ay == 0 {
        return Err(Error::ZeroOffsetComponent(t.x, t.y));
    }
    if ax.max(ay) >= p {
        return Err(Error::InvalidParameter(format!("offset {t:?} does not overlap a {p}x{p} patch")));
    }
    let q = p.div_ceil(ax.max(ay));
    let residual = |a: usize| -> usize {
        let ceil = p.div_ceil(a);
        let pa = a * ceil - p;
        (ceil - q) * a + a - pa
    };
    let top = residual(ax) * residual(ay);
    let mut out: Vec<(usize, usize)> = (2..q).map(|m| (m, 2 * ax * ay)).collect();
    let assigned: usize = out.iter().map(|&(m, r)| (m - 1) * r).sum::<usize>() + q * top;
    let remaining = (p * p)
        .checked_sub(assigned)
        .filter(|r| r % (q - 1) == 0)
        .ok_or_else(|| Error::Numerical(format!("inconsistent multiplicities for p={p}, t={t:?}")))?;
    out.push((q, remaining / (q - 1)));
    out.push((q + 1, top));
    Ok(out)
}

/// Closed-form eigenvalues of `C_t` for unit white noise on a `p x p` patch
/// (see [`white_noise_multiplicities`]); `2` with multiplicity `p²` when
/// `‖t‖_∞ ≥ p`.
pub fn white_noise_eigenvalues(p: usize, t: Offset) -> Result<Vec<Eigenvalue>> {
    if p == 0 {
        return Err(Error::EmptyPatch);
    }
    if t.linf() >= p as i64 {
        return Ok(vec![Eigenvalue { value: 2.0, multiplicity: p * p }]);
    }
    let mut out = Vec::new();
    for (m, r) in white_noise_multiplicities(p, t)? {
        if r == 0 {
            continue;
        }
        for k in 1..m {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * m as f64)).sin();
            out.push(Eigenvalue { value: 4.0 * s * s, multiplicity: r });
        }
    }
    Ok(out)
}

/// White-noise eigenvalues of `C_t` for any domain and any `t ≠ 0` from the
/// chain structure of `ω`: each maximal run `x, x+t, …` of length `L` inside
/// `ω` contributes `4 sin²(kπ / 2(L+1))`, `k = 1..L`. Torus wrap is ignored,
/// which is exact whenever `ω ∪ (ω + t)` fits in the image.
pub fn white_noise_chain_eigenvalues(omega: &PatchDomain, t: Offset) -> Vec<Eigenvalue> {
    use std::collections::{BTreeMap, HashSet};
    if t.is_zero() {
        return vec![Eigenvalue { value: 0.0, multiplicity: omega.len() }];
    }
    let pts: HashSet<(i64, i64)> = omega.relative_coords().into_iter().collect();
    let mut runs: BTreeMap<usize, usize> = BTreeMap::new();
    for &(x, y) in &pts {
        if pts.contains(&(x - t.x, y - t.y)) {
            continue;
        }
        let mut len = 0;
        let (mut cx, mut cy) = (x, y);
        while pts.contains(&(cx, cy)) {
            len += 1;
            cx += t.x;
            cy += t.y;
        }
        *runs.entry(len).or_default() += 1;
    }
    let mut out = Vec::new();
    for (len, count) in runs {
        for k in 1..=len {
            let s = (k as f64 * std::f64::consts::PI / (2.0 * (len + 1) as f64)).sin();
            out.push(Eigenvalue { value: 4.0 * s * s, multiplicity: count });
        }
    }
    out
}
