//! Images on a periodic grid, patch domains, offset maps and the auto-similarity
//! primitives built on them.
//!
//! Every read goes through the periodic extension of the image, so any patch
//! domain is valid regardless of where it sits. Offsets are stored in raw
//! coordinates `[0, width) x [0, height)`; [`OffsetMap::centered`] gives the
//! representative in `[-w/2, w/2) x [-h/2, h/2)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft;

/// Integer translation on the image grid.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Offset {
    pub x: i64,
    pub y: i64,
}

impl Offset {
    pub const ZERO: Offset = Offset { x: 0, y: 0 };

    pub fn new(x: i64, y: i64) -> Self {
        Offset { x, y }
    }

    pub fn is_zero(self) -> bool {
        self.x == 0 && self.y == 0
    }

    /// Chebyshev norm.
    pub fn linf(self) -> i64 {
        self.x.abs().max(self.y.abs())
    }
}

impl std::ops::Neg for Offset {
    type Output = Offset;
    fn neg(self) -> Offset {
        Offset::new(-self.x, -self.y)
    }
}

impl std::ops::Add for Offset {
    type Output = Offset;
    fn add(self, rhs: Offset) -> Offset {
        Offset::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Offset {
    type Output = Offset;
    fn sub(self, rhs: Offset) -> Offset {
        Offset::new(self.x - rhs.x, self.y - rhs.y)
    }
}

/// Real-valued image, row-major, read with periodic boundary semantics.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty dimensions {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "{} pixels for a {width}x{height} image",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidImage(format!(
                "non-finite pixel at ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Image { width, height, data })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0 && value.is_finite());
        Image { width, height, data: vec![value; width * height] }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::constant(width, height, 0.0)
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0);
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Image::new(width, height, data).expect("from_fn produced a non-finite pixel")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Number of pixels `|Ω|`.
    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Value of the periodic extension at any integer position.
    pub fn at(&self, x: i64, y: i64) -> f64 {
        let xi = x.rem_euclid(self.width as i64) as usize;
        let yi = y.rem_euclid(self.height as i64) as usize;
        self.data[yi * self.width + xi]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.len() as f64
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Pixelwise map, applied in raster order.
    pub fn map(&self, mut f: impl FnMut(f64) -> f64) -> Image {
        Image::new(self.width, self.height, self.data.iter().map(|&v| f(v)).collect())
            .expect("map produced a non-finite pixel")
    }

    /// Periodic translation: `out(x) = self(x + t)`.
    pub fn translate(&self, t: Offset) -> Image {
        Image::from_fn(self.width, self.height, |x, y| self.at(x as i64 + t.x, y as i64 + t.y))
    }
}

/// Shape of a patch domain relative to its anchor.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchShape {
    /// `[0, p-1]^2`.
    Square(usize),
    /// Explicit coordinates relative to the anchor, kept in raster order.
    Points(Vec<(i64, i64)>),
}

/// A finite set of grid coordinates `ω`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchDomain {
    anchor: (i64, i64),
    shape: PatchShape,
}

impl PatchDomain {
    pub fn square(x: i64, y: i64, side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::EmptyPatch);
        }
        Ok(PatchDomain { anchor: (x, y), shape: PatchShape::Square(side) })
    }

    pub fn from_points(anchor: (i64, i64), mut points: Vec<(i64, i64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyPatch);
        }
        points.sort_by_key(|&(x, y)| (y, x));
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicatePatchCoordinate(w[0].0, w[0].1));
        }
        Ok(PatchDomain { anchor, shape: PatchShape::Points(points) })
    }

    pub fn anchor(&self) -> (i64, i64) {
        self.anchor
    }

    pub fn shape(&self) -> &PatchShape {
        &self.shape
    }

    /// Side length for square domains.
    pub fn side(&self) -> Option<usize> {
        match self.shape {
            PatchShape::Square(p) => Some(p),
            PatchShape::Points(_) => None,
        }
    }

    pub fn len(&self) -> usize {
        match &self.shape {
            PatchShape::Square(p) => p * p,
            PatchShape::Points(pts) => pts.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Same shape at another anchor.
    pub fn moved_to(&self, x: i64, y: i64) -> PatchDomain {
        PatchDomain { anchor: (x, y), shape: self.shape.clone() }
    }

    /// Shape coordinates relative to the anchor, in raster order.
    pub fn relative_coords(&self) -> Vec<(i64, i64)> {
        match &self.shape {
            PatchShape::Square(p) => {
                let p = *p as i64;
                (0..p).flat_map(|y| (0..p).map(move |x| (x, y))).collect()
            }
            PatchShape::Points(pts) => pts.clone(),
        }
    }

    /// Absolute coordinates in raster order.
    pub fn coords(&self) -> Vec<(i64, i64)> {
        let (ax, ay) = self.anchor;
        self.relative_coords().into_iter().map(|(x, y)| (ax + x, ay + y)).collect()
    }
}

/// A real value for every offset of a `width x height` domain.
#[derive(Clone, Debug, PartialEq)]
pub struct OffsetMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl OffsetMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), width * height, "offset map size mismatch");
        OffsetMap { width, height, values }
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn raw_index(&self, t: Offset) -> usize {
        let x = t.x.rem_euclid(self.width as i64) as usize;
        let y = t.y.rem_euclid(self.height as i64) as usize;
        y * self.width + x
    }

    /// Value at any offset, reduced modulo the domain.
    pub fn get(&self, t: Offset) -> f64 {
        self.values[self.raw_index(t)]
    }

    pub fn set(&mut self, t: Offset, value: f64) {
        let i = self.raw_index(t);
        self.values[i] = value;
    }

    /// Centered representative of the raw offset stored at `index`.
    pub fn centered(&self, index: usize) -> Offset {
        centered_offset(index, self.width, self.height)
    }

    /// Raw offset stored at `index`.
    pub fn raw_offset(&self, index: usize) -> Offset {
        Offset::new((index % self.width) as i64, (index / self.width) as i64)
    }

    pub fn to_image(&self) -> Image {
        Image::new(self.width, self.height, self.values.clone()).expect("offset map is finite")
    }
}

/// Representative of a raw offset index in `[-w/2, w/2) x [-h/2, h/2)`.
pub fn centered_offset(index: usize, width: usize, height: usize) -> Offset {
    let center = |v: usize, m: usize| -> i64 {
        if v >= m.div_ceil(2) {
            v as i64 - m as i64
        } else {
            v as i64
        }
    };
    Offset::new(center(index % width, width), center(index / width, height))
}

/// Raster-ordered patch values read from the periodic extension.
pub fn extract_patch(u: &Image, omega: &PatchDomain) -> Vec<f64> {
    omega.coords().into_iter().map(|(x, y)| u.at(x, y)).collect()
}

/// Squared distance between the patch at `ω` and the patch at `ω + t`.
pub fn auto_similarity(u: &Image, t: Offset, omega: &PatchDomain) -> f64 {
    omega
        .coords()
        .into_iter()
        .map(|(x, y)| {
            let d = u.at(x + t.x, y + t.y) - u.at(x, y);
            d * d
        })
        .sum()
}

/// Auto-similarity for every offset by direct summation, `O(|Ω| |ω|)`.
pub fn as_map_direct(u: &Image, omega: &PatchDomain) -> OffsetMap {
    let (w, h) = u.dims();
    let coords = omega.coords();
    let values = (0..w * h)
        .map(|i| {
            let t = Offset::new((i % w) as i64, (i / w) as i64);
            coords
                .iter()
                .map(|&(x, y)| {
                    let d = u.at(x + t.x, y + t.y) - u.at(x, y);
                    d * d
                })
                .sum()
        })
        .collect();
    OffsetMap::new(w, h, values)
}

/// Auto-similarity for every offset via periodic cross-correlations.
///
/// Expands `AS(t) = Σ u(x+t)² − 2 Σ u(x) u(x+t) + Σ u(x)²` over `x ∈ ω`. The
/// patch enters as a multiplicity map on the torus, so domains larger than the
/// image or wrapping across its border are handled exactly. Values below
/// `1e-9 ‖u‖²` are clamped to zero.
pub fn as_map(u: &Image, omega: &PatchDomain) -> OffsetMap {
    let (w, h) = u.dims();
    let mut weight = vec![0.0; w * h];
    for (x, y) in omega.coords() {
        let xi = x.rem_euclid(w as i64) as usize;
        let yi = y.rem_euclid(h as i64) as usize;
        weight[yi * w + xi] += 1.0;
    }
    let px = u.pixels();
    let sq: Vec<f64> = px.iter().map(|v| v * v).collect();
    let weighted: Vec<f64> = weight.iter().zip(px).map(|(a, b)| a * b).collect();
    let shifted_energy = fft::cross_correlate(&weight, &sq, w, h);
    let cross = fft::cross_correlate(&weighted, px, w, h);
    let base: f64 = weight.iter().zip(&sq).map(|(a, b)| a * b).sum();
    let floor = 1e-9 * u.energy();
    let mut values: Vec<f64> = shifted_energy
        .iter()
        .zip(&cross)
        .map(|(e, c)| {
            let v = e - 2.0 * c + base;
            if v < floor {
                0.0
            } else {
                v
            }
        })
        .collect();
    values[0] = 0.0;
    OffsetMap::new(w, h, values)
}

/// Periodic autocorrelation `Γ_f(z) = Σ_y f(y) f(y − z)`.
pub fn autocorrelation(f: &Image) -> OffsetMap {
    let (w, h) = f.dims();
    let mut spectrum = fft::forward(f.pixels(), w, h);
    for c in spectrum.iter_mut() {
        *c = rustfft::num_complex::Complex::new(c.norm_sqr(), 0.0);
    }
    fft::fft2(&mut spectrum, w, h, true);
    let raw: Vec<f64> = spectrum.iter().map(|c| c.re).collect();
    // Symmetrize: Γ(z) = Γ(−z) holds exactly, FFT round-off does not.
    let mut values = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let nx = (w - x) % w;
            let ny = (h - y) % h;
            values[y * w + x] = 0.5 * (raw[y * w + x] + raw[ny * w + nx]);
        }
    }
    values[0] = f.energy();
    OffsetMap::new(w, h, values)
}

/// Direct `O(|Ω|²)` autocorrelation; reference path for small images.
pub fn autocorrelation_direct(f: &Image) -> OffsetMap {
    let (w, h) = f.dims();
    let values = (0..w * h)
        .map(|i| {
            let (zx, zy) = ((i % w) as i64, (i / w) as i64);
            let mut s = 0.0;
            for y in 0..h as i64 {
                for x in 0..w as i64 {
                    s += f.at(x, y) * f.at(x - zx, y - zy);
                }
            }
            s
        })
        .collect();
    OffsetMap::new(w, h, values)
}

/// ω-inertia of a quantized image: `Σ_{i,j} (i−j)² #{z ∈ ω : u(z)=i, u(z+t)=j}`.
///
/// Built from the co-occurrence counts, independently of [`auto_similarity`].
pub fn inertia(u: &Image, t: Offset, omega: &PatchDomain, levels: u32) -> Result<u64> {
    let n = levels as usize + 1;
    let level_of = |x: i64, y: i64| -> Result<usize> {
        let v = u.at(x, y);
        if v.fract() != 0.0 || v < 0.0 || v > levels as f64 {
            let xi = x.rem_euclid(u.width() as i64) as usize;
            let yi = y.rem_euclid(u.height() as i64) as usize;
            return Err(Error::NotQuantized { x: xi, y: yi, value: v, levels });
        }
        Ok(v as usize)
    };
    let mut cooc = vec![0u64; n * n];
    for (x, y) in omega.coords() {
        let i = level_of(x, y)?;
        let j = level_of(x + t.x, y + t.y)?;
        cooc[i * n + j] += 1;
    }
    let mut total = 0u64;
    for i in 0..n {
        for j in 0..n {
            let d = i.abs_diff(j) as u64;
            total += d * d * cooc[i * n + j];
        }
    }
    Ok(total)
}

/// Five-point Laplacian with periodic boundaries, scaled by 1/4.
pub fn laplacian(u: &Image) -> Image {
    Image::from_fn(u.width(), u.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        (u.at(x + 1, y) + u.at(x - 1, y) + u.at(x, y + 1) + u.at(x, y - 1) - 4.0 * u.at(x, y))
            / 4.0
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn rejects_bad_images() {
        assert!(Image::new(0, 3, vec![]).is_err());
        assert!(Image::new(2, 2, vec![1.0; 3]).is_err());
        assert!(Image::new(1, 1, vec![f64::NAN]).is_err());
    }

    #[test]
    fn periodic_access() {
        let u = Image::new(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(u.at(2, 2), 1.0);
        assert_eq!(u.at(-1, 0), 2.0);
        assert_eq!(u.at(3, -1), 4.0);
        let omega = PatchDomain::square(2, 2, 1).unwrap();
        assert_eq!(extract_patch(&u, &omega), vec![1.0]);
    }

    #[test]
    fn constant_patch() {
        let u = Image::constant(5, 4, 3.5);
        let omega = PatchDomain::square(3, 1, 3).unwrap();
        assert_eq!(extract_patch(&u, &omega), vec![3.5; 9]);
    }

    #[test]
    fn patch_matches_modular_loop() {
        let u = random_image(5, 5, 1);
        let omega = PatchDomain::square(4, 4, 3).unwrap();
        let mut expected = Vec::new();
        for dy in 0..3usize {
            for dx in 0..3usize {
                expected.push(u.get((4 + dx) % 5, (4 + dy) % 5));
            }
        }
        assert_eq!(extract_patch(&u, &omega), expected);
    }

    #[test]
    fn empty_and_duplicate_domains_are_rejected() {
        assert!(matches!(PatchDomain::square(0, 0, 0), Err(Error::EmptyPatch)));
        assert!(matches!(PatchDomain::from_points((0, 0), vec![]), Err(Error::EmptyPatch)));
        assert!(matches!(
            PatchDomain::from_points((0, 0), vec![(1, 1), (0, 0), (1, 1)]),
            Err(Error::DuplicatePatchCoordinate(1, 1))
        ));
    }

    #[test]
    fn points_domain_uses_raster_order() {
        let omega = PatchDomain::from_points((1, 1), vec![(1, 1), (0, 1), (2, 0)]).unwrap();
        assert_eq!(omega.coords(), vec![(3, 1), (1, 2), (2, 2)]);
    }

    #[test]
    fn auto_similarity_basics() {
        let u = random_image(8, 8, 2);
        let omega = PatchDomain::square(0, 0, 4).unwrap();
        assert_eq!(auto_similarity(&u, Offset::ZERO, &omega), 0.0);
        let t = Offset::new(3, 1);
        let mut expected = 0.0;
        for y in 0..4i64 {
            for x in 0..4i64 {
                let d = u.at(x + 3, y + 1) - u.at(x, y);
                expected += d * d;
            }
        }
        assert!((auto_similarity(&u, t, &omega) - expected).abs() < 1e-12);
        // (t, ω) -> (−t, ω + t)
        let shifted = omega.moved_to(3, 1);
        assert!((auto_similarity(&u, -t, &shifted) - expected).abs() < 1e-12);
    }

    #[test]
    fn exact_repetition_gives_zero() {
        let base = random_image(3, 5, 3);
        let u = Image::from_fn(9, 5, |x, y| base.get(x % 3, y));
        let omega = PatchDomain::square(1, 2, 3).unwrap();
        assert_eq!(auto_similarity(&u, Offset::new(3, 0), &omega), 0.0);
        assert_eq!(auto_similarity(&u, Offset::new(-6, 5), &omega), 0.0);
    }

    #[test]
    fn fft_map_matches_naive() {
        let u = random_image(16, 16, 4);
        let omega = PatchDomain::square(5, 9, 4).unwrap();
        let fast = as_map(&u, &omega);
        for i in 0..256 {
            let t = fast.raw_offset(i);
            let naive = auto_similarity(&u, t, &omega);
            let tol = 1e-8 * naive.max(1.0);
            assert!((fast.values()[i] - naive).abs() <= tol, "offset {t:?}");
        }
        assert_eq!(fast.values()[0], 0.0);
    }

    #[test]
    fn fft_map_handles_rectangles_and_point_domains() {
        let u = random_image(12, 7, 5);
        let omega =
            PatchDomain::from_points((10, 5), vec![(0, 0), (3, 1), (1, 4), (2, 2)]).unwrap();
        let fast = as_map(&u, &omega);
        let naive = as_map_direct(&u, &omega);
        for (a, b) in fast.values().iter().zip(naive.values()) {
            assert!((a - b).abs() <= 1e-8 * b.max(1.0));
        }
    }

    #[test]
    fn stripes_repeat_every_period() {
        let u = Image::from_fn(16, 16, |_, y| [0.0, 3.0, 7.0, 1.0][y % 4]);
        let omega = PatchDomain::square(0, 0, 4).unwrap();
        let map = as_map(&u, &omega);
        for k in 0..4 {
            assert_eq!(map.get(Offset::new(0, 4 * k)), 0.0);
        }
        assert!(map.get(Offset::new(0, 1)) > 0.0);
    }

    #[test]
    fn autocorrelation_examples() {
        let mut delta = Image::zeros(6, 6);
        delta.set(0, 0, 1.0);
        let g = autocorrelation(&delta);
        for (i, v) in g.values().iter().enumerate() {
            let expected = if i == 0 { 1.0 } else { 0.0 };
            assert!((v - expected).abs() < 1e-12);
        }
        let c = autocorrelation(&Image::constant(5, 5, 2.0));
        for v in c.values() {
            assert!((v - 100.0).abs() < 1e-9);
        }
        let f = random_image(6, 6, 6);
        let fast = autocorrelation(&f);
        let slow = autocorrelation_direct(&f);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let i = rng.random_range(0..36);
            assert!((fast.values()[i] - slow.values()[i]).abs() < 1e-10);
        }
        assert!((fast.get(Offset::ZERO) - f.energy()).abs() < 1e-12);
        for i in 0..36 {
            let t = fast.raw_offset(i);
            assert!((fast.get(t) - fast.get(-t)).abs() < 1e-14);
        }
    }

    #[test]
    fn centered_representatives() {
        assert_eq!(centered_offset(0, 8, 7), Offset::new(0, 0));
        assert_eq!(centered_offset(3, 8, 7), Offset::new(3, 0));
        assert_eq!(centered_offset(4, 8, 7), Offset::new(-4, 0));
        assert_eq!(centered_offset(7, 8, 7), Offset::new(-1, 0));
        assert_eq!(centered_offset(3 * 8, 8, 7), Offset::new(0, 3));
        assert_eq!(centered_offset(4 * 8, 8, 7), Offset::new(0, -3));
    }

    #[test]
    fn inertia_on_binary_image() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = Image::from_fn(8, 8, |_, _| rng.random_range(0..=1) as f64);
        for tx in -3..4 {
            for ty in -3..4 {
                let t = Offset::new(tx, ty);
                let omega = PatchDomain::square(tx.abs(), 2, 3).unwrap();
                let i = inertia(&u, t, &omega, 1).unwrap();
                assert_eq!(i as f64, auto_similarity(&u, t, &omega));
            }
        }
    }

    #[test]
    fn inertia_rejects_unquantized() {
        let u = Image::new(2, 1, vec![0.5, 1.0]).unwrap();
        let omega = PatchDomain::square(0, 0, 1).unwrap();
        assert!(matches!(
            inertia(&u, Offset::new(1, 0), &omega, 3),
            Err(Error::NotQuantized { .. })
        ));
        let v = Image::new(2, 1, vec![0.0, 9.0]).unwrap();
        assert!(inertia(&v, Offset::new(1, 0), &omega, 3).is_err());
        assert_eq!(inertia(&Image::constant(4, 4, 2.0), Offset::new(1, 3), &omega, 3).unwrap(), 0);
    }

    #[test]
    fn laplacian_stencil() {
        let z = laplacian(&Image::constant(4, 6, 9.0));
        assert!(z.pixels().iter().all(|&v| v == 0.0));
        let mut delta = Image::zeros(5, 5);
        delta.set(0, 0, 1.0);
        let l = laplacian(&delta);
        assert_eq!(l.get(0, 0), -1.0);
        for (x, y) in [(1, 0), (4, 0), (0, 1), (0, 4)] {
            assert_eq!(l.get(x, y), 0.25);
        }
        assert_eq!(l.get(2, 2), 0.0);
        let r = laplacian(&random_image(7, 9, 9));
        assert!(r.pixels().iter().sum::<f64>().abs() < 1e-10);
    }

    #[test]
    fn laplacian_commutes_with_translation() {
        let u = random_image(6, 5, 10);
        let t = Offset::new(2, -3);
        let a = laplacian(&u.translate(t));
        let b = laplacian(&u).translate(t);
        for (x, y) in a.pixels().iter().zip(b.pixels()) {
            assert!((x - y).abs() < 1e-14);
        }
    }
}
