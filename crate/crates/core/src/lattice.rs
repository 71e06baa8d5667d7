//! Lattice extraction from detection maps.
//!
//! Detected offsets are grouped into 8-connected components, each reduced to
//! one vertex, and vertices are linked to their nearest neighbors. The edge
//! vectors `e` are then explained as integer combinations `m_e b₁ + n_e b₂`
//! of a basis `B` by minimizing
//! `q(B, M | E) = Σ_e ‖m_e b₁ + n_e b₂ − e‖² + δ_B ‖B‖² + δ_M ‖M‖²`
//! alternately in `M` (rounded) and `B` (exact).

use std::collections::{BTreeSet, VecDeque};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::MicrotextureModel;
use crate::detect::{detect_with_laws, DetectionLaws, OffsetMask};
use crate::error::{Error, Result};
use crate::grid::{laplacian, Image, Offset, OffsetMap, PatchDomain};
use crate::seed::stream_rng;

const NEIGHBORS: usize = 4;
const DEGENERATE_DET: f64 = 1e-9;

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// `v_j − v_i` or its opposite, whichever is lexicographically nonnegative.
    pub vector: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionGraph {
    /// Centered offsets.
    pub vertices: Vec<Offset>,
    pub edges: Vec<Edge>,
    /// Number of 8-connected detection components, origin component excluded.
    pub n_components: usize,
}

fn canonical(v: [f64; 2]) -> [f64; 2] {
    if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

impl DetectionGraph {
    pub fn from_vertices(vertices: Vec<Offset>, n_components: usize) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::GraphTooSmall(vertices.len()));
        }
        let points: Vec<[f64; 2]> = vertices.iter().map(|v| [v.x as f64, v.y as f64]).collect();
        Ok(DetectionGraph { edges: nearest_neighbor_edges(&points), vertices, n_components })
    }

    pub fn edge_vectors(&self) -> Vec<[f64; 2]> {
        self.edges.iter().map(|e| e.vector).collect()
    }
}

/// Links every point to its (up to) four nearest neighbors, ties going to the
/// lower index. Undirected duplicates are merged; edges come out sorted by `(i, j)`.
pub fn nearest_neighbor_edges(points: &[[f64; 2]]) -> Vec<Edge> {
    let mut pairs = BTreeSet::new();
    for (i, v) in points.iter().enumerate() {
        let mut others: Vec<(f64, usize)> = points
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(j, u)| ((u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in others.iter().take(NEIGHBORS) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }
    pairs
        .into_iter()
        .map(|(i, j)| Edge {
            i,
            j,
            vector: canonical([points[j][0] - points[i][0], points[j][1] - points[i][1]]),
        })
        .collect()
}

/// Graph of a detection map: one vertex per 8-connected component of
/// detected offsets (on the torus), placed at the component's AS minimum.
///
/// The origin is seeded into the labeling so that detections touching it form
/// the origin component, which is discarded.
pub fn build_graph(d_map: &OffsetMap, as_map: &OffsetMap) -> Result<DetectionGraph> {
    let (w, h) = (d_map.width(), d_map.height());
    if (as_map.width(), as_map.height()) != (w, h) {
        return Err(Error::DimensionMismatch("detection and AS maps differ in size".into()));
    }
    let active = |i: usize| i == 0 || d_map.values()[i] != 0.0;
    let mut label = vec![usize::MAX; w * h];
    let mut vertices = Vec::new();
    let mut n_components = 0;
    for start in 0..w * h {
        if !active(start) || label[start] != usize::MAX {
            continue;
        }
        label[start] = start;
        let mut queue = VecDeque::from([start]);
        let mut members = Vec::new();
        while let Some(k) = queue.pop_front() {
            members.push(k);
            let (x, y) = ((k % w) as i64, (k / w) as i64);
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let nx = (x + dx).rem_euclid(w as i64) as usize;
                    let ny = (y + dy).rem_euclid(h as i64) as usize;
                    let n = ny * w + nx;
                    if active(n) && label[n] == usize::MAX {
                        label[n] = start;
                        queue.push_back(n);
                    }
                }
            }
        }
        if start == 0 {
            continue;
        }
        n_components += 1;
        let best = members
            .iter()
            .map(|&k| (as_map.values()[k], d_map.centered(k)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("component is nonempty");
        vertices.push(best.1);
    }
    DetectionGraph::from_vertices(vertices, n_components)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Basis {
    pub b1: [f64; 2],
    pub b2: [f64; 2],
}

impl Basis {
    pub fn det(&self) -> f64 {
        self.b1[0] * self.b2[1] - self.b1[1] * self.b2[0]
    }

    pub fn norm2(&self) -> f64 {
        self.b1[0].powi(2) + self.b1[1].powi(2) + self.b2[0].powi(2) + self.b2[1].powi(2)
    }

    /// `m b₁ + n b₂`.
    pub fn combine(&self, m: [i64; 2]) -> [f64; 2] {
        let (a, b) = (m[0] as f64, m[1] as f64);
        [a * self.b1[0] + b * self.b2[0], a * self.b1[1] + b * self.b2[1]]
    }
}

pub fn q_energy(b: &Basis, m: &[[i64; 2]], e: &[[f64; 2]], delta_b: f64, delta_m: f64) -> f64 {
    let fit: f64 = m
        .iter()
        .zip(e)
        .map(|(&me, ev)| {
            let p = b.combine(me);
            (p[0] - ev[0]).powi(2) + (p[1] - ev[1]).powi(2)
        })
        .sum();
    let reg_m: f64 = m.iter().map(|v| (v[0] * v[0] + v[1] * v[1]) as f64).sum();
    fit + delta_b * b.norm2() + delta_m * reg_m
}

/// Inverse of the symmetric matrix `[[a, c], [c, d]]`.
fn inverse_2x2(a: f64, c: f64, d: f64, what: &str) -> Result<[f64; 3]> {
    let det = a * d - c * c;
    let scale = (a.abs() + d.abs()).max(f64::MIN_POSITIVE);
    if !(det.abs() > 1e-14 * scale * scale) {
        return Err(Error::Singular(format!("{what} is singular (det {det})")));
    }
    Ok([d / det, -c / det, a / det])
}

/// Real minimizer in `M` at fixed `B`: `(Gram(B) + δ_M I)⁻¹ (⟨e, b₁⟩, ⟨e, b₂⟩)` per edge.
pub fn update_m_real(b: &Basis, e: &[[f64; 2]], delta_m: f64) -> Result<Vec<[f64; 2]>> {
    let dot = |u: [f64; 2], v: [f64; 2]| u[0] * v[0] + u[1] * v[1];
    let inv = inverse_2x2(dot(b.b1, b.b1) + delta_m, dot(b.b1, b.b2), dot(b.b2, b.b2) + delta_m, "Lambda_B")?;
    Ok(e.iter()
        .map(|&ev| {
            let (r1, r2) = (dot(ev, b.b1), dot(ev, b.b2));
            [inv[0] * r1 + inv[1] * r2, inv[1] * r1 + inv[2] * r2]
        })
        .collect())
}

/// Real minimizer and its rounding (half away from zero).
pub fn update_m(b: &Basis, e: &[[f64; 2]], delta_m: f64) -> Result<(Vec<[f64; 2]>, Vec<[i64; 2]>)> {
    let real = update_m_real(b, e, delta_m)?;
    let rounded = real.iter().map(|v| [v[0].round() as i64, v[1].round() as i64]).collect();
    Ok((real, rounded))
}

/// Exact minimizer in `B` at fixed `M`: `(Gram(M) + δ_B I)⁻¹ (Σ m_e e, Σ n_e e)`.
pub fn update_b(m: &[[i64; 2]], e: &[[f64; 2]], delta_b: f64) -> Result<Basis> {
    let (mut smm, mut smn, mut snn) = (0.0, 0.0, 0.0);
    let (mut rm, mut rn) = ([0.0; 2], [0.0; 2]);
    for (mv, ev) in m.iter().zip(e) {
        let (a, b) = (mv[0] as f64, mv[1] as f64);
        smm += a * a;
        smn += a * b;
        snn += b * b;
        for k in 0..2 {
            rm[k] += a * ev[k];
            rn[k] += b * ev[k];
        }
    }
    let inv = inverse_2x2(smm + delta_b, smn, snn + delta_b, "Lambda_M")?;
    let mut basis = Basis { b1: [0.0; 2], b2: [0.0; 2] };
    for k in 0..2 {
        basis.b1[k] = inv[0] * rm[k] + inv[1] * rn[k];
        basis.b2[k] = inv[1] * rm[k] + inv[2] * rn[k];
    }
    Ok(basis)
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Init {
    /// `(e_med, rot90(e_med))` with `e_med` an edge of median norm.
    Median,
    /// Same construction from a uniformly drawn edge.
    Random(u64),
    Given(Basis),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeFit {
    pub basis: Basis,
    pub m: Vec<[i64; 2]>,
    pub sigma2: f64,
    /// `q` after initialization and after every iteration.
    pub q_trajectory: Vec<f64>,
    /// Log-posterior at the profile optimum `σ² = q / (4(|E| + 1))`.
    pub log_posterior: Vec<f64>,
    /// Iteration at which `(B, M)` first repeated exactly.
    pub converged_at: Option<usize>,
    pub det: f64,
    pub degenerate: bool,
}

fn quarter_turn(e: [f64; 2]) -> Basis {
    Basis { b1: e, b2: [-e[1], e[0]] }
}

fn profile_log_posterior(q: f64, n_edges: usize) -> f64 {
    let k = 2.0 * (n_edges as f64 + 1.0);
    let s2 = q / (2.0 * k);
    if s2 > 0.0 {
        -k * s2.ln() - k
    } else {
        f64::INFINITY
    }
}

pub fn alternate_minimization(
    e: &[[f64; 2]],
    delta_b: f64,
    delta_m: f64,
    n_it: usize,
    init: Init,
) -> Result<LatticeFit> {
    if e.is_empty() {
        return Err(Error::InvalidParameter("lattice fitting needs at least one edge".into()));
    }
    if n_it == 0 {
        return Err(Error::InvalidParameter("iteration count must be positive".into()));
    }
    if !(delta_b >= 0.0 && delta_m >= 0.0) {
        return Err(Error::InvalidParameter("regularization weights must be nonnegative".into()));
    }
    let norm2 = |v: &[f64; 2]| v[0] * v[0] + v[1] * v[1];
    let mut basis = match init {
        Init::Median => {
            let mut order: Vec<usize> = (0..e.len()).collect();
            order.sort_by(|&a, &b| norm2(&e[a]).total_cmp(&norm2(&e[b])).then(a.cmp(&b)));
            quarter_turn(e[order[(order.len() - 1) / 2]])
        }
        Init::Random(seed) => {
            let mut rng = stream_rng(seed, 0);
            quarter_turn(e[rng.random_range(0..e.len())])
        }
        Init::Given(b) => b,
    };
    let mut m = vec![[0i64; 2]; e.len()];
    let mut q = q_energy(&basis, &m, e, delta_b, delta_m);
    let mut q_trajectory = vec![q];
    let mut log_posterior = vec![profile_log_posterior(q, e.len())];
    let mut converged_at = None;
    for it in 1..=n_it {
        let (_, rounded) = update_m(&basis, e, delta_m)?;
        let mut next_m = m.clone();
        if q_energy(&basis, &rounded, e, delta_b, delta_m) < q_energy(&basis, &m, e, delta_b, delta_m) {
            next_m = rounded;
        }
        let next_b = update_b(&next_m, e, delta_b)?;
        let stationary = next_b == basis && next_m == m;
        basis = next_b;
        m = next_m;
        q = q_energy(&basis, &m, e, delta_b, delta_m);
        q_trajectory.push(q);
        log_posterior.push(profile_log_posterior(q, e.len()));
        if stationary {
            converged_at = Some(it);
            break;
        }
    }
    let sigma2 = q / (4.0 * (e.len() as f64 + 1.0));
    let det = basis.det();
    Ok(LatticeFit {
        basis,
        m,
        sigma2,
        q_trajectory,
        log_posterior,
        converged_at,
        det,
        degenerate: det.abs() < DEGENERATE_DET || sigma2 == 0.0,
    })
}

/// `π σ² / (N_C |det B|)`; `+∞` for degenerate fits.
pub fn c_per(fit: &LatticeFit, n_components: usize) -> Result<f64> {
    if n_components == 0 {
        return Err(Error::InvalidParameter("c_per needs at least one component".into()));
    }
    if fit.degenerate {
        return Ok(f64::INFINITY);
    }
    Ok(std::f64::consts::PI * fit.sigma2 / (n_components as f64 * fit.det.abs()))
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preprocess {
    None,
    Laplacian,
}

impl Preprocess {
    pub fn apply(&self, u: &Image) -> Image {
        match self {
            Preprocess::None => u.clone(),
            Preprocess::Laplacian => laplacian(u),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankParams {
    pub anchors: usize,
    pub patch: usize,
    pub nfa_max: f64,
    pub delta_m: f64,
    pub delta_b: f64,
    pub iterations: usize,
    pub seed: u64,
    pub mask: OffsetMask,
    pub preprocess: Preprocess,
}

impl Default for RankParams {
    fn default() -> Self {
        RankParams {
            anchors: 150,
            patch: 20,
            nfa_max: 1.0,
            delta_m: 10.0,
            delta_b: 1e-2,
            iterations: 10,
            seed: 0,
            mask: OffsetMask::All,
            preprocess: Preprocess::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageScore {
    pub index: usize,
    /// `None` when no anchor produced a fit.
    pub median_c_per: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    pub c_per_values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    /// Indices, most periodic first; unranked images last in index order.
    pub order: Vec<usize>,
    pub scores: Vec<ImageScore>,
}

fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// `c_per` of one patch: detection, graph, median-initialized fit.
/// `None` when the detection graph is too small or the fit is singular.
pub fn patch_c_per(
    u: &Image,
    omega: &PatchDomain,
    model: &MicrotextureModel,
    laws: &DetectionLaws,
    params: &RankParams,
) -> Result<Option<f64>> {
    let det = detect_with_laws(u, omega, model, laws, params.nfa_max)?;
    let graph = match build_graph(&det.d_map, &det.as_map) {
        Ok(g) => g,
        Err(Error::GraphTooSmall(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    match alternate_minimization(&graph.edge_vectors(), params.delta_b, params.delta_m, params.iterations, Init::Median) {
        Ok(fit) => Ok(Some(c_per(&fit, graph.n_components)?)),
        Err(Error::Singular(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Scores one image from `params.anchors` seeded patch positions.
///
/// Anchor `k` depends only on `(seed, k)`, so a score does not depend on the
/// position of the image in the input set.
pub fn score_image(u: &Image, index: usize, params: &RankParams) -> Result<ImageScore> {
    let p = params.patch;
    if u.width() < p || u.height() < p {
        return Err(Error::ImageSmallerThanPatch { width: u.width(), height: u.height(), patch: p });
    }
    let v = params.preprocess.apply(u);
    let model = MicrotextureModel::from_exemplar(&v);
    let shape = PatchDomain::square(0, 0, p)?;
    let laws = DetectionLaws::compute(&model, &shape, &params.mask)?;
    let results: Vec<Option<f64>> = (0..params.anchors)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(params.seed, k as u64);
            let ax = rng.random_range(0..=(u.width() - p)) as i64;
            let ay = rng.random_range(0..=(u.height() - p)) as i64;
            patch_c_per(&v, &shape.moved_to(ax, ay), &model, &laws, params)
        })
        .collect::<Result<_>>()?;
    let c_per_values: Vec<f64> = results.iter().flatten().copied().collect();
    Ok(ImageScore {
        index,
        median_c_per: median(&c_per_values),
        successes: c_per_values.len(),
        failures: results.len() - c_per_values.len(),
        c_per_values,
    })
}

/// Ranks images by median `c_per`, ascending, ties broken by input index.
pub fn rank_textures(images: &[Image], params: &RankParams) -> Result<Ranking> {
    let scores: Vec<ImageScore> =
        images.iter().enumerate().map(|(i, u)| score_image(u, i, params)).collect::<Result<_>>()?;
    Ok(Ranking { order: ranking_order(&scores), scores })
}

pub fn ranking_order(scores: &[ImageScore]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match (scores[a].median_c_per, scores[b].median_c_per) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.cmp(&b)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    order.into_iter().map(|k| scores[k].index).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_with(w: usize, h: usize, points: &[(i64, i64)]) -> OffsetMap {
        let mut d = OffsetMap::filled(w, h, 0.0);
        for &(x, y) in points {
            d.set(Offset::new(x, y), 1.0);
        }
        d
    }

    #[test]
    fn singleton_components() {
        let d = map_with(64, 64, &[(10, 0), (20, 0), (0, 15)]);
        let s = OffsetMap::filled(64, 64, 1.0);
        let g = build_graph(&d, &s).unwrap();
        assert_eq!(g.n_components, 3);
        assert_eq!(g.vertices.len(), 3);
        assert_eq!(g.edges.len(), 3);
        for e in &g.edges {
            assert!(e.vector[0] > 0.0 || (e.vector[0] == 0.0 && e.vector[1] >= 0.0));
        }
    }

    #[test]
    fn blob_reduces_to_its_minimum() {
        let pts = [(10, 10), (11, 10), (12, 11), (11, 12), (10, 11)];
        let mut d = map_with(32, 32, &pts);
        d.set(Offset::new(-8, -8), 1.0);
        let mut s = OffsetMap::filled(32, 32, 50.0);
        for (k, &(x, y)) in pts.iter().enumerate() {
            s.set(Offset::new(x, y), 10.0 - k as f64);
        }
        let g = build_graph(&d, &s).unwrap();
        assert_eq!(g.n_components, 2);
        assert!(g.vertices.contains(&Offset::new(10, 11)));
    }

    #[test]
    fn origin_component_is_dropped() {
        let d = map_with(32, 32, &[(1, 0), (-1, -1), (8, 0), (0, 8)]);
        let s = OffsetMap::filled(32, 32, 1.0);
        let g = build_graph(&d, &s).unwrap();
        assert_eq!(g.n_components, 2);
        assert!(!g.vertices.contains(&Offset::new(1, 0)));
        let lonely = map_with(32, 32, &[(5, 5)]);
        assert!(matches!(build_graph(&lonely, &s), Err(Error::GraphTooSmall(1))));
    }

    #[test]
    fn wrap_around_components_merge() {
        // Raw x = 31 and x = 0 are torus neighbors: (15,5) and (-16,5) touch.
        let d = map_with(32, 32, &[(15, 5), (-16, 5), (4, -9)]);
        let g = build_graph(&d, &OffsetMap::filled(32, 32, 0.0)).unwrap();
        assert_eq!(g.n_components, 2);
    }

    #[test]
    fn energy_examples() {
        let e = [[3.0, 4.0], [1.0, -2.0]];
        let b = Basis { b1: [1.0, 0.0], b2: [0.0, 1.0] };
        assert_eq!(q_energy(&b, &[[0, 0], [0, 0]], &e, 0.0, 0.0), 30.0);
        let exact = Basis { b1: [2.0, 1.0], b2: [-1.0, 3.0] };
        let m = [[1, -1], [2, 1]];
        let e2: Vec<[f64; 2]> = m.iter().map(|&v| exact.combine(v)).collect();
        assert_eq!(q_energy(&exact, &m, &e2, 0.0, 0.0), 0.0);
    }

    #[test]
    fn update_m_orthonormal() {
        let b = Basis { b1: [1.0, 0.0], b2: [0.0, 1.0] };
        let (real, rounded) = update_m(&b, &[[2.1, -0.2]], 0.0).unwrap();
        assert!((real[0][0] - 2.1).abs() < 1e-12 && (real[0][1] + 0.2).abs() < 1e-12);
        assert_eq!(rounded[0], [2, 0]);
        let (tiny, _) = update_m(&b, &[[2.1, -0.2]], 1e12).unwrap();
        assert!(tiny[0][0].abs() < 1e-10);
        assert_eq!((2.5f64).round(), 3.0);
        assert_eq!((-2.5f64).round(), -3.0);
    }

    #[test]
    fn update_b_decoupled() {
        let e = [[10.0, 1.0], [12.0, -1.0], [11.0, 0.0]];
        let m = [[1, 0]; 3];
        let b = update_b(&m, &e, 0.0);
        assert!(matches!(b, Err(Error::Singular(_))));
        let b = update_b(&m, &e, 1e-12).unwrap();
        assert!((b.b1[0] - 11.0).abs() < 1e-9 && b.b1[1].abs() < 1e-9);
        assert_eq!(b.b2, [0.0, 0.0]);
        let big = update_b(&m, &e, 1e12).unwrap();
        assert!(big.norm2() < 1e-15);
    }

    #[test]
    fn single_edge_hand_computation() {
        let fit = alternate_minimization(&[[10.0, 0.0]], 1e-2, 10.0, 1, Init::Median).unwrap();
        // B0 = ((10,0),(0,10)); M~ = 100/110 rounds to 1, accepted since q drops from 102 to 12.
        assert_eq!(fit.m, vec![[1, 0]]);
        assert!((fit.q_trajectory[0] - (100.0 + 1e-2 * 200.0)).abs() < 1e-12);
        let basis0 = quarter_turn([10.0, 0.0]);
        let (real, _) = update_m(&basis0, &[[10.0, 0.0]], 10.0).unwrap();
        assert!((real[0][0] - 100.0 / 110.0).abs() < 1e-12);
    }

    #[test]
    fn c_per_formula() {
        let fit = LatticeFit {
            basis: Basis { b1: [5.0, 0.0], b2: [0.0, 5.0] },
            m: vec![],
            sigma2: 1.0,
            q_trajectory: vec![],
            log_posterior: vec![],
            converged_at: None,
            det: 25.0,
            degenerate: false,
        };
        assert!((c_per(&fit, 10).unwrap() - std::f64::consts::PI / 250.0).abs() < 1e-15);
        let twice = LatticeFit { sigma2: 4.0, ..fit.clone() };
        assert!((c_per(&twice, 10).unwrap() - 4.0 * c_per(&fit, 10).unwrap()).abs() < 1e-15);
        assert_eq!(c_per(&LatticeFit { degenerate: true, ..fit.clone() }, 3).unwrap(), f64::INFINITY);
        assert!(c_per(&fit, 0).is_err());
    }

    #[test]
    fn ranking_order_puts_unranked_last() {
        let s = |index, m| ImageScore { index, median_c_per: m, successes: 0, failures: 0, c_per_values: vec![] };
        let scores = vec![s(0, None), s(1, Some(0.5)), s(2, Some(0.1)), s(3, Some(0.5))];
        assert_eq!(ranking_order(&scores), vec![2, 1, 3, 0]);
    }
}
