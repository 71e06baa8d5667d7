//! `redlab` command-line front end.
//!
//! Every subcommand reads and validates its inputs before writing anything,
//! then emits its outputs and a `manifest.json` into `--out`. Exit codes: 0 on
//! success, 2 on invalid input or parameters, 3 on numerical failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use redlab::detect::OffsetMask;
use redlab::io::{encode_pfm, encode_pgm, normalize_to_8bit, pgm_maxval, save_model, sha256_hex};
use redlab::lattice::{Init, Preprocess, RankParams};
use redlab::{
    alternate_minimization, autosim_detection, build_graph, c_per, nlmeans_threshold, psnr, rank_textures,
    DenoiseConfig, Image, MicrotextureModel, PatchDomain, ThresholdMode,
};

const MANIFEST_SCHEMA_VERSION: u32 = 1;
const INSUFFICIENT: &str = "insufficient detections";

#[derive(Parser, Debug)]
#[command(name = "redlab", version, about = "A-contrario detection of spatial redundancy in images")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (positive integer or `auto`); outputs do not depend on it.
    #[arg(long, global = true, env = "REDLAB_THREADS", default_value = "auto")]
    threads: Threads,
}

#[derive(Clone, Copy, Debug)]
enum Threads {
    Auto,
    Count(usize),
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Threads::Auto);
        }
        match s.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Threads::Count(n)),
            _ => Err(format!("expected a positive integer or `auto`, got `{s}`")),
        }
    }
}

/// Square patch given as `x,y,p` (anchor and side).
#[derive(Clone, Copy, Debug, Serialize)]
struct PatchArg {
    x: i64,
    y: i64,
    p: usize,
}

impl FromStr for PatchArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || format!("expected `x,y,p`, got `{s}`");
        if parts.len() != 3 {
            return Err(bad());
        }
        let x = parts[0].parse().map_err(|_| bad())?;
        let y = parts[1].parse().map_err(|_| bad())?;
        let p: usize = parts[2].parse().map_err(|_| bad())?;
        if p == 0 {
            return Err("patch side must be positive".into());
        }
        Ok(PatchArg { x, y, p })
    }
}

impl PatchArg {
    fn domain(&self) -> PatchDomain {
        PatchDomain::square(self.x, self.y, self.p).expect("side checked at parse time")
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModelArg {
    White,
    Exemplar,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum PreprocessArg {
    None,
    Laplacian,
}

impl From<PreprocessArg> for Preprocess {
    fn from(p: PreprocessArg) -> Self {
        match p {
            PreprocessArg::None => Preprocess::None,
            PreprocessArg::Laplacian => Preprocess::Laplacian,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum ModeArg {
    ConstantMean,
    PerOffset,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Auto-similarity detection map of one patch.
    Detect {
        input: PathBuf,
        #[arg(long)]
        patch: PatchArg,
        #[arg(long, default_value_t = 1.0)]
        nfa: f64,
        #[arg(long, value_enum, default_value = "exemplar")]
        model: ModelArg,
        /// Evaluate only offsets whose centered components are multiples of this stride.
        #[arg(long)]
        mask: Option<usize>,
    },
    /// Threshold NL-means denoising.
    Denoise {
        input: PathBuf,
        #[arg(long)]
        sigma: f64,
        #[arg(long, default_value_t = 4.41)]
        nfa: f64,
        #[arg(long, default_value_t = 8)]
        p: usize,
        #[arg(long, default_value_t = 10)]
        c: usize,
        #[arg(long, value_enum, default_value = "constant-mean")]
        mode: ModeArg,
        /// Clean reference for PSNR reporting.
        #[arg(long)]
        clean: Option<PathBuf>,
    },
    /// Lattice fit from the detection map of one patch.
    Lattice {
        input: PathBuf,
        #[arg(long)]
        patch: PatchArg,
        #[arg(long, default_value_t = 1.0)]
        nfa: f64,
        #[arg(long, value_enum, default_value = "none")]
        preprocess: PreprocessArg,
        #[arg(long = "dB", default_value_t = 1e-2)]
        delta_b: f64,
        #[arg(long = "dM", default_value_t = 10.0)]
        delta_m: f64,
        #[arg(long, default_value_t = 10)]
        iters: usize,
    },
    /// Ranks the PGM images of a directory by periodicity (median c_per).
    Rank {
        dir: PathBuf,
        #[arg(long, default_value_t = 150)]
        anchors: usize,
        #[arg(long, default_value_t = 20)]
        p: usize,
        #[arg(long, default_value_t = 1.0)]
        nfa: f64,
        #[arg(long = "dB", default_value_t = 1e-2)]
        delta_b: f64,
        #[arg(long = "dM", default_value_t = 10.0)]
        delta_m: f64,
        #[arg(long, default_value_t = 10)]
        iters: usize,
        #[arg(long, value_enum, default_value = "none")]
        preprocess: PreprocessArg,
    },
    /// Draws one sample of a microtexture model: `sample IMAGE.pgm` or `sample white MxN`.
    Sample {
        source: String,
        /// Size `MxN` (width x height) for the white-noise model.
        size: Option<String>,
    },
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<redlab::Error> for Failure {
    fn from(e: redlab::Error) -> Self {
        Failure { code: if e.is_validation() { 2 } else { 3 }, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

type CliResult<T> = Result<T, Failure>;

/// Files to write once every computation has succeeded.
struct Outputs {
    files: Vec<(String, Vec<u8>)>,
    model: Option<MicrotextureModel>,
}

impl Outputs {
    fn new() -> Self {
        Outputs { files: Vec::new(), model: None }
    }

    fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    fn add_json(&mut self, name: &str, value: &impl Serialize) -> CliResult<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.add(name, bytes);
        Ok(())
    }

    fn write(self, dir: &Path, manifest: Value) -> CliResult<()> {
        fs::create_dir_all(dir)?;
        let mut names = Vec::new();
        for (name, bytes) in &self.files {
            fs::write(dir.join(name), bytes)?;
            names.push(name.clone());
        }
        if let Some(model) = &self.model {
            let meta = save_model(model, dir, "model")?;
            names.push(meta.kernel_file);
            names.push("model.json".into());
        }
        let mut manifest = manifest;
        manifest["outputs"] = json!(names);
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        fs::write(dir.join("manifest.json"), bytes)?;
        Ok(())
    }
}

struct Input {
    path: PathBuf,
    sha256: String,
    image: Image,
    /// Output rasters derived from this input keep its bit depth.
    maxval: u16,
}

fn read_input(path: &Path) -> CliResult<Input> {
    let bytes = fs::read(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let context = |e: redlab::Error| invalid(format!("{}: {e}", path.display()));
    let image = redlab::io::decode_pgm(&bytes).map_err(context)?;
    let maxval = pgm_maxval(&bytes).map_err(context)?;
    Ok(Input { path: path.to_path_buf(), sha256: sha256_hex(&bytes), image, maxval })
}

fn manifest(command: &str, inputs: &[&Input], seed: u64, parameters: Value) -> Value {
    json!({
        "schema_version": MANIFEST_SCHEMA_VERSION,
        "tool": "redlab",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "inputs": inputs
            .iter()
            .map(|i| json!({ "path": i.path.display().to_string(), "sha256": i.sha256 }))
            .collect::<Vec<_>>(),
        "seed": seed,
        "parameters": parameters,
    })
}

/// Finite values as numbers, infinities as the strings `"inf"`/`"-inf"`.
fn real(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        Value::Null
    } else if v > 0.0 {
        json!("inf")
    } else {
        json!("-inf")
    }
}

fn model_for(kind: ModelArg, u: &Image) -> MicrotextureModel {
    match kind {
        ModelArg::White => MicrotextureModel::white_noise(u.width(), u.height()),
        ModelArg::Exemplar => MicrotextureModel::from_exemplar(u),
    }
}

fn check_nfa(nfa: f64) -> CliResult<()> {
    if nfa >= 0.0 && nfa.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("--nfa must be a nonnegative number, got {nfa}")))
    }
}

fn check_patch_fits(u: &Image, p: usize) -> CliResult<()> {
    if p > u.width() || p > u.height() {
        return Err(invalid(format!("patch side {p} exceeds the {}x{} image", u.width(), u.height())));
    }
    Ok(())
}

fn detect(common: &Common, input: &Path, patch: PatchArg, nfa: f64, model: ModelArg, mask: Option<usize>) -> CliResult<()> {
    let inp = read_input(input)?;
    check_nfa(nfa)?;
    check_patch_fits(&inp.image, patch.p)?;
    let mask = match mask {
        Some(0) => return Err(invalid("--mask stride must be positive")),
        Some(s) => OffsetMask::Stride(s),
        None => OffsetMask::All,
    };
    let bg = model_for(model, &inp.image);
    let r = autosim_detection(&inp.image, &patch.domain(), &bg, nfa, &mask)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    let mut out = Outputs::new();
    out.add("P_map.pfm", encode_pfm(&r.p_map.to_image()));
    out.add("D_map.pgm", encode_pgm(&r.d_map.to_image().map(|v| 255.0 * v), 255));
    let sidecar = json!({
        "patch": patch,
        "nfa_max": nfa,
        "model": r.model,
        "mask": mask,
        "fallback_counts": r.fallback_counts,
        "detections": r.count(),
        "detected_offsets": r.detections().iter().map(|t| [t.x, t.y]).collect::<Vec<_>>(),
        "warnings": r.warnings,
    });
    out.add_json("detect.json", &sidecar)?;
    let params = json!({ "patch": patch, "nfa": nfa, "model": model, "mask": mask });
    out.write(&common.out, manifest("detect", &[&inp], common.seed, params))
}

fn denoise(common: &Common, args: &Command) -> CliResult<()> {
    let Command::Denoise { input, sigma, nfa, p, c, mode, clean } = args else { unreachable!() };
    let inp = read_input(input)?;
    let reference = clean.as_deref().map(read_input).transpose()?;
    let cfg = DenoiseConfig {
        sigma: *sigma,
        patch: *p,
        search_radius: *c,
        nfa_max: *nfa,
        mode: match mode {
            ModeArg::ConstantMean => ThresholdMode::ConstantMean,
            ModeArg::PerOffset => ThresholdMode::PerOffset,
        },
    };
    cfg.validate()?;
    check_patch_fits(&inp.image, *p)?;
    if let Some(r) = &reference {
        if r.image.dims() != inp.image.dims() {
            return Err(invalid("--clean reference and input differ in size"));
        }
    }
    let report = nlmeans_threshold(&inp.image, &cfg)?;
    let (psnr_in, psnr_out) = match &reference {
        Some(r) => (Some(psnr(&r.image, &inp.image)?), Some(psnr(&r.image, &report.denoised)?)),
        None => (None, None),
    };
    let th = report.thresholds.as_ref().expect("threshold variant records its thresholds");
    let mut out = Outputs::new();
    out.add("denoised.pgm", encode_pgm(&report.denoised, inp.maxval));
    let summary = json!({
        "sigma": sigma,
        "patch": p,
        "search_radius": c,
        "nfa_max": nfa,
        "mode": cfg.mode,
        "thresholds": { "mean": th.mean, "min": th.min, "max": th.max, "spread": th.spread() },
        "psnr_noisy": psnr_in.map(real),
        "psnr_denoised": psnr_out.map(real),
        "mean_rejected_fraction": report.mean_rejected_fraction(),
        "selected_histogram": report.selected_histogram(),
    });
    out.add_json("report.json", &summary)?;
    let mut inputs = vec![&inp];
    if let Some(r) = &reference {
        inputs.push(r);
    }
    let params = json!({ "sigma": sigma, "nfa": nfa, "p": p, "c": c, "mode": cfg.mode });
    out.write(&common.out, manifest("denoise", &inputs, common.seed, params))
}

/// Input dimmed to `[0, 160]` with the fitted lattice through the patch centre drawn in white.
fn overlay(u: &Image, centre: (f64, f64), b1: [f64; 2], b2: [f64; 2]) -> Image {
    let mut img = normalize_to_8bit(u).map(|v| v * 160.0 / 255.0);
    let det = b1[0] * b2[1] - b1[1] * b2[0];
    if det.abs() < 1e-9 {
        return img;
    }
    let (w, h) = (u.width() as i64, u.height() as i64);
    // Coefficient bound from the rows of B⁻¹ and the largest displacement.
    let inv = [[b2[1] / det, -b2[0] / det], [-b1[1] / det, b1[0] / det]];
    let reach = (w.max(h) as f64) * inv.iter().map(|r| r[0].abs() + r[1].abs()).fold(0.0, f64::max);
    let n = (reach.ceil() as i64 + 1).min(4096);
    for i in -n..=n {
        for j in -n..=n {
            let x = (centre.0 + i as f64 * b1[0] + j as f64 * b2[0]).round() as i64;
            let y = (centre.1 + i as f64 * b1[1] + j as f64 * b2[1]).round() as i64;
            for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                let (px, py) = (x + dx, y + dy);
                if (0..w).contains(&px) && (0..h).contains(&py) {
                    img.set(px as usize, py as usize, 255.0);
                }
            }
        }
    }
    img
}

fn lattice(common: &Common, args: &Command) -> CliResult<()> {
    let Command::Lattice { input, patch, nfa, preprocess, delta_b, delta_m, iters } = args else { unreachable!() };
    let inp = read_input(input)?;
    check_nfa(*nfa)?;
    check_patch_fits(&inp.image, patch.p)?;
    if !(*delta_b >= 0.0 && *delta_m >= 0.0) {
        return Err(invalid("--dB and --dM must be nonnegative"));
    }
    if *iters == 0 {
        return Err(invalid("--iters must be positive"));
    }
    let v = Preprocess::from(*preprocess).apply(&inp.image);
    let model = MicrotextureModel::from_exemplar(&v);
    let det = autosim_detection(&v, &patch.domain(), &model, *nfa, &OffsetMask::All)?;
    let params = json!({
        "patch": patch, "nfa": nfa, "preprocess": preprocess,
        "dB": delta_b, "dM": delta_m, "iters": iters,
    });
    let centre = (patch.x as f64 + patch.p as f64 / 2.0, patch.y as f64 + patch.p as f64 / 2.0);
    let mut out = Outputs::new();
    let graph = match build_graph(&det.d_map, &det.as_map) {
        Ok(g) => g,
        Err(redlab::Error::GraphTooSmall(n)) => {
            out.add_json(
                "fit.json",
                &json!({ "status": INSUFFICIENT, "detections": det.count(), "vertices": n, "parameters": params }),
            )?;
            out.add("overlay.pgm", encode_pgm(&normalize_to_8bit(&inp.image).map(|x| x * 160.0 / 255.0), 255));
            return out.write(&common.out, manifest("lattice", &[&inp], common.seed, params));
        }
        Err(e) => return Err(e.into()),
    };
    let fit = alternate_minimization(&graph.edge_vectors(), *delta_b, *delta_m, *iters, Init::Median)?;
    let criterion = c_per(&fit, graph.n_components)?;
    let summary = json!({
        "status": "ok",
        "detections": det.count(),
        "n_components": graph.n_components,
        "vertices": graph.vertices.iter().map(|t| [t.x, t.y]).collect::<Vec<_>>(),
        "edges": graph.edges,
        "basis": { "b1": fit.basis.b1, "b2": fit.basis.b2 },
        "det": fit.det,
        "m": fit.m,
        "sigma2": fit.sigma2,
        "q_trajectory": fit.q_trajectory,
        "log_posterior": fit.log_posterior.iter().map(|&v| real(v)).collect::<Vec<_>>(),
        "converged_at": fit.converged_at,
        "c_per": real(criterion),
        "degenerate": fit.degenerate,
        "parameters": params,
    });
    out.add_json("fit.json", &summary)?;
    out.add("overlay.pgm", encode_pgm(&overlay(&inp.image, centre, fit.basis.b1, fit.basis.b2), 255));
    out.write(&common.out, manifest("lattice", &[&inp], common.seed, params))
}

fn rank(common: &Common, args: &Command) -> CliResult<()> {
    let Command::Rank { dir, anchors, p, nfa, delta_b, delta_m, iters, preprocess } = args else { unreachable!() };
    let entries = fs::read_dir(dir).map_err(|e| invalid(format!("cannot read directory {}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(invalid(format!("no .pgm images in {}", dir.display())));
    }
    check_nfa(*nfa)?;
    if *anchors == 0 || *iters == 0 || *p == 0 {
        return Err(invalid("--anchors, --iters and --p must be positive"));
    }
    let inputs: Vec<Input> = paths.iter().map(|p| read_input(p)).collect::<CliResult<_>>()?;
    for i in &inputs {
        check_patch_fits(&i.image, *p)?;
    }
    let params = RankParams {
        anchors: *anchors,
        patch: *p,
        nfa_max: *nfa,
        delta_m: *delta_m,
        delta_b: *delta_b,
        iterations: *iters,
        seed: common.seed,
        mask: OffsetMask::All,
        preprocess: (*preprocess).into(),
    };
    let images: Vec<Image> = inputs.iter().map(|i| i.image.clone()).collect();
    let ranking = rank_textures(&images, &params)?;
    let file_name = |k: usize| paths[k].file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let entries: Vec<Value> = ranking
        .order
        .iter()
        .enumerate()
        .map(|(pos, &k)| {
            let s = &ranking.scores[k];
            json!({
                "rank": s.median_c_per.map(|_| pos + 1),
                "file": file_name(k),
                "median_c_per": s.median_c_per.map(real),
                "successes": s.successes,
                "failures": s.failures,
                "c_per_values": s.c_per_values.iter().map(|&v| real(v)).collect::<Vec<_>>(),
            })
        })
        .collect();
    let settings = json!({
        "anchors": anchors, "p": p, "nfa": nfa, "dB": delta_b, "dM": delta_m,
        "iters": iters, "preprocess": preprocess,
    });
    let mut out = Outputs::new();
    out.add_json("ranking.json", &json!({ "ranking": entries, "parameters": settings }))?;
    let refs: Vec<&Input> = inputs.iter().collect();
    out.write(&common.out, manifest("rank", &refs, common.seed, settings))
}

fn parse_size(s: &str) -> CliResult<(usize, usize)> {
    let bad = || invalid(format!("expected a size `MxN`, got `{s}`"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (w, h): (usize, usize) = (w.parse().map_err(|_| bad())?, h.parse().map_err(|_| bad())?);
    if w == 0 || h == 0 {
        return Err(bad());
    }
    Ok((w, h))
}

fn sample(common: &Common, source: &str, size: Option<&str>) -> CliResult<()> {
    let mut out = Outputs::new();
    let (draw, inputs, params) = if source == "white" {
        let (w, h) = parse_size(size.ok_or_else(|| invalid("`sample white` needs a size `MxN`"))?)?;
        let model = MicrotextureModel::white_noise(w, h);
        let draw = model.sample(common.seed);
        out.add("sample.pgm", encode_pgm(&normalize_to_8bit(&draw), 255));
        out.model = Some(model);
        (draw, Vec::new(), json!({ "model": "white", "width": w, "height": h }))
    } else {
        if size.is_some() {
            return Err(invalid("a size is only accepted with `sample white`"));
        }
        let inp = read_input(Path::new(source))?;
        let model = MicrotextureModel::from_exemplar(&inp.image);
        let draw = model.sample(common.seed);
        let mean = model.exemplar_mean();
        out.add("sample.pgm", encode_pgm(&draw.map(|v| v + mean), inp.maxval));
        out.model = Some(model);
        (draw, vec![inp], json!({ "model": "exemplar" }))
    };
    out.add("sample.pfm", encode_pfm(&draw));
    let refs: Vec<&Input> = inputs.iter().collect();
    out.write(&common.out, manifest("sample", &refs, common.seed, params))
}

fn configure_threads(threads: Threads) -> CliResult<()> {
    if let Threads::Count(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| invalid(format!("cannot configure {n} threads: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads(cli.common.threads)?;
    let common = &cli.common;
    match &cli.command {
        Command::Detect { input, patch, nfa, model, mask } => detect(common, input, *patch, *nfa, *model, *mask),
        c @ Command::Denoise { .. } => denoise(common, c),
        c @ Command::Lattice { .. } => lattice(common, c),
        c @ Command::Rank { .. } => rank(common, c),
        Command::Sample { source, size } => sample(common, source, size.as_deref()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
