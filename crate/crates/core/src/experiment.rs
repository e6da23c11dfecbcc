//! Side-by-side comparison of random and pyramid codebook seeding.
//!
//! Every cell trains a codebook, encodes the image, pushes the result through the on-disk
//! container and measures PSNR of the decoded image against the original.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;

use crate::codec::{decode, deserialize, encode, serialize, CompressedImage};
use crate::error::{Error, Result};
use crate::imageio::{read_pgm_file, synth_image, GrayImage, SynthKind};
use crate::metrics::{format_db, psnr, QualityReport};
use crate::pyramid::{level_dims, select_seed_level};
use crate::vq::{
    init_pyramid, init_random, lbg_train, tile_image, BlockGeometry, Codebook, LbgParams,
    TrainingReport,
};

/// How the initial codebook is chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InitMethod {
    /// Distinct training vectors drawn at random (conventional LBG).
    Random,
    /// All blocks of the pyramid level with exactly N blocks (modified LBG).
    Pyramid,
}

impl InitMethod {
    /// Name used in result files.
    pub fn label(self) -> &'static str {
        match self {
            InitMethod::Random => "conventional",
            InitMethod::Pyramid => "modified",
        }
    }
}

impl fmt::Display for InitMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for InitMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" | "conventional" => Ok(InitMethod::Random),
            "pyramid" | "modified" => Ok(InitMethod::Pyramid),
            _ => Err(Error::Config(format!("unknown init method {s:?}"))),
        }
    }
}

/// One codebook size and block shape.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigPoint {
    pub codebook_size: usize,
    pub geometry: BlockGeometry,
}

impl ConfigPoint {
    pub fn new(codebook_size: usize, block_w: usize, block_h: usize) -> Result<Self> {
        Ok(Self {
            codebook_size,
            geometry: BlockGeometry::new(block_w, block_h)?,
        })
    }
}

impl fmt::Display for ConfigPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "N={} block={}", self.codebook_size, self.geometry)
    }
}

/// The eight size/shape combinations of the reference experiments.
pub fn reference_configs() -> Vec<ConfigPoint> {
    [
        (128, 4, 8),
        (128, 8, 4),
        (256, 4, 4),
        (256, 8, 8),
        (512, 4, 8),
        (512, 8, 4),
        (1024, 4, 4),
        (1024, 8, 8),
    ]
    .into_iter()
    .map(|(n, w, h)| ConfigPoint::new(n, w, h).expect("static config"))
    .collect()
}

pub const DEFAULT_SEED_COUNT: u64 = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub points: Vec<ConfigPoint>,
    pub params: LbgParams,
    /// Seeds for the random initializer, one conventional run each.
    pub seeds: Vec<u64>,
    /// Measure wall time per cell. When false the `seconds` column is zero and output is
    /// byte-for-byte reproducible.
    pub record_timing: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            points: reference_configs(),
            params: LbgParams::default(),
            seeds: (0..DEFAULT_SEED_COUNT).collect(),
            record_timing: true,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if self.points.is_empty() {
            return Err(Error::Config("no configurations to run".into()));
        }
        if let Some(p) = self.points.iter().find(|p| p.codebook_size < 2) {
            return Err(Error::Config(format!(
                "codebook size must be at least 2 ({p})"
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct NamedImage {
    pub name: String,
    pub image: GrayImage,
}

/// Loads the given PGM files, then appends the synthetic set when requested or when no
/// paths were given and `fallback` is set.
pub fn collect_images<P: AsRef<Path>>(
    paths: &[P],
    synthetic: bool,
    fallback: bool,
    synthetic_size: usize,
) -> Result<Vec<NamedImage>> {
    let mut images = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        images.push(NamedImage {
            name,
            image: read_pgm_file(path)?,
        });
    }
    if synthetic || (fallback && images.is_empty()) {
        for kind in SynthKind::ALL {
            images.push(NamedImage {
                name: format!("synthetic-{kind}"),
                image: synth_image(kind, synthetic_size, synthetic_size, 0)?,
            });
        }
    }
    if images.is_empty() {
        return Err(Error::Config("no images to benchmark".into()));
    }
    Ok(images)
}

/// Builds the initial codebook for `method` and refines it with LBG.
pub fn train_codebook(
    image: &GrayImage,
    point: ConfigPoint,
    method: InitMethod,
    seed: u64,
    params: &LbgParams,
) -> Result<(Codebook, TrainingReport)> {
    let ts = tile_image(image, point.geometry)?;
    let initial = match method {
        InitMethod::Random => init_random(&ts, point.codebook_size, seed)?,
        InitMethod::Pyramid => init_pyramid(image, point.geometry, point.codebook_size)?,
    };
    lbg_train(&ts, &initial, params)
}

/// Everything produced by training and coding one image.
#[derive(Clone, Debug)]
pub struct CodecRun {
    pub codebook: Codebook,
    pub report: TrainingReport,
    pub compressed: CompressedImage,
    /// Serialized container.
    pub bytes: Vec<u8>,
    /// Image decoded from `bytes`.
    pub decoded: GrayImage,
    pub quality: QualityReport,
    pub seconds: f64,
}

/// Trains, encodes, serializes, parses the bytes back, decodes, and scores the result.
pub fn train_and_code(
    image: &GrayImage,
    point: ConfigPoint,
    method: InitMethod,
    seed: u64,
    params: &LbgParams,
) -> Result<CodecRun> {
    let start = Instant::now();
    let (codebook, report) = train_codebook(image, point, method, seed, params)?;
    let seconds = start.elapsed().as_secs_f64();
    let compressed = encode(image, &codebook)?;
    let bytes = serialize(&compressed);
    let decoded = decode(&deserialize(&bytes)?)?;
    let quality = psnr(image, &decoded)?;
    Ok(CodecRun {
        codebook,
        report,
        compressed,
        bytes,
        decoded,
        quality,
        seconds,
    })
}

/// One line of results.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub image: String,
    pub point: ConfigPoint,
    pub method: InitMethod,
    /// Random-initializer seed; `None` for the pyramid initializer.
    pub seed: Option<u64>,
    pub outcome: std::result::Result<RowOutcome, String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowOutcome {
    pub iterations: usize,
    pub converged: bool,
    pub psnr_db: f64,
    /// Training wall time, zero when timing is disabled.
    pub seconds: f64,
    pub repairs: usize,
}

/// Runs a single cell. Errors carry the image name and configuration.
pub fn run_config(
    name: &str,
    image: &GrayImage,
    point: ConfigPoint,
    method: InitMethod,
    seed: Option<u64>,
    params: &LbgParams,
) -> Result<RowOutcome> {
    let run = train_and_code(image, point, method, seed.unwrap_or(0), params)
        .map_err(|e| e.context(format!("{name} {point} {method}")))?;
    Ok(RowOutcome {
        iterations: run.report.iterations,
        converged: run.report.converged,
        psnr_db: run.quality.psnr_db,
        seconds: run.seconds,
        repairs: run.report.empty_cell_repairs,
    })
}

/// Runs every image x configuration x method cell. Conventional runs get one row per seed.
///
/// Cells run concurrently; rows come back in a fixed order (image, configuration, then the
/// pyramid row followed by seeds ascending). A failing cell yields a row with an error
/// instead of aborting the run.
pub fn run_matrix(images: &[NamedImage], cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    if images.is_empty() {
        return Err(Error::Config("no images to benchmark".into()));
    }
    let mut seeds = cfg.seeds.clone();
    seeds.sort_unstable();
    seeds.dedup();

    let mut jobs = Vec::new();
    for (img_idx, _) in images.iter().enumerate() {
        for &point in &cfg.points {
            jobs.push((img_idx, point, InitMethod::Pyramid, None));
            for &s in &seeds {
                jobs.push((img_idx, point, InitMethod::Random, Some(s)));
            }
        }
    }

    let rows = jobs
        .into_par_iter()
        .map(|(img_idx, point, method, seed)| {
            let named = &images[img_idx];
            let outcome = run_config(&named.name, &named.image, point, method, seed, &cfg.params)
                .map(|mut o| {
                    if !cfg.record_timing {
                        o.seconds = 0.0;
                    }
                    o
                })
                .map_err(|e| e.to_string());
            BenchRow {
                image: named.name.clone(),
                point,
                method,
                seed,
                outcome,
            }
        })
        .collect();
    Ok(rows)
}

pub const CSV_HEADER: [&str; 10] = [
    "image",
    "N",
    "block",
    "method",
    "seed",
    "iterations",
    "psnr_db",
    "seconds",
    "repairs",
    "error",
];

/// Renders rows as CSV with [`CSV_HEADER`] columns.
pub fn to_csv(rows: &[BenchRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(to_err)?;
    for row in rows {
        let seed = row.seed.map(|s| s.to_string()).unwrap_or_default();
        let mut record = vec![
            row.image.clone(),
            row.point.codebook_size.to_string(),
            row.point.geometry.to_string(),
            row.method.label().to_string(),
            seed,
        ];
        match &row.outcome {
            Ok(o) => record.extend([
                o.iterations.to_string(),
                format_db(o.psnr_db),
                format!("{:.6}", o.seconds),
                o.repairs.to_string(),
                String::new(),
            ]),
            Err(e) => record.extend([
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                e.clone(),
            ]),
        }
        w.write_record(&record).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Per image and configuration: the pyramid run plus conventional mean over seeds.
#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub image: String,
    pub point: ConfigPoint,
    pub modified_iterations: Option<usize>,
    pub modified_psnr: Option<f64>,
    pub conventional_iterations: Vec<usize>,
    pub conventional_psnr: Vec<f64>,
}

impl Comparison {
    pub fn conventional_mean_iterations(&self) -> Option<f64> {
        mean(self.conventional_iterations.iter().map(|&i| i as f64))
    }

    pub fn conventional_mean_psnr(&self) -> Option<f64> {
        mean(self.conventional_psnr.iter().copied())
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

/// Groups rows by image and configuration, preserving first-seen order.
pub fn summarize(rows: &[BenchRow]) -> Vec<Comparison> {
    let mut out: Vec<Comparison> = Vec::new();
    for row in rows {
        let pos = match out
            .iter()
            .position(|c| c.image == row.image && c.point == row.point)
        {
            Some(p) => p,
            None => {
                out.push(Comparison {
                    image: row.image.clone(),
                    point: row.point,
                    modified_iterations: None,
                    modified_psnr: None,
                    conventional_iterations: Vec::new(),
                    conventional_psnr: Vec::new(),
                });
                out.len() - 1
            }
        };
        let Ok(o) = &row.outcome else { continue };
        let c = &mut out[pos];
        match row.method {
            InitMethod::Pyramid => {
                c.modified_iterations = Some(o.iterations);
                c.modified_psnr = Some(o.psnr_db);
            }
            InitMethod::Random => {
                c.conventional_iterations.push(o.iterations);
                c.conventional_psnr.push(o.psnr_db);
            }
        }
    }
    out
}

fn reduced_size(image: Option<&GrayImage>, point: ConfigPoint) -> String {
    let Some(image) = image else {
        return "-".into();
    };
    let g = point.geometry;
    match select_seed_level(
        image.width(),
        image.height(),
        g.block_w(),
        g.block_h(),
        point.codebook_size,
    ) {
        Ok(level) => {
            let (w, h) = level_dims(image.width(), image.height())[level];
            format!("{w}x{h}")
        }
        Err(_) => "-".into(),
    }
}

/// Text tables of iteration counts and PSNR, conventional figures averaged over seeds.
pub fn render_tables(rows: &[BenchRow], images: &[NamedImage]) -> String {
    let summary = summarize(rows);
    let mut names: Vec<&str> = Vec::new();
    let mut points: Vec<ConfigPoint> = Vec::new();
    for c in &summary {
        if !names.contains(&c.image.as_str()) {
            names.push(&c.image);
        }
        if !points.contains(&c.point) {
            points.push(c.point);
        }
    }
    let first = images.first().map(|n| &n.image);
    let lookup = |name: &str, point: ConfigPoint| {
        summary.iter().find(|c| c.image == name && c.point == point)
    };
    let cell = |v: Option<String>| v.unwrap_or_else(|| "err".into());

    let mut out = String::new();
    for (title, is_iters) in [("Iterations", true), ("PSNR (dB)", false)] {
        let _ = writeln!(out, "{title}");
        let _ = write!(
            out,
            "{:>6} {:>6} {:>9} {:<13}",
            "N", "block", "reduced", "method"
        );
        for name in &names {
            let _ = write!(out, " {name:>18}");
        }
        out.push('\n');
        for &point in &points {
            for method in [InitMethod::Random, InitMethod::Pyramid] {
                let _ = write!(
                    out,
                    "{:>6} {:>6} {:>9} {:<13}",
                    point.codebook_size,
                    point.geometry.to_string(),
                    reduced_size(first, point),
                    method.label()
                );
                for name in &names {
                    let c = lookup(name, point);
                    let text = match (method, is_iters) {
                        (InitMethod::Random, true) => c
                            .and_then(Comparison::conventional_mean_iterations)
                            .map(|m| format!("{m:.1}")),
                        (InitMethod::Random, false) => c
                            .and_then(Comparison::conventional_mean_psnr)
                            .map(format_db),
                        (InitMethod::Pyramid, true) => {
                            c.and_then(|c| c.modified_iterations).map(|i| i.to_string())
                        }
                        (InitMethod::Pyramid, false) => {
                            c.and_then(|c| c.modified_psnr).map(format_db)
                        }
                    };
                    let _ = write!(out, " {:>18}", cell(text));
                }
                out.push('\n');
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::read_pvq_file;

    fn small_cfg(seeds: Vec<u64>) -> BenchConfig {
        BenchConfig {
            points: vec![
                ConfigPoint::new(16, 4, 4).unwrap(),
                ConfigPoint::new(64, 2, 2).unwrap(),
            ],
            params: LbgParams::default(),
            seeds,
            record_timing: false,
        }
    }

    fn noise(side: usize) -> Vec<NamedImage> {
        vec![NamedImage {
            name: "noise".into(),
            image: synth_image(SynthKind::Noise, side, side, 5).unwrap(),
        }]
    }

    #[test]
    fn reference_configs_have_reference_shapes() {
        let cfgs = reference_configs();
        assert_eq!(cfgs.len(), 8);
        assert_eq!(cfgs[0], ConfigPoint::new(128, 4, 8).unwrap());
        assert_eq!(cfgs[7], ConfigPoint::new(1024, 8, 8).unwrap());
    }

    #[test]
    fn row_count_is_images_configs_seeds() {
        let rows = run_matrix(&noise(16), &small_cfg(vec![1, 2, 3])).unwrap();
        assert_eq!(rows.len(), 2 * (1 + 3));
        assert_eq!(rows[0].method, InitMethod::Pyramid);
        assert_eq!(rows[1].seed, Some(1));
        assert!(rows.iter().all(|r| r.outcome.is_ok()), "{rows:?}");
    }

    #[test]
    fn empty_image_list_is_rejected() {
        assert!(run_matrix(&[], &small_cfg(vec![0])).is_err());
        let none: [&str; 0] = [];
        assert!(collect_images(&none, false, false, 16).is_err());
        assert_eq!(collect_images(&none, false, true, 16).unwrap().len(), 3);
    }

    #[test]
    fn csv_is_reproducible() {
        let images = noise(32);
        let cfg = small_cfg(vec![4, 7]);
        let a = to_csv(&run_matrix(&images, &cfg).unwrap()).unwrap();
        let b = to_csv(&run_matrix(&images, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
        assert!(
            a.starts_with("image,N,block,method,seed,iterations,psnr_db,seconds,repairs,error\n")
        );
    }

    #[test]
    fn failing_cells_become_error_rows() {
        let mut cfg = small_cfg(vec![0]);
        cfg.points = vec![ConfigPoint::new(100, 8, 8).unwrap()];
        let images = vec![NamedImage {
            name: "flat".into(),
            image: GrayImage::filled(512, 512, 3).unwrap(),
        }];
        let rows = run_matrix(&images, &cfg).unwrap();
        assert_eq!(rows.len(), 2);
        let err = rows[0].outcome.as_ref().unwrap_err();
        assert!(err.contains("flat") && err.contains("N=100"), "{err}");
        // The random initializer has enough blocks; it runs.
        assert!(rows[1].outcome.is_ok());
        let csv = to_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn constant_image_is_lossless_in_one_pass() {
        let img = GrayImage::filled(64, 64, 90).unwrap();
        let o = run_config(
            "c",
            &img,
            ConfigPoint::new(16, 4, 4).unwrap(),
            InitMethod::Pyramid,
            None,
            &LbgParams::default(),
        )
        .unwrap();
        assert_eq!(o.iterations, 1);
        assert!(o.psnr_db.is_infinite());
    }

    #[test]
    fn missing_seed_level_is_a_config_error() {
        let img = GrayImage::filled(512, 512, 0).unwrap();
        let err = run_config(
            "z",
            &img,
            ConfigPoint::new(100, 8, 8).unwrap(),
            InitMethod::Pyramid,
            None,
            &LbgParams::default(),
        )
        .unwrap_err();
        assert!(err.is_config());
        assert!(matches!(err.root(), Error::NoExactLevel { .. }));
    }

    #[test]
    fn pyramid_rows_do_not_depend_on_seed() {
        let images = noise(32);
        let a = run_matrix(&images, &small_cfg(vec![1])).unwrap();
        let b = run_matrix(&images, &small_cfg(vec![9])).unwrap();
        assert_eq!(a[0], b[0]);
        assert_eq!(a[2], b[2]);
    }

    #[test]
    fn reported_psnr_matches_file_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let image = synth_image(SynthKind::Noise, 64, 64, 2).unwrap();
        for (method, seed) in [(InitMethod::Pyramid, 0), (InitMethod::Random, 3)] {
            let run = train_and_code(
                &image,
                ConfigPoint::new(64, 4, 4).unwrap(),
                method,
                seed,
                &LbgParams::default(),
            )
            .unwrap();
            let path = dir.path().join(format!("{method}.pvq"));
            std::fs::write(&path, &run.bytes).unwrap();
            let decoded = decode(&read_pvq_file(&path).unwrap()).unwrap();
            assert_eq!(psnr(&image, &decoded).unwrap(), run.quality);
        }
    }

    #[test]
    fn tables_mention_every_config() {
        let images = noise(32);
        let rows = run_matrix(&images, &small_cfg(vec![0, 1])).unwrap();
        let text = render_tables(&rows, &images);
        assert!(text.contains("Iterations") && text.contains("PSNR"));
        assert!(text.contains("4x4") && text.contains("2x2"));
        assert!(text.contains("modified") && text.contains("conventional"));
    }
}
