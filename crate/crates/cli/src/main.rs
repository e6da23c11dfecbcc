use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pvq_core::codec::{compression_ratio, read_pvq_file, write_pvq_file};
use pvq_core::experiment::{
    collect_images, reference_configs, render_tables, run_matrix, to_csv, train_codebook,
    BenchConfig, ConfigPoint, InitMethod, DEFAULT_SEED_COUNT,
};
use pvq_core::imageio::{read_pgm_file, write_pgm_file};
use pvq_core::metrics::format_db;
use pvq_core::pyramid::{build_pyramid, select_seed_level};
use pvq_core::vq::{DEFAULT_EPSILON, DEFAULT_MAX_ITERS};
use pvq_core::{decode, encode, psnr, BlockGeometry, Codebook, LbgParams};

mod codebook_file;

use codebook_file::CodebookFile;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(
    name = "pvq",
    version,
    about = "Vector-quantization codec for 8-bit grayscale PGM images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a codebook on an image and write it as JSON.
    Train {
        image: PathBuf,
        #[command(flatten)]
        training: TrainingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Encode an image into a .pvq file.
    Encode {
        image: PathBuf,
        /// Codebook file written by `train`. Without it a codebook is trained inline.
        #[arg(long, conflicts_with_all = ["codebook_size", "block"])]
        codebook: Option<PathBuf>,
        #[command(flatten)]
        training: OptionalTrainingArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a .pvq file into a PGM image.
    Decode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print MSE and PSNR between two images.
    Psnr { a: PathBuf, b: PathBuf },
    /// Print pyramid level sizes and, given a configuration, the seed level.
    Pyramid {
        image: PathBuf,
        #[arg(long, requires = "block")]
        codebook_size: Option<usize>,
        #[arg(long, requires = "codebook_size")]
        block: Option<BlockGeometry>,
        /// Write every level as level-<i>.pgm into this directory.
        #[arg(long)]
        write_levels: Option<PathBuf>,
    },
    /// Compare random and pyramid initialization across configurations; write CSV.
    Bench {
        /// Comma-separated PGM paths.
        #[arg(long, value_delimiter = ',')]
        images: Vec<PathBuf>,
        /// Add generated gradient, checker and noise images. Used automatically without --images.
        #[arg(long)]
        synthetic: bool,
        #[arg(long, default_value_t = 512)]
        synthetic_size: usize,
        #[arg(long)]
        out: PathBuf,
        /// Number of random-initializer seeds (0..n).
        #[arg(long, default_value_t = DEFAULT_SEED_COUNT)]
        seeds: u64,
        /// Comma-separated N:WxH pairs; defaults to the eight reference configurations.
        #[arg(long, value_delimiter = ',', value_parser = parse_point)]
        configs: Vec<ConfigPoint>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        /// Write zeros in the seconds column so output is reproducible.
        #[arg(long)]
        no_timing: bool,
        /// Also print iteration and PSNR tables.
        #[arg(long)]
        table: bool,
    },
}

#[derive(Args)]
struct TrainingArgs {
    #[arg(long)]
    codebook_size: usize,
    /// Block size as WxH, e.g. 4x4.
    #[arg(long)]
    block: BlockGeometry,
    #[command(flatten)]
    common: InitArgs,
}

#[derive(Args)]
struct OptionalTrainingArgs {
    #[arg(long, requires = "block")]
    codebook_size: Option<usize>,
    #[arg(long, requires = "codebook_size")]
    block: Option<BlockGeometry>,
    #[command(flatten)]
    common: InitArgs,
}

#[derive(Args)]
struct InitArgs {
    #[arg(long, default_value = "pyramid", value_parser = ["random", "pyramid"])]
    init: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
}

impl InitArgs {
    fn method(&self) -> InitMethod {
        self.init.parse().expect("restricted by clap")
    }

    fn params(&self) -> LbgParams {
        LbgParams {
            epsilon: self.epsilon,
            max_iters: self.max_iters,
        }
    }
}

fn parse_point(s: &str) -> Result<ConfigPoint, String> {
    let (n, block) = s
        .split_once(':')
        .ok_or_else(|| format!("expected N:WxH, got {s:?}"))?;
    let codebook_size = n
        .trim()
        .parse()
        .map_err(|_| format!("bad codebook size {n:?}"))?;
    let geometry = block.parse::<BlockGeometry>().map_err(|e| e.to_string())?;
    Ok(ConfigPoint {
        codebook_size,
        geometry,
    })
}

#[derive(Debug)]
enum Failure {
    Data(String),
    Config(String),
}

impl From<pvq_core::Error> for Failure {
    fn from(e: pvq_core::Error) -> Self {
        if e.is_config() {
            Failure::Config(e.to_string())
        } else {
            Failure::Data(e.to_string())
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn train(image_path: &Path, point: ConfigPoint, init: &InitArgs) -> CliResult<CodebookFile> {
    let image = read_pgm_file(image_path)?;
    let method = init.method();
    let (codebook, report) = train_codebook(&image, point, method, init.seed, &init.params())?;
    Ok(CodebookFile::new(
        codebook,
        method,
        (method == InitMethod::Random).then_some(init.seed),
        report,
    ))
}

fn print_report(file: &CodebookFile) {
    let r = &file.report;
    println!(
        "trained {} codewords of {} ({} init): {} iterations, converged: {}, distortion {:.4}, empty-cell repairs {}",
        file.codebook.len(),
        file.codebook.geometry(),
        file.init,
        r.iterations,
        r.converged,
        r.final_distortion(),
        r.empty_cell_repairs
    );
}

fn run(command: Command) -> CliResult {
    match command {
        Command::Train {
            image,
            training,
            out,
        } => {
            let point = ConfigPoint {
                codebook_size: training.codebook_size,
                geometry: training.block,
            };
            let file = train(&image, point, &training.common)?;
            file.write(&out)?;
            print_report(&file);
        }
        Command::Encode {
            image,
            codebook,
            training,
            out,
        } => {
            let codebook: Codebook = match (codebook, training.codebook_size, training.block) {
                (Some(path), _, _) => CodebookFile::read(&path)?.codebook,
                (None, Some(codebook_size), Some(geometry)) => {
                    let file = train(
                        &image,
                        ConfigPoint {
                            codebook_size,
                            geometry,
                        },
                        &training.common,
                    )?;
                    print_report(&file);
                    file.codebook
                }
                _ => {
                    return Err(Failure::Config(
                        "encode needs --codebook or both --codebook-size and --block".into(),
                    ))
                }
            };
            let img = read_pgm_file(&image)?;
            let compressed = encode(&img, &codebook)?;
            write_pvq_file(&out, &compressed)?;
            println!(
                "wrote {} ({} bytes, ratio {:.3})",
                out.display(),
                compressed.serialized_len(),
                compression_ratio(&compressed)
            );
        }
        Command::Decode { input, out } => {
            let compressed = read_pvq_file(&input)?;
            let img = decode(&compressed)?;
            write_pgm_file(&out, &img)?;
            println!("wrote {} ({}x{})", out.display(), img.width(), img.height());
        }
        Command::Psnr { a, b } => {
            let q = psnr(&read_pgm_file(&a)?, &read_pgm_file(&b)?)?;
            println!("mse {:.4}", q.mse);
            println!("psnr {} dB", format_db(q.psnr_db));
        }
        Command::Pyramid {
            image,
            codebook_size,
            block,
            write_levels,
        } => {
            let img = read_pgm_file(&image)?;
            let pyramid = build_pyramid(&img, None);
            for (i, level) in pyramid.levels().iter().enumerate() {
                println!(
                    "level {i}: {}x{} mean {:.3}",
                    level.width(),
                    level.height(),
                    level.mean()
                );
            }
            if let Some(dir) = write_levels {
                std::fs::create_dir_all(&dir).map_err(pvq_core::Error::from)?;
                for (i, level) in pyramid.levels().iter().enumerate() {
                    write_pgm_file(dir.join(format!("level-{i}.pgm")), level)?;
                }
            }
            if let (Some(n), Some(g)) = (codebook_size, block) {
                let level =
                    select_seed_level(img.width(), img.height(), g.block_w(), g.block_h(), n)?;
                let seed = &pyramid.levels()[level];
                println!(
                    "seed level for N={n} block={g}: {level} ({}x{})",
                    seed.width(),
                    seed.height()
                );
            }
        }
        Command::Bench {
            images,
            synthetic,
            synthetic_size,
            out,
            seeds,
            configs,
            epsilon,
            max_iters,
            no_timing,
            table,
        } => {
            let images = collect_images(&images, synthetic, true, synthetic_size)?;
            let cfg = BenchConfig {
                points: if configs.is_empty() {
                    reference_configs()
                } else {
                    configs
                },
                params: LbgParams { epsilon, max_iters },
                seeds: (0..seeds).collect(),
                record_timing: !no_timing,
            };
            let rows = run_matrix(&images, &cfg)?;
            std::fs::write(&out, to_csv(&rows)?).map_err(pvq_core::Error::from)?;
            let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
            println!(
                "wrote {} rows to {} ({failed} failed)",
                rows.len(),
                out.display()
            );
            if table {
                print!("{}", render_tables(&rows, &images));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DATA)
        }
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
