use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use cswv::bitstream::extract_layers;
use cswv::codec::{decode, decode_full_size, encode_video, EncoderConfig};
use cswv::curves::{emit_curves, write_csv, ExperimentConfig};
use cswv::dwt::{dwt3d_forward, Layer};
use cswv::metrics::{complexity_report, psnr, rate_report};
use cswv::recovery::{Algorithm, OnsagerDivisor, RecoveryConfig};
use cswv::sensing::DEFAULT_TARGET_MIN_N;
use cswv::video_io::{
    count_raw_frames, partition_gofs, read_raw_planes, read_raw_video_with_layout, read_raw_with_header,
    write_raw_video, write_raw_with_header, FramePlane, RawLayout,
};

#[derive(Parser)]
#[command(name = "cswv", version, about = "Scalable wavelet + compressed-sensing video codec")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LayerArg {
    #[value(name = "BL", alias = "bl")]
    Bl,
    #[value(name = "EL1", alias = "el1")]
    El1,
    #[value(name = "EL2", alias = "el2")]
    El2,
    #[value(name = "EL3", alias = "el3")]
    El3,
}

impl From<LayerArg> for Layer {
    fn from(l: LayerArg) -> Self {
        match l {
            LayerArg::Bl => Layer::Base,
            LayerArg::El1 => Layer::El1,
            LayerArg::El2 => Layer::El2,
            LayerArg::El3 => Layer::El3,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Eamp,
    Amp,
    Iht,
    Ist,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Eamp => Algorithm::Eamp,
            AlgoArg::Amp => Algorithm::Amp,
            AlgoArg::Iht => Algorithm::Iht,
            AlgoArg::Ist => Algorithm::Ist,
        }
    }
}

#[derive(clap::Args)]
struct RawInput {
    /// Frame width; not needed for CSWV-RAW files.
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    /// Frames to read (default: all whole frames).
    #[arg(long)]
    frames: Option<usize>,
    /// Input is planar YUV 4:2:0; chroma is skipped.
    #[arg(long)]
    yuv420: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Encode raw 8-bit luma video into a layered stream.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        raw: RawInput,
        #[arg(long, default_value_t = 1.0)]
        threshold: f64,
        #[arg(long, default_value_t = 12)]
        bits: u8,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TARGET_MIN_N)]
        target_min_n: usize,
        #[arg(long, default_value_t = 30)]
        fps: u32,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-band coefficient energies of every GOF as CSV.
        #[arg(long)]
        dump_bands: Option<PathBuf>,
    },
    /// Decode a stream (or a prefix of its layers) to raw video.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "EL3")]
        layers: LayerArg,
        #[arg(long, value_enum, default_value = "eamp")]
        algo: AlgoArg,
        #[arg(long, default_value_t = 400)]
        iterations: usize,
        /// Divide the Onsager term by the vector length instead of the
        /// measurement count.
        #[arg(long)]
        onsager_n: bool,
        /// Upsample reduced layers back to the source size.
        #[arg(long)]
        full_size: bool,
        /// Prefix the output with a CSWV-RAW header.
        #[arg(long)]
        header: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Keep only the layers up to `--layers`.
    Extract {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        layers: LayerArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// PSNR of a test video against a reference, as CSV.
    Metrics {
        #[arg(long = "ref")]
        reference: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        raw: RawInput,
        /// Stream to add a rate report for.
        #[arg(long)]
        stream: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the experiments of a TOML config and write CSV.
    Curves {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Arithmetic cost of conventional vs wavelet + adaptive sensing codecs.
    Complexity {
        #[arg(long)]
        n: f64,
        #[arg(long = "m-frac", default_value_t = 0.25)]
        m_frac: f64,
        #[arg(long, default_value_t = 200.0)]
        itr: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_video(path: &Path, raw: &RawInput, lenient: bool) -> Result<Vec<FramePlane>> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(mut frames) = read_raw_with_header(&bytes)? {
        if let Some(n) = raw.frames {
            frames.truncate(n);
        }
        return Ok(frames);
    }
    let (Some(width), Some(height)) = (raw.width, raw.height) else {
        bail!("{} has no CSWV-RAW header; pass --width and --height", path.display());
    };
    let layout = if raw.yuv420 { RawLayout::Yuv420 } else { RawLayout::Gray };
    let count = raw.frames.unwrap_or_else(|| count_raw_frames(bytes.len(), width, height, layout));
    if lenient && !raw.yuv420 {
        return Ok(read_raw_planes(&bytes, width, height, count)?);
    }
    Ok(read_raw_video_with_layout(&bytes, width, height, count, layout)?)
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn dump_bands(frames: &[FramePlane], path: &Path) -> Result<()> {
    let mut w = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(w, "gof,band,layer,width,height,energy")?;
    for gof in partition_gofs(frames)?.gofs {
        for (region, energy) in dwt3d_forward(&gof)?.band_energies() {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                gof.gof_index(),
                region.tag.name(),
                region.tag.layer().name(),
                region.width,
                region.height,
                energy
            )?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode { input, raw, threshold, bits, seed, target_min_n, fps, out, dump_bands: bands } => {
            let frames = load_video(&input, &raw, false)?;
            if let Some(path) = bands {
                dump_bands(&frames, &path)?;
            }
            let config = EncoderConfig { threshold, quant_bits: bits, master_seed: seed, target_min_n, fps };
            let stream = encode_video(&frames, &config)?;
            write_file(&out, &stream)?;
            let rate = rate_report(&stream)?;
            eprintln!(
                "{} frames -> {} bytes, compression ratio {:.2}, measurements {:.2}%",
                frames.len(),
                stream.len(),
                rate.compression_ratio,
                rate.measurement_percentage
            );
        }
        Command::Decode { input, layers, algo, iterations, onsager_n, full_size, header, out } => {
            let stream = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            let stream = extract_layers(&stream, layers.into())?;
            let mut config = RecoveryConfig { algorithm: algo.into(), iterations, ..Default::default() };
            if onsager_n {
                config.onsager_divisor = OnsagerDivisor::VectorLength;
            }
            let frames = if full_size {
                decode_full_size(&stream, &config)?
            } else {
                let decoded = decode(&stream, &config)?;
                eprintln!(
                    "{} frames of {}x{} at {} fps",
                    decoded.frames.len(),
                    decoded.frames.first().map_or(0, |f| f.width()),
                    decoded.frames.first().map_or(0, |f| f.height()),
                    decoded.frame_rate
                );
                decoded.frames
            };
            let bytes = if header { write_raw_with_header(&frames) } else { write_raw_video(&frames) };
            write_file(&out, &bytes)?;
        }
        Command::Extract { input, layers, out } => {
            let stream = fs::read(&input).with_context(|| format!("reading {}", input.display()))?;
            write_file(&out, &extract_layers(&stream, layers.into())?)?;
        }
        Command::Metrics { reference, test, raw, stream, out } => {
            let reference = load_video(&reference, &raw, true)?;
            let test = load_video(&test, &raw, true)?;
            let report = psnr(&reference, &test)?;
            let mut w = output(&out)?;
            writeln!(w, "metric,frame,value")?;
            for (i, p) in report.per_frame.iter().enumerate() {
                writeln!(w, "psnr,{i},{p}")?;
            }
            writeln!(w, "psnr_average,,{}", report.frame_average)?;
            writeln!(w, "psnr_pooled,,{}", report.pooled)?;
            if let Some(path) = stream {
                let bytes = fs::read(&path).with_context(|| format!("reading {}", path.display()))?;
                let rate = rate_report(&bytes)?;
                writeln!(w, "raw_bits,,{}", rate.raw_bits)?;
                writeln!(w, "coded_bits,,{}", rate.coded_bits)?;
                writeln!(w, "compression_ratio,,{}", rate.compression_ratio)?;
                writeln!(w, "measurement_percentage,,{}", rate.measurement_percentage)?;
            }
        }
        Command::Curves { config, out } => {
            let text = fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let rows = emit_curves(&ExperimentConfig::from_toml(&text)?)?;
            write_csv(&rows, output(&out)?)?;
        }
        Command::Complexity { n, m_frac, itr, out } => {
            let r = complexity_report(n, m_frac, itr)?;
            let mut w = output(&out)?;
            writeln!(w, "system,stage,multipliers,adders")?;
            let rows = [
                ("conventional", "encoder", r.conventional_encoder),
                ("conventional", "decoder", r.conventional_decoder),
                ("conventional", "total", r.conventional),
                ("proposed", "encoder", r.proposed_encoder),
                ("proposed", "decoder", r.proposed_decoder),
                ("proposed", "total", r.proposed),
            ];
            for (system, stage, ops) in rows {
                writeln!(w, "{system},{stage},{},{}", ops.multipliers, ops.adders)?;
            }
            match r.multiplier_ratio {
                Some(ratio) => writeln!(w, "ratio,multipliers,{ratio},")?,
                None => writeln!(w, "ratio,multipliers,inf,")?,
            }
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
