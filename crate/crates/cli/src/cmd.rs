use std::fmt;
use std::path::Path;

use lutfilt_core::compact::CompactedLut;
use lutfilt_core::container::{LutFile, LutKind};
use lutfilt_core::io;
use lutfilt_core::lut::Sampling;
use lutfilt_core::lutgen::{cache_clipped, Oracle};
use lutfilt_core::metrics::{psnr, OpCounter, OpReport};
use lutfilt_core::pattern::Pattern;
use lutfilt_core::pipeline::{pipeline_stats, PatternRef, Pipeline, PipelineConfig, RunOptions};
use lutfilt_core::plane::{ChromaFormat, Frame, Plane};
use lutfilt_core::rd::{rd_decide_frame, RdParams};
use lutfilt_core::table::Table;
use lutfilt_core::verify::{run_suite, Suite, VerifyOptions};
use lutfilt_core::Error;

use crate::{BuildArgs, CompactArgs, FilterArgs, PresetArgs, StatsArgs, VerifyArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(Error),
    Verify(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Verify(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Data(e)
    }
}

type Res<T = ()> = Result<T, CliError>;

fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(Error::Format(msg.into()))
}

fn load_pattern(arg: &str) -> Res<Pattern> {
    if let Ok(id) = arg.parse::<u8>() {
        return Pattern::builtin(id).map_err(usage);
    }
    let text = std::fs::read_to_string(arg).map_err(Error::from)?;
    let r: PatternRef =
        serde_json::from_str(&text).map_err(|e| data(format!("{arg}: not a pattern: {e}")))?;
    Ok(r.resolve()?)
}

pub fn build(a: &BuildArgs) -> Res {
    let sampling = Sampling::new(a.q).map_err(usage)?;
    let file = match (a.channel, &a.pattern) {
        (Some(k), _) => {
            let o = Oracle::parse(&a.oracle, k).map_err(usage)?;
            LutFile::channel(cache_clipped(&o, sampling, o.outputs()).map_err(usage)?)
        }
        (None, Some(p)) => {
            let pattern = load_pattern(p)?;
            let o = Oracle::parse(&a.oracle, pattern.len()).map_err(usage)?;
            let lut = cache_clipped(&o, sampling, o.outputs()).map_err(usage)?;
            LutFile::spatial(pattern.offsets().to_vec(), Table::Clipped(lut))
        }
        (None, None) => return Err(usage("either --pattern or --channel is required")),
    };
    file.write(&a.out)?;
    let t = &file.table;
    println!(
        "wrote {}: {}-D, {} channel(s), q={}, {} payload bytes",
        a.out.display(),
        t.dims(),
        t.channels(),
        t.sampling().q(),
        t.payload_bytes()
    );
    Ok(())
}

pub fn compact(a: &CompactArgs) -> Res {
    let file = LutFile::read(&a.input)?;
    let (pattern, clipped) = match (&file.kind, &file.pattern, &file.table) {
        (LutKind::Clipped, Some(p), Table::Clipped(c)) => (p.clone(), c),
        _ => return Err(data(format!("{}: only clipped spatial tables can be compacted", a.input.display()))),
    };
    let c = CompactedLut::new(clipped, a.dw, a.shift, a.p).map_err(usage)?;
    let before = clipped.payload_bytes();
    let out = LutFile::spatial(pattern, Table::Compacted(c));
    out.write(&a.out)?;
    let after = out.table.payload_bytes();
    println!(
        "wrote {}: {before} -> {after} payload bytes ({:.1}%)",
        a.out.display(),
        100.0 * after as f64 / before as f64
    );
    Ok(())
}

fn is_pgm(p: &Path) -> bool {
    p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
}

fn read_frames(path: &Path, size: Option<(usize, usize)>) -> Res<Vec<Frame>> {
    if is_pgm(path) {
        let plane = io::read_pgm(path)?;
        if let Some((w, h)) = size {
            if (w, h) != (plane.width(), plane.height()) {
                return Err(data(format!(
                    "{} is {}x{}, --size says {w}x{h}",
                    path.display(),
                    plane.width(),
                    plane.height()
                )));
            }
        }
        return Ok(vec![Frame::gray(plane)]);
    }
    let (w, h) = size.ok_or_else(|| usage("--size is required for raw YUV input"))?;
    Ok(io::read_yuv420(path, w, h)?)
}

fn planes(f: &Frame) -> Vec<(&'static str, &Plane)> {
    match f.chroma_format {
        ChromaFormat::GrayOnly => vec![("Y", &f.y)],
        _ => vec![("Y", &f.y), ("U", &f.u), ("V", &f.v)],
    }
}

fn psnr_line(reference: &Frame, frame: &Frame) -> Res<String> {
    let mut parts = Vec::new();
    for ((name, a), (_, b)) in planes(reference).into_iter().zip(planes(frame)) {
        parts.push(format!("{name} {:.2}", psnr(a, b)?));
    }
    Ok(parts.join(", "))
}

fn load(config: &Path) -> Res<Pipeline> {
    let (cfg, base) = PipelineConfig::read(config)?;
    Ok(cfg.resolve(&base)?)
}

pub fn filter(a: &FilterArgs) -> Res {
    let opts = RunOptions::from_env().map_err(usage)?;
    if is_pgm(&a.input) != is_pgm(&a.out) {
        return Err(usage("--in and --out must both be PGM or both be raw YUV"));
    }
    let rd = match a.rd_lambda {
        Some(lambda) => {
            let p = RdParams { lambda, ..RdParams::default() };
            p.validate().map_err(usage)?;
            Some(lambda)
        }
        None => None,
    };
    let pipeline = load(&a.config)?;
    let inputs = read_frames(&a.input, a.size)?;
    let size = Some((inputs[0].width(), inputs[0].height()));
    let refs = match &a.reference {
        Some(r) => {
            let fr = if is_pgm(&a.input) { read_frames(r, size)? } else { read_frames(r, a.size)? };
            if fr.len() != inputs.len() || fr.iter().zip(&inputs).any(|(x, y)| !x.y.same_dims(&y.y)) {
                return Err(data("reference and input differ in frame count or size"));
            }
            Some(fr)
        }
        None => None,
    };

    let mut outputs = Vec::with_capacity(inputs.len());
    let mut total = OpCounter::default();
    for (i, f) in inputs.iter().enumerate() {
        let (mut out, ops) = pipeline.run_with::<OpCounter>(f, &opts)?;
        total.merge(&ops);
        if let Some(refs) = &refs {
            let r = &refs[i];
            println!("frame {i}: PSNR before {} dB, after {} dB", psnr_line(r, f)?, psnr_line(r, &out)?);
            if let Some(lambda) = rd {
                let params = RdParams { lambda, ..pipeline.rd().clone() };
                let (flags, merged) = rd_decide_frame(r, f, &out, &params)?;
                let on = flags.iter().filter(|d| d.chosen).count();
                println!(
                    "frame {i}: RD lambda {lambda}: {on}/{} flags on, PSNR {} dB",
                    flags.len(),
                    psnr_line(r, &merged)?
                );
                out = merged;
            }
        }
        outputs.push(out);
    }

    if is_pgm(&a.out) {
        io::write_pgm(&a.out, &outputs[0].y)?;
    } else {
        io::write_yuv420(&a.out, &outputs)?;
    }
    if let Some(path) = &a.stats {
        let (w, h) = (inputs[0].width(), inputs[0].height());
        let report = serde_json::json!({
            "frames": inputs.len(),
            "width": w,
            "height": h,
            "ops": OpReport::new(&total, (w * h * inputs.len()) as u64)?,
            "luma_lut_bytes": pipeline.luma_bytes(),
            "chroma_lut_bytes": pipeline.chroma_bytes(),
        });
        let text = serde_json::to_string_pretty(&report).map_err(Error::from)?;
        io::write_atomic(path, text.as_bytes())?;
    }
    println!("wrote {} ({} frame(s))", a.out.display(), outputs.len());
    Ok(())
}

pub fn stats(a: &StatsArgs) -> Res {
    let opts = RunOptions::from_env().map_err(usage)?;
    let pipeline = load(&a.config)?;
    let (w, h) = a.size;
    let report = pipeline_stats(&pipeline, w, h, &opts)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(Error::from)?);
    } else {
        println!("{report}");
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> Res {
    let suite: Suite = a.suite.parse().map_err(usage)?;
    if a.samples == 0 || a.stride == 0 {
        return Err(usage("--samples and --stride must be positive"));
    }
    let opts = VerifyOptions {
        samples_4d: a.samples,
        stride_3d: a.stride,
    };
    let report = run_suite(suite, &opts)?;
    println!("{report}");
    if report.passed() {
        Ok(())
    } else {
        let failed = report.checks.iter().filter(|c| !c.passed).count();
        Err(CliError::Verify(format!("{failed} check(s) failed")))
    }
}

pub fn preset(a: &PresetArgs) -> Res {
    let mut cfg = match a.name.as_str() {
        "identity" => PipelineConfig::identity(),
        "smoothing" => PipelineConfig::smoothing(),
        other => return Err(usage(format!("unknown preset {other:?}, expected identity or smoothing"))),
    };
    if !a.compact_dw.is_empty() {
        cfg = cfg.with_luma_compaction(&a.compact_dw, a.shift, a.p).map_err(usage)?;
        // surface bad (dw, Q, p) now rather than at filter time
        cfg.resolve(Path::new(".")).map_err(usage)?;
    }
    io::write_atomic(&a.out, cfg.to_json()?.as_bytes())?;
    println!("wrote {}", a.out.display());
    Ok(())
}
