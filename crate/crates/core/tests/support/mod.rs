//! Test scaffolding: a table-free reference executor that applies oracle
//! configs directly, plus deterministic random inputs.

#![allow(dead_code)]

use lutfilt_core::lutgen::Oracle;
use lutfilt_core::pattern::{Pattern, StageWeights};
use lutfilt_core::pipeline::{LutRef, LutRefs, PipelineConfig, StageConfig};
use lutfilt_core::plane::{ChromaFormat, Frame, Plane};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_plane(r: &mut impl Rng, w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |_, _| r.gen())
}

pub fn random_frame(r: &mut impl Rng, w: usize, h: usize) -> Frame {
    let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
    Frame::yuv420(random_plane(r, w, h), random_plane(r, cw, ch), random_plane(r, cw, ch)).unwrap()
}

/// Replicate padding written out independently of the library.
fn px(p: &Plane, y: i64, x: i64) -> i64 {
    let yy = y.max(0).min(p.height() as i64 - 1) as usize;
    let xx = x.max(0).min(p.width() as i64 - 1) as usize;
    p.data()[yy * p.width() + xx] as i64
}

/// Quarter turn `(dy, dx) -> (-dx, dy)` applied `r` times.
fn turn(mut o: (i64, i64), r: usize) -> (i64, i64) {
    for _ in 0..r {
        o = (-o.1, o.0);
    }
    o
}

fn oracle_spec(r: &LutRef) -> &str {
    match r {
        LutRef::Oracle(s) => s,
        LutRef::File(_) => panic!("reference executor only runs oracle configs"),
    }
}

fn clip(v: i64) -> u8 {
    v.clamp(0, 255) as u8
}

enum RefStage {
    Spatial {
        branches: Vec<(Vec<(i64, i64)>, Oracle)>,
        weights: Vec<i64>,
        v_in: usize,
        v_out: usize,
        ensemble: bool,
    },
    Channel(Oracle),
}

fn build(cfg: &[StageConfig]) -> Vec<RefStage> {
    cfg.iter()
        .map(|s| match s {
            StageConfig::Channel(c) => RefStage::Channel(Oracle::parse(oracle_spec(&c.lut), c.k).unwrap()),
            StageConfig::Spatial(sc) => {
                let pats: Vec<Pattern> = sc.patterns.iter().map(|p| p.resolve().unwrap()).collect();
                let specs: Vec<&str> = match &sc.luts {
                    LutRefs::Shared(r) => vec![oracle_spec(r); pats.len()],
                    LutRefs::PerPattern(v) => v.iter().map(oracle_spec).collect(),
                };
                let branches = pats
                    .iter()
                    .zip(specs)
                    .map(|(p, s)| {
                        let offs = p.offsets().iter().map(|&(a, b)| (a as i64, b as i64)).collect();
                        (offs, Oracle::parse(s, p.len()).unwrap())
                    })
                    .collect::<Vec<_>>();
                let w = match (&sc.weights, &sc.weights_q8) {
                    (Some(l), _) => StageWeights::from_logits(l).unwrap(),
                    (_, Some(q)) => StageWeights::from_q8(q.clone()).unwrap(),
                    _ => StageWeights::uniform(branches.len()).unwrap(),
                };
                RefStage::Spatial {
                    branches,
                    weights: w.as_slice().iter().map(|&v| v as i64).collect(),
                    v_in: sc.v_in,
                    v_out: sc.v_out,
                    ensemble: sc.rotation_ensemble,
                }
            }
        })
        .collect()
}

/// Output channel `keep` of the oracle for one pattern, ensembled.
fn branch_value(offs: &[(i64, i64)], o: &Oracle, plane: &Plane, y: i64, x: i64, ensemble: bool, keep: usize) -> i64 {
    let rots = if ensemble { 4 } else { 1 };
    let mut sum = 0;
    for r in 0..rots {
        let inputs: Vec<u8> = offs
            .iter()
            .map(|&o| {
                let (dy, dx) = turn(o, r);
                px(plane, y + dy, x + dx) as u8
            })
            .collect();
        let mut out = vec![0i32; o.outputs()];
        o.evaluate(&inputs, &mut out).unwrap();
        sum += out[keep] as i64;
    }
    if ensemble {
        (sum + 2) >> 2
    } else {
        sum
    }
}

fn run_stages(stages: &[RefStage], input: Plane) -> Plane {
    let mut planes = vec![input];
    for s in stages {
        let (w, h) = (planes[0].width(), planes[0].height());
        planes = match s {
            RefStage::Channel(o) => {
                let mut outs = vec![vec![0u8; w * h]; o.outputs()];
                for i in 0..w * h {
                    let inputs: Vec<u8> = planes.iter().map(|p| p.data()[i]).collect();
                    let mut out = vec![0i32; o.outputs()];
                    o.evaluate(&inputs, &mut out).unwrap();
                    for (c, v) in out.iter().enumerate() {
                        outs[c][i] = clip(*v as i64);
                    }
                }
                outs.into_iter().map(|d| Plane::new(w, h, d).unwrap()).collect()
            }
            RefStage::Spatial {
                branches,
                weights,
                v_in,
                v_out,
                ensemble,
            } => {
                let combine = |plane: &Plane, y: i64, x: i64, keep: usize| -> u8 {
                    if branches.len() == 1 {
                        let (offs, o) = &branches[0];
                        return clip(branch_value(offs, o, plane, y, x, *ensemble, keep));
                    }
                    let acc: i64 = branches
                        .iter()
                        .zip(weights)
                        .map(|((offs, o), &wt)| wt * branch_value(offs, o, plane, y, x, *ensemble, keep))
                        .sum();
                    clip((acc + 128) >> 8)
                };
                let at = |f: &dyn Fn(i64, i64) -> u8| Plane::from_fn(w, h, |y, x| f(y as i64, x as i64));
                match (v_in, v_out) {
                    (1, 1) => vec![at(&|y, x| combine(&planes[0], y, x, 0))],
                    (1, 2) => vec![
                        at(&|y, x| combine(&planes[0], y, x, 0)),
                        at(&|y, x| combine(&planes[0], y, x, 1)),
                    ],
                    (2, 2) => vec![
                        at(&|y, x| combine(&planes[0], y, x, 0)),
                        at(&|y, x| combine(&planes[1], y, x, 1)),
                    ],
                    (2, 1) => vec![at(&|y, x| {
                        let a = combine(&planes[0], y, x, 0) as u16;
                        let b = combine(&planes[1], y, x, 0) as u16;
                        ((a + b + 1) >> 1) as u8
                    })],
                    other => panic!("layout {other:?}"),
                }
            }
        };
    }
    assert_eq!(planes.len(), 1);
    planes.pop().unwrap()
}

/// Applies an oracle-only config without any table.
pub fn reference_run(cfg: &PipelineConfig, frame: &Frame) -> Frame {
    let y = run_stages(&build(&cfg.luma), frame.y.clone());
    if frame.chroma_format == ChromaFormat::GrayOnly {
        return Frame::gray(y);
    }
    let chroma = build(&cfg.chroma);
    let mut u = run_stages(&chroma, frame.u.clone());
    let mut v = run_stages(&chroma, frame.v.clone());
    if let Some(cc) = &cfg.cross_component {
        let ou = Oracle::parse(oracle_spec(&cc.u), 3).unwrap();
        let ov = Oracle::parse(oracle_spec(&cc.v), 3).unwrap();
        let (cw, ch) = (u.width(), u.height());
        let yco = Plane::from_fn(cw, ch, |cy, cx| {
            let (y0, x0) = (2 * cy as i64, 2 * cx as i64);
            let s = px(&frame.y, y0, x0) + px(&frame.y, y0, x0 + 1) + px(&frame.y, y0 + 1, x0) + px(&frame.y, y0 + 1, x0 + 1);
            ((s + 2) / 4) as u8
        });
        let nu = Plane::from_fn(cw, ch, |cy, cx| {
            let (yc, uu, vv) = (yco.get(cy, cx), frame.u.get(cy, cx), frame.v.get(cy, cx));
            clip(u.get(cy, cx) as i64 + ou.eval1(&[yc, uu, vv]) as i64)
        });
        let nv = Plane::from_fn(cw, ch, |cy, cx| {
            let (yc, uu, vv) = (yco.get(cy, cx), frame.u.get(cy, cx), frame.v.get(cy, cx));
            clip(v.get(cy, cx) as i64 + ov.eval1(&[yc, vv, uu]) as i64)
        });
        u = nu;
        v = nv;
    }
    Frame::yuv420(y, u, v).unwrap()
}

pub fn max_abs_diff(a: &Plane, b: &Plane) -> i32 {
    assert!(a.same_dims(b));
    a.data()
        .iter()
        .zip(b.data())
        .map(|(&p, &q)| (p as i32 - q as i32).abs())
        .max()
        .unwrap_or(0)
}

/// Nonnegative Q8 coefficients summing to at most 256 and a bias keeping the
/// output inside 0..=255, so the oracle never clips.
pub fn random_affine(r: &mut impl Rng, n: usize) -> String {
    let mut left = 256i32;
    let mut coeffs = Vec::with_capacity(n);
    for i in 0..n {
        let c = if i + 1 == n { r.gen_range(0..=left) } else { r.gen_range(0..=left / 2) };
        left -= c;
        coeffs.push(c);
    }
    let sum: i32 = coeffs.iter().sum();
    let headroom = 255 - (255 * sum + 255) / 256;
    let bias = r.gen_range(0..=headroom.max(0));
    let cs: Vec<String> = coeffs.iter().map(|c| c.to_string()).collect();
    format!("weighted:{}:{bias}", cs.join(","))
}

/// 256x256 horizontal-plus-vertical ramp.
pub fn gradient(w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |y, x| (16 + (x * 160) / w + (y * 64) / h) as u8)
}

pub fn add_gaussian_noise(p: &Plane, sigma: f64, seed: u64) -> Plane {
    use rand_distr::{Distribution, Normal};
    let mut r = rng(seed);
    let n = Normal::new(0.0, sigma).unwrap();
    Plane::from_fn(p.width(), p.height(), |y, x| {
        (p.get(y, x) as f64 + n.sample(&mut r)).round().clamp(0.0, 255.0) as u8
    })
}
