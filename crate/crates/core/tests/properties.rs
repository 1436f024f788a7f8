//! Randomized properties of retrieval, the pipeline graph and the file formats.

mod support;

use std::path::Path;
use std::sync::Arc;

use lutfilt_core::compact::CompactedLut;
use lutfilt_core::container::LutFile;
use lutfilt_core::interp::{self, Plan};
use lutfilt_core::io;
use lutfilt_core::lut::{ClippedLut, Sampling, Signedness};
use lutfilt_core::lutgen::{cache_clipped, Oracle};
use lutfilt_core::metrics::{energy_per_pixel, ssd, NoOps, OpCounter};
use lutfilt_core::pattern::Pattern;
use lutfilt_core::pipeline::{
    pipeline_stats, run_pipeline, run_pipeline_counted, Branch, PipelineConfig, RunOptions, SpatialStage, Stage,
};
use lutfilt_core::plane::{Frame, Plane};
use lutfilt_core::rd::{rd_decide_frame, RdParams};
use lutfilt_core::table::Table;
use proptest::prelude::*;
use rand::Rng;
use support::*;

fn random_lut(seed: u64, dims: usize, channels: usize, sign: Signedness) -> ClippedLut {
    let mut r = rng(seed);
    let (lo, hi) = sign.range();
    ClippedLut::from_fn(dims, channels, Sampling::default(), sign, |_, o| {
        for v in o.iter_mut() {
            *v = r.gen_range(lo..=hi);
        }
    })
    .unwrap()
}

fn plane_strategy(max: usize) -> impl Strategy<Value = Plane> {
    (1..=max, 1..=max).prop_flat_map(|(w, h)| {
        prop::collection::vec(any::<u8>(), w * h).prop_map(move |d| Plane::new(w, h, d).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn retrieval_stays_within_cell_values(seed in any::<u64>(), px in prop::array::uniform4(any::<u8>()), dims in 2usize..=4) {
        let lut = random_lut(seed, dims, 1, Signedness::UnsignedPixel);
        let plan = Plan::for_dims(dims, &px[..dims], 4, &mut NoOps);
        let vals: Vec<i32> = plan.used_vertices().map(|n| {
            let nodes: Vec<usize> = n.iter().map(|&i| i as usize).collect();
            lut.entry(&nodes)[0] as i32
        }).collect();
        let mut out = [0];
        interp::retrieve(&lut, &px[..dims], &mut out).unwrap();
        let (lo, hi) = (*vals.iter().min().unwrap(), *vals.iter().max().unwrap());
        prop_assert!(lo <= out[0] && out[0] <= hi, "{} outside {}..={}", out[0], lo, hi);
    }

    #[test]
    fn constant_tables_return_the_constant(c in -128i32..=127, px in prop::array::uniform4(any::<u8>())) {
        let lut = ClippedLut::from_fn(4, 1, Sampling::default(), Signedness::SignedOffset, |_, o| o[0] = c).unwrap();
        prop_assert_eq!(interp::simplex4(&lut, px[0], px[1], px[2], px[3]).unwrap(), vec![c]);
        let lut3 = ClippedLut::from_fn(3, 1, Sampling::default(), Signedness::SignedOffset, |_, o| o[0] = c).unwrap();
        prop_assert_eq!(interp::trilinear(&lut3, px[0], px[1], px[2]).unwrap(), vec![c]);
    }

    #[test]
    fn ensembled_stage_commutes_with_rotation(plane in plane_strategy(20), a in 0i32..=128, b in 0i32..=64) {
        let c = 256 - a - b;
        let o = Oracle::parse(&format!("weighted:{a},{b},{},{}", c / 2, c - c / 2), 4).unwrap();
        let t = Arc::new(Table::from(cache_clipped(&o, Sampling::default(), 1).unwrap()));
        let branches = [2u8, 5].iter().map(|&i| Branch::new(Pattern::builtin(i).unwrap(), t.clone()).unwrap()).collect();
        let s = Stage::Spatial(SpatialStage::uniform(branches, 1, 1).unwrap());
        let opts = RunOptions::default();
        let (x, _) = s.apply::<NoOps>(&[plane.rot90()], &opts).unwrap();
        let (y, _) = s.apply::<NoOps>(&[plane], &opts).unwrap();
        prop_assert_eq!(&x[0], &y[0].rot90());
    }

    #[test]
    fn pgm_roundtrip(plane in plane_strategy(40)) {
        prop_assert_eq!(io::decode_pgm(&io::encode_pgm(&plane)).unwrap(), plane);
    }

    #[test]
    fn yuv_roundtrip(seed in any::<u64>(), w in 1usize..24, h in 1usize..24, n in 1usize..3) {
        let mut r = rng(seed);
        let frames: Vec<Frame> = (0..n).map(|_| random_frame(&mut r, w, h)).collect();
        let bytes = io::encode_yuv420(&frames).unwrap();
        prop_assert_eq!(bytes.len(), n * io::yuv420_frame_bytes(w, h));
        prop_assert_eq!(io::decode_yuv420(&bytes, w, h).unwrap(), frames);
    }

    #[test]
    fn rd_at_zero_lambda_never_loses(seed in any::<u64>(), w in 2usize..40, h in 2usize..40, half in 1usize..10) {
        let mut r = rng(seed);
        let (o, rec, f) = (random_frame(&mut r, w, h), random_frame(&mut r, w, h), random_frame(&mut r, w, h));
        let params = RdParams { block: 2 * half, ..RdParams::default() };
        for joint in [true, false] {
            let p = RdParams { joint, ..params.clone() };
            let (_, m) = rd_decide_frame(&o, &rec, &f, &p).unwrap();
            let total = |a: &Frame| ssd(&o.y, &a.y).unwrap() + ssd(&o.u, &a.u).unwrap() + ssd(&o.v, &a.v).unwrap();
            prop_assert!(total(&m) <= total(&rec));
            if !joint {
                prop_assert!(ssd(&o.y, &m.y).unwrap() <= ssd(&o.y, &rec.y).unwrap());
            }
        }
    }
}

#[test]
fn container_roundtrips_every_kind() {
    for (i, (dims, ch, sign)) in [(4, 1, Signedness::UnsignedPixel), (4, 2, Signedness::UnsignedPixel), (3, 1, Signedness::SignedOffset)]
        .into_iter()
        .enumerate()
    {
        let lut = random_lut(i as u64, dims, ch, sign);
        let pat: Vec<(i8, i8)> = (0..dims as i8).map(|k| (k, -k)).collect();
        let files = vec![
            LutFile::spatial(pat.clone(), Table::Clipped(lut.clone())),
            LutFile::spatial(pat, Table::Compacted(CompactedLut::new(&lut, 2, 1, dims.min(3)).unwrap())),
            LutFile::channel(lut),
        ];
        for f in files {
            let bytes = f.encode().unwrap();
            assert_eq!(LutFile::decode(&bytes).unwrap(), f);
            assert!(LutFile::decode(&bytes[..bytes.len() - 1]).is_err());
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.lutf");
    let f = LutFile::channel(random_lut(9, 2, 2, Signedness::UnsignedPixel));
    f.write(&path).unwrap();
    assert_eq!(LutFile::read(&path).unwrap(), f);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1, "temp file left behind");
}

#[test]
fn counts_scale_with_area_and_ignore_workers() {
    let p = PipelineConfig::smoothing().resolve(Path::new(".")).unwrap();
    // clipped tables take one path per pixel, so cost is linear in area
    let count = |w, h, t| {
        let f = Frame::gray(Plane::filled(w, h, 77));
        run_pipeline_counted(&p, &f, &RunOptions::with_threads(t).unwrap()).unwrap().1
    };
    let small: OpCounter = count(16, 8, 1);
    assert_eq!(count(32, 16, 1), small.scaled(4));
    assert_eq!(count(32, 16, 3), small.scaled(4));
}

#[test]
fn energy_grows_with_every_stage() {
    let full = PipelineConfig::smoothing();
    let mut last = 0.0;
    for k in 1..=4 {
        let mut cfg = full.clone();
        cfg.luma = vec![full.chroma[0].clone(); k];
        cfg.chroma.clear();
        cfg.cross_component = None;
        let p = cfg.resolve(Path::new(".")).unwrap();
        let e = pipeline_stats(&p, 32, 32, &RunOptions::default()).unwrap().ops.energy_pj_per_pixel;
        assert!(e > last, "{k} stages: {e} <= {last}");
        last = e;
    }
    let p = full.resolve(Path::new(".")).unwrap();
    let e = pipeline_stats(&p, 32, 32, &RunOptions::default()).unwrap().ops.energy_pj_per_pixel;
    assert!(e > last);
    // chroma chain length
    let mut prev = 0.0;
    for k in 0..=3 {
        let mut cfg = full.clone();
        cfg.chroma.truncate(k);
        let p = cfg.resolve(Path::new(".")).unwrap();
        let (_, ops) = run_pipeline_counted(&p, &random_frame(&mut rng(1), 16, 16), &RunOptions::default()).unwrap();
        let e = energy_per_pixel(&ops, 256).unwrap();
        assert!(e > prev);
        prev = e;
    }
}

#[test]
fn identity_pipeline_keeps_odd_sized_frames() {
    let p = PipelineConfig::identity().resolve(Path::new(".")).unwrap();
    let mut r = rng(11);
    for (w, h) in [(1, 1), (3, 5), (17, 2)] {
        let f = random_frame(&mut r, w, h);
        assert_eq!(run_pipeline(&p, &f).unwrap(), f);
    }
}
