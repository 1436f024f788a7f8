//! Browser bindings for the demo page in `www/`.
//!
//! Three interactive pieces: denoising a synthetic image with the smoothing
//! LUT pipeline and a block on/off merge, inspecting the 4-simplex weights for a query, and compaction
//! storage for a diagonal width.

use std::cell::OnceCell;
use std::path::Path;

use lutfilt_core::interp::Plan;
use lutfilt_core::lutgen::{diag_count, storage_size_clipped, storage_size_compacted, StorageQuery};
use lutfilt_core::metrics::{psnr, NoOps};
use lutfilt_core::pipeline::{run_pipeline, Pipeline, PipelineConfig};
use lutfilt_core::plane::{Frame, Plane};
use lutfilt_core::rd::{rd_decide_frame, RdParams};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use wasm_bindgen::prelude::*;

thread_local! {
    static SMOOTHING: OnceCell<Pipeline> = const { OnceCell::new() };
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn js<T>(r: Result<T, String>) -> Result<T, JsError> {
    r.map_err(|e| JsError::new(&e))
}

/// Ramp with a few hard edges, so both smoothing and edge damage show.
fn scene(w: usize, h: usize) -> Plane {
    Plane::from_fn(w, h, |y, x| {
        let ramp = 40 + x * 140 / w + y * 40 / h;
        let (cx, cy) = (x as i64 - w as i64 * 2 / 3, y as i64 - h as i64 / 2);
        let disc = cx * cx + cy * cy < (w as i64 / 6).pow(2);
        let bar = (h / 5..h / 5 + h / 10).contains(&y) && x < w / 2;
        if disc {
            215
        } else if bar {
            30
        } else {
            ramp as u8
        }
    })
}

/// Result of one denoising run: three images plus their quality.
#[wasm_bindgen]
pub struct Denoised {
    width: usize,
    height: usize,
    clean: Vec<u8>,
    noisy: Vec<u8>,
    filtered: Vec<u8>,
    merged: Vec<u8>,
    psnr_noisy: f64,
    psnr_filtered: f64,
    psnr_merged: f64,
    blocks_on: usize,
    blocks: usize,
}

#[wasm_bindgen]
impl Denoised {
    #[wasm_bindgen(getter)]
    pub fn width(&self) -> usize {
        self.width
    }
    #[wasm_bindgen(getter)]
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn clean(&self) -> Vec<u8> {
        self.clean.clone()
    }
    pub fn noisy(&self) -> Vec<u8> {
        self.noisy.clone()
    }
    pub fn filtered(&self) -> Vec<u8> {
        self.filtered.clone()
    }
    /// Filtered blocks where they beat the noisy input, noisy elsewhere.
    pub fn merged(&self) -> Vec<u8> {
        self.merged.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn psnr_noisy(&self) -> f64 {
        self.psnr_noisy
    }
    #[wasm_bindgen(getter)]
    pub fn psnr_filtered(&self) -> f64 {
        self.psnr_filtered
    }
    #[wasm_bindgen(getter)]
    pub fn psnr_merged(&self) -> f64 {
        self.psnr_merged
    }
    #[wasm_bindgen(getter)]
    pub fn blocks_on(&self) -> usize {
        self.blocks_on
    }
    #[wasm_bindgen(getter)]
    pub fn blocks(&self) -> usize {
        self.blocks
    }
}

/// Adds Gaussian noise of `sigma` to the demo scene, runs the luma chain and
/// keeps the filtered `block`-sized tiles that lower the error.
#[wasm_bindgen]
pub fn denoise(width: usize, height: usize, sigma: f64, seed: u64, block: usize) -> Result<Denoised, JsError> {
    js(denoise_scene(width, height, sigma, seed, block))
}

fn denoise_scene(width: usize, height: usize, sigma: f64, seed: u64, block: usize) -> Result<Denoised, String> {
    if width == 0 || height == 0 || width > 1024 || height > 1024 {
        return Err(err("size must be in 1..=1024"));
    }
    let normal = Normal::new(0.0, sigma).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let clean = scene(width, height);
    let noisy = Plane::from_fn(width, height, |y, x| {
        (clean.get(y, x) as f64 + normal.sample(&mut rng)).round().clamp(0.0, 255.0) as u8
    });
    let filtered = SMOOTHING.with(|cell| -> Result<Plane, String> {
        let p = match cell.get() {
            Some(p) => p,
            None => {
                let p = PipelineConfig::smoothing().resolve(Path::new(".")).map_err(err)?;
                cell.get_or_init(|| p)
            }
        };
        Ok(run_pipeline(p, &Frame::gray(noisy.clone())).map_err(err)?.y)
    })?;
    let params = RdParams { block, ..RdParams::default() };
    let (orig, recon, filt) = (Frame::gray(clean), Frame::gray(noisy), Frame::gray(filtered));
    let (flags, merged) = rd_decide_frame(&orig, &recon, &filt, &params).map_err(err)?;
    Ok(Denoised {
        width,
        height,
        psnr_noisy: psnr(&orig.y, &recon.y).map_err(err)?,
        psnr_filtered: psnr(&orig.y, &filt.y).map_err(err)?,
        psnr_merged: psnr(&orig.y, &merged.y).map_err(err)?,
        blocks_on: flags.iter().filter(|d| d.chosen).count(),
        blocks: flags.len(),
        clean: orig.y.into_data(),
        noisy: recon.y.into_data(),
        filtered: filt.y.into_data(),
        merged: merged.y.into_data(),
    })
}

/// Simplex vertices for a 4-D query with the given low bits (0..=15 each),
/// flattened as `[weight, b0, b1, b2, b3]` per vertex, where `b` are the
/// per-axis steps from the cell origin.
#[wasm_bindgen]
pub fn simplex_vertices(l0: u8, l1: u8, l2: u8, l3: u8) -> Result<Vec<i32>, JsError> {
    js(vertices([l0, l1, l2, l3]))
}

fn vertices(lsb: [u8; 4]) -> Result<Vec<i32>, String> {
    if lsb.iter().any(|&l| l > 15) {
        return Err(err("low bits must be in 0..=15"));
    }
    // msb 1 on every axis; nodes come back as 1 or 2
    let px = lsb.map(|l| 16 + l);
    let plan = Plan::simplex(&px, 4, &mut NoOps);
    let mut out = Vec::with_capacity(25);
    for (w, nodes) in plan.vertices() {
        out.push(w);
        out.extend(nodes.iter().map(|&n| n as i32 - 1));
    }
    Ok(out)
}

/// `[clipped, diagonal, coarse, diagonal pairs]` bytes of one 4-D table.
#[wasm_bindgen]
pub fn compaction_bytes(dw: u32, shift: u8, p: u32) -> Result<Vec<f64>, JsError> {
    js(storage(dw, shift, p))
}

fn storage(dw: u32, shift: u8, p: u32) -> Result<Vec<f64>, String> {
    let clipped = storage_size_clipped(&StorageQuery::new(4, 4, 1)).map_err(err)?;
    let mut q = StorageQuery::new(4, 4, 1);
    q.dw = Some(dw);
    q.shift = Some(shift);
    q.compact_dims = Some(p);
    let (d, nd) = storage_size_compacted(&q).map_err(err)?;
    let pairs = diag_count(dw, 17).map_err(err)?;
    Ok(vec![clipped as f64, d as f64, nd as f64, pairs as f64])
}

/// Row-major 17x17 mask of the node pairs kept by the diagonal table.
#[wasm_bindgen]
pub fn diagonal_mask(dw: u32) -> Vec<u8> {
    (0..17i64)
        .flat_map(|i| (0..17i64).map(move |j| u8::from((i - j).unsigned_abs() <= dw as u64)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_never_loses_and_heavy_noise_is_reduced() {
        let d = denoise_scene(64, 48, 8.0, 1, 16).unwrap();
        assert_eq!(d.merged().len(), 64 * 48);
        assert!(d.psnr_merged >= d.psnr_noisy && d.psnr_merged >= d.psnr_filtered);
        assert_eq!(d.blocks, 12);
        let d = denoise_scene(64, 48, 25.0, 2, 16).unwrap();
        assert!(d.psnr_filtered > d.psnr_noisy, "{} {}", d.psnr_noisy, d.psnr_filtered);
        assert!(denoise_scene(64, 48, 8.0, 1, 3).is_err());
    }

    #[test]
    fn vertices_conserve_weight() {
        let v = vertices([3, 15, 0, 7]).unwrap();
        assert_eq!(v.len(), 25);
        assert_eq!(v.chunks(5).map(|c| c[0]).sum::<i32>(), 16);
        assert_eq!(&v[1..5], &[0, 0, 0, 0]);
    }

    #[test]
    fn mask_and_bytes_agree() {
        let ones = diagonal_mask(2).iter().filter(|&&m| m == 1).count();
        let b = storage(2, 1, 2).unwrap();
        assert_eq!(ones as f64, b[3]);
        assert_eq!(b[3], 79.0);
        assert_eq!(b[0], 83_521.0);
    }
}
