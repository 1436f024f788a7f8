//! 8-bit pixel rasters and the frame carrier used by the luma and chroma
//! filters.

use crate::error::{Error, Result};

/// Saturates a signed intermediate to the 8-bit pixel range.
#[inline(always)]
pub fn clip_u8(x: i32) -> u8 {
    x.clamp(0, 255) as u8
}

/// A row-major 8-bit sample plane.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::PlaneSize {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [u8] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: u8) {
        self.data[y * self.width + x] = v;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    /// Replicate-padded fetch.
    pub fn pad_fetch(&self, y: isize, x: isize) -> Result<u8> {
        if self.is_empty() {
            return Err(Error::EmptyPlane);
        }
        Ok(self.fetch_clamped(y, x))
    }

    /// Replicate-padded fetch without the emptiness check. The plane must be
    /// non-empty.
    #[inline(always)]
    pub(crate) fn fetch_clamped(&self, y: isize, x: isize) -> u8 {
        let yy = y.clamp(0, self.height as isize - 1) as usize;
        let xx = x.clamp(0, self.width as isize - 1) as usize;
        self.data[yy * self.width + xx]
    }

    /// Rotates the plane by 90 degrees counter-clockwise.
    pub fn rot90(&self) -> Plane {
        let (w, h) = (self.width, self.height);
        // new[y'][x'] = old[x'][w-1-y'], new dims h x w
        Plane::from_fn(h, w, |ny, nx| self.get(nx, w - 1 - ny))
    }

    pub fn same_dims(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChromaFormat {
    Yuv420,
    GrayOnly,
}

/// Luma plus optional 4:2:0 chroma.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub u: Plane,
    pub v: Plane,
    pub chroma_format: ChromaFormat,
}

impl Frame {
    pub fn gray(y: Plane) -> Self {
        Self {
            y,
            u: Plane::default(),
            v: Plane::default(),
            chroma_format: ChromaFormat::GrayOnly,
        }
    }

    pub fn yuv420(y: Plane, u: Plane, v: Plane) -> Result<Self> {
        let (cw, ch) = chroma_dims(y.width(), y.height());
        for (name, p) in [("u", &u), ("v", &v)] {
            if p.width() != cw || p.height() != ch {
                return Err(Error::Dimension(format!(
                    "{name} plane is {}x{}, expected {cw}x{ch} for 4:2:0",
                    p.width(),
                    p.height()
                )));
            }
        }
        Ok(Self {
            y,
            u,
            v,
            chroma_format: ChromaFormat::Yuv420,
        })
    }

    pub fn width(&self) -> usize {
        self.y.width()
    }

    pub fn height(&self) -> usize {
        self.y.height()
    }
}

/// Chroma plane dimensions for a 4:2:0 frame.
pub fn chroma_dims(width: usize, height: usize) -> (usize, usize) {
    (width.div_ceil(2), height.div_ceil(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clip() {
        assert_eq!(clip_u8(300), 255);
        assert_eq!(clip_u8(-7), 0);
        assert_eq!(clip_u8(128), 128);
    }

    #[test]
    fn pad_fetch_replicates() {
        let one = Plane::filled(1, 1, 9);
        assert_eq!(one.pad_fetch(-5, -5).unwrap(), 9);

        let p = Plane::from_fn(3, 2, |y, x| (y * 10 + x) as u8);
        assert_eq!(p.pad_fetch(1, 2).unwrap(), 12);
        assert_eq!(p.pad_fetch(0, 1).unwrap(), 1);
        // fetching (h, w) lands on the bottom-right sample
        assert_eq!(p.pad_fetch(2, 3).unwrap(), p.get(1, 2));
        assert_eq!(p.pad_fetch(-1, 5).unwrap(), p.get(0, 2));
    }

    #[test]
    fn pad_fetch_empty_plane() {
        assert!(matches!(
            Plane::default().pad_fetch(0, 0),
            Err(Error::EmptyPlane)
        ));
    }

    #[test]
    fn size_checked() {
        assert!(Plane::new(2, 2, vec![0; 3]).is_err());
    }

    #[test]
    fn rot90_four_times_is_identity() {
        let p = Plane::from_fn(5, 3, |y, x| (y * 7 + x * 3) as u8);
        let r = p.rot90();
        assert_eq!((r.width(), r.height()), (3, 5));
        assert_eq!(r.rot90().rot90().rot90(), p);
        // top-right corner moves to top-left
        assert_eq!(r.get(0, 0), p.get(0, 4));
    }

    #[test]
    fn yuv420_dims() {
        let y = Plane::filled(5, 3, 0);
        assert!(Frame::yuv420(y.clone(), Plane::filled(3, 2, 0), Plane::filled(3, 2, 0)).is_ok());
        assert!(Frame::yuv420(y, Plane::filled(2, 2, 0), Plane::filled(3, 2, 0)).is_err());
    }
}
