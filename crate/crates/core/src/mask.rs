//! Binary and probabilistic instance masks.
//!
//! [`BitMask`] stores one bit per pixel, row-major, with every row padded to
//! a whole number of 64-bit words. Padding bits are always zero, so derived
//! equality and popcount-based overlap counts are exact.

use crate::error::{Error, Result};

const WORD: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMask {
    width: u32,
    height: u32,
    stride: usize,
    words: Vec<u64>,
}

impl std::fmt::Debug for BitMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BitMask")
            .field("width", &self.width)
            .field("height", &self.height)
            .field("count", &self.count())
            .finish()
    }
}

pub(crate) fn check_dims(width: u32, height: u32) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidValue(format!(
            "mask dimensions must be positive, got {width}x{height}"
        )));
    }
    Ok(())
}

impl BitMask {
    /// All-background mask.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        check_dims(width, height)?;
        let stride = (width as usize).div_ceil(WORD);
        Ok(BitMask {
            width,
            height,
            stride,
            words: vec![0; stride * height as usize],
        })
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> bool) -> Result<Self> {
        let mut mask = BitMask::new(width, height)?;
        for y in 0..height {
            for x in 0..width {
                if f(x, y) {
                    mask.set(x, y, true);
                }
            }
        }
        Ok(mask)
    }

    /// Builds a mask from one boolean per pixel in row-major order.
    pub fn from_bools(width: u32, height: u32, bits: &[bool]) -> Result<Self> {
        check_dims(width, height)?;
        let n = width as usize * height as usize;
        if bits.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: bits.len(),
            });
        }
        BitMask::from_fn(width, height, |x, y| {
            bits[y as usize * width as usize + x as usize]
        })
    }

    /// Axis-aligned filled rectangle `[x0, x0+w) x [y0, y0+h)`, clipped to the frame.
    pub fn rect(width: u32, height: u32, x0: i64, y0: i64, w: u32, h: u32) -> Result<Self> {
        let mut mask = BitMask::new(width, height)?;
        let xa = x0.max(0);
        let xb = (x0 + w as i64).min(width as i64);
        let ya = y0.max(0);
        let yb = (y0 + h as i64).min(height as i64);
        for y in ya..yb {
            mask.fill_row_span(y as u32, xa as u32, xb as u32);
        }
        Ok(mask)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        let w = self.words[y as usize * self.stride + x as usize / WORD];
        (w >> (x as usize % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        let idx = y as usize * self.stride + x as usize / WORD;
        let bit = 1u64 << (x as usize % WORD);
        if value {
            self.words[idx] |= bit;
        } else {
            self.words[idx] &= !bit;
        }
    }

    /// Sets pixels `[x0, x1)` of row `y`.
    pub(crate) fn fill_row_span(&mut self, y: u32, x0: u32, x1: u32) {
        if x0 >= x1 {
            return;
        }
        let row = &mut self.words[y as usize * self.stride..(y as usize + 1) * self.stride];
        let (a, b) = (x0 as usize, x1 as usize);
        let (wa, wb) = (a / WORD, (b - 1) / WORD);
        for (wi, word) in row.iter_mut().enumerate().take(wb + 1).skip(wa) {
            let lo = if wi == wa { a % WORD } else { 0 };
            let hi = if wi == wb { (b - 1) % WORD + 1 } else { WORD };
            let span = if hi - lo == WORD {
                u64::MAX
            } else {
                ((1u64 << (hi - lo)) - 1) << lo
            };
            *word |= span;
        }
    }

    pub(crate) fn row_words(&self, y: u32) -> &[u64] {
        &self.words[y as usize * self.stride..(y as usize + 1) * self.stride]
    }

    /// Number of foreground pixels.
    pub fn count(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    fn check_same(&self, other: &BitMask) -> Result<()> {
        if self.dims() != other.dims() {
            return Err(Error::DimensionMismatch {
                expected: self.dims(),
                found: other.dims(),
            });
        }
        Ok(())
    }

    pub fn intersection_count(&self, other: &BitMask) -> Result<u64> {
        self.check_same(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as u64)
            .sum())
    }

    pub fn union_count(&self, other: &BitMask) -> Result<u64> {
        self.check_same(other)?;
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a | b).count_ones() as u64)
            .sum())
    }

    fn zip_with(&self, other: &BitMask, op: impl Fn(u64, u64) -> u64) -> Result<BitMask> {
        self.check_same(other)?;
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(&a, &b)| op(a, b))
            .collect();
        Ok(BitMask {
            words,
            ..self.clone_empty()
        })
    }

    fn clone_empty(&self) -> BitMask {
        BitMask {
            width: self.width,
            height: self.height,
            stride: self.stride,
            words: Vec::new(),
        }
    }

    pub fn and(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a & b)
    }

    pub fn or(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a | b)
    }

    /// Pixels of `self` that are not in `other`.
    pub fn and_not(&self, other: &BitMask) -> Result<BitMask> {
        self.zip_with(other, |a, b| a & !b)
    }

    /// In-place union.
    pub fn union_with(&mut self, other: &BitMask) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
        Ok(())
    }

    /// In-place difference.
    pub fn subtract(&mut self, other: &BitMask) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a &= !b;
        }
        Ok(())
    }

    /// Foreground pixel coordinates in row-major order.
    pub fn iter_ones(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.height).flat_map(move |y| {
            self.row_words(y)
                .iter()
                .enumerate()
                .flat_map(move |(wi, &word)| {
                    let mut w = word;
                    std::iter::from_fn(move || {
                        if w == 0 {
                            return None;
                        }
                        let b = w.trailing_zeros() as usize;
                        w &= w - 1;
                        Some(((wi * WORD + b) as u32, y))
                    })
                })
        })
    }

    /// Row-major booleans.
    pub fn to_bools(&self) -> Vec<bool> {
        let mut out = Vec::with_capacity(self.pixel_count());
        for y in 0..self.height {
            for x in 0..self.width {
                out.push(self.get(x, y));
            }
        }
        out
    }

    /// Inclusive bounding box `(x0, y0, x1, y1)` of the foreground.
    pub fn bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let mut bb: Option<(u32, u32, u32, u32)> = None;
        for y in 0..self.height {
            let row = self.row_words(y);
            let first = row.iter().position(|&w| w != 0);
            let Some(first) = first else { continue };
            let last = row.iter().rposition(|&w| w != 0).unwrap_or(first);
            let xa = (first * WORD) as u32 + row[first].trailing_zeros();
            let xb = (last * WORD) as u32 + (WORD as u32 - 1 - row[last].leading_zeros());
            bb = Some(match bb {
                None => (xa, y, xb, y),
                Some((x0, y0, x1, _)) => (x0.min(xa), y0, x1.max(xb), y),
            });
        }
        bb
    }

    /// Shifts the foreground by `(dx, dy)`; pixels leaving the frame are dropped.
    pub fn translate(&self, dx: i64, dy: i64) -> BitMask {
        let mut out = BitMask {
            words: vec![0; self.words.len()],
            ..self.clone_empty()
        };
        if dx.unsigned_abs() >= self.width as u64 || dy.unsigned_abs() >= self.height as u64 {
            return out;
        }
        for y in 0..self.height as i64 {
            let src_y = y - dy;
            if src_y < 0 || src_y >= self.height as i64 {
                continue;
            }
            let src = self.row_words(src_y as u32);
            let dst = &mut out.words[y as usize * self.stride..(y as usize + 1) * self.stride];
            shift_row(src, dst, dx);
        }
        out.clear_padding();
        out
    }

    fn clear_padding(&mut self) {
        let tail = self.width as usize % WORD;
        if tail == 0 {
            return;
        }
        let keep = (1u64 << tail) - 1;
        for y in 0..self.height as usize {
            self.words[y * self.stride + self.stride - 1] &= keep;
        }
    }

    /// Erosion by a `(2r+1) x (2r+1)` square; pixels outside the frame count
    /// as background.
    pub fn erode(&self, radius: u32) -> BitMask {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as i64;
        let mut horizontal = self.clone();
        let mut shifted = vec![0u64; self.stride];
        for y in 0..self.height as usize {
            let src = self.row_words(y as u32).to_vec();
            for k in 1..=r {
                for dx in [k, -k] {
                    shifted.iter_mut().for_each(|w| *w = 0);
                    shift_row(&src, &mut shifted, dx);
                    let row = &mut horizontal.words[y * self.stride..(y + 1) * self.stride];
                    for (a, b) in row.iter_mut().zip(&shifted) {
                        *a &= b;
                    }
                }
            }
        }
        horizontal.clear_padding();
        let mut out = BitMask {
            words: vec![0; self.words.len()],
            ..self.clone_empty()
        };
        let h = self.height as i64;
        for y in 0..h {
            if y - r < 0 || y + r >= h {
                continue;
            }
            let dst = &mut out.words[y as usize * self.stride..(y as usize + 1) * self.stride];
            dst.copy_from_slice(horizontal.row_words(y as u32));
            for yy in (y - r)..=(y + r) {
                let src = horizontal.row_words(yy as u32);
                for (a, b) in dst.iter_mut().zip(src) {
                    *a &= b;
                }
            }
        }
        out
    }
}

/// `dst[x + dx] = src[x]` over one padded row, bits shifted outside are lost.
fn shift_row(src: &[u64], dst: &mut [u64], dx: i64) {
    let n = src.len();
    let ws = (dx.unsigned_abs() as usize) / WORD;
    let bs = (dx.unsigned_abs() as usize) % WORD;
    if dx >= 0 {
        for i in (0..n).rev() {
            if i < ws {
                dst[i] = 0;
                continue;
            }
            let mut v = src[i - ws] << bs;
            if bs > 0 && i > ws {
                v |= src[i - ws - 1] >> (WORD - bs);
            }
            dst[i] = v;
        }
    } else {
        for i in 0..n {
            if i + ws >= n {
                dst[i] = 0;
                continue;
            }
            let mut v = src[i + ws] >> bs;
            if bs > 0 && i + ws + 1 < n {
                v |= src[i + ws + 1] << (WORD - bs);
            }
            dst[i] = v;
        }
    }
}

/// Translates `mask` by `(dx, dy)` pixels; see [`BitMask::translate`].
pub fn translate_mask(mask: &BitMask, dx: i64, dy: i64) -> BitMask {
    mask.translate(dx, dy)
}

/// Real-valued per-pixel mask with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMask {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl ProbMask {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        let n = width as usize * height as usize;
        if values.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: values.len(),
            });
        }
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(Error::InvalidValue(format!(
                "probability {v} at pixel {i} outside [0, 1]"
            )));
        }
        Ok(ProbMask {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: u32, height: u32, value: f64) -> Result<Self> {
        ProbMask::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl From<&BitMask> for ProbMask {
    fn from(mask: &BitMask) -> Self {
        ProbMask {
            width: mask.width,
            height: mask.height,
            values: mask
                .to_bools()
                .into_iter()
                .map(|b| if b { 1.0 } else { 0.0 })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn naive_translate(bits: &[bool], w: u32, h: u32, dx: i64, dy: i64) -> Vec<bool> {
        let mut out = vec![false; bits.len()];
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                if bits[(y * w as i64 + x) as usize] {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < w as i64 && ny < h as i64 {
                        out[(ny * w as i64 + nx) as usize] = true;
                    }
                }
            }
        }
        out
    }

    fn naive_erode(bits: &[bool], w: u32, h: u32, r: i64) -> Vec<bool> {
        let at = |x: i64, y: i64| {
            x >= 0 && y >= 0 && x < w as i64 && y < h as i64 && bits[(y * w as i64 + x) as usize]
        };
        let mut out = vec![false; bits.len()];
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                out[(y * w as i64 + x) as usize] =
                    (-r..=r).all(|j| (-r..=r).all(|i| at(x + i, y + j)));
            }
        }
        out
    }

    #[test]
    fn zero_dims_rejected() {
        assert!(BitMask::new(0, 3).is_err());
        assert!(BitMask::new(3, 0).is_err());
    }

    #[test]
    fn translate_examples() {
        let mut m = BitMask::new(2, 2).unwrap();
        m.set(0, 0, true);
        assert_eq!(m.translate(0, 0), m);
        let t = m.translate(1, 0);
        assert!(t.get(1, 0));
        assert_eq!(t.count(), 1);
        assert!(m.translate(5, 0).is_empty());
        assert!(m.translate(0, -1).is_empty());
    }

    #[test]
    fn erode_square_to_center() {
        let m = BitMask::rect(7, 7, 2, 2, 3, 3).unwrap();
        let e = m.erode(1);
        assert_eq!(e.count(), 1);
        assert!(e.get(3, 3));
        assert!(m.erode(2).is_empty());
    }

    #[test]
    fn bbox_and_rect() {
        let m = BitMask::rect(130, 4, 60, 1, 10, 2).unwrap();
        assert_eq!(m.count(), 20);
        assert_eq!(m.bbox(), Some((60, 1, 69, 2)));
        assert_eq!(BitMask::new(3, 3).unwrap().bbox(), None);
        let clipped = BitMask::rect(10, 10, -3, -3, 5, 5).unwrap();
        assert_eq!(clipped.count(), 4);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = BitMask::new(2, 2).unwrap();
        let b = BitMask::new(2, 3).unwrap();
        assert!(matches!(
            a.intersection_count(&b),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn prob_mask_range_checked() {
        assert!(ProbMask::new(1, 2, vec![0.5, 1.5]).is_err());
        assert!(ProbMask::new(1, 2, vec![0.5]).is_err());
        assert!(ProbMask::new(1, 2, vec![0.0, 1.0]).is_ok());
    }

    fn mask_strategy() -> impl Strategy<Value = (u32, u32, Vec<bool>)> {
        (1u32..150, 1u32..6).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<bool>(), (w * h) as usize)
                .prop_map(move |bits| (w, h, bits))
        })
    }

    proptest! {
        #[test]
        fn translate_matches_pixel_walk((w, h, bits) in mask_strategy(), dx in -140i64..140, dy in -7i64..7) {
            let m = BitMask::from_bools(w, h, &bits).unwrap();
            let expected = naive_translate(&bits, w, h, dx, dy);
            prop_assert_eq!(m.translate(dx, dy).to_bools(), expected);
        }

        #[test]
        fn erode_matches_pixel_walk((w, h, bits) in mask_strategy(), r in 0i64..3) {
            let m = BitMask::from_bools(w, h, &bits).unwrap();
            prop_assert_eq!(m.erode(r as u32).to_bools(), naive_erode(&bits, w, h, r));
        }

        #[test]
        fn iter_ones_and_count_agree((w, h, bits) in mask_strategy()) {
            let m = BitMask::from_bools(w, h, &bits).unwrap();
            let ones: Vec<_> = m.iter_ones().collect();
            let expected: Vec<_> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y)))
                .filter(|&(x, y)| bits[(y * w + x) as usize]).collect();
            prop_assert_eq!(m.count() as usize, expected.len());
            prop_assert_eq!(ones, expected);
        }
    }
}
