//! Grayscale rasters and the two filter channels fed to codebook learning:
//! the raw intensity image and a Gaussian-smoothed rotation-invariant LBP map.

use crate::error::{FameError, Result};

/// Row-major grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(FameError::Dimension(format!(
                "image must be at least 1x1, got {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(FameError::Dimension(format!(
                "{width}x{height} image needs {} pixels, got {}",
                width * height,
                pixels.len()
            )));
        }
        if let Some(bad) = pixels.iter().position(|p| !(0.0..=1.0).contains(p)) {
            return Err(FameError::Argument(format!(
                "pixel {bad} = {} is outside [0, 1]",
                pixels[bad]
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel. Values are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "image must be non-empty");
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        GrayImage {
            width,
            height,
            pixels,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    /// Encodes as binary PGM (`P5`, maxval 255).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend(self.pixels.iter().map(|p| (p * 255.0).round() as u8));
        out
    }
}

/// Per-pixel rotation-minimized local binary pattern codes.
#[derive(Debug, Clone, PartialEq)]
pub struct LbpImage {
    width: usize,
    height: usize,
    codes: Vec<u32>,
    neighbors: u32,
    radius: f64,
}

impl LbpImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn neighbors(&self) -> u32 {
        self.neighbors
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.codes[y * self.width + x]
    }

    /// Largest representable code, `2^P - 1`.
    pub fn max_code(&self) -> u32 {
        code_mask(self.neighbors)
    }

    /// Builds a code map directly; codes must fit in `neighbors` bits.
    pub fn from_codes(
        width: usize,
        height: usize,
        codes: Vec<u32>,
        neighbors: u32,
        radius: f64,
    ) -> Result<Self> {
        if codes.len() != width * height || width == 0 || height == 0 {
            return Err(FameError::Dimension(format!(
                "{width}x{height} code map needs {} codes, got {}",
                width * height,
                codes.len()
            )));
        }
        check_lbp_params(neighbors, radius)?;
        let mask = code_mask(neighbors);
        if let Some(c) = codes.iter().find(|&&c| c > mask) {
            return Err(FameError::Argument(format!(
                "code {c} does not fit in {neighbors} bits"
            )));
        }
        Ok(LbpImage {
            width,
            height,
            codes,
            neighbors,
            radius,
        })
    }
}

fn code_mask(neighbors: u32) -> u32 {
    ((1u64 << neighbors) - 1) as u32
}

fn check_lbp_params(neighbors: u32, radius: f64) -> Result<()> {
    if !(4..=32).contains(&neighbors) {
        return Err(FameError::Argument(format!(
            "LBP neighbor count must be in [4, 32], got {neighbors}"
        )));
    }
    if !radius.is_finite() || radius < 1.0 {
        return Err(FameError::Argument(format!(
            "LBP radius must be >= 1, got {radius}"
        )));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// PGM decoding

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FameError::parse(start, format!("expected {what}")));
        }
        if self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            return Err(FameError::parse(
                self.pos,
                format!("unexpected byte 0x{:02x} in {what}", self.bytes[self.pos]),
            ));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse::<u64>().ok())
            .ok_or_else(|| FameError::parse(start, format!("{what} out of range")))
    }
}

/// Decodes a binary (`P5`) or ASCII (`P2`) PGM into intensities divided by maxval.
pub fn load_pgm(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.len() < 2 {
        return Err(FameError::parse(bytes.len(), "missing PGM magic"));
    }
    let binary = match &bytes[..2] {
        b"P5" => true,
        b"P2" => false,
        _ => return Err(FameError::parse(0, "magic must be P5 or P2")),
    };
    let mut rd = HeaderReader { bytes, pos: 2 };
    if rd.pos < bytes.len() && !bytes[rd.pos].is_ascii_whitespace() && bytes[rd.pos] != b'#' {
        return Err(FameError::parse(rd.pos, "expected whitespace after magic"));
    }
    rd.skip_space_and_comments();
    let width_at = rd.pos;
    let width = rd.number("width")?;
    let height = rd.number("height")?;
    rd.skip_space_and_comments();
    let maxval_at = rd.pos;
    let maxval = rd.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(FameError::parse(width_at, "width and height must be positive"));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(FameError::parse(
            maxval_at,
            format!("maxval {maxval} outside [1, 65535]"),
        ));
    }
    let (width, height) = (width as usize, height as usize);
    let count = width
        .checked_mul(height)
        .ok_or_else(|| FameError::parse(width_at, "image dimensions overflow"))?;
    let scale = maxval as f64;
    let mut pixels = Vec::with_capacity(count);

    if binary {
        // exactly one whitespace byte separates maxval from the raster
        if rd.pos >= bytes.len() {
            return Err(FameError::parse(rd.pos, "truncated header"));
        }
        let start = rd.pos + 1;
        let bpp = if maxval < 256 { 1 } else { 2 };
        let needed = count * bpp;
        if bytes.len() - start < needed {
            return Err(FameError::parse(
                bytes.len(),
                format!(
                    "truncated payload: expected {needed} bytes, found {}",
                    bytes.len() - start
                ),
            ));
        }
        for i in 0..count {
            let at = start + i * bpp;
            let v = if bpp == 1 {
                bytes[at] as u64
            } else {
                u16::from_be_bytes([bytes[at], bytes[at + 1]]) as u64
            };
            if v > maxval {
                return Err(FameError::parse(
                    at,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            pixels.push(v as f64 / scale);
        }
    } else {
        for _ in 0..count {
            rd.skip_space_and_comments();
            let at = rd.pos;
            if at >= bytes.len() {
                return Err(FameError::parse(
                    at,
                    format!(
                        "truncated payload: expected {count} samples, found {}",
                        pixels.len()
                    ),
                ));
            }
            let v = rd.number("sample")?;
            if v > maxval {
                return Err(FameError::parse(
                    at,
                    format!("sample {v} exceeds maxval {maxval}"),
                ));
            }
            pixels.push(v as f64 / scale);
        }
    }
    GrayImage::new(width, height, pixels)
}

// ---------------------------------------------------------------------------
// Geometry

/// Bilinear resize to `target_height`, keeping the aspect ratio. Pixel centers
/// sit at half-integer coordinates; samples outside the source clamp to the edge.
pub fn resize_bilinear(img: &GrayImage, target_height: usize) -> Result<GrayImage> {
    if target_height == 0 {
        return Err(FameError::Argument("target height must be >= 1".into()));
    }
    let target_width =
        ((img.width as f64 * target_height as f64 / img.height as f64).round() as usize).max(1);
    if target_width == img.width && target_height == img.height {
        return Ok(img.clone());
    }
    let sx = img.width as f64 / target_width as f64;
    let sy = img.height as f64 / target_height as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    let mut pixels = Vec::with_capacity(target_width * target_height);
    for y in 0..target_height {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, max_y);
        for x in 0..target_width {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, max_x);
            pixels.push(sample_bilinear(img, fx, fy).clamp(0.0, 1.0));
        }
    }
    GrayImage::new(target_width, target_height, pixels)
}

/// Interpolates at a real-valued position inside the image. Written as nested
/// lerps so that constant neighborhoods reproduce their value exactly.
#[inline]
fn sample_bilinear(img: &GrayImage, fx: f64, fy: f64) -> f64 {
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let tx = fx - x0 as f64;
    let ty = fy - y0 as f64;
    let top = lerp(img.get(x0, y0), img.get(x1, y0), tx);
    let bottom = lerp(img.get(x0, y1), img.get(x1, y1), tx);
    lerp(top, bottom, ty)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + (b - a) * t
}

/// Mirrors the image left to right.
pub fn hflip(img: &GrayImage) -> GrayImage {
    let mut pixels = Vec::with_capacity(img.pixels.len());
    for row in img.pixels.chunks_exact(img.width) {
        pixels.extend(row.iter().rev());
    }
    GrayImage {
        width: img.width,
        height: img.height,
        pixels,
    }
}

// ---------------------------------------------------------------------------
// Local binary patterns

/// Minimum over all cyclic rotations of a `bits`-wide word.
pub fn rotation_min(code: u32, bits: u32) -> u32 {
    let mask = code_mask(bits) as u64;
    let c = code as u64 & mask;
    (0..bits)
        .map(|k| ((c >> k) | (c << (bits - k))) & mask)
        .min()
        .unwrap_or(0) as u32
}

/// Code for one neighborhood given its already-sampled ring. Bit `p` is set
/// when `ring[p] >= center`; the result is rotation-minimized.
pub fn ring_code(center: f64, ring: &[f64]) -> u32 {
    let raw = ring
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= center)
        .fold(0u32, |acc, (p, _)| acc | (1 << p));
    rotation_min(raw, ring.len() as u32)
}

/// Circle offsets `(dx, dy)` for `neighbors` samples at `radius`, angle measured
/// from +x with y pointing down. Offsets within 1e-9 of an integer are snapped
/// so axis-aligned samples hit pixel centers exactly.
fn ring_offsets(neighbors: u32, radius: f64) -> Vec<(f64, f64)> {
    let snap = |v: f64| {
        if (v - v.round()).abs() < 1e-9 {
            v.round()
        } else {
            v
        }
    };
    (0..neighbors)
        .map(|p| {
            let theta = 2.0 * std::f64::consts::PI * p as f64 / neighbors as f64;
            (snap(radius * theta.cos()), snap(radius * theta.sin()))
        })
        .collect()
}

/// Rotation-invariant LBP with `neighbors` bilinear samples on a circle of
/// `radius`. A border of `ceil(radius)` pixels has no full neighborhood and gets code 0.
pub fn lbp_encode(img: &GrayImage, neighbors: u32, radius: f64) -> Result<LbpImage> {
    check_lbp_params(neighbors, radius)?;
    let border = radius.ceil() as usize;
    if img.width < 2 * border + 1 || img.height < 2 * border + 1 {
        return Err(FameError::Dimension(format!(
            "{}x{} image too small for LBP radius {radius}",
            img.width, img.height
        )));
    }
    let offsets = ring_offsets(neighbors, radius);
    let mut codes = vec![0u32; img.width * img.height];
    let mut ring = vec![0.0; neighbors as usize];
    for y in border..img.height - border {
        for x in border..img.width - border {
            for (slot, &(dx, dy)) in ring.iter_mut().zip(&offsets) {
                *slot = sample_bilinear(img, x as f64 + dx, y as f64 + dy);
            }
            codes[y * img.width + x] = ring_code(img.get(x, y), &ring);
        }
    }
    Ok(LbpImage {
        width: img.width,
        height: img.height,
        codes,
        neighbors,
        radius,
    })
}

/// Normalized 1-D Gaussian taps for offsets `-r..=r`, `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Half-sample symmetric reflection of an index into `[0, n)`.
fn reflect_index(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Scales codes into `[0, 1]` by `2^P - 1` and smooths with a separable
/// truncated Gaussian under symmetric reflection at the borders.
pub fn lbp_to_gray(lbp: &LbpImage, sigma: f64) -> Result<GrayImage> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(FameError::Argument(format!("sigma must be > 0, got {sigma}")));
    }
    let scale = lbp.max_code() as f64;
    let scaled: Vec<f64> = lbp.codes.iter().map(|&c| c as f64 / scale).collect();
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as i64;
    let (w, h) = (lbp.width, lbp.height);

    let mut horizontal = vec![0.0; w * h];
    for y in 0..h {
        let row = &scaled[y * w..(y + 1) * w];
        for x in 0..w {
            horizontal[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(k, t)| t * row[reflect_index(x as i64 + k as i64 - r, w)])
                .sum();
        }
    }
    let mut pixels = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let v: f64 = kernel
                .iter()
                .enumerate()
                .map(|(k, t)| t * horizontal[reflect_index(y as i64 + k as i64 - r, h) * w + x])
                .sum();
            pixels[y * w + x] = v.clamp(0.0, 1.0);
        }
    }
    GrayImage::new(w, h, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p5(width: usize, height: usize, maxval: u32, payload: &[u8]) -> Vec<u8> {
        let mut v = format!("P5\n{width} {height}\n{maxval}\n").into_bytes();
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn binary_pgm_normalizes_by_maxval() {
        let img = load_pgm(&p5(2, 2, 255, &[0, 255, 128, 64])).unwrap();
        assert_eq!((img.width(), img.height()), (2, 2));
        assert_eq!(img.pixels(), &[0.0, 1.0, 128.0 / 255.0, 64.0 / 255.0]);
    }

    #[test]
    fn ascii_pgm_identity() {
        let img = load_pgm(b"P2\n1 1\n255\n255").unwrap();
        assert_eq!(img.pixels(), &[1.0]);
    }

    #[test]
    fn ascii_pgm_with_comments() {
        let img = load_pgm(b"P2\n# made by hand\n2 1 # dims\n4\n0 2\n").unwrap();
        assert_eq!(img.pixels(), &[0.0, 0.5]);
    }

    #[test]
    fn sixteen_bit_pgm_is_big_endian() {
        let img = load_pgm(&p5(1, 1, 1000, &[0x01, 0xf4])).unwrap();
        assert_eq!(img.pixels(), &[0.5]);
    }

    #[test]
    fn truncated_payload_reports_end_offset() {
        let bytes = p5(2, 2, 255, &[1, 2, 3]);
        match load_pgm(&bytes) {
            Err(FameError::Parse { offset, .. }) => assert_eq!(offset, bytes.len()),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_maxval_and_magic_rejected() {
        assert!(matches!(
            load_pgm(&p5(1, 1, 0, &[0])),
            Err(FameError::Parse { offset: 7, .. })
        ));
        assert!(matches!(
            load_pgm(b"P6\n1 1\n255\n\0\0\0"),
            Err(FameError::Parse { offset: 0, .. })
        ));
        assert!(load_pgm(b"P5\n1 1\n70000\n\0\0").is_err());
        assert!(load_pgm(b"P2\n1 1\n10\n11").is_err());
    }

    #[test]
    fn resize_identity_is_bitwise() {
        let img = GrayImage::from_fn(45, 60, |x, y| ((x * 7 + y * 13) % 17) as f64 / 16.0);
        assert_eq!(resize_bilinear(&img, 60).unwrap(), img);
    }

    #[test]
    fn resize_constant_stays_constant() {
        let img = GrayImage::constant(37, 53, 0.3);
        let out = resize_bilinear(&img, 30).unwrap();
        assert_eq!(out.height(), 30);
        assert_eq!(out.width(), (37.0_f64 * 30.0 / 53.0).round() as usize);
        assert!(out.pixels().iter().all(|&p| p == 0.3));
    }

    #[test]
    fn resize_width_never_zero() {
        let img = GrayImage::constant(1, 100, 0.5);
        assert_eq!(resize_bilinear(&img, 10).unwrap().width(), 1);
    }

    #[test]
    fn hflip_row() {
        let img = GrayImage::new(3, 1, vec![0.1, 0.2, 0.3]).unwrap();
        assert_eq!(hflip(&img).pixels(), &[0.3, 0.2, 0.1]);
        let sym = GrayImage::new(3, 2, vec![0.1, 0.5, 0.1, 0.7, 0.2, 0.7]).unwrap();
        assert_eq!(hflip(&sym), sym);
    }

    #[test]
    fn rotation_min_examples() {
        assert_eq!(rotation_min(0b1000_0000, 8), 1);
        assert_eq!(rotation_min(0b1011_0000, 8), 0b0000_1011);
        assert_eq!(rotation_min(0xffff, 16), 0xffff);
    }

    #[test]
    fn single_bright_neighbor_gives_code_one() {
        for k in 0..8 {
            let mut ring = vec![0.1; 8];
            ring[k] = 0.9;
            assert_eq!(ring_code(0.5, &ring), 1);
        }
    }

    #[test]
    fn constant_image_codes_all_ones_inside() {
        let img = GrayImage::constant(9, 8, 0.42);
        let lbp = lbp_encode(&img, 16, 2.0).unwrap();
        for y in 0..8 {
            for x in 0..9 {
                let interior = (2..7).contains(&x) && (2..6).contains(&y);
                assert_eq!(lbp.get(x, y), if interior { 0xffff } else { 0 }, "({x},{y})");
            }
        }
    }

    #[test]
    fn lbp_rejects_small_images() {
        assert!(matches!(
            lbp_encode(&GrayImage::constant(4, 4, 0.0), 16, 2.0),
            Err(FameError::Dimension(_))
        ));
        assert!(lbp_encode(&GrayImage::constant(5, 5, 0.0), 16, 2.0).is_ok());
        assert!(lbp_encode(&GrayImage::constant(5, 5, 0.0), 3, 1.0).is_err());
    }

    #[test]
    fn smoothing_constant_map() {
        let lbp = LbpImage::from_codes(6, 5, vec![3; 30], 4, 1.0).unwrap();
        let out = lbp_to_gray(&lbp, 1.0).unwrap();
        for p in out.pixels() {
            assert!((p - 0.2).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_sigma_is_nearly_identity() {
        let codes: Vec<u32> = (0..49).map(|i| (i * 37) % 256).collect();
        let lbp = LbpImage::from_codes(7, 7, codes.clone(), 8, 1.0).unwrap();
        let out = lbp_to_gray(&lbp, 0.1).unwrap();
        for (p, c) in out.pixels().iter().zip(&codes) {
            assert!((p - *c as f64 / 255.0).abs() < 1e-6);
        }
    }

    #[test]
    fn reflect_index_is_half_sample_symmetric() {
        let got: Vec<usize> = (-4..8).map(|i| reflect_index(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 0, 1, 2, 3, 3, 2, 1, 0]);
        assert_eq!(reflect_index(-1, 1), 0);
    }

    #[test]
    fn sigma_must_be_positive() {
        let lbp = LbpImage::from_codes(3, 3, vec![0; 9], 4, 1.0).unwrap();
        assert!(lbp_to_gray(&lbp, 0.0).is_err());
    }
}
