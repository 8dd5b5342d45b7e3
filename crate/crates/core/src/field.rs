//! Scalar fields on 2D pixel grids: storage, file I/O, noise injection and
//! the pixelwise data-fit terms (MSE, BCE) that enter the mixed loss.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

/// Clamp used inside the BCE log terms.
pub const BCE_DELTA: f64 = 1e-6;

/// A real value per pixel of a `rows x cols` grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Png8,
    Png16,
    Csv,
}

impl ScalarField {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidField(format!("empty shape {rows}x{cols}")));
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidField(format!(
                "{} values for a {rows}x{cols} grid",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at pixel {i}")));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty field shape");
        Self {
            rows,
            cols,
            values: vec![value; rows * cols],
        }
    }

    /// Builds a field by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(rows > 0 && cols > 0, "empty field shape");
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                values.push(f(r, c));
            }
        }
        Self { rows, cols, values }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.values[row * self.cols + col] = value;
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value; the smallest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn negated(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }
}

pub fn load_field(path: impl AsRef<Path>, format: FieldFormat) -> Result<ScalarField> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    match format {
        FieldFormat::Csv => read_csv(BufReader::new(file), path),
        FieldFormat::Png8 | FieldFormat::Png16 => read_png(file, path, format),
    }
}

fn read_csv(reader: impl BufRead, path: &Path) -> Result<ScalarField> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let start = values.len();
        for tok in line.split(',') {
            let v: f64 = tok.trim().parse().map_err(|_| Error::Csv {
                line: i + 1,
                message: format!("not a number: {tok:?}"),
            })?;
            values.push(v);
        }
        let width = values.len() - start;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Csv {
                    line: i + 1,
                    message: format!("ragged row: {width} values, expected {c}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| Error::Csv {
        line: 0,
        message: "no data rows".into(),
    })?;
    ScalarField::new(rows, cols, values)
}

fn read_png(file: File, path: &Path, format: FieldFormat) -> Result<ScalarField> {
    let png_err = |e: png::DecodingError| Error::Png {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut decoder = png::Decoder::new(BufReader::new(file));
    // keep 16-bit samples; only unpack sub-byte depths
    decoder.set_transformations(png::Transformations::IDENTITY);
    let mut reader = decoder.read_info().map_err(png_err)?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader.next_frame(&mut buf).map_err(png_err)?;
    if info.color_type != png::ColorType::Grayscale {
        return Err(Error::UnsupportedPng(format!(
            "color type {:?}, expected single-channel grayscale",
            info.color_type
        )));
    }
    let (rows, cols) = (info.height as usize, info.width as usize);
    let values: Vec<f64> = match (info.bit_depth, format) {
        (png::BitDepth::Eight, FieldFormat::Png8) => buf[..rows * cols]
            .iter()
            .map(|&b| f64::from(b))
            .collect(),
        (png::BitDepth::Sixteen, FieldFormat::Png16) => buf[..rows * cols * 2]
            .chunks_exact(2)
            .map(|b| f64::from(u16::from_be_bytes([b[0], b[1]])) * 255.0 / 65535.0)
            .collect(),
        (depth, _) => {
            return Err(Error::UnsupportedPng(format!(
                "bit depth {depth:?} for format {format:?}"
            )))
        }
    };
    ScalarField::new(rows, cols, values)
}

/// Writes a field. `Png8` clamps to `[0, 255]` and rounds half to even; `Csv`
/// writes shortest round-trip decimals so a reload is bit-exact.
pub fn save_field(field: &ScalarField, path: impl AsRef<Path>, format: FieldFormat) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    match format {
        FieldFormat::Csv => {
            w.write_all(field_to_csv(field).as_bytes()).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        FieldFormat::Png8 => {
            let bytes: Vec<u8> = field.values().iter().map(|&v| to_byte(v)).collect();
            let mut enc = png::Encoder::new(w, field.cols() as u32, field.rows() as u32);
            enc.set_color(png::ColorType::Grayscale);
            enc.set_depth(png::BitDepth::Eight);
            let png_err = |e: png::EncodingError| Error::Png {
                path: path.to_path_buf(),
                message: e.to_string(),
            };
            let mut writer = enc.write_header().map_err(png_err)?;
            writer.write_image_data(&bytes).map_err(png_err)?;
        }
        FieldFormat::Png16 => {
            return Err(Error::UnsupportedPng("png16 export is not supported".into()))
        }
    }
    Ok(())
}

pub fn field_to_csv(field: &ScalarField) -> String {
    let mut out = String::with_capacity(field.len() * 8);
    for row in field.values().chunks(field.cols()) {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub(crate) fn to_byte(v: f64) -> u8 {
    v.clamp(0.0, 255.0).round_ties_even() as u8
}

/// Perturbs every pixel by an independent uniform draw from `[-eps, eps]`.
pub fn add_uniform_noise<R: Rng + ?Sized>(
    field: &ScalarField,
    eps: f64,
    rng: &mut R,
) -> Result<ScalarField> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!("noise level {eps} must be >= 0")));
    }
    if eps == 0.0 {
        return Ok(field.clone());
    }
    let mut out = field.clone();
    for v in out.values_mut() {
        *v += rng.gen_range(-eps..=eps);
    }
    Ok(out)
}

/// Mean squared error `(1/P) * sum (f - f0)^2`.
pub fn mse(f: &ScalarField, f0: &ScalarField) -> Result<f64> {
    f.check_same_shape(f0)?;
    let sum: f64 = f
        .values()
        .iter()
        .zip(f0.values())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / f.len() as f64)
}

pub fn mse_gradient(f: &ScalarField, f0: &ScalarField) -> Result<ScalarField> {
    f.check_same_shape(f0)?;
    let scale = 2.0 / f.len() as f64;
    let values = f
        .values()
        .iter()
        .zip(f0.values())
        .map(|(a, b)| scale * (a - b))
        .collect();
    Ok(ScalarField {
        rows: f.rows,
        cols: f.cols,
        values,
    })
}

fn bce_prob(v: f64) -> f64 {
    (v / 255.0).clamp(BCE_DELTA, 1.0 - BCE_DELTA)
}

/// Binary cross-entropy on `/255`-rescaled, `BCE_DELTA`-clamped values.
pub fn bce(f: &ScalarField, f0: &ScalarField) -> Result<f64> {
    f.check_same_shape(f0)?;
    let sum: f64 = f
        .values()
        .iter()
        .zip(f0.values())
        .map(|(&a, &b)| {
            let (p, q) = (bce_prob(a), bce_prob(b));
            q * p.ln() + (1.0 - q) * (1.0 - p).ln()
        })
        .sum();
    Ok(-sum / f.len() as f64)
}

/// Gradient of [`bce`] with respect to `f`; zero where `f/255` is clamped.
pub fn bce_gradient(f: &ScalarField, f0: &ScalarField) -> Result<ScalarField> {
    f.check_same_shape(f0)?;
    let n = f.len() as f64;
    let values = f
        .values()
        .iter()
        .zip(f0.values())
        .map(|(&a, &b)| {
            let x = a / 255.0;
            if x <= BCE_DELTA || x >= 1.0 - BCE_DELTA {
                return 0.0;
            }
            let q = bce_prob(b);
            -(q / x - (1.0 - q) / (1.0 - x)) / (255.0 * n)
        })
        .collect();
    Ok(ScalarField {
        rows: f.rows,
        cols: f.cols,
        values,
    })
}

/// Breaks ties by adding `i * eta` to pixel `i`, `eta = 1e-9 * range / P`.
///
/// The output has pairwise distinct values and its sorted order refines the
/// input's sorted order (ties resolved by linear index).
pub fn make_generic(field: &ScalarField) -> ScalarField {
    let (lo, hi) = (field.min(), field.max());
    let range = hi - lo;
    let scale = if range > 0.0 { range } else { hi.abs().max(1.0) };
    let eta = 1e-9 * scale / field.len() as f64;
    let mut out = field.clone();
    for (i, v) in out.values_mut().iter_mut().enumerate() {
        *v += i as f64 * eta;
    }
    // rounding can in principle leave equal neighbours; nudge them apart in
    // (value, index) order
    let mut order: Vec<usize> = (0..out.len()).collect();
    order.sort_by(|&a, &b| out.values[a].total_cmp(&out.values[b]).then(a.cmp(&b)));
    for w in 1..order.len() {
        let (prev, cur) = (out.values[order[w - 1]], out.values[order[w]]);
        if cur <= prev {
            out.values[order[w]] = prev.next_up();
        }
    }
    out
}

/// True if all pixel values are pairwise distinct.
pub fn has_distinct_values(field: &ScalarField) -> bool {
    let mut v = field.values().to_vec();
    v.sort_by(f64::total_cmp);
    v.windows(2).all(|w| w[0] < w[1])
}
