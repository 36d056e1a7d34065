//! CSV formatting and graymap heatmaps.

use std::path::Path;

use image::codecs::pnm::{GraymapHeader, PnmEncoder, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};

/// Scientific notation with 12 significant digits; negative zero prints as
/// zero so sign noise does not leak into golden files.
pub fn fmt_num(x: f64) -> String {
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}

/// Accumulates CSV records in memory; the file is written in one go.
pub(crate) struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub(crate) fn new(header: &[&str]) -> Self {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer
            .write_record(header)
            .expect("writing to memory cannot fail");
        Self { writer }
    }

    pub(crate) fn row<I, S>(&mut self, fields: I)
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer
            .write_record(fields)
            .expect("writing to memory cannot fail");
    }

    pub(crate) fn into_bytes(self) -> Vec<u8> {
        self.writer
            .into_inner()
            .expect("flushing to memory cannot fail")
    }
}

/// Clamp level of a heatmap: the nearest-rank 99th percentile of all
/// densities.
pub fn percentile_99(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = (0.99 * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Binary 16-bit graymap of `densities[t][site]`: one row per site, one
/// column per time sample, intensity `min(rho, rho_max) / rho_max`.
/// Returns the file bytes and `rho_max`.
pub fn heatmap_pgm(densities: &[Vec<f64>]) -> (Vec<u8>, f64) {
    let width = densities.len();
    let height = densities.first().map_or(0, Vec::len);
    let flat: Vec<f64> = densities.iter().flatten().copied().collect();
    let rho_max = percentile_99(&flat);
    let mut pixels = Vec::with_capacity(width * height * 2);
    for site in 0..height {
        for column in densities {
            let level = if rho_max > 0.0 {
                (column[site].min(rho_max) / rho_max * 65535.0).round() as u16
            } else {
                0
            };
            pixels.extend_from_slice(&level.to_ne_bytes());
        }
    }
    let mut bytes = Vec::new();
    PnmEncoder::new(&mut bytes)
        .with_header(
            GraymapHeader {
                encoding: SampleEncoding::Binary,
                height: height as u32,
                width: width as u32,
                maxwhite: 65535,
            }
            .into(),
        )
        .write_image(&pixels, width as u32, height as u32, ExtendedColorType::L16)
        .expect("encoding to memory cannot fail");
    (bytes, rho_max)
}

/// Sidecar text describing how a heatmap was scaled.
pub fn heatmap_note(
    image: &Path,
    rows: usize,
    columns: usize,
    times: (f64, f64),
    rho_max: f64,
) -> String {
    let name = image
        .file_name()
        .map_or_else(String::new, |n| n.to_string_lossy().into_owned());
    format!(
        "image = {name}\n\
         format = binary PGM, 16-bit, maxval 65535\n\
         rows = {rows} (site 1 at the top)\n\
         columns = {columns} (t = {} at the left, t = {} at the right)\n\
         intensity = min(density, rho_max) / rho_max\n\
         rho_max = {} (99th percentile of all densities)\n",
        fmt_num(times.0),
        fmt_num(times.1),
        fmt_num(rho_max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format() {
        assert_eq!(fmt_num(1.5), "1.50000000000e0");
        assert_eq!(fmt_num(-0.0), "0.00000000000e0");
        assert_eq!(fmt_num(-1.25e-7), "-1.25000000000e-7");
        assert_eq!(fmt_num(1.0 / 3.0), "3.33333333333e-1");
        let parsed: f64 = fmt_num(std::f64::consts::PI).parse().unwrap();
        assert!((parsed - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.row(["1", "x"]);
        assert_eq!(t.into_bytes(), b"a,b\n1,x\n");
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=200).map(f64::from).collect();
        assert_eq!(percentile_99(&v), 198.0);
        assert_eq!(percentile_99(&[3.0]), 3.0);
        assert_eq!(percentile_99(&[]), 0.0);
    }

    #[test]
    fn pgm_layout() {
        // two time samples, three sites
        let d = vec![vec![0.0, 0.5, 1.0], vec![1.0, 0.25, 0.0]];
        let (bytes, rho_max) = heatmap_pgm(&d);
        assert_eq!(rho_max, 1.0);
        let header = b"P5\n2 3 65535\n";
        assert_eq!(&bytes[..header.len()], header);
        let body = &bytes[header.len()..];
        let px: Vec<u16> = body
            .chunks(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect();
        assert_eq!(px, vec![0, 65535, 32768, 16384, 65535, 0]);
    }

    #[test]
    fn pgm_clamps_spikes() {
        let mut column = vec![0.01; 199];
        column.push(50.0);
        let (bytes, rho_max) = heatmap_pgm(&[column]);
        assert_eq!(rho_max, 0.01);
        let last = &bytes[bytes.len() - 2..];
        assert_eq!(u16::from_be_bytes([last[0], last[1]]), 65535);
    }
}
