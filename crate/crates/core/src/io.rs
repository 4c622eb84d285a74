//! Plain-text file formats: filter CSV, feature-map CSV, matrix CSV and P2 PGM dumps.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::feature::FeatureMap;
use crate::filter::FilterGrid;
use crate::group::GroupSpec;
use crate::kernel::FilterMatrix;
use crate::repr::RepSpec;
use crate::{Error, Result};

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

fn parse_row(line: &str, expected: usize, what: &str) -> Result<Vec<f64>> {
    let row = line
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| parse_err(format!("{what}: bad value {t:?}: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if row.len() != expected {
        return Err(parse_err(format!(
            "{what}: expected {expected} values, got {}",
            row.len()
        )));
    }
    Ok(row)
}

/// Non-empty lines with trailing whitespace removed.
fn content_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim_end).filter(|l| !l.is_empty())
}

/// Writes `S=<size>` followed by one comma-separated line per row.
///
/// Values use the shortest representation that parses back to the same `f64`.
pub fn write_filter_csv<W: Write>(f: &FilterGrid, mut out: W) -> Result<()> {
    writeln!(out, "S={}", f.size())?;
    for row in f.rows() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn filter_to_csv(f: &FilterGrid) -> String {
    let mut buf = Vec::new();
    write_filter_csv(f, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

pub fn parse_filter_csv(text: &str) -> Result<FilterGrid> {
    let mut lines = content_lines(text);
    let header = lines
        .next()
        .ok_or_else(|| parse_err("filter: empty input"))?;
    let size = header
        .trim()
        .strip_prefix("S=")
        .and_then(|s| s.trim().parse::<usize>().ok())
        .ok_or_else(|| {
            parse_err(format!(
                "filter: expected header S=<odd int>, got {header:?}"
            ))
        })?;
    if size % 2 == 0 {
        return Err(Error::EvenFilterSize(size));
    }
    let mut values = Vec::with_capacity(size * size);
    for r in 0..size {
        let line = lines
            .next()
            .ok_or_else(|| parse_err(format!("filter: expected {size} rows, got {r}")))?;
        values.extend(parse_row(line, size, "filter")?);
    }
    if lines.next().is_some() {
        return Err(parse_err(format!(
            "filter: trailing data after {size} rows"
        )));
    }
    FilterGrid::new(size, values)
}

pub fn read_filter_csv<R: BufRead>(mut input: R) -> Result<FilterGrid> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    parse_filter_csv(&text)
}

pub fn load_filter(path: impl AsRef<Path>) -> Result<FilterGrid> {
    parse_filter_csv(&std::fs::read_to_string(path)?)
}

pub fn save_filter(f: &FilterGrid, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, filter_to_csv(f))?;
    Ok(())
}

/// Maps `values` affinely onto `0..=255`. A constant input maps to 0.
fn normalize_u8(values: &[f64]) -> Vec<u8> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    values
        .iter()
        .map(|&v| {
            if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            }
        })
        .collect()
}

fn pgm_text(width: usize, height: usize, pixels: &[u8]) -> String {
    let mut s = format!("P2\n{width} {height}\n255\n");
    for row in pixels.chunks(width) {
        let line: Vec<String> = row.iter().map(u8::to_string).collect();
        let _ = writeln!(s, "{}", line.join(" "));
    }
    s
}

/// 8-bit P2 PGM of one filter with per-filter min-max normalization.
pub fn filter_to_pgm(f: &FilterGrid) -> String {
    pgm_text(f.size(), f.size(), &normalize_u8(f.values()))
}

/// Lays out every grid of `m` as a tile in an `rows x cols` mosaic with a
/// one-pixel black gutter. Each tile is normalized on its own.
pub fn filter_matrix_to_pgm(m: &FilterMatrix) -> String {
    let s = m.filter_size();
    let (rows, cols) = (m.rows(), m.cols());
    let width = cols * s + cols.saturating_sub(1);
    let height = rows * s + rows.saturating_sub(1);
    let mut pixels = vec![0u8; width * height];
    for i in 0..rows {
        for j in 0..cols {
            let tile = normalize_u8(m.get(i, j).values());
            for (r, line) in tile.chunks(s).enumerate() {
                let start = (i * (s + 1) + r) * width + j * (s + 1);
                pixels[start..start + s].copy_from_slice(line);
            }
        }
    }
    pgm_text(width, height, &pixels)
}

fn parse_rep(text: &str, group: GroupSpec) -> Result<RepSpec> {
    match text {
        "trivial" => Ok(RepSpec::trivial(group)),
        "regular" => Ok(RepSpec::regular(group)),
        _ => {
            let parts: Vec<&str> = text.split(':').collect();
            match parts.as_slice() {
                ["irrep", j, k] => {
                    let j = j
                        .parse()
                        .map_err(|_| parse_err(format!("bad irrep j in {text:?}")))?;
                    let k = k
                        .parse()
                        .map_err(|_| parse_err(format!("bad irrep k in {text:?}")))?;
                    RepSpec::irrep(group, j, k)
                }
                _ => Err(parse_err(format!("unknown representation {text:?}"))),
            }
        }
    }
}

/// Header `C=..,H=..,W=..,group=..,rep=..,mult=..` then `C*H` rows of `W` values.
pub fn write_feature_csv<W: Write>(f: &FeatureMap, mut out: W) -> Result<()> {
    writeln!(
        out,
        "C={},H={},W={},group={},rep={},mult={}",
        f.channels(),
        f.height(),
        f.width(),
        f.group(),
        f.rep(),
        f.multiplicity()
    )?;
    for row in f.data().chunks(f.width()) {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn feature_to_csv(f: &FeatureMap) -> String {
    let mut buf = Vec::new();
    write_feature_csv(f, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("ascii output")
}

pub fn parse_feature_csv(text: &str) -> Result<FeatureMap> {
    let mut lines = content_lines(text);
    let header = lines
        .next()
        .ok_or_else(|| parse_err("feature: empty input"))?;
    let mut fields = std::collections::HashMap::new();
    for part in header.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| parse_err(format!("feature: malformed header field {part:?}")))?;
        fields.insert(key.trim(), value.trim());
    }
    let get = |key: &str| {
        fields
            .get(key)
            .copied()
            .ok_or_else(|| parse_err(format!("feature: header is missing {key}")))
    };
    let num = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|_| parse_err(format!("feature: {key} is not a non-negative integer")))
    };
    let (c, h, w, mult) = (num("C")?, num("H")?, num("W")?, num("mult")?);
    let group: GroupSpec = get("group")?.parse()?;
    let rep = parse_rep(get("rep")?, group)?;
    if rep.dim() * mult != c {
        return Err(Error::Shape(format!(
            "feature: C={c} but rep {rep} with mult={mult} has {} channels",
            rep.dim() * mult
        )));
    }
    let mut data = Vec::with_capacity(c * h * w);
    for r in 0..c * h {
        let line = lines
            .next()
            .ok_or_else(|| parse_err(format!("feature: expected {} rows, got {r}", c * h)))?;
        data.extend(parse_row(line, w, "feature")?);
    }
    if lines.next().is_some() {
        return Err(parse_err("feature: trailing data"));
    }
    FeatureMap::new(rep, mult, h, w, data)
}

pub fn load_feature(path: impl AsRef<Path>) -> Result<FeatureMap> {
    parse_feature_csv(&std::fs::read_to_string(path)?)
}

/// Row-per-line CSV with 17 significant digits.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for r in 0..m.nrows() {
        let line: Vec<String> = (0..m.ncols())
            .map(|c| format!("{:.16e}", m[(r, c)]))
            .collect();
        let _ = writeln!(s, "{}", line.join(","));
    }
    s
}

pub fn parse_matrix_csv(text: &str) -> Result<DMatrix<f64>> {
    let rows: Vec<&str> = content_lines(text).collect();
    let Some(first) = rows.first() else {
        return Ok(DMatrix::zeros(0, 0));
    };
    let cols = first.split(',').count();
    let mut values = Vec::with_capacity(rows.len() * cols);
    for line in &rows {
        values.extend(parse_row(line, cols, "matrix")?);
    }
    Ok(DMatrix::from_row_slice(rows.len(), cols, &values))
}
