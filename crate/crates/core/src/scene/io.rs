//! ASCII PLY and whitespace-separated `x y z [r g b]` text ingestion.

use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Point, PointCloud, DEFAULT_GRAY};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CloudFormat {
    PlyAscii,
    XyzrgbText,
}

impl CloudFormat {
    /// Guesses the format from a file extension (`.ply`, anything else is text).
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("ply") => CloudFormat::PlyAscii,
            _ => CloudFormat::XyzrgbText,
        }
    }
}

pub fn load_cloud<T: Real, R: BufRead>(source: R, format: CloudFormat) -> Result<PointCloud<T>> {
    match format {
        CloudFormat::PlyAscii => load_ply(source),
        CloudFormat::XyzrgbText => load_xyzrgb(source),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_number(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v = f64::from_str(tok).map_err(|_| parse_err(line, format!("non-numeric {what} field {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite {what} value {tok:?}")));
    }
    Ok(v)
}

fn checked_color(v: f64, byte_scale: bool, line: usize) -> Result<f64> {
    let c = if byte_scale { v / 255.0 } else { v };
    if !(0.0..=1.0).contains(&c) {
        return Err(parse_err(line, format!("color component {v} out of range")));
    }
    Ok(c)
}

#[derive(Clone, Copy, PartialEq)]
enum Slot {
    X,
    Y,
    Z,
    Red,
    Green,
    Blue,
    Ignored,
}

struct VertexProperty {
    slot: Slot,
    integral: bool,
}

fn load_ply<T: Real, R: BufRead>(source: R) -> Result<PointCloud<T>> {
    let mut lines = source.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next_line = |expect: &str| -> Result<(usize, String)> {
        match lines.next() {
            Some((n, Ok(l))) => Ok((n, l)),
            Some((n, Err(e))) => Err(parse_err(n, e.to_string())),
            None => Err(parse_err(0, format!("unexpected end of file, expected {expect}"))),
        }
    };

    let (n, magic) = next_line("ply magic")?;
    if magic.trim() != "ply" {
        return Err(parse_err(n, "missing `ply` magic"));
    }

    let mut vertex_count: Option<usize> = None;
    let mut in_vertex = false;
    let mut props: Vec<VertexProperty> = Vec::new();
    loop {
        let (n, line) = next_line("end_header")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["comment", ..] | ["obj_info", ..] => {}
            ["format", "ascii", _] => {}
            ["format", other, ..] => return Err(parse_err(n, format!("unsupported PLY format {other:?}"))),
            ["element", name, count] => {
                let count = count
                    .parse::<usize>()
                    .map_err(|_| parse_err(n, format!("bad element count {count:?}")))?;
                in_vertex = *name == "vertex";
                if in_vertex {
                    if vertex_count.is_some() {
                        return Err(parse_err(n, "duplicate vertex element"));
                    }
                    if !props.is_empty() {
                        return Err(parse_err(n, "vertex element must come first"));
                    }
                    vertex_count = Some(count);
                }
            }
            ["property", "list", ..] if in_vertex => {
                return Err(parse_err(n, "list properties on vertices are not supported"))
            }
            ["property", ty, name] => {
                if in_vertex {
                    let integral = match *ty {
                        "uchar" | "uint8" | "char" | "int8" | "short" | "ushort" | "int" | "uint" | "int16"
                        | "uint16" | "int32" | "uint32" => true,
                        "float" | "float32" | "double" | "float64" => false,
                        other => return Err(parse_err(n, format!("unknown property type {other:?}"))),
                    };
                    let slot = match *name {
                        "x" => Slot::X,
                        "y" => Slot::Y,
                        "z" => Slot::Z,
                        "red" | "r" => Slot::Red,
                        "green" | "g" => Slot::Green,
                        "blue" | "b" => Slot::Blue,
                        _ => Slot::Ignored,
                    };
                    props.push(VertexProperty { slot, integral });
                }
            }
            ["property", ..] => {}
            ["end_header"] => break,
            _ => return Err(parse_err(n, format!("malformed header line {line:?}"))),
        }
    }

    let count = vertex_count.ok_or_else(|| parse_err(0, "header lacks `element vertex`"))?;
    for s in [Slot::X, Slot::Y, Slot::Z] {
        if !props.iter().any(|p| p.slot == s) {
            return Err(parse_err(0, "vertex element lacks x/y/z properties"));
        }
    }
    let color_slots = [Slot::Red, Slot::Green, Slot::Blue];
    let has_color = color_slots.iter().all(|s| props.iter().any(|p| p.slot == *s));

    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let (n, line) = next_line("vertex data")?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != props.len() {
            return Err(parse_err(
                n,
                format!("expected {} vertex fields, found {}", props.len(), toks.len()),
            ));
        }
        let mut xyz = [0.0f64; 3];
        let mut rgb = [DEFAULT_GRAY; 3];
        for (tok, prop) in toks.iter().zip(&props) {
            match prop.slot {
                Slot::X => xyz[0] = parse_number(tok, n, "x")?,
                Slot::Y => xyz[1] = parse_number(tok, n, "y")?,
                Slot::Z => xyz[2] = parse_number(tok, n, "z")?,
                Slot::Red | Slot::Green | Slot::Blue if has_color => {
                    let k = color_slots.iter().position(|s| *s == prop.slot).unwrap();
                    let v = parse_number(tok, n, "color")?;
                    rgb[k] = checked_color(v, prop.integral, n)?;
                }
                _ => {
                    parse_number(tok, n, "property")?;
                }
            }
        }
        points.push(Point::new(
            Vec3::new(T::lit(xyz[0]), T::lit(xyz[1]), T::lit(xyz[2])),
            rgb.map(T::lit),
        ));
    }
    Ok(PointCloud::new(points))
}

/// Integer color tokens are 0-255 bytes; tokens with a decimal point or
/// exponent are already unit-scaled.
fn load_xyzrgb<T: Real, R: BufRead>(source: R) -> Result<PointCloud<T>> {
    let mut points = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| parse_err(n, e.to_string()))?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 3 && toks.len() != 6 {
            return Err(parse_err(n, format!("expected 3 or 6 columns, found {}", toks.len())));
        }
        let x = parse_number(toks[0], n, "x")?;
        let y = parse_number(toks[1], n, "y")?;
        let z = parse_number(toks[2], n, "z")?;
        let mut rgb = [DEFAULT_GRAY; 3];
        if toks.len() == 6 {
            let byte_scale = toks[3..].iter().all(|t| t.parse::<i64>().is_ok());
            for k in 0..3 {
                rgb[k] = checked_color(parse_number(toks[3 + k], n, "color")?, byte_scale, n)?;
            }
        }
        points.push(Point::new(Vec3::new(T::lit(x), T::lit(y), T::lit(z)), rgb.map(T::lit)));
    }
    Ok(PointCloud::new(points))
}

/// Writes a cloud in the given format. PLY colors are stored as bytes.
pub fn write_cloud<T: Real, W: Write>(cloud: &PointCloud<T>, format: CloudFormat, mut out: W) -> Result<()> {
    let byte = |c: T| (c.to_f64_lossy() * 255.0).round().clamp(0.0, 255.0) as u8;
    match format {
        CloudFormat::PlyAscii => {
            writeln!(out, "ply")?;
            writeln!(out, "format ascii 1.0")?;
            writeln!(out, "comment frame {}", cloud.frame_id)?;
            writeln!(out, "element vertex {}", cloud.len())?;
            for axis in ["x", "y", "z"] {
                writeln!(out, "property float {axis}")?;
            }
            for ch in ["red", "green", "blue"] {
                writeln!(out, "property uchar {ch}")?;
            }
            writeln!(out, "end_header")?;
            for p in &cloud.points {
                let [x, y, z] = p.position.to_array().map(|v| v.to_f64_lossy());
                let [r, g, b] = p.color.map(byte);
                writeln!(out, "{x} {y} {z} {r} {g} {b}")?;
            }
        }
        CloudFormat::XyzrgbText => {
            writeln!(out, "# x y z r g b")?;
            for p in &cloud.points {
                let [x, y, z] = p.position.to_array().map(|v| v.to_f64_lossy());
                let [r, g, b] = p.color.map(byte);
                writeln!(out, "{x} {y} {z} {r} {g} {b}")?;
            }
        }
    }
    Ok(())
}
