//! Point cloud files: headerless little-endian `f32` xyz triplets (`.bin`)
//! and PLY (ascii or binary, read; binary little-endian `f64`, written).

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use crate::geom::{PointCloud, Rgb};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CloudFormat {
    XyzBin,
    Ply,
}

impl CloudFormat {
    pub fn extension(self) -> &'static str {
        match self {
            CloudFormat::XyzBin => "bin",
            CloudFormat::Ply => "ply",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "bin" => Some(CloudFormat::XyzBin),
            "ply" => Some(CloudFormat::Ply),
            _ => None,
        }
    }
}

pub fn read_point_cloud(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        CloudFormat::XyzBin => decode_xyz_bin(&bytes, path),
        CloudFormat::Ply => decode_ply(&bytes, path),
    }
}

pub fn write_point_cloud(
    path: impl AsRef<Path>,
    pcd: &PointCloud,
    format: CloudFormat,
) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        CloudFormat::XyzBin => encode_xyz_bin(pcd),
        CloudFormat::Ply => encode_ply(pcd),
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn decode_xyz_bin(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    if bytes.len() % 12 != 0 {
        return Err(Error::format(
            path,
            format!("xyz-bin size {} is not a multiple of 12 bytes", bytes.len()),
        ));
    }
    let points = bytes
        .chunks_exact(12)
        .map(|c| {
            let f = |i: usize| f32::from_le_bytes([c[i], c[i + 1], c[i + 2], c[i + 3]]) as f64;
            Point3::new(f(0), f(4), f(8))
        })
        .collect();
    PointCloud::from_points(points).map_err(|e| Error::format(path, e.to_string()))
}

/// Narrows coordinates to `f32`; colors are dropped.
pub fn encode_xyz_bin(pcd: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(pcd.len() * 12);
    for p in pcd.points() {
        for v in p.iter() {
            out.extend_from_slice(&(*v as f32).to_le_bytes());
        }
    }
    out
}

pub fn encode_ply(pcd: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(64 + pcd.len() * 27);
    let _ = write!(
        out,
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\n\
         property double x\nproperty double y\nproperty double z\n",
        pcd.len()
    );
    if pcd.colors().is_some() {
        out.extend_from_slice(b"property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    out.extend_from_slice(b"end_header\n");
    for (i, p) in pcd.points().iter().enumerate() {
        for v in p.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        if let Some(c) = pcd.colors() {
            out.extend_from_slice(&c[i]);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Encoding {
    Ascii,
    BinaryLe,
    BinaryBe,
}

#[derive(Debug, Clone, Copy)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn decode(self, b: &[u8], big: bool) -> f64 {
        macro_rules! num {
            ($t:ty, $n:expr) => {{
                let mut a = [0u8; $n];
                a.copy_from_slice(&b[..$n]);
                (if big {
                    <$t>::from_be_bytes(a)
                } else {
                    <$t>::from_le_bytes(a)
                }) as f64
            }};
        }
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => num!(i16, 2),
            Scalar::U16 => num!(u16, 2),
            Scalar::I32 => num!(i32, 4),
            Scalar::U32 => num!(u32, 4),
            Scalar::F32 => num!(f32, 4),
            Scalar::F64 => num!(f64, 8),
        }
    }
}

#[derive(Debug)]
struct Property {
    name: String,
    /// `Some(count type)` for list properties.
    list: Option<Scalar>,
    kind: Scalar,
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

struct Header {
    encoding: Encoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8], path: &Path) -> Result<Header> {
    let bad = |msg: String| Error::format(path, msg);
    let end = bytes
        .windows(11)
        .position(|w| w == b"end_header\n")
        .or_else(|| bytes.windows(12).position(|w| w == b"end_header\r\n"))
        .ok_or_else(|| bad("PLY header has no end_header".into()))?;
    let header_text =
        std::str::from_utf8(&bytes[..end]).map_err(|_| bad("PLY header is not UTF-8".into()))?;
    let body_offset = end + if bytes[end + 10] == b'\r' { 12 } else { 11 };

    let mut lines = header_text.lines();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(bad("missing PLY magic".into()));
    }
    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        match tok.as_slice() {
            [] | ["comment", ..] | ["obj_info", ..] => {}
            ["format", fmt, _version] => {
                encoding = Some(match *fmt {
                    "ascii" => Encoding::Ascii,
                    "binary_little_endian" => Encoding::BinaryLe,
                    "binary_big_endian" => Encoding::BinaryBe,
                    other => return Err(bad(format!("unknown PLY format {other}"))),
                })
            }
            ["element", name, count] => elements.push(Element {
                name: name.to_string(),
                count: count
                    .parse()
                    .map_err(|_| bad(format!("bad element count {count}")))?,
                props: Vec::new(),
            }),
            ["property", "list", count_ty, item_ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before element".into()))?;
                el.props.push(Property {
                    name: name.to_string(),
                    list: Some(
                        Scalar::parse(count_ty)
                            .ok_or_else(|| bad(format!("bad type {count_ty}")))?,
                    ),
                    kind: Scalar::parse(item_ty)
                        .ok_or_else(|| bad(format!("bad type {item_ty}")))?,
                });
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| bad("property before element".into()))?;
                el.props.push(Property {
                    name: name.to_string(),
                    list: None,
                    kind: Scalar::parse(ty).ok_or_else(|| bad(format!("bad type {ty}")))?,
                });
            }
            _ => return Err(bad(format!("unrecognized PLY header line {line:?}"))),
        }
    }
    Ok(Header {
        encoding: encoding.ok_or_else(|| bad("PLY header has no format line".into()))?,
        elements,
        body_offset,
    })
}

/// Sequential reader over either ascii tokens or binary scalars.
enum Body<'a> {
    Ascii(std::str::SplitAsciiWhitespace<'a>),
    Binary {
        data: &'a [u8],
        pos: usize,
        big: bool,
    },
}

impl Body<'_> {
    fn next(&mut self, kind: Scalar) -> Option<f64> {
        match self {
            Body::Ascii(it) => it.next()?.parse().ok(),
            Body::Binary { data, pos, big } => {
                let n = kind.size();
                let slice = data.get(*pos..*pos + n)?;
                *pos += n;
                Some(kind.decode(slice, *big))
            }
        }
    }
}

pub fn decode_ply(bytes: &[u8], path: &Path) -> Result<PointCloud> {
    let header = parse_header(bytes, path)?;
    let body = &bytes[header.body_offset..];
    let mut reader = match header.encoding {
        Encoding::Ascii => Body::Ascii(
            std::str::from_utf8(body)
                .map_err(|_| Error::format(path, "ascii PLY body is not UTF-8"))?
                .split_ascii_whitespace(),
        ),
        Encoding::BinaryLe | Encoding::BinaryBe => Body::Binary {
            data: body,
            pos: 0,
            big: header.encoding == Encoding::BinaryBe,
        },
    };
    let truncated = || Error::format(path, "PLY body is truncated or malformed");

    let mut points = Vec::new();
    let mut colors: Option<Vec<Rgb>> = None;
    for el in &header.elements {
        let is_vertex = el.name == "vertex";
        let find = |n: &str| {
            el.props
                .iter()
                .position(|p| p.name == n && p.list.is_none())
        };
        let (xi, yi, zi) = (find("x"), find("y"), find("z"));
        let (ri, gi, bi) = (find("red"), find("green"), find("blue"));
        if is_vertex {
            if xi.is_none() || yi.is_none() || zi.is_none() {
                return Err(Error::format(
                    path,
                    "PLY vertex element lacks x/y/z properties",
                ));
            }
            points.reserve(el.count);
            if ri.is_some() && gi.is_some() && bi.is_some() {
                colors = Some(Vec::with_capacity(el.count));
            }
        }
        let mut values = vec![0.0; el.props.len()];
        for _ in 0..el.count {
            for (k, prop) in el.props.iter().enumerate() {
                match prop.list {
                    Some(count_ty) => {
                        let n = reader.next(count_ty).ok_or_else(truncated)? as usize;
                        for _ in 0..n {
                            reader.next(prop.kind).ok_or_else(truncated)?;
                        }
                    }
                    None => values[k] = reader.next(prop.kind).ok_or_else(truncated)?,
                }
            }
            if is_vertex {
                points.push(Point3::new(
                    values[xi.unwrap()],
                    values[yi.unwrap()],
                    values[zi.unwrap()],
                ));
                if let (Some(c), Some(r), Some(g), Some(b)) = (colors.as_mut(), ri, gi, bi) {
                    c.push([values[r] as u8, values[g] as u8, values[b] as u8]);
                }
            }
        }
        if is_vertex {
            break;
        }
    }
    PointCloud::new(points, colors).map_err(|e| Error::format(path, e.to_string()))
}
