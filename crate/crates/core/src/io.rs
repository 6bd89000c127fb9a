//! Set files: one coordinate tuple per line, or the `BLAB` bitmap.
//!
//! Bitmap layout: `b"BLAB"`, version byte `1`, factor count as one byte,
//! each order as a little-endian `u64`, then `ceil(size/8)` bytes holding
//! element `i` in bit `i % 8` of byte `i / 8`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::group::{Group, Subset};

pub const MAGIC: &[u8; 4] = b"BLAB";
pub const VERSION: u8 = 1;

/// Parse the line format: coordinates separated by whitespace or commas,
/// optionally in parentheses; `#` starts a comment. Coordinates are
/// reduced modulo the factor orders.
pub fn parse_set_lines(g: &Group, text: &str) -> Result<Subset> {
    let mut idx = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let line = line.trim_start_matches('(').trim_end_matches(')');
        if line.is_empty() {
            continue;
        }
        let coords = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<i64>()
                    .map_err(|_| Error::Parse(format!("line {}: bad coordinate {t:?}", lineno + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        if coords.len() != g.rank() {
            return Err(Error::Parse(format!(
                "line {}: expected {} coordinates, got {}",
                lineno + 1,
                g.rank(),
                coords.len()
            )));
        }
        idx.push(g.index_reduced(&coords)?);
    }
    Subset::from_indices(g, idx)
}

pub fn format_set_lines(s: &Subset) -> String {
    let g = s.group();
    let mut out = String::new();
    for &x in s.members() {
        let c: Vec<String> = g.coords(x).iter().map(|v| v.to_string()).collect();
        out.push_str(&c.join(" "));
        out.push('\n');
    }
    out
}

pub fn encode_bitmap(s: &Subset) -> Vec<u8> {
    let g = s.group();
    let mut out = Vec::with_capacity(6 + 8 * g.rank() + g.size().div_ceil(8));
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.push(g.rank() as u8);
    for &n in g.orders() {
        out.extend_from_slice(&(n as u64).to_le_bytes());
    }
    let mut bits = vec![0u8; g.size().div_ceil(8)];
    for &x in s.members() {
        bits[x / 8] |= 1 << (x % 8);
    }
    out.extend_from_slice(&bits);
    out
}

/// Decode a bitmap; the group is read from the header.
pub fn decode_bitmap(bytes: &[u8]) -> Result<Subset> {
    let bad = |m: &str| Error::Parse(format!("bitmap: {m}"));
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(bad("missing BLAB magic"));
    }
    if bytes[4] != VERSION {
        return Err(bad(&format!("unsupported version {}", bytes[4])));
    }
    let m = bytes[5] as usize;
    let head = 6 + 8 * m;
    if bytes.len() < head {
        return Err(bad("truncated header"));
    }
    let orders = (0..m)
        .map(|j| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[6 + 8 * j..14 + 8 * j]);
            usize::try_from(u64::from_le_bytes(b)).map_err(|_| bad("order overflows usize"))
        })
        .collect::<Result<Vec<_>>>()?;
    let g = Group::new(&orders)?;
    let body = &bytes[head..];
    if body.len() != g.size().div_ceil(8) {
        return Err(bad(&format!(
            "expected {} bitmap bytes, found {}",
            g.size().div_ceil(8),
            body.len()
        )));
    }
    let pad = g.size() % 8;
    if pad != 0 && body[body.len() - 1] >> pad != 0 {
        return Err(bad("padding bits set"));
    }
    let mask = (0..g.size()).map(|i| body[i / 8] >> (i % 8) & 1 == 1).collect();
    Subset::from_mask(&g, mask)
}

/// Read a set file in either format. Bitmaps must match `g`.
pub fn read_set(g: &Group, path: &Path) -> Result<Subset> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    if bytes.starts_with(MAGIC) {
        let s = decode_bitmap(&bytes)?;
        if s.group() != g {
            return Err(Error::GroupMismatch);
        }
        return Ok(s);
    }
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse("set file is not UTF-8".into()))?;
    parse_set_lines(g, &text)
}

/// Integers, one per line, for subsets of `{1..N}`.
pub fn parse_integer_lines(text: &str) -> Result<Vec<i64>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(
            line.parse::<i64>()
                .map_err(|_| Error::Parse(format!("line {}: bad integer {line:?}", lineno + 1)))?,
        );
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format_roundtrip() {
        let g = Group::parse("Z4xZ9").unwrap();
        let s = parse_set_lines(&g, "# comment\n0 1\n(3, 8)\n\n1,-1\n").unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.contains(g.index(&[1, 8]).unwrap()));
        assert_eq!(parse_set_lines(&g, &format_set_lines(&s)).unwrap(), s);
        assert!(parse_set_lines(&g, "1\n").is_err());
    }

    #[test]
    fn bitmap_layout() {
        let g = Group::cyclic(10).unwrap();
        let s = Subset::from_indices(&g, [0, 3, 9]).unwrap();
        let b = encode_bitmap(&s);
        assert_eq!(&b[..6], b"BLAB\x01\x01");
        assert_eq!(&b[6..14], &10u64.to_le_bytes());
        assert_eq!(&b[14..], &[0b0000_1001, 0b0000_0010]);
        assert_eq!(decode_bitmap(&b).unwrap(), s);
        let mut bad = b.clone();
        bad[15] |= 0x80;
        assert!(decode_bitmap(&bad).is_err());
        assert!(decode_bitmap(&b[..10]).is_err());
    }
}
