//! Binary PGM (P5) encoding for frames; datasets store one concatenated
//! stream of P5 images per episode.

use std::io::Write;

use super::Frame;
use crate::{Error, Result};

/// Append one frame as a binary P5 image.
pub fn write_pgm<W: Write>(w: &mut W, frame: &Frame) -> Result<()> {
    write!(w, "P5\n{} {}\n255\n", frame.width, frame.height)?;
    w.write_all(&frame.pixels)?;
    Ok(())
}

/// Parse a concatenated stream of P5 images.
pub fn read_pgm_seq(bytes: &[u8]) -> Result<Vec<Frame>> {
    let mut frames = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let (frame, next) = read_one(bytes, pos)?;
        frames.push(frame);
        pos = next;
    }
    Ok(frames)
}

fn read_one(bytes: &[u8], start: usize) -> Result<(Frame, usize)> {
    let mut pos = start;
    let magic = token(bytes, &mut pos)?;
    if magic != b"P5" {
        return Err(Error::Format(format!(
            "expected P5 magic at byte {start}, got {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width: usize = parse_int(token(bytes, &mut pos)?)?;
    let height: usize = parse_int(token(bytes, &mut pos)?)?;
    let maxval: usize = parse_int(token(bytes, &mut pos)?)?;
    if maxval != 255 {
        return Err(Error::Format(format!("unsupported PGM maxval {maxval}")));
    }
    // Exactly one whitespace byte separates the header from pixel data.
    pos += 1;
    let n = width * height;
    if pos + n > bytes.len() {
        return Err(Error::Format("truncated PGM pixel data".to_string()));
    }
    let pixels = bytes[pos..pos + n].to_vec();
    Ok((
        Frame {
            width,
            height,
            pixels,
        },
        pos + n,
    ))
}

/// Advance past whitespace and return the next whitespace-delimited token.
fn token<'a>(bytes: &'a [u8], pos: &mut usize) -> Result<&'a [u8]> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::Format("unexpected end of PGM header".to_string()));
    }
    Ok(&bytes[start..*pos])
}

fn parse_int(tok: &[u8]) -> Result<usize> {
    std::str::from_utf8(tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Format("bad integer in PGM header".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_seq_round_trip() {
        let frames: Vec<Frame> = (0..3)
            .map(|k| Frame {
                width: 4,
                height: 3,
                pixels: (0..12).map(|i| (i * 7 + k * 31) as u8).collect(),
            })
            .collect();
        let mut buf = Vec::new();
        for f in &frames {
            write_pgm(&mut buf, f).unwrap();
        }
        let back = read_pgm_seq(&buf).unwrap();
        assert_eq!(back, frames);
    }

    #[test]
    fn truncated_pgm_is_an_error() {
        let f = Frame {
            width: 4,
            height: 3,
            pixels: vec![0; 12],
        };
        let mut buf = Vec::new();
        write_pgm(&mut buf, &f).unwrap();
        buf.truncate(buf.len() - 1);
        assert!(read_pgm_seq(&buf).is_err());
    }
}
