//! Binary and CSV encodings of [`FieldSample`].
//!
//! Binary layout, all little-endian: `nt: u64`, `nx: u64`, `seed: u64`, then
//! `nt * nx` values as `f64` in row-major (time-major) order. Coordinates are
//! not stored; the reader supplies the grid.

use std::io::{Read, Write};
use std::sync::Arc;

use super::FieldSample;
use crate::error::{Error, Result};
use crate::grid::FieldGrid;

pub fn write_binary<W: Write>(sample: &FieldSample, mut w: W) -> Result<()> {
    let g = sample.grid();
    w.write_all(&(g.nt() as u64).to_le_bytes())?;
    w.write_all(&(g.nx() as u64).to_le_bytes())?;
    w.write_all(&sample.seed().to_le_bytes())?;
    for v in sample.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn to_bytes(sample: &FieldSample) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * sample.values().len());
    write_binary(sample, &mut out).expect("writing to a Vec cannot fail");
    out
}

/// Decode one sample; `replicate` is not part of the layout and is supplied by the caller.
pub fn read_binary<R: Read>(mut r: R, grid: Arc<FieldGrid>, replicate: u64) -> Result<FieldSample> {
    let mut word = [0u8; 8];
    let mut next = |r: &mut R| -> Result<u64> {
        r.read_exact(&mut word)?;
        Ok(u64::from_le_bytes(word))
    };
    let nt = next(&mut r)? as usize;
    let nx = next(&mut r)? as usize;
    let seed = next(&mut r)?;
    if nt != grid.nt() || nx != grid.nx() {
        return Err(Error::Format(format!(
            "header says {nt}x{nx}, grid is {}x{}",
            grid.nt(),
            grid.nx()
        )));
    }
    let mut values = Vec::with_capacity(nt * nx);
    for _ in 0..nt * nx {
        values.push(f64::from_bits(next(&mut r)?));
    }
    FieldSample::new(grid, values, seed, replicate)
}

/// CSV export with header `t,x,value`, one row per grid point.
pub fn write_csv<W: Write>(sample: &FieldSample, mut w: W) -> Result<()> {
    writeln!(w, "t,x,value")?;
    let g = sample.grid();
    for (i, t) in g.times().iter().enumerate() {
        for (j, x) in g.spaces().iter().enumerate() {
            writeln!(w, "{t:e},{x:e},{:e}", sample.value(i, j))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FieldSample {
        let g = Arc::new(FieldGrid::new(vec![0.0, 1.0], vec![-0.5, 0.5]).unwrap());
        FieldSample::new(g, vec![0.0, 0.0, 0.25, -1.5], 42, 7).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let s = sample();
        let bytes = to_bytes(&s);
        assert_eq!(bytes.len(), 24 + 32);
        assert_eq!(&bytes[16..24], &42u64.to_le_bytes());
        let back = read_binary(&bytes[..], s.grid().clone(), 7).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn truncated_input_is_an_error() {
        let s = sample();
        let bytes = to_bytes(&s);
        assert!(read_binary(&bytes[..30], s.grid().clone(), 7).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut out = Vec::new();
        write_csv(&sample(), &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "t,x,value");
        assert_eq!(lines[4], "1e0,5e-1,-1.5e0");
    }
}
