//! Trajectory export.
//!
//! CSV: header `t,x1,...,xn`, one row per sample.
//!
//! Binary frames, all little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic  b"LYTR"
//! 4       4     version (u32, currently 1)
//! 8       8     n      (u64, state dimension)
//! 16      8     dt     (f64, integrator step)
//! 24      8     count  (u64, number of frames)
//! 32      ...   count frames of (n + 1) f64: t, x1, ..., xn
//! ```

use std::io::{self, Read, Write};

use nalgebra::DVector;

use super::Trajectory;

pub const FRAME_MAGIC: [u8; 4] = *b"LYTR";
pub const FRAME_VERSION: u32 = 1;

impl Trajectory {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "t")?;
        for i in 1..=self.dim() {
            write!(w, ",x{i}")?;
        }
        writeln!(w)?;
        for (t, x) in self.times.iter().zip(&self.states) {
            write!(w, "{t}")?;
            for v in x.iter() {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(&FRAME_MAGIC)?;
        w.write_all(&FRAME_VERSION.to_le_bytes())?;
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        w.write_all(&self.dt.to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        for (t, x) in self.times.iter().zip(&self.states) {
            w.write_all(&t.to_le_bytes())?;
            for v in x.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }
}

/// Decoded binary frame file: `(dt, times, states)`.
pub fn read_binary<R: Read>(mut r: R) -> io::Result<(f64, Vec<f64>, Vec<DVector<f64>>)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != FRAME_MAGIC {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "bad frame magic"));
    }
    let version = u32::from_le_bytes(read_array(&mut r)?);
    if version != FRAME_VERSION {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            format!("unsupported frame version {version}"),
        ));
    }
    let n = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let dt = f64::from_le_bytes(read_array(&mut r)?);
    let count = u64::from_le_bytes(read_array(&mut r)?) as usize;
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    for _ in 0..count {
        times.push(f64::from_le_bytes(read_array(&mut r)?));
        let mut x = DVector::zeros(n);
        for v in x.iter_mut() {
            *v = f64::from_le_bytes(read_array(&mut r)?);
        }
        states.push(x);
    }
    Ok((dt, times, states))
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> io::Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Trajectory {
        Trajectory {
            times: vec![0.0, 0.5],
            states: vec![DVector::from_vec(vec![1.0, -2.0]), DVector::from_vec(vec![0.25, 3.5])],
            dt: 0.5,
            stride: 1,
            fingerprint: "abc".into(),
            seed: 1,
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        sample().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,x1,x2\n0,1,-2\n0.5,0.25,3.5\n");
    }

    #[test]
    fn binary_header_and_round_trip() {
        let traj = sample();
        let mut buf = Vec::new();
        traj.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"LYTR");
        assert_eq!(buf.len(), 32 + 2 * 3 * 8);
        let (dt, times, states) = read_binary(&buf[..]).unwrap();
        assert_eq!(dt, 0.5);
        assert_eq!(times, traj.times);
        assert_eq!(states, traj.states);
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_binary(&bad[..]).is_err());
    }
}
