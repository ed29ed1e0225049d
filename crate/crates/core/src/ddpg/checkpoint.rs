//! Binary network snapshot: magic, version, layer sizes, then the flat
//! parameter vector as little-endian f64.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::mlp::{param_count, Mlp};
use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"LMFN";
pub const VERSION: u32 = 1;

pub fn write_mlp<W: Write>(mut out: W, net: &Mlp) -> Result<()> {
    out.write_all(&MAGIC)?;
    out.write_u32::<LittleEndian>(VERSION)?;
    out.write_u32::<LittleEndian>(net.sizes().len() as u32)?;
    for &s in net.sizes() {
        out.write_u64::<LittleEndian>(s as u64)?;
    }
    for &p in net.params() {
        out.write_f64::<LittleEndian>(p)?;
    }
    Ok(())
}

pub fn read_mlp<R: Read>(mut input: R) -> Result<Mlp> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = input.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let n = input.read_u32::<LittleEndian>()? as usize;
    if !(2..=64).contains(&n) {
        return Err(Error::Checkpoint(format!("implausible layer count {n}")));
    }
    let sizes =
        (0..n).map(|_| input.read_u64::<LittleEndian>().map(|s| s as usize)).collect::<std::io::Result<Vec<_>>>()?;
    if sizes.iter().any(|&s| s == 0 || s > 1 << 24) {
        return Err(Error::Checkpoint(format!("implausible layer sizes {sizes:?}")));
    }
    let params =
        (0..param_count(&sizes)).map(|_| input.read_f64::<LittleEndian>()).collect::<std::io::Result<Vec<_>>>()?;
    Mlp::from_params(&sizes, params)
}

pub fn save_mlp(path: &std::path::Path, net: &Mlp) -> Result<()> {
    let f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_mlp(f, net)
}

pub fn load_mlp(path: &std::path::Path) -> Result<Mlp> {
    read_mlp(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::SeededRng;

    #[test]
    fn roundtrip_is_exact() {
        let net = Mlp::init(&[3, 4, 2], &mut SeededRng::new(1)).unwrap();
        let mut buf = Vec::new();
        write_mlp(&mut buf, &net).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 3 * 8 + net.params().len() * 8);
        assert_eq!(read_mlp(buf.as_slice()).unwrap(), net);
    }

    #[test]
    fn rejects_corruption() {
        let net = Mlp::zeros(&[1, 1]).unwrap();
        let mut buf = Vec::new();
        write_mlp(&mut buf, &net).unwrap();
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_mlp(bad.as_slice()).is_err());
        assert!(read_mlp(&buf[..buf.len() - 1]).is_err());
    }
}
