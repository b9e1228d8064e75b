//! Binary checkpoints.
//!
//! ```text
//! magic        8 bytes  "S2DGCKPT"
//! version      u32
//! sh_degree    u32
//! active_sh    u32
//! step         u64
//! count        u64      n
//! centers      3n f64
//! rotations    4n f64
//! log_scales   2n f64
//! opacities    n  f64
//! sh           48n f64  (16 coefficients × RGB, all bands)
//! has_adam     u8
//! [adam_step   u64
//!  per group (center, rotation, log_scale, opacity, sh): m then v]
//! ```
//!
//! Integers and floats are little endian. The file length must match the
//! header exactly.

use std::path::Path;

use crate::error::{Error, Result};
use crate::model::SplatModel;
use crate::sh::MAX_SH_COEFFS;

use super::optimizer::{Group, Moments, OptimizerState};

pub const MAGIC: &[u8; 8] = b"S2DGCKPT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8 + 8;
const PER_SPLAT: usize = 3 + 4 + 2 + 1 + 3 * MAX_SH_COEFFS;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: SplatModel,
    pub step: u64,
    pub optimizer: Option<OptimizerState>,
}

pub fn encode(ckpt: &Checkpoint) -> Result<Vec<u8>> {
    let m = &ckpt.model;
    m.validate()?;
    if let Some(o) = &ckpt.optimizer {
        o.validate(m.len())?;
    }
    let n = m.len();
    let opt_len = ckpt.optimizer.as_ref().map_or(0, |_| 8 + 2 * 8 * n * PER_SPLAT);
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * n * PER_SPLAT + 1 + opt_len);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(m.sh_degree as u32).to_le_bytes());
    out.extend_from_slice(&(m.active_sh_degree as u32).to_le_bytes());
    out.extend_from_slice(&ckpt.step.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let mut put = |xs: &[f64]| xs.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes()));
    put(m.centers.as_flattened());
    put(m.rotations.as_flattened());
    put(m.log_scales.as_flattened());
    put(&m.opacity_logits);
    put(m.sh.as_flattened().as_flattened());
    match &ckpt.optimizer {
        None => out.push(0),
        Some(o) => {
            out.push(1);
            out.extend_from_slice(&o.step.to_le_bytes());
            for mo in &o.moments {
                for x in mo.m.iter().chain(&mo.v) {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, k: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(k).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Corrupt(format!("checkpoint truncated at byte {}", self.bytes.len())))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, k: usize) -> Result<Vec<f64>> {
        let b = self.take(k.checked_mul(8).ok_or_else(|| Error::Corrupt("checkpoint count overflows".into()))?)?;
        Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

fn chunks<const K: usize>(v: Vec<f64>) -> Vec<[f64; K]> {
    v.chunks_exact(K).map(|c| c.try_into().expect("chunk size")).collect()
}

pub fn decode(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8).map_err(|_| Error::Corrupt("checkpoint shorter than its header".into()))? != MAGIC {
        return Err(Error::Format("not a checkpoint (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::VersionMismatch { found: version, expected: VERSION });
    }
    let sh_degree = r.u32()? as usize;
    let active = r.u32()? as usize;
    let step = r.u64()?;
    let n = usize::try_from(r.u64()?).map_err(|_| Error::Corrupt("splat count overflows".into()))?;
    let expected_core = n
        .checked_mul(8 * PER_SPLAT)
        .and_then(|b| b.checked_add(HEADER_LEN + 1))
        .ok_or_else(|| Error::Corrupt("splat count overflows".into()))?;
    if bytes.len() < expected_core {
        return Err(Error::Corrupt(format!("checkpoint has {} bytes, header needs at least {expected_core}", bytes.len())));
    }
    let centers = chunks::<3>(r.f64s(3 * n)?);
    let rotations = chunks::<4>(r.f64s(4 * n)?);
    let log_scales = chunks::<2>(r.f64s(2 * n)?);
    let opacity_logits = r.f64s(n)?;
    let sh = r
        .f64s(3 * MAX_SH_COEFFS * n)?
        .chunks_exact(3 * MAX_SH_COEFFS)
        .map(|c| {
            let mut s = [[0.0; 3]; MAX_SH_COEFFS];
            for (k, v) in c.iter().enumerate() {
                s[k / 3][k % 3] = *v;
            }
            s
        })
        .collect();
    let optimizer = match r.take(1)?[0] {
        0 => None,
        1 => {
            let ostep = r.u64()?;
            let mut moments = Vec::new();
            for g in Group::ALL {
                let m = r.f64s(n * g.stride())?;
                let v = r.f64s(n * g.stride())?;
                moments.push(Moments { m, v });
            }
            Some(OptimizerState { step: ostep, moments })
        }
        f => return Err(Error::Corrupt(format!("bad optimizer flag {f}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Corrupt(format!("{} trailing bytes after checkpoint", bytes.len() - r.pos)));
    }
    let model = SplatModel { centers, rotations, log_scales, opacity_logits, sh, sh_degree, active_sh_degree: active };
    model.validate().map_err(|e| Error::Corrupt(format!("checkpoint model invalid: {e}")))?;
    if let Some(o) = &optimizer {
        o.validate(n).map_err(|e| Error::Corrupt(format!("checkpoint optimizer invalid: {e}")))?;
    }
    Ok(Checkpoint { model, step, optimizer })
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    std::fs::write(path, encode(ckpt)?)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_ckpt(n: usize, with_opt: bool) -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(n as u64);
        let mut model = SplatModel::new(3);
        model.active_sh_degree = 2;
        for _ in 0..n {
            let mut sh = [[0.0; 3]; MAX_SH_COEFFS];
            sh.iter_mut().flatten().for_each(|v| *v = rng.gen_range(-1.0..1.0));
            model.push(
                Vec3::new(rng.gen(), rng.gen(), rng.gen()),
                [rng.gen(), rng.gen(), rng.gen(), 1.0],
                [rng.gen_range(0.01..1.0), rng.gen_range(0.01..1.0)],
                rng.gen_range(0.01..0.99),
                sh,
            );
        }
        let optimizer = with_opt.then(|| {
            let mut o = OptimizerState::new(n);
            o.step = 17;
            for mo in &mut o.moments {
                mo.m.iter_mut().chain(mo.v.iter_mut()).for_each(|x| *x = rng.gen());
            }
            o
        });
        Checkpoint { model, step: 17, optimizer }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        for (n, opt) in [(0, false), (1, true), (9, true), (5, false)] {
            let c = random_ckpt(n, opt);
            assert_eq!(decode(&encode(&c).unwrap()).unwrap(), c);
        }
    }

    #[test]
    fn truncation_and_trailing_bytes_are_corrupt() {
        let bytes = encode(&random_ckpt(3, true)).unwrap();
        for cut in [4, HEADER_LEN - 1, HEADER_LEN + 10, bytes.len() - 1] {
            assert!(matches!(decode(&bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
        }
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(matches!(decode(&extra), Err(Error::Corrupt(_))));
    }

    #[test]
    fn version_and_magic_are_checked() {
        let mut bytes = encode(&random_ckpt(2, false)).unwrap();
        bytes[8] = 2;
        assert!(matches!(decode(&bytes), Err(Error::VersionMismatch { found: 2, expected: 1 })));
        bytes[0] = b'X';
        assert!(matches!(decode(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn missing_file_is_reported() {
        assert!(matches!(load_checkpoint(Path::new("/nonexistent.ckpt")), Err(Error::MissingFile(_))));
    }
}
