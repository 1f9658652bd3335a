//! Versioned binary checkpoint: named f64 tensors of the model, optional
//! optimizer state, and a verbatim echo of the training configuration.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            8 bytes  b"LOCOCKP1"
//! version          u32      currently 1
//! config length    u64      followed by that many UTF-8 bytes
//! config sha256    32 bytes hash of the config bytes above
//! epoch            u64
//! dims             3 × u64  input, hidden, channels
//! tensor count     u32      model tensors, then per tensor:
//!   name length    u32      followed by UTF-8 name
//!   ndim           u32      followed by ndim × u64 dims
//!   values         f64 LE, row-major, Π dims entries
//! adam flag        u8       0 = absent, 1 = present
//!   step           u64
//!   lr, beta1, beta2, eps   4 × f64
//!   first moments  tensor count × tensor blocks as above
//!   second moments tensor count × tensor blocks as above
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rnn::{AdamConfig, AdamState, GruDims, ModelParams, TENSOR_NAMES};

const MAGIC: &[u8; 8] = b"LOCOCKP1";
const VERSION: u32 = 1;

/// Everything a training run needs to persist.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub config_text: String,
    pub epoch: u64,
    pub params: ModelParams<f64>,
    pub adam: Option<AdamState<f64>>,
}

impl Checkpoint {
    pub fn config_hash(&self) -> String {
        hash_hex(self.config_text.as_bytes())
    }
}

pub fn hash_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_tensor<W: Write>(w: &mut W, name: &str, shape: &[usize], values: &[f64]) -> Result<()> {
    w.write_u32::<LittleEndian>(name.len() as u32)?;
    w.write_all(name.as_bytes())?;
    w.write_u32::<LittleEndian>(shape.len() as u32)?;
    for &d in shape {
        w.write_u64::<LittleEndian>(d as u64)?;
    }
    for &v in values {
        w.write_f64::<LittleEndian>(v)?;
    }
    Ok(())
}

fn write_model<W: Write>(w: &mut W, params: &ModelParams<f64>) -> Result<()> {
    w.write_u32::<LittleEndian>(ModelParams::<f64>::tensor_count() as u32)?;
    for i in 0..ModelParams::<f64>::tensor_count() {
        write_tensor(w, TENSOR_NAMES[i], &params.tensor_shape(i), params.tensor(i))?;
    }
    Ok(())
}

pub fn save_to<W: Write>(mut w: W, ckpt: &Checkpoint) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    let cfg = ckpt.config_text.as_bytes();
    w.write_u64::<LittleEndian>(cfg.len() as u64)?;
    w.write_all(cfg)?;
    w.write_all(&Sha256::digest(cfg))?;
    w.write_u64::<LittleEndian>(ckpt.epoch)?;
    let dims = ckpt.params.dims();
    for d in [dims.input, dims.hidden, dims.channels] {
        w.write_u64::<LittleEndian>(d as u64)?;
    }
    write_model(&mut w, &ckpt.params)?;
    match &ckpt.adam {
        None => w.write_u8(0)?,
        Some(state) => {
            w.write_u8(1)?;
            w.write_u64::<LittleEndian>(state.step)?;
            for v in [state.cfg.lr, state.cfg.beta1, state.cfg.beta2, state.cfg.eps] {
                w.write_f64::<LittleEndian>(v)?;
            }
            write_model(&mut w, &state.m)?;
            write_model(&mut w, &state.v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    save_to(BufWriter::new(File::create(path)?), ckpt)
}

fn read_string<R: Read>(r: &mut R, what: &str) -> Result<String> {
    let len = r.read_u32::<LittleEndian>()? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf)
        .map_err(|_| Error::invalid_input(format!("checkpoint {what} is not UTF-8")))
}

fn read_model<R: Read>(r: &mut R, dims: GruDims, what: &str) -> Result<ModelParams<f64>> {
    let count = r.read_u32::<LittleEndian>()? as usize;
    if count != ModelParams::<f64>::tensor_count() {
        return Err(Error::invalid_input(format!(
            "checkpoint {what} holds {count} tensors, expected {}",
            ModelParams::<f64>::tensor_count()
        )));
    }
    let mut params = ModelParams::<f64>::zeros(dims);
    for i in 0..count {
        let name = read_string(r, "tensor name")?;
        if name != TENSOR_NAMES[i] {
            return Err(Error::invalid_input(format!(
                "checkpoint {what}: tensor {i} is `{name}`, expected `{}`",
                TENSOR_NAMES[i]
            )));
        }
        let ndim = r.read_u32::<LittleEndian>()? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(r.read_u64::<LittleEndian>()? as usize);
        }
        if shape != params.tensor_shape(i) {
            return Err(Error::invalid_input(format!(
                "checkpoint {what}: `{name}` has shape {shape:?}, expected {:?}",
                params.tensor_shape(i)
            )));
        }
        let dst = params.tensor_mut(i);
        for slot in dst.iter_mut() {
            *slot = r.read_f64::<LittleEndian>()?;
        }
    }
    Ok(params)
}

pub fn load_from<R: Read>(mut r: R) -> Result<Checkpoint> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::invalid_input("not a checkpoint file (bad magic)"));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::invalid_input(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let cfg_len = r.read_u64::<LittleEndian>()? as usize;
    let mut cfg = vec![0u8; cfg_len];
    r.read_exact(&mut cfg)?;
    let mut stored_hash = [0u8; 32];
    r.read_exact(&mut stored_hash)?;
    if Sha256::digest(&cfg).as_slice() != stored_hash {
        return Err(Error::invalid_input("checkpoint config echo fails its hash"));
    }
    let config_text = String::from_utf8(cfg)
        .map_err(|_| Error::invalid_input("checkpoint config echo is not UTF-8"))?;
    let epoch = r.read_u64::<LittleEndian>()?;
    let dims = GruDims {
        input: r.read_u64::<LittleEndian>()? as usize,
        hidden: r.read_u64::<LittleEndian>()? as usize,
        channels: r.read_u64::<LittleEndian>()? as usize,
    };
    let params = read_model(&mut r, dims, "model")?;
    for i in 0..ModelParams::<f64>::tensor_count() {
        if params.tensor(i).iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid_input(format!(
                "checkpoint tensor `{}` holds non-finite values",
                TENSOR_NAMES[i]
            )));
        }
    }
    let adam = match r.read_u8()? {
        0 => None,
        1 => {
            let step = r.read_u64::<LittleEndian>()?;
            let lr = r.read_f64::<LittleEndian>()?;
            let beta1 = r.read_f64::<LittleEndian>()?;
            let beta2 = r.read_f64::<LittleEndian>()?;
            let eps = r.read_f64::<LittleEndian>()?;
            let m = read_model(&mut r, dims, "first moments")?;
            let v = read_model(&mut r, dims, "second moments")?;
            Some(AdamState {
                m,
                v,
                step,
                cfg: AdamConfig {
                    lr,
                    beta1,
                    beta2,
                    eps,
                },
            })
        }
        other => {
            return Err(Error::invalid_input(format!(
                "bad optimizer-presence flag {other}"
            )))
        }
    };
    Ok(Checkpoint {
        config_text,
        epoch,
        params,
        adam,
    })
}

pub fn load(path: &Path) -> Result<Checkpoint> {
    load_from(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::Mat;
    use crate::rnn;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample_checkpoint() -> Checkpoint {
        let dims = GruDims {
            input: 3,
            hidden: 5,
            channels: 2,
        };
        let params = ModelParams::<f64>::init(dims, 99, -1.5);
        let mut adam = AdamState::new(dims, AdamConfig::default());
        adam.step = 17;
        Checkpoint {
            config_text: "[run]\ntask = synthetic-1d\n".into(),
            epoch: 4,
            params,
            adam: Some(adam),
        }
    }

    #[test]
    fn round_trip_preserves_everything() {
        let ckpt = sample_checkpoint();
        let mut buf = Vec::new();
        save_to(&mut buf, &ckpt).unwrap();
        let back = load_from(&buf[..]).unwrap();
        assert_eq!(back.config_text, ckpt.config_text);
        assert_eq!(back.epoch, 4);
        assert_eq!(back.params, ckpt.params);
        let adam = back.adam.unwrap();
        assert_eq!(adam.step, 17);
        assert_eq!(adam.m, ckpt.adam.as_ref().unwrap().m);
    }

    #[test]
    fn serialization_is_deterministic() {
        let ckpt = sample_checkpoint();
        let mut a = Vec::new();
        let mut b = Vec::new();
        save_to(&mut a, &ckpt).unwrap();
        save_to(&mut b, &ckpt).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn reloaded_model_forward_is_bit_identical() {
        let ckpt = sample_checkpoint();
        let mut buf = Vec::new();
        save_to(&mut buf, &ckpt).unwrap();
        let back = load_from(&buf[..]).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut x = Mat::<f64>::zeros(12, 3);
        for v in x.data_mut() {
            *v = rng.gen::<f64>() * 2.0 - 1.0;
        }
        let (p1, _) = rnn::forward(&ckpt.params, &x).unwrap();
        let (p2, _) = rnn::forward(&back.params, &x).unwrap();
        assert_eq!(p1.data(), p2.data());
    }

    #[test]
    fn corrupted_config_hash_detected() {
        let ckpt = sample_checkpoint();
        let mut buf = Vec::new();
        save_to(&mut buf, &ckpt).unwrap();
        // Flip a config byte after the 20-byte header (magic+version+len).
        buf[21] ^= 0x01;
        assert!(load_from(&buf[..]).is_err());
    }

    #[test]
    fn bad_magic_rejected() {
        let mut buf = Vec::new();
        save_to(&mut buf, &sample_checkpoint()).unwrap();
        buf[0] = b'X';
        assert!(load_from(&buf[..]).is_err());
    }
}
