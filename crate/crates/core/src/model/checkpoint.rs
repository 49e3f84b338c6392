//! Checkpoint layout, little-endian throughout:
//!
//! ```text
//! "PENET1"
//! u32 length, then that many bytes of JSON metadata (config, class names,
//!     epochs completed, loss trace, optimizer step)
//! u32 tensor count
//! per tensor: u32 name length, name bytes, u32 rank, u32 dims…, f32 data
//! ```
//!
//! Model tensors use their [`TensorId`] names. Optimizer moments are stored
//! as `adam.m.<name>` and `adam.v.<name>`.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::params::{PENetParams, TensorId};
use super::train::{AdamState, TrainState};
use super::PENetConfig;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 6] = b"PENET1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: PENetConfig,
    pub class_names: Vec<String>,
    pub state: TrainState,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    config: PENetConfig,
    class_names: Vec<String>,
    epochs_completed: usize,
    loss_trace: Vec<f64>,
    adam_step: u64,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_tensor(out: &mut Vec<u8>, name: &str, dims: &[usize], data: impl Iterator<Item = f32>) {
    put_u32(out, name.len());
    out.extend_from_slice(name.as_bytes());
    put_u32(out, dims.len());
    for &d in dims {
        put_u32(out, d);
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    let meta = Meta {
        config: ckpt.config.clone(),
        class_names: ckpt.class_names.clone(),
        epochs_completed: ckpt.state.epochs_completed,
        loss_trace: ckpt.state.loss_trace.clone(),
        adam_step: ckpt.state.adam.step,
    };
    let json = serde_json::to_vec(&meta).expect("metadata serialises");
    let params = &ckpt.state.params;
    let shape = params.shape();
    let trainable: Vec<TensorId> = TensorId::ALL.into_iter().filter(|t| t.trainable()).collect();

    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    put_u32(&mut out, json.len());
    out.extend_from_slice(&json);
    put_u32(&mut out, TensorId::ALL.len() + 2 * trainable.len());
    for t in TensorId::ALL {
        put_tensor(&mut out, t.name(), &t.dims(&shape), params.tensor(t).iter().copied());
    }
    for (prefix, moments) in [("adam.m.", &ckpt.state.adam.m), ("adam.v.", &ckpt.state.adam.v)] {
        for &t in &trainable {
            let range = params.range(t);
            put_tensor(
                &mut out,
                &format!("{prefix}{}", t.name()),
                &t.dims(&shape),
                moments[range].iter().map(|&v| v as f32),
            );
        }
    }
    let tmp = path.with_extension("partial");
    fs::write(&tmp, out).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(self.path, "truncated checkpoint"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
        path,
    };
    if r.take(CHECKPOINT_MAGIC.len())? != CHECKPOINT_MAGIC {
        return Err(Error::format(path, "not a checkpoint (bad magic)"));
    }
    let meta_len = r.u32()?;
    let meta: Meta =
        serde_json::from_slice(r.take(meta_len)?).map_err(|e| Error::format(path, format!("bad metadata: {e}")))?;
    meta.config.validate()?;
    let shape = meta.config.shape();

    let mut tensors: HashMap<String, (Vec<usize>, Vec<f32>)> = HashMap::new();
    for _ in 0..r.u32()? {
        let name_len = r.u32()?;
        let name = String::from_utf8(r.take(name_len)?.to_vec())
            .map_err(|_| Error::format(path, "tensor name is not UTF-8"))?;
        let rank = r.u32()?;
        let dims = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        let count: usize = dims.iter().product();
        let data = r
            .take(4 * count)?
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.insert(name, (dims, data));
    }

    let mut params = PENetParams::zeros(shape);
    let mut adam = AdamState::new(params.len());
    adam.step = meta.adam_step;
    for t in TensorId::ALL {
        let want = t.dims(&shape);
        let (dims, data) = tensors
            .get(t.name())
            .ok_or_else(|| Error::format(path, format!("missing tensor {}", t.name())))?;
        if *dims != want {
            return Err(Error::shape(
                format!("{} with dims {want:?}", t.name()),
                format!("{dims:?}"),
            ));
        }
        params.tensor_mut(t).copy_from_slice(data);
        if t.trainable() {
            let range = params.range(t);
            for (prefix, moments) in [("adam.m.", &mut adam.m), ("adam.v.", &mut adam.v)] {
                if let Some((dims, data)) = tensors.get(&format!("{prefix}{}", t.name())) {
                    if *dims != want {
                        return Err(Error::shape(
                            format!("{prefix}{} with dims {want:?}", t.name()),
                            format!("{dims:?}"),
                        ));
                    }
                    for (m, &v) in moments[range.clone()].iter_mut().zip(data) {
                        *m = v as f64;
                    }
                }
            }
        }
    }
    Ok(Checkpoint {
        config: meta.config,
        class_names: meta.class_names,
        state: TrainState {
            params,
            adam,
            epochs_completed: meta.epochs_completed,
            loss_trace: meta.loss_trace,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = PENetConfig {
            num_classes: 2,
            gru_hidden: 4,
            ..PENetConfig::default()
        };
        let params = PENetParams::init(config.shape(), 11);
        let mut adam = AdamState::new(params.len());
        adam.step = 7;
        adam.m.iter_mut().enumerate().for_each(|(i, v)| *v = i as f64 * 0.5);
        Checkpoint {
            config,
            class_names: vec!["a".into(), "b".into()],
            state: TrainState {
                params,
                adam,
                epochs_completed: 3,
                loss_trace: vec![1.5, 1.2, 1.1],
            },
        }
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        let ckpt = sample();
        save_checkpoint(&path, &ckpt).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back.config, ckpt.config);
        assert_eq!(back.class_names, ckpt.class_names);
        assert_eq!(back.state.params, ckpt.state.params);
        assert_eq!(back.state.loss_trace, ckpt.state.loss_trace);
        assert_eq!(back.state.adam.step, 7);
        // Normalisation tensors have no optimizer moments.
        let r = ckpt.state.params.range(TensorId::ProjW);
        assert_eq!(back.state.adam.m[r.clone()], ckpt.state.adam.m[r]);
        assert_eq!(&fs::read(&path).unwrap()[..6], b"PENET1");
    }

    #[test]
    fn rejects_bad_magic_and_shapes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.ckpt");
        save_checkpoint(&path, &sample()).unwrap();
        let mut bytes = fs::read(&path).unwrap();

        let mut bad = bytes.clone();
        bad[5] = b'9';
        fs::write(&path, &bad).unwrap();
        assert!(load_checkpoint(&path).is_err());

        // Claim a different hidden size in the metadata: tensors no longer fit.
        let key = b"\"gru_hidden\":4";
        let at = bytes.windows(key.len()).position(|w| w == key).unwrap();
        bytes[at + 13] = b'5';
        fs::write(&path, &bytes).unwrap();
        let err = load_checkpoint(&path);
        assert!(matches!(err, Err(Error::Shape { .. })), "{err:?}");

        fs::write(&path, &fs::read(&path).unwrap()[..40]).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
