//! Model container: `MBSIFM01`, a UTF-8 provenance string, a kind tag and a
//! little-endian payload. Every real number is stored as f64, so f32 and
//! f64 models round-trip losslessly.

use std::path::Path;

use super::boost::{BoostKind, BoostModel, WeightedStump};
use super::forest::{ForestModel, Node, Tree};
use super::stump::StumpModel;
use super::Model;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MODEL_MAGIC: &[u8; 8] = b"MBSIFM01";

const TAG_ADABOOST: u32 = 0;
const TAG_LOGITBOOST: u32 = 1;
const TAG_FOREST: u32 = 2;
const NODE_LEAF: u8 = 0;
const NODE_SPLIT: u8 = 1;
const NO_DEPTH: u64 = u64::MAX;

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn len(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn real<T: Real>(&mut self, v: T) {
        self.0.extend_from_slice(&v.to_f64_lossless().to_le_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Corrupt("model file is truncated".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    /// A length that must fit in the remaining bytes at `min_size` each.
    fn len(&mut self, min_size: usize) -> Result<usize> {
        let n = self.u64()?;
        let left = (self.buf.len() - self.pos) as u64;
        if n.saturating_mul(min_size as u64) > left {
            return Err(Error::Corrupt(format!("implausible length {n}")));
        }
        Ok(n as usize)
    }
    fn real<T: Real>(&mut self) -> Result<T> {
        let v = f64::from_le_bytes(self.take(8)?.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Corrupt("non-finite model parameter".into()));
        }
        Ok(T::lit(v))
    }
    fn polarity(&mut self) -> Result<i8> {
        match self.u8()? {
            0 => Ok(-1),
            1 => Ok(1),
            v => Err(Error::Corrupt(format!("bad polarity byte {v}"))),
        }
    }
}

fn write_stump<T: Real>(w: &mut Writer, s: &StumpModel<T>) {
    w.len(s.feature_index);
    w.real(s.threshold);
    w.u8(u8::from(s.polarity > 0));
}

/// Serializes a model with an arbitrary provenance string.
pub fn model_to_bytes<T: Real>(model: &Model<T>, provenance: &str) -> Vec<u8> {
    let mut w = Writer(MODEL_MAGIC.to_vec());
    w.u32(provenance.len() as u32);
    w.0.extend_from_slice(provenance.as_bytes());
    match model {
        Model::Boost(b) => {
            w.u32(match b.kind {
                BoostKind::AdaBoostM1 => TAG_ADABOOST,
                BoostKind::LogitBoost => TAG_LOGITBOOST,
            });
            w.len(b.dim);
            w.len(b.rounds);
            w.real(b.bias);
            w.len(b.stumps.len());
            for ws in &b.stumps {
                write_stump(&mut w, &ws.stump);
                w.real(ws.weight);
            }
        }
        Model::Forest(f) => {
            w.u32(TAG_FOREST);
            w.len(f.dim);
            w.len(f.features_per_split);
            w.u64(f.max_depth.map_or(NO_DEPTH, |d| d as u64));
            w.u64(f.seed);
            w.len(f.trees.len());
            for tree in &f.trees {
                w.len(tree.nodes.len());
                for node in &tree.nodes {
                    match node {
                        Node::Leaf { male, female } => {
                            w.u8(NODE_LEAF);
                            w.u32(*male);
                            w.u32(*female);
                        }
                        Node::Split {
                            feature,
                            threshold,
                            left,
                            right,
                        } => {
                            w.u8(NODE_SPLIT);
                            w.len(*feature);
                            w.real(*threshold);
                            w.u32(*left);
                            w.u32(*right);
                        }
                    }
                }
            }
        }
    }
    w.0
}

/// Parses a model and its provenance string, validating indices so that a
/// loaded model can never panic at prediction time.
pub fn model_from_bytes<T: Real>(bytes: &[u8]) -> Result<(Model<T>, String)> {
    if bytes.len() < 8 || &bytes[..6] != b"MBSIFM" {
        return Err(Error::Corrupt("not a model file".into()));
    }
    if &bytes[..8] != MODEL_MAGIC {
        return Err(Error::Version {
            found: String::from_utf8_lossy(&bytes[..8]).into_owned(),
            expected: String::from_utf8_lossy(MODEL_MAGIC).into_owned(),
        });
    }
    let mut r = Reader { buf: bytes, pos: 8 };
    let plen = r.u32()? as usize;
    let provenance = std::str::from_utf8(r.take(plen)?)
        .map_err(|_| Error::Corrupt("provenance is not UTF-8".into()))?
        .to_string();
    let tag = r.u32()?;
    let model = match tag {
        TAG_ADABOOST | TAG_LOGITBOOST => {
            let dim = r.u64()? as usize;
            let rounds = r.u64()? as usize;
            let bias = r.real()?;
            let n = r.len(25)?;
            let mut stumps = Vec::with_capacity(n);
            for _ in 0..n {
                let feature_index = r.u64()? as usize;
                let threshold = r.real()?;
                let polarity = r.polarity()?;
                let weight = r.real()?;
                if feature_index >= dim {
                    return Err(Error::Corrupt(format!("stump feature {feature_index} >= dim {dim}")));
                }
                stumps.push(WeightedStump {
                    stump: StumpModel {
                        feature_index,
                        threshold,
                        polarity,
                    },
                    weight,
                });
            }
            let kind = if tag == TAG_ADABOOST { BoostKind::AdaBoostM1 } else { BoostKind::LogitBoost };
            Model::Boost(BoostModel {
                kind,
                dim,
                rounds,
                bias,
                stumps,
            })
        }
        TAG_FOREST => {
            let dim = r.u64()? as usize;
            let features_per_split = r.u64()? as usize;
            let max_depth = match r.u64()? {
                NO_DEPTH => None,
                d => Some(d as usize),
            };
            let seed = r.u64()?;
            let n = r.len(8)?;
            let mut trees = Vec::with_capacity(n);
            for _ in 0..n {
                let count = r.len(9)?;
                let mut nodes = Vec::with_capacity(count);
                for k in 0..count {
                    nodes.push(match r.u8()? {
                        NODE_LEAF => Node::Leaf {
                            male: r.u32()?,
                            female: r.u32()?,
                        },
                        NODE_SPLIT => {
                            let feature = r.u64()? as usize;
                            let threshold = r.real()?;
                            let (left, right) = (r.u32()?, r.u32()?);
                            // Children always follow their parent, which rules out cycles.
                            let ok = feature < dim
                                && (left as usize) > k
                                && (right as usize) > k
                                && (left as usize) < count
                                && (right as usize) < count;
                            if !ok {
                                return Err(Error::Corrupt("invalid tree node".into()));
                            }
                            Node::Split {
                                feature,
                                threshold,
                                left,
                                right,
                            }
                        }
                        b => return Err(Error::Corrupt(format!("bad node tag {b}"))),
                    });
                }
                if nodes.is_empty() {
                    return Err(Error::Corrupt("empty tree".into()));
                }
                trees.push(Tree { nodes });
            }
            Model::Forest(ForestModel {
                dim,
                trees,
                features_per_split,
                max_depth,
                seed,
            })
        }
        t => return Err(Error::Corrupt(format!("unknown model kind {t}"))),
    };
    if r.pos != bytes.len() {
        return Err(Error::Corrupt("trailing bytes after model".into()));
    }
    Ok((model, provenance))
}

pub fn save_model<T: Real>(model: &Model<T>, provenance: &str, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, model_to_bytes(model, provenance)).map_err(|e| Error::io(path, e))
}

pub fn load_model<T: Real>(path: impl AsRef<Path>) -> Result<(Model<T>, String)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    model_from_bytes(&bytes)
}
