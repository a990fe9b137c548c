//! Little-endian binary containers: feature tensors (`FRSC`) and trained
//! class models (`FRSM`).

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::classifier::PcaClassModel;
use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::grid::FractionalOrderPair;

pub const TENSOR_MAGIC: &[u8; 4] = b"FRSC";
pub const MODEL_MAGIC: &[u8; 4] = b"FRSM";
pub const FORMAT_VERSION: u32 = 1;

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|_| Error::Format(format!("truncated payload while reading {what}")))?;
        Ok(b)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(what)?))
    }

    fn u64(&mut self, what: &str) -> Result<usize> {
        let v = u64::from_le_bytes(self.bytes(what)?);
        usize::try_from(v).map_err(|_| Error::Format(format!("{what} {v} too large")))
    }

    fn i32(&mut self, what: &str) -> Result<i32> {
        Ok(i32::from_le_bytes(self.bytes(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.bytes(what)?))
    }

    fn f64s(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n.checked_mul(8).ok_or_else(|| Error::Format(format!("{what} length overflows")))?;
        let mut raw = Vec::new();
        (&mut self.inner).take(bytes as u64).read_to_end(&mut raw)?;
        if raw.len() != bytes {
            return Err(Error::Format(format!("truncated payload: {what} needs {bytes} bytes, found {}", raw.len())));
        }
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }

    fn header(&mut self, magic: &[u8; 4]) -> Result<()> {
        let found: [u8; 4] = self.bytes("magic")?;
        if &found != magic {
            return Err(Error::Format(format!(
                "expected magic {:?}, found {:?}",
                String::from_utf8_lossy(magic),
                String::from_utf8_lossy(&found)
            )));
        }
        let version = self.u32("version")?;
        if version != FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported format version {version}, expected {FORMAT_VERSION}")));
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        let mut extra = [0u8; 1];
        if self.inner.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing bytes after payload; header dims inconsistent with payload".into()));
        }
        Ok(())
    }
}

fn put_u64(buf: &mut Vec<u8>, v: usize) {
    buf.extend_from_slice(&(v as u64).to_le_bytes());
}

fn put_f64s(buf: &mut Vec<u8>, vals: impl IntoIterator<Item = f64>) {
    for v in vals {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn write_tensor_to<W: Write>(t: &FeatureTensor, mut w: W) -> Result<()> {
    let (l, n, d) = t.dims();
    let mut buf = Vec::with_capacity(4 + 4 + 24 + 16 * d + 4 * n + 8 * t.values().len());
    buf.extend_from_slice(TENSOR_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u64(&mut buf, l);
    put_u64(&mut buf, n);
    put_u64(&mut buf, d);
    put_f64s(&mut buf, t.order_grid().iter().flat_map(|o| [o.alpha1, o.alpha2]));
    for &label in t.labels() {
        buf.extend_from_slice(&label.to_le_bytes());
    }
    put_f64s(&mut buf, t.values().iter().copied());
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_tensor_from<R: Read>(reader: R) -> Result<FeatureTensor> {
    let mut r = Reader { inner: reader };
    r.header(TENSOR_MAGIC)?;
    let l = r.u64("L")?;
    let n = r.u64("N")?;
    let d = r.u64("D")?;
    let total = l
        .checked_mul(n)
        .and_then(|v| v.checked_mul(d))
        .ok_or_else(|| Error::Format(format!("header dims {l}x{n}x{d} overflow")))?;
    let orders = r.f64s(2 * d, "order pairs")?;
    let order_grid = orders
        .chunks_exact(2)
        .map(|p| FractionalOrderPair::new(p[0], p[1]))
        .collect::<Result<Vec<_>>>()?;
    let labels = (0..n).map(|_| r.i32("labels")).collect::<Result<Vec<_>>>()?;
    let values = r.f64s(total, "values")?;
    r.finish()?;
    FeatureTensor::new(l, n, order_grid, labels, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn save_tensor(t: &FeatureTensor, path: impl AsRef<Path>) -> Result<()> {
    write_tensor_to(t, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<FeatureTensor> {
    read_tensor_from(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Class models trained on one order setting.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSet {
    pub orders: FractionalOrderPair,
    pub models: Vec<PcaClassModel>,
}

impl ModelSet {
    pub fn feature_len(&self) -> usize {
        self.models.first().map_or(0, PcaClassModel::feature_len)
    }
}

/// Layout: magic, version, `L`, model count `M`, the order pair, then per
/// model: class id (i32), `d` (u64), mean (`L` f64), basis column-major
/// (`L * d` f64), variances (`d` f64).
pub fn write_models_to<W: Write>(set: &ModelSet, mut w: W) -> Result<()> {
    let l = set.feature_len();
    if set.models.iter().any(|m| m.feature_len() != l) {
        return Err(Error::InvalidInput("models disagree on feature length".into()));
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u64(&mut buf, l);
    put_u64(&mut buf, set.models.len());
    put_f64s(&mut buf, [set.orders.alpha1, set.orders.alpha2]);
    for m in &set.models {
        buf.extend_from_slice(&m.class_id.to_le_bytes());
        put_u64(&mut buf, m.dim());
        put_f64s(&mut buf, m.mean.iter().copied());
        put_f64s(&mut buf, m.basis.iter().copied());
        put_f64s(&mut buf, m.variances.iter().copied());
    }
    w.write_all(&buf)?;
    w.flush()?;
    Ok(())
}

pub fn read_models_from<R: Read>(reader: R) -> Result<ModelSet> {
    let mut r = Reader { inner: reader };
    r.header(MODEL_MAGIC)?;
    let l = r.u64("L")?;
    let count = r.u64("model count")?;
    let orders = FractionalOrderPair::new(r.f64("alpha1")?, r.f64("alpha2")?)?;
    let mut models = Vec::new();
    for _ in 0..count {
        let class_id = r.i32("class id")?;
        let d = r.u64("dimension")?;
        if d > l {
            return Err(Error::Format(format!("model dimension {d} exceeds feature length {l}")));
        }
        let mean = DVector::from_vec(r.f64s(l, "mean")?);
        let basis = DMatrix::from_vec(l, d, r.f64s(l * d, "basis")?);
        let variances = r.f64s(d, "variances")?;
        models.push(PcaClassModel { class_id, mean, basis, variances });
    }
    r.finish()?;
    Ok(ModelSet { orders, models })
}

pub fn save_models(set: &ModelSet, path: impl AsRef<Path>) -> Result<()> {
    write_models_to(set, std::io::BufWriter::new(std::fs::File::create(path)?))
}

pub fn load_models(path: impl AsRef<Path>) -> Result<ModelSet> {
    read_models_from(std::io::BufReader::new(std::fs::File::open(path)?))
}
