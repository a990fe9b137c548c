use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use rustfft::num_complex::Complex64;

use super::{ComplexImage, FractionalOrderPair};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChirpSign {
    Positive,
    Negative,
}

impl ChirpSign {
    fn as_f64(self) -> f64 {
        match self {
            ChirpSign::Positive => 1.0,
            ChirpSign::Negative => -1.0,
        }
    }
}

/// Normalized, centered sample coordinate `(n - floor(N/2)) / sqrt(N)`.
#[inline]
pub(crate) fn chirp_coordinate(n: usize, len: usize) -> f64 {
    (n as f64 - (len / 2) as f64) / (len as f64).sqrt()
}

/// Samples `exp(sign * j/2 * (u1^2 cot theta1 + u2^2 cot theta2))` on the
/// normalized grid, `u1` along the width and `u2` along the height.
pub fn chirp(
    width: usize,
    height: usize,
    orders: FractionalOrderPair,
    sign: ChirpSign,
) -> Result<ComplexImage> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidImage(format!(
            "chirp dimensions must be positive, got {width}x{height}"
        )));
    }
    orders.validate()?;
    let (c1, c2) = orders.cotangents();
    let s = sign.as_f64();
    let row_phase: Vec<f64> = (0..width).map(|x| chirp_coordinate(x, width).powi(2) * c1).collect();
    Ok(ComplexImage::from_fn(width, height, |x, y| {
        let u2 = chirp_coordinate(y, height);
        let phase = 0.5 * s * (row_phase[x] + u2 * u2 * c2);
        Complex64::from_polar(1.0, phase)
    }))
}

/// The modulating and demodulating chirps for one grid and order pair.
#[derive(Debug)]
pub struct ChirpPair {
    pub positive: ComplexImage,
    pub negative: ComplexImage,
    classical: bool,
}

impl ChirpPair {
    /// True when both chirps are identically one.
    pub fn is_identity(&self) -> bool {
        self.classical
    }
}

type ChirpKey = (usize, usize, u64, u64);

fn chirp_cache() -> &'static RwLock<HashMap<ChirpKey, Arc<ChirpPair>>> {
    static CACHE: OnceLock<RwLock<HashMap<ChirpKey, Arc<ChirpPair>>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// Cached chirp pair for `(width, height, orders)`.
pub fn chirp_pair(width: usize, height: usize, orders: FractionalOrderPair) -> Result<Arc<ChirpPair>> {
    let key = (width, height, orders.alpha1.to_bits(), orders.alpha2.to_bits());
    if let Some(hit) = chirp_cache().read().expect("chirp cache poisoned").get(&key) {
        return Ok(Arc::clone(hit));
    }
    let pair = Arc::new(ChirpPair {
        positive: chirp(width, height, orders, ChirpSign::Positive)?,
        negative: chirp(width, height, orders, ChirpSign::Negative)?,
        classical: orders.is_classical(),
    });
    let mut cache = chirp_cache().write().expect("chirp cache poisoned");
    Ok(Arc::clone(cache.entry(key).or_insert(pair)))
}
