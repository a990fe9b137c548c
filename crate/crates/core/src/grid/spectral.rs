use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::ComplexImage;

/// Unitary 2D discrete Fourier transform for one grid size.
///
/// Rows are transformed in one batched call, then the buffer is transposed
/// so columns become contiguous rows for the second pass.
pub struct Fft2 {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scale: f64,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("width", &self.width).field("height", &self.height).finish()
    }
}

fn plan_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<Fft2>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Fft2>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "empty FFT grid");
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
            scale: 1.0 / ((width * height) as f64).sqrt(),
        }
    }

    /// Process-wide shared plan for a grid size.
    pub fn shared(width: usize, height: usize) -> Arc<Fft2> {
        let mut cache = plan_cache().lock().expect("fft plan cache poisoned");
        Arc::clone(cache.entry((width, height)).or_insert_with(|| Arc::new(Fft2::new(width, height))))
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn forward_in_place(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.run(data, &self.row_inv, &self.col_inv);
    }

    pub fn forward(&self, x: &ComplexImage) -> ComplexImage {
        assert_eq!(x.dims(), self.dims(), "fft grid mismatch");
        let mut data = x.data().to_vec();
        self.forward_in_place(&mut data);
        ComplexImage::from_raw(self.width, self.height, data)
    }

    pub fn inverse(&self, x: &ComplexImage) -> ComplexImage {
        assert_eq!(x.dims(), self.dims(), "fft grid mismatch");
        let mut data = x.data().to_vec();
        self.inverse_in_place(&mut data);
        ComplexImage::from_raw(self.width, self.height, data)
    }

    fn run(&self, data: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (w, h) = (self.width, self.height);
        assert_eq!(data.len(), w * h, "fft buffer length mismatch");
        WORKSPACE.with(|cell| {
            let mut ws = cell.borrow_mut();
            let Workspace { scratch, transposed } = &mut *ws;
            let need = rows.get_inplace_scratch_len().max(cols.get_inplace_scratch_len());
            if scratch.len() < need {
                scratch.resize(need, Complex64::new(0.0, 0.0));
            }
            rows.process_with_scratch(data, &mut scratch[..rows.get_inplace_scratch_len()]);
            if h > 1 {
                transposed.resize(w * h, Complex64::new(0.0, 0.0));
                transpose(data, transposed, w, h);
                cols.process_with_scratch(transposed, &mut scratch[..cols.get_inplace_scratch_len()]);
                transpose(transposed, data, h, w);
            }
        });
        for z in data.iter_mut() {
            *z *= self.scale;
        }
    }
}

#[derive(Default)]
struct Workspace {
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

thread_local! {
    static WORKSPACE: std::cell::RefCell<Workspace> = std::cell::RefCell::new(Workspace::default());
}

/// `src` is `rows x cols` row-major (`cols` = row length); `dst` becomes `cols x rows`.
fn transpose(src: &[Complex64], dst: &mut [Complex64], cols: usize, rows: usize) {
    for r in 0..rows {
        for c in 0..cols {
            dst[c * rows + r] = src[r * cols + c];
        }
    }
}

/// Unitary forward 2D DFT.
pub fn spectrum(x: &ComplexImage) -> ComplexImage {
    Fft2::shared(x.width(), x.height()).forward(x)
}

/// Unitary inverse 2D DFT.
pub fn inverse_spectrum(x: &ComplexImage) -> ComplexImage {
    Fft2::shared(x.width(), x.height()).inverse(x)
}
