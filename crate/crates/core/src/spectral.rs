//! Internal transform kit: tangential spectral derivatives, parity-extended
//! wall-normal transforms on the doubled domain, and the Poisson solve used
//! by the streamfunction construction.
//!
//! The tangential direction is periodic on [-L, L). The wall-normal direction
//! is doubled to [0, 2Y) by odd or even reflection about the wall; fields fed
//! through the parity path must be compatible with the chosen reflection
//! (odd fields vanish on the wall and at Y).

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use ndarray::Array2;
use once_cell::sync::Lazy;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn flip(self) -> Parity {
        match self {
            Parity::Odd => Parity::Even,
            Parity::Even => Parity::Odd,
        }
    }
}

struct PlanCache {
    fwd: HashMap<usize, Arc<dyn Fft<f64>>>,
    inv: HashMap<usize, Arc<dyn Fft<f64>>>,
}

static PLANS: Lazy<Mutex<PlanCache>> = Lazy::new(|| {
    Mutex::new(PlanCache {
        fwd: HashMap::new(),
        inv: HashMap::new(),
    })
});

fn plan(n: usize, forward: bool) -> Arc<dyn Fft<f64>> {
    let mut cache = PLANS.lock().unwrap();
    let map = if forward {
        &mut cache.fwd
    } else {
        &mut cache.inv
    };
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            if forward {
                planner.plan_fft_forward(n)
            } else {
                planner.plan_fft_inverse(n)
            }
        })
        .clone()
}

pub fn fft_in_place(buf: &mut [Complex64]) {
    plan(buf.len(), true).process(buf);
}

pub fn ifft_in_place(buf: &mut [Complex64]) {
    plan(buf.len(), false).process(buf);
    let scale = 1.0 / buf.len() as f64;
    for v in buf.iter_mut() {
        *v *= scale;
    }
}

/// Signed wavenumber for FFT bin `m` on a periodic domain of length `period`.
pub fn wavenumber(m: usize, n: usize, period: f64) -> f64 {
    let f = if m <= n / 2 {
        m as isize
    } else {
        m as isize - n as isize
    };
    2.0 * std::f64::consts::PI * f as f64 / period
}

/// Spectral tangential derivative of given order along axis 0.
/// Odd orders zero the Nyquist bin.
pub fn dx1_spectral(values: &Array2<f64>, l: f64, order: usize) -> Array2<f64> {
    let (nx, ny) = values.dim();
    let period = 2.0 * l;
    let mut out = Array2::zeros((nx, ny));
    let mut col: Vec<Complex64> = vec![Complex64::default(); nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = Complex64::new(values[[i, j]], 0.0);
        }
        fft_in_place(&mut col);
        for (m, c) in col.iter_mut().enumerate() {
            let k = wavenumber(m, nx, period);
            let ik = Complex64::new(0.0, k);
            let mut factor = Complex64::new(1.0, 0.0);
            for _ in 0..order {
                factor *= ik;
            }
            if order % 2 == 1 && m == nx / 2 {
                factor = Complex64::new(0.0, 0.0);
            }
            *c *= factor;
        }
        ifft_in_place(&mut col);
        for i in 0..nx {
            out[[i, j]] = col[i].re;
        }
    }
    out
}

/// Spectral antiderivative along axis 0, gauged to vanish at the left edge.
/// The tangential mean of each row is removed first and reported; callers
/// that need it (domain-truncation defects) can act on the returned value.
pub fn antiderivative_x1_spectral(values: &Array2<f64>, l: f64) -> (Array2<f64>, f64) {
    let (nx, ny) = values.dim();
    let period = 2.0 * l;
    let mut out = Array2::zeros((nx, ny));
    let mut col: Vec<Complex64> = vec![Complex64::default(); nx];
    let mut max_mean = 0.0f64;
    for j in 0..ny {
        for i in 0..nx {
            col[i] = Complex64::new(values[[i, j]], 0.0);
        }
        fft_in_place(&mut col);
        max_mean = max_mean.max(col[0].norm() / nx as f64);
        col[0] = Complex64::default();
        for m in 1..nx {
            let k = wavenumber(m, nx, period);
            if m == nx / 2 {
                col[m] = Complex64::default();
            } else {
                col[m] /= Complex64::new(0.0, k);
            }
        }
        ifft_in_place(&mut col);
        let left = col[0].re;
        for i in 0..nx {
            out[[i, j]] = col[i].re - left;
        }
    }
    (out, max_mean)
}

/// Extend a wall-normal column of length n to the doubled periodic domain of
/// length 2(n-1) by reflection.
pub fn extend_parity(col: &[f64], parity: Parity) -> Vec<f64> {
    let n = col.len();
    let m = 2 * (n - 1);
    let mut ext = vec![0.0; m];
    ext[..n].copy_from_slice(col);
    for j in 1..n - 1 {
        ext[m - j] = match parity {
            Parity::Odd => -col[j],
            Parity::Even => col[j],
        };
    }
    if parity == Parity::Odd {
        // seam values of an odd periodic extension
        ext[0] = 0.0;
        ext[n - 1] = 0.0;
    }
    ext
}

/// Spectral wall-normal derivative via parity extension; `parity` describes
/// the input field. The output parity is flipped for odd orders.
pub fn d3_parity(values: &Array2<f64>, y_max: f64, order: usize, parity: Parity) -> Array2<f64> {
    let (nx, ny) = values.dim();
    let m = 2 * (ny - 1);
    let period = 2.0 * y_max;
    let mut out = Array2::zeros((nx, ny));
    let mut buf: Vec<Complex64> = vec![Complex64::default(); m];
    for i in 0..nx {
        let col: Vec<f64> = (0..ny).map(|j| values[[i, j]]).collect();
        let ext = extend_parity(&col, parity);
        for (b, v) in buf.iter_mut().zip(ext.iter()) {
            *b = Complex64::new(*v, 0.0);
        }
        fft_in_place(&mut buf);
        for (mm, c) in buf.iter_mut().enumerate() {
            let k = wavenumber(mm, m, period);
            let ik = Complex64::new(0.0, k);
            let mut factor = Complex64::new(1.0, 0.0);
            for _ in 0..order {
                factor *= ik;
            }
            if order % 2 == 1 && mm == m / 2 {
                factor = Complex64::new(0.0, 0.0);
            }
            *c *= factor;
        }
        ifft_in_place(&mut buf);
        for j in 0..ny {
            out[[i, j]] = buf[j].re;
        }
    }
    out
}

/// Band-limited refinement along the wall-normal axis by an integer factor
/// through zero-padding of the parity-extended spectrum, combined with a
/// spectral wall-normal derivative of the given order on the same
/// interpolant. Returns samples on the refined half grid with
/// (n-1)*factor + 1 nodes.
pub fn refine_parity_deriv(
    values: &Array2<f64>,
    y_max: f64,
    parity: Parity,
    factor: usize,
    order: usize,
) -> Array2<f64> {
    assert!(factor >= 1);
    let (nx, ny) = values.dim();
    if factor == 1 && order == 0 {
        return values.clone();
    }
    let m = 2 * (ny - 1);
    let mf = m * factor;
    let ny_fine = (ny - 1) * factor + 1;
    let period = 2.0 * y_max;
    let mut out = Array2::zeros((nx, ny_fine));
    let mut buf: Vec<Complex64> = vec![Complex64::default(); m];
    let mut buf_fine: Vec<Complex64> = vec![Complex64::default(); mf];
    for i in 0..nx {
        let col: Vec<f64> = (0..ny).map(|j| values[[i, j]]).collect();
        let ext = extend_parity(&col, parity);
        for (b, v) in buf.iter_mut().zip(ext.iter()) {
            *b = Complex64::new(*v, 0.0);
        }
        fft_in_place(&mut buf);
        if order > 0 {
            for (mm, c) in buf.iter_mut().enumerate() {
                let k = wavenumber(mm, m, period);
                let ik = Complex64::new(0.0, k);
                let mut factor_c = Complex64::new(1.0, 0.0);
                for _ in 0..order {
                    factor_c *= ik;
                }
                if order % 2 == 1 && mm == m / 2 {
                    factor_c = Complex64::new(0.0, 0.0);
                }
                *c *= factor_c;
            }
        }
        for b in buf_fine.iter_mut() {
            *b = Complex64::default();
        }
        if factor == 1 {
            buf_fine.copy_from_slice(&buf);
        } else {
            // split the Nyquist bin symmetrically
            for mm in 0..m {
                let c = buf[mm];
                if mm < m / 2 {
                    buf_fine[mm] = c;
                } else if mm == m / 2 {
                    buf_fine[m / 2] = 0.5 * c;
                    buf_fine[mf - m / 2] = 0.5 * c;
                } else {
                    buf_fine[mf - (m - mm)] = c;
                }
            }
        }
        ifft_in_place(&mut buf_fine);
        let scale = factor as f64;
        for j in 0..ny_fine {
            out[[i, j]] = buf_fine[j].re * scale;
        }
    }
    out
}

/// Solve lap(psi) = -omega on the doubled periodic box, omega given on the
/// half grid with the stated parity. The (0,0) mode is gauged to zero.
/// Returns psi on the half grid (same parity as omega).
pub fn poisson_doubled(omega: &Array2<f64>, l: f64, y_max: f64, parity: Parity) -> Array2<f64> {
    let (nx, ny) = omega.dim();
    let m = 2 * (ny - 1);
    let period_x = 2.0 * l;
    let period_y = 2.0 * y_max;

    // assemble doubled field
    let mut data: Vec<Complex64> = vec![Complex64::default(); nx * m];
    for i in 0..nx {
        let col: Vec<f64> = (0..ny).map(|j| omega[[i, j]]).collect();
        let ext = extend_parity(&col, parity);
        for j in 0..m {
            data[i * m + j] = Complex64::new(ext[j], 0.0);
        }
    }
    // FFT along y (contiguous rows of length m)
    for i in 0..nx {
        fft_in_place(&mut data[i * m..(i + 1) * m]);
    }
    // FFT along x (strided)
    let mut col: Vec<Complex64> = vec![Complex64::default(); nx];
    for j in 0..m {
        for i in 0..nx {
            col[i] = data[i * m + j];
        }
        fft_in_place(&mut col);
        for i in 0..nx {
            data[i * m + j] = col[i];
        }
    }
    // divide by |k|^2
    for i in 0..nx {
        let kx = wavenumber(i, nx, period_x);
        for j in 0..m {
            let ky = wavenumber(j, m, period_y);
            let k2 = kx * kx + ky * ky;
            data[i * m + j] = if k2 == 0.0 {
                Complex64::default()
            } else {
                data[i * m + j] / k2
            };
        }
    }
    // inverse transforms
    for j in 0..m {
        for i in 0..nx {
            col[i] = data[i * m + j];
        }
        ifft_in_place(&mut col);
        for i in 0..nx {
            data[i * m + j] = col[i];
        }
    }
    for i in 0..nx {
        ifft_in_place(&mut data[i * m..(i + 1) * m]);
    }
    let mut psi = Array2::zeros((nx, ny));
    for i in 0..nx {
        for j in 0..ny {
            psi[[i, j]] = data[i * m + j].re;
        }
    }
    psi
}

/// Row-wise forward FFT of a trace (length n_x1).
pub fn trace_spectrum(values: &[f64]) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
    fft_in_place(&mut buf);
    buf
}

/// Relative magnitude of the top-octave tangential spectrum, used to warn
/// when high derivatives are no longer resolved.
pub fn spectral_tail_ratio(values: &Array2<f64>) -> f64 {
    let (nx, ny) = values.dim();
    let mut peak = 0.0f64;
    let mut tail = 0.0f64;
    let mut col: Vec<Complex64> = vec![Complex64::default(); nx];
    for j in 0..ny {
        for i in 0..nx {
            col[i] = Complex64::new(values[[i, j]], 0.0);
        }
        fft_in_place(&mut col);
        for (m, c) in col.iter().enumerate() {
            let f = if m <= nx / 2 { m } else { nx - m };
            let mag = c.norm();
            peak = peak.max(mag);
            if f >= nx / 4 {
                tail = tail.max(mag);
            }
        }
    }
    if peak == 0.0 {
        0.0
    } else {
        tail / peak
    }
}
