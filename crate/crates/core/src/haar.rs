//! Haar functions on [0, 1], their repeated integrals, and the dense
//! operational matrices evaluated at the collocation points.
//!
//! Wavelet `i = m + k + 1` (with `m = 2^j`) lives on the dyadic interval
//! `[k/m, (k+1)/m)`: `+1` on the left half, `-1` on the right half. Wavelet
//! `i = 1` is the constant scaling function. Supports are half-open, so
//! `h_i(1) = 0` for every `i >= 2`.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linsolve::DenseMatrix;

/// Largest supported resolution level (a 2048 x 2048 system).
pub const MAX_LEVEL: u32 = 10;

/// Resolution level `J`: `M = 2^J` and `2M` wavelets / collocation points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResolutionConfig {
    level: u32,
}

impl ResolutionConfig {
    pub fn new(level: u32) -> Result<Self> {
        if level > MAX_LEVEL {
            return Err(Error::ResolutionTooHigh {
                level,
                max: MAX_LEVEL,
            });
        }
        Ok(ResolutionConfig { level })
    }

    /// `J`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// `M = 2^J`.
    pub fn m(&self) -> usize {
        1 << self.level
    }

    /// System size `2M`.
    pub fn n(&self) -> usize {
        2 * self.m()
    }

    /// Subinterval length `1 / 2M`.
    pub fn dx(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// Decompose wavelet number `i` (1-based).
    pub fn wavelet(&self, i: usize) -> Result<WaveletIndex> {
        wavelet_index(i, *self)
    }

    /// Grid points `c * dx` (`c = 0..=2M`) and collocation midpoints.
    pub fn grid_and_collocation(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.n();
        let dx = self.dx();
        let grid: Vec<f64> = (0..=n).map(|c| c as f64 * dx).collect();
        let colloc = grid.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        (grid, colloc)
    }
}

/// Level/translation decomposition and support of one Haar function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveletIndex {
    /// Wavelet number, 1-based.
    pub i: usize,
    pub j: u32,
    pub k: usize,
    /// `2^j`.
    pub m: usize,
    /// `M / m`.
    pub mu: f64,
    /// `(alpha1, alpha2, alpha3)`; `None` for the scaling function `i = 1`.
    pub breakpoints: Option<[f64; 3]>,
}

impl WaveletIndex {
    pub fn is_scaling(&self) -> bool {
        self.breakpoints.is_none()
    }
}

pub fn wavelet_index(i: usize, config: ResolutionConfig) -> Result<WaveletIndex> {
    let n = config.n();
    if i == 0 || i > n {
        return Err(Error::IndexOutOfRange { index: i, size: n });
    }
    if i == 1 {
        return Ok(WaveletIndex {
            i,
            j: 0,
            k: 0,
            m: 1,
            mu: config.m() as f64,
            breakpoints: None,
        });
    }
    let j = (i - 1).ilog2();
    let m = 1usize << j;
    let k = i - m - 1;
    let mu = config.m() as f64 / m as f64;
    let dx = config.dx();
    let alpha1 = 2.0 * k as f64 * mu * dx;
    let alpha2 = (2 * k + 1) as f64 * mu * dx;
    let alpha3 = 2.0 * (k + 1) as f64 * mu * dx;
    Ok(WaveletIndex {
        i,
        j,
        k,
        m,
        mu,
        breakpoints: Some([alpha1, alpha2, alpha3]),
    })
}

/// `h_i(x)`.
pub fn haar_fn(idx: &WaveletIndex, x: f64) -> f64 {
    match idx.breakpoints {
        None => {
            if (0.0..=1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        Some([a1, a2, a3]) => {
            if a1 <= x && x < a2 {
                1.0
            } else if a2 <= x && x < a3 {
                -1.0
            } else {
                0.0
            }
        }
    }
}

fn factorial(v: u32) -> f64 {
    (1..=v).map(f64::from).product()
}

/// `v`-fold integral of `h_i` from 0 to `x`, in closed form.
pub fn haar_integral(v: u32, idx: &WaveletIndex, x: f64) -> f64 {
    assert!(v >= 1, "integration order must be at least 1");
    let vi = v as i32;
    let scale = factorial(v);
    match idx.breakpoints {
        None => x.powi(vi) / scale,
        Some([a1, a2, a3]) => {
            let mut acc = 0.0;
            if x > a1 {
                acc += (x - a1).powi(vi);
            }
            if x > a2 {
                acc -= 2.0 * (x - a2).powi(vi);
            }
            if x > a3 {
                acc += (x - a3).powi(vi);
            }
            acc / scale
        }
    }
}

/// Haar coefficients `a_1..a_2M` of the expansion `y'' = sum a_i h_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector(pub Vec<f64>);

/// `sum a_i h_i(t)`, `sum a_i P_{1,i}(t)`, `sum a_i P_{2,i}(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValues {
    pub h: f64,
    pub p1: f64,
    pub p2: f64,
}

impl CoefficientVector {
    pub fn zeros(n: usize) -> Self {
        CoefficientVector(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Evaluate the three series at an arbitrary `t` using the analytic
    /// Haar functions (no table lookup).
    pub fn series(&self, config: ResolutionConfig, t: f64) -> SeriesValues {
        assert_eq!(self.0.len(), config.n());
        let mut out = SeriesValues {
            h: 0.0,
            p1: 0.0,
            p2: 0.0,
        };
        for (slot, &a) in self.0.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let idx = wavelet_index(slot + 1, config).expect("slot within range");
            out.h += a * haar_fn(&idx, t);
            out.p1 += a * haar_integral(1, &idx, t);
            out.p2 += a * haar_integral(2, &idx, t);
        }
        out
    }
}

/// `H`, `P1`, `P2` at the collocation points, plus the endpoint values
/// needed to impose boundary conditions.
///
/// Matrices use the `(i, c)` layout: row = wavelet, column = collocation
/// point.
#[derive(Debug, Clone)]
pub struct HaarSystem {
    pub config: ResolutionConfig,
    pub grid: Vec<f64>,
    pub colloc: Vec<f64>,
    pub h: DenseMatrix,
    pub p1: DenseMatrix,
    pub p2: DenseMatrix,
    /// `P_{1,i}(1)`.
    pub p1_at_1: Vec<f64>,
    /// `P_{2,i}(1)`.
    pub p2_at_1: Vec<f64>,
    /// `h_i(1)`: one for the scaling function, zero otherwise.
    pub h_at_1: Vec<f64>,
}

impl HaarSystem {
    pub fn build(config: ResolutionConfig) -> Self {
        Self::build_with(config, Execution::default())
    }

    pub fn build_with(config: ResolutionConfig, exec: Execution) -> Self {
        let n = config.n();
        let (grid, colloc) = config.grid_and_collocation();
        let indices: Vec<WaveletIndex> = (1..=n)
            .map(|i| wavelet_index(i, config).expect("index within range"))
            .collect();

        let rows = exec::map_indexed(n, exec, |r| {
            let idx = &indices[r];
            let mut h = Vec::with_capacity(n);
            let mut p1 = Vec::with_capacity(n);
            let mut p2 = Vec::with_capacity(n);
            for &x in &colloc {
                h.push(haar_fn(idx, x));
                p1.push(haar_integral(1, idx, x));
                p2.push(haar_integral(2, idx, x));
            }
            (h, p1, p2)
        });
        let mut h = Vec::with_capacity(n * n);
        let mut p1 = Vec::with_capacity(n * n);
        let mut p2 = Vec::with_capacity(n * n);
        for (hr, p1r, p2r) in rows {
            h.extend(hr);
            p1.extend(p1r);
            p2.extend(p2r);
        }

        HaarSystem {
            config,
            grid,
            colloc,
            h: DenseMatrix::from_row_major(n, h),
            p1: DenseMatrix::from_row_major(n, p1),
            p2: DenseMatrix::from_row_major(n, p2),
            p1_at_1: indices.iter().map(|w| haar_integral(1, w, 1.0)).collect(),
            p2_at_1: indices.iter().map(|w| haar_integral(2, w, 1.0)).collect(),
            h_at_1: indices.iter().map(|w| haar_fn(w, 1.0)).collect(),
        }
    }

    /// Convenience: validate the level and build.
    pub fn for_level(level: u32) -> Result<Self> {
        Ok(Self::build(ResolutionConfig::new(level)?))
    }

    pub fn n(&self) -> usize {
        self.config.n()
    }

    /// `P_{2,i}(t_c) - t_c P_{2,i}(1)`: the coefficient of `a_i` in the
    /// Dirichlet reconstruction at collocation point `c` (0-based indices).
    #[inline]
    pub fn dirichlet_basis(&self, c: usize, i: usize) -> f64 {
        self.p2[(i, c)] - self.colloc[c] * self.p2_at_1[i]
    }

    /// `(H^T a, P1^T a, P2^T a)`: the three series at every collocation point.
    pub fn series_at_collocation(&self, a: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            self.h.tr_mul_vec(a),
            self.p1.tr_mul_vec(a),
            self.p2.tr_mul_vec(a),
        )
    }
}
