use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform grid on the periodic box `T^N_a = prod [0, a_i)`.
///
/// Nodes are stored row-major with the last axis fastest. Unused trailing
/// axes (for `dim < 3`) carry size 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusGrid {
    dim: usize,
    sizes: [usize; 3],
    periods: [f64; 3],
}

/// Serializable description of a grid, used in configs and snapshot headers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub sizes: Vec<usize>,
    #[serde(default)]
    pub periods: Option<Vec<f64>>,
}

impl TorusGrid {
    pub fn new(sizes: &[usize], periods: &[f64]) -> Result<Self> {
        let dim = sizes.len();
        if !(2..=3).contains(&dim) {
            return Err(Error::Parameter(format!("grid dimension must be 2 or 3, got {dim}")));
        }
        if periods.len() != dim {
            return Err(Error::Shape(format!(
                "{} periods given for a {dim}-dimensional grid",
                periods.len()
            )));
        }
        for &n in sizes {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::Parameter(format!(
                    "grid sizes must be powers of two and at least 8, got {n}"
                )));
            }
        }
        for &a in periods {
            if !(a.is_finite() && a > 0.0) {
                return Err(Error::Parameter(format!("box periods must be positive, got {a}")));
            }
        }
        Ok(Self::unchecked(sizes, periods))
    }

    /// Square/cubic grid with `n` points per axis on the `2π` box.
    pub fn cubic(dim: usize, n: usize) -> Result<Self> {
        Self::new(&vec![n; dim], &vec![2.0 * PI; dim])
    }

    /// Grid without the power-of-two constraint (used for padded products).
    pub(crate) fn unchecked(sizes: &[usize], periods: &[f64]) -> Self {
        let mut s = [1usize; 3];
        let mut p = [1.0f64; 3];
        s[..sizes.len()].copy_from_slice(sizes);
        p[..periods.len()].copy_from_slice(periods);
        Self { dim: sizes.len(), sizes: s, periods: p }
    }

    pub fn from_spec(spec: &GridSpec) -> Result<Self> {
        let periods = match &spec.periods {
            Some(p) => p.clone(),
            None => vec![2.0 * PI; spec.sizes.len()],
        };
        Self::new(&spec.sizes, &periods)
    }

    pub fn spec(&self) -> GridSpec {
        GridSpec { sizes: self.sizes().to_vec(), periods: Some(self.periods().to_vec()) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes[..self.dim]
    }

    pub fn periods(&self) -> &[f64] {
        &self.periods[..self.dim]
    }

    pub fn len(&self) -> usize {
        self.sizes().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn volume(&self) -> f64 {
        self.periods().iter().product()
    }

    /// Smallest mesh width over all axes.
    pub fn min_spacing(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.periods[i] / self.sizes[i] as f64)
            .fold(f64::INFINITY, f64::min)
    }

    /// Same node counts, periods multiplied by `factor`.
    pub fn rescaled(&self, factor: f64) -> Result<Self> {
        let periods: Vec<f64> = self.periods().iter().map(|a| a * factor).collect();
        Self::new(self.sizes(), &periods)
    }

    /// Same periods, node counts multiplied by `factor` (a power of two).
    pub fn refined(&self, factor: usize) -> Result<Self> {
        let sizes: Vec<usize> = self.sizes().iter().map(|n| n * factor).collect();
        Self::new(&sizes, self.periods())
    }

    pub(crate) fn strides(&self) -> [usize; 3] {
        [self.sizes[1] * self.sizes[2], self.sizes[2], 1]
    }

    /// Multi-index of a flat node/mode index.
    pub fn unravel(&self, idx: usize) -> [usize; 3] {
        let st = self.strides();
        [idx / st[0], (idx / st[1]) % self.sizes[1], idx % self.sizes[2]]
    }

    /// Signed mode number on `axis` for the array index `i`, in `[-n/2, n/2)`.
    pub fn mode_number(&self, axis: usize, i: usize) -> i64 {
        let n = self.sizes[axis];
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Array index of the signed mode number `m` on `axis` (wrapping).
    pub fn mode_index(&self, axis: usize, m: i64) -> usize {
        let n = self.sizes[axis] as i64;
        m.rem_euclid(n) as usize
    }

    /// Physical coordinate of the node index `i` on `axis`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        self.periods[axis] * i as f64 / self.sizes[axis] as f64
    }

    /// Node coordinates of a flat index (trailing unused axes are 0).
    pub fn node(&self, idx: usize) -> [f64; 3] {
        let m = self.unravel(idx);
        let mut x = [0.0; 3];
        for (axis, xi) in x.iter_mut().enumerate().take(self.dim) {
            *xi = self.coordinate(axis, m[axis]);
        }
        x
    }

    /// Signed mode numbers of a flat index.
    pub fn modes(&self, idx: usize) -> [i64; 3] {
        let m = self.unravel(idx);
        let mut n = [0i64; 3];
        for (axis, ni) in n.iter_mut().enumerate().take(self.dim) {
            *ni = self.mode_number(axis, m[axis]);
        }
        n
    }

    /// Flat index of the mode `-n`.
    pub fn conjugate_index(&self, idx: usize) -> usize {
        let m = self.unravel(idx);
        let st = self.strides();
        (0..3).map(|a| ((self.sizes[a] - m[a]) % self.sizes[a]) * st[a]).sum()
    }

    /// Cached wavenumber tables for this grid.
    pub fn wavenumbers(&self) -> Arc<Wavenumbers> {
        static CACHE: OnceLock<Mutex<HashMap<GridKey, Arc<Wavenumbers>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let key = self.key();
        if let Some(w) = cache.lock().unwrap().get(&key) {
            return Arc::clone(w);
        }
        let w = Arc::new(Wavenumbers::build(self));
        cache.lock().unwrap().insert(key, Arc::clone(&w));
        w
    }

    pub(crate) fn key(&self) -> GridKey {
        GridKey { sizes: self.sizes, periods: self.periods.map(f64::to_bits) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub(crate) struct GridKey {
    sizes: [usize; 3],
    periods: [u64; 3],
}

/// Per-mode wavenumber tables.
///
/// `k` holds the true lattice frequencies `2π n / a`; `kd` the ones used for
/// differentiation, which are zero on the Nyquist index of each axis.
#[derive(Debug)]
pub struct Wavenumbers {
    pub k: [Vec<f64>; 3],
    pub kd: [Vec<f64>; 3],
    /// `|k|` with the true frequencies (used for Littlewood-Paley weights).
    pub kmag: Vec<f64>,
    /// `|kd|^2`, the symbol of `-Δ`.
    pub kd2: Vec<f64>,
    /// True where some axis sits on its Nyquist index.
    pub nyquist: Vec<bool>,
    /// 2/3-rule retention mask.
    pub keep23: Vec<bool>,
}

impl Wavenumbers {
    fn build(grid: &TorusGrid) -> Self {
        let n = grid.len();
        let mut k: [Vec<f64>; 3] = Default::default();
        let mut kd: [Vec<f64>; 3] = Default::default();
        for axis in 0..3 {
            k[axis] = vec![0.0; n];
            kd[axis] = vec![0.0; n];
        }
        let mut kmag = vec![0.0; n];
        let mut kd2 = vec![0.0; n];
        let mut nyquist = vec![false; n];
        let mut keep23 = vec![true; n];
        for idx in 0..n {
            let m = grid.modes(idx);
            let mut k2 = 0.0;
            for axis in 0..grid.dim() {
                let size = grid.sizes[axis] as i64;
                let kk = 2.0 * PI * m[axis] as f64 / grid.periods[axis];
                k[axis][idx] = kk;
                k2 += kk * kk;
                let is_nyq = m[axis] == -size / 2;
                if is_nyq {
                    nyquist[idx] = true;
                } else {
                    kd[axis][idx] = kk;
                    kd2[idx] += kk * kk;
                }
                // keep |n| < n/3
                if 3 * m[axis].abs() >= size {
                    keep23[idx] = false;
                }
            }
            kmag[idx] = k2.sqrt();
        }
        Self { k, kd, kmag, kd2, nyquist, keep23 }
    }

    pub fn kmax(&self) -> f64 {
        self.kmag.iter().cloned().fold(0.0, f64::max)
    }
}
