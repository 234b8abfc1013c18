//! Parametric charts `U -> R^n` with exact first and second derivatives.
//!
//! Caps and support pieces are Euclidean sphere patches and flat disks in
//! hyperspherical (polar box) coordinates. The polar singularities sit on
//! the faces of the parameter box, where Gauss-Legendre nodes never land.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

/// Value and derivatives of a chart at one parameter point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartJet {
    pub point: DVector<f64>,
    /// `n x p`; column `i` is `d_i X`.
    pub d1: DMatrix<f64>,
    /// `d_i d_j X` stored at `i * p + j`.
    pub d2: Vec<DVector<f64>>,
}

impl ChartJet {
    pub fn param_dim(&self) -> usize {
        self.d1.ncols()
    }

    pub fn second(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.d2[i * self.param_dim() + j]
    }
}

pub trait ChartMap: Send + Sync + fmt::Debug {
    fn param_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn eval(&self, u: &[f64]) -> ChartJet;
}

/// Axis-aligned parameter box.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ParamBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        debug_assert_eq!(lower.len(), upper.len());
        ParamBox { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// Polar box for a patch of `S^{p}`: polar angle up to `t_max`, middle
    /// angles in `[0, pi]`, the last angle in `[0, 2 pi]`.
    pub fn polar_cap(p: usize, t_max: f64) -> Self {
        let mut lower = vec![0.0; p];
        let mut upper = vec![PI; p];
        upper[0] = t_max;
        if p >= 2 {
            upper[p - 1] = TAU;
        }
        lower[0] = 0.0;
        ParamBox { lower, upper }
    }

    /// Polar box for a flat `p`-disk: radius up to `rho_max`, then the angles
    /// of `S^{p-1}`.
    pub fn polar_disk(p: usize, rho_max: f64) -> Self {
        let mut b = Self::polar_cap(p, rho_max);
        if p == 2 {
            b.upper[1] = TAU;
        }
        b
    }
}

/// Unit vector of `S^{m-1}` in hyperspherical angles, with derivatives.
///
/// `y_k = prod_{j<k} sin a_j * cos a_k` (the last component has no cosine).
pub fn hyperspherical(angles: &[f64]) -> (DVector<f64>, Vec<DVector<f64>>, Vec<DVector<f64>>) {
    let p = angles.len();
    let m = p + 1;
    let sin: Vec<f64> = angles.iter().map(|a| a.sin()).collect();
    let cos: Vec<f64> = angles.iter().map(|a| a.cos()).collect();
    // factor (value, first, second) of component k in angle j
    let factor = |k: usize, j: usize| -> (f64, f64, f64) {
        if j < k {
            (sin[j], cos[j], -sin[j])
        } else if j == k && k < p {
            (cos[j], -sin[j], -cos[j])
        } else {
            (1.0, 0.0, 0.0)
        }
    };
    let mut y = DVector::zeros(m);
    let mut d1 = vec![DVector::zeros(m); p];
    let mut d2 = vec![DVector::zeros(m); p * p];
    for k in 0..m {
        let f: Vec<(f64, f64, f64)> = (0..p).map(|j| factor(k, j)).collect();
        let prod_except = |skip: &[usize]| -> f64 {
            f.iter()
                .enumerate()
                .filter(|(j, _)| !skip.contains(j))
                .map(|(_, v)| v.0)
                .product()
        };
        y[k] = prod_except(&[]);
        for i in 0..p {
            d1[i][k] = f[i].1 * prod_except(&[i]);
            for l in 0..p {
                d2[i * p + l][k] = if i == l {
                    f[i].2 * prod_except(&[i])
                } else {
                    f[i].1 * f[l].1 * prod_except(&[i, l])
                };
            }
        }
    }
    (y, d1, d2)
}

/// Patch of the Euclidean sphere `|X - center| = radius` around `frame[:,0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpherePatch {
    pub center: DVector<f64>,
    pub radius: f64,
    /// Orthonormal `n x n` frame; the first column is the patch axis.
    pub frame: DMatrix<f64>,
}

impl ChartMap for SpherePatch {
    fn param_dim(&self) -> usize {
        self.center.len() - 1
    }

    fn ambient_dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, u: &[f64]) -> ChartJet {
        let (y, dy, ddy) = hyperspherical(u);
        let scaled = &self.frame * self.radius;
        let point = &self.center + &scaled * y;
        let cols: Vec<DVector<f64>> = dy.iter().map(|v| &scaled * v).collect();
        ChartJet {
            point,
            d1: DMatrix::from_columns(&cols),
            d2: ddy.iter().map(|v| &scaled * v).collect(),
        }
    }
}

/// Flat `(n-1)`-disk `center + plane * (rho * y(angles))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskPatch {
    pub center: DVector<f64>,
    /// `n x (n-1)` orthonormal basis of the plane.
    pub plane: DMatrix<f64>,
}

impl ChartMap for DiskPatch {
    fn param_dim(&self) -> usize {
        self.plane.ncols()
    }

    fn ambient_dim(&self) -> usize {
        self.center.len()
    }

    fn eval(&self, u: &[f64]) -> ChartJet {
        let p = self.param_dim();
        let rho = u[0];
        let (y, dy, ddy) = hyperspherical(&u[1..]);
        let point = &self.center + &self.plane * (&y * rho);
        let mut cols = Vec::with_capacity(p);
        cols.push(&self.plane * &y);
        for v in &dy {
            cols.push(&self.plane * v * rho);
        }
        let n = self.center.len();
        let mut d2 = vec![DVector::zeros(n); p * p];
        for i in 1..p {
            let v = &self.plane * &dy[i - 1];
            d2[i] = v.clone();
            d2[i * p] = v;
            for j in 1..p {
                d2[i * p + j] = &self.plane * &ddy[(i - 1) * (p - 1) + (j - 1)] * rho;
            }
        }
        ChartJet {
            point,
            d1: DMatrix::from_columns(&cols),
            d2,
        }
    }
}

type PointFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;

/// A chart given only by its point map; derivatives come from central
/// differences with one Richardson level (step `1e-5` for first and `1e-3`
/// for second derivatives). Expect about `1e-9` accuracy in `d1` and `1e-8`
/// in `d2` for unit-scale charts, against round-off on exact charts.
#[derive(Clone)]
pub struct FiniteDifferenceChart {
    map: Arc<PointFn>,
    param_dim: usize,
    ambient_dim: usize,
}

impl fmt::Debug for FiniteDifferenceChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteDifferenceChart")
            .field("param_dim", &self.param_dim)
            .field("ambient_dim", &self.ambient_dim)
            .finish_non_exhaustive()
    }
}

impl FiniteDifferenceChart {
    pub const FIRST_STEP: f64 = 1e-5;
    pub const SECOND_STEP: f64 = 1e-3;

    pub fn new(param_dim: usize, ambient_dim: usize, map: Arc<PointFn>) -> Self {
        FiniteDifferenceChart {
            map,
            param_dim,
            ambient_dim,
        }
    }

    fn at(&self, u: &[f64], shifts: &[(usize, f64)]) -> DVector<f64> {
        let mut v = u.to_vec();
        for &(i, h) in shifts {
            v[i] += h;
        }
        (self.map)(&v)
    }
}

impl ChartMap for FiniteDifferenceChart {
    fn param_dim(&self) -> usize {
        self.param_dim
    }

    fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    fn eval(&self, u: &[f64]) -> ChartJet {
        let p = self.param_dim;
        let point = (self.map)(u);
        let first = |i: usize, h: f64| (self.at(u, &[(i, h)]) - self.at(u, &[(i, -h)])) / (2.0 * h);
        let second = |i: usize, j: usize, h: f64| {
            if i == j {
                (self.at(u, &[(i, h)]) - &point * 2.0 + self.at(u, &[(i, -h)])) / (h * h)
            } else {
                (self.at(u, &[(i, h), (j, h)]) - self.at(u, &[(i, h), (j, -h)]) - self.at(u, &[(i, -h), (j, h)])
                    + self.at(u, &[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            }
        };
        let richardson = |coarse: DVector<f64>, fine: DVector<f64>| (fine * 4.0 - coarse) / 3.0;
        let h1 = Self::FIRST_STEP;
        let cols: Vec<DVector<f64>> = (0..p).map(|i| richardson(first(i, h1), first(i, 0.5 * h1))).collect();
        let h2 = Self::SECOND_STEP;
        let mut d2 = vec![DVector::zeros(self.ambient_dim); p * p];
        for i in 0..p {
            for j in i..p {
                let v = richardson(second(i, j, h2), second(i, j, 0.5 * h2));
                d2[j * p + i] = v.clone();
                d2[i * p + j] = v;
            }
        }
        ChartJet {
            point,
            d1: DMatrix::from_columns(&cols),
            d2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(chart: &dyn ChartMap, u: &[f64]) {
        let jet = chart.eval(u);
        let p = chart.param_dim();
        let h = 1e-6;
        for i in 0..p {
            let mut up = u.to_vec();
            let mut um = u.to_vec();
            up[i] += h;
            um[i] -= h;
            let a = chart.eval(&up);
            let b = chart.eval(&um);
            let fd = (&a.point - &b.point) / (2.0 * h);
            assert!((fd - jet.d1.column(i)).norm() < 1e-8, "d1 column {i}");
            for j in 0..p {
                let fd2 = (a.d1.column(j) - b.d1.column(j)) / (2.0 * h);
                assert!((fd2 - jet.second(i, j)).norm() < 1e-7, "d2 ({i},{j})");
            }
        }
    }

    #[test]
    fn hyperspherical_is_unit_and_consistent() {
        for angles in [vec![0.4], vec![0.4, 1.3], vec![0.7, 2.0, 4.0]] {
            let (y, _, _) = hyperspherical(&angles);
            assert!((y.norm() - 1.0).abs() < 1e-15);
        }
        let sphere = SpherePatch {
            center: DVector::from_vec(vec![0.1, 0.2, -0.3, 0.5]),
            radius: 0.7,
            frame: crate::linalg::frame_with_axis(&DVector::from_vec(vec![0.3, 0.1, 0.2, 1.0])),
        };
        fd_check(&sphere, &[0.5, 1.1, 2.5]);
        let jet = sphere.eval(&[0.5, 1.1, 2.5]);
        assert!(((&jet.point - &sphere.center).norm() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn disk_patch_derivatives() {
        let plane = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let disk = DiskPatch {
            center: DVector::from_vec(vec![0.0, 0.0, 1.0]),
            plane,
        };
        fd_check(&disk, &[0.3, 1.0]);
        let plane4 = crate::linalg::frame_with_axis(&DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0])).remove_column(0);
        let disk4 = DiskPatch {
            center: DVector::zeros(4),
            plane: plane4,
        };
        fd_check(&disk4, &[0.3, 1.0, 2.0]);
    }

    #[test]
    fn finite_difference_chart_matches_exact() {
        let sphere = SpherePatch {
            center: DVector::zeros(3),
            radius: 1.0,
            frame: DMatrix::identity(3, 3),
        };
        let s2 = sphere.clone();
        let fd = FiniteDifferenceChart::new(2, 3, Arc::new(move |u: &[f64]| s2.eval(u).point));
        let u = [0.6, 1.7];
        let a = sphere.eval(&u);
        let b = fd.eval(&u);
        assert!((a.d1 - b.d1).abs().max() < 1e-9);
        for (x, y) in a.d2.iter().zip(&b.d2) {
            assert!((x - y).norm() < 1e-8);
        }
    }

    #[test]
    fn polar_boxes() {
        let b = ParamBox::polar_cap(3, 1.0);
        assert_eq!(b.upper, vec![1.0, PI, TAU]);
        let d = ParamBox::polar_disk(2, 0.5);
        assert_eq!(d.upper, vec![0.5, TAU]);
    }
}
