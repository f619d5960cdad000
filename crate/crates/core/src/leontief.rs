//! Direct requirement coefficients and the Leontief inverse `(I - A)⁻¹`.

use log::{debug, info};
use ndarray::{s, Array2, Axis, ShapeBuilder};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_dataset, FlatIndex, MrioDataset};

/// `ρ(A)` must be below `1 - FEASIBILITY_MARGIN`.
pub const FEASIBILITY_MARGIN: f64 = 1e-9;

/// Columns checked for the residual when only a factorization is kept.
const SAMPLED_RESIDUAL_COLUMNS: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix {
    pub a: Array2<f64>,
    pub zero_output_columns: Vec<FlatIndex>,
}

impl CoefficientMatrix {
    pub fn dim(&self) -> usize {
        self.a.nrows()
    }
}

/// `a[h, k] = u[h, k] / o[k]`, with zero columns where `o[k] == 0`.
pub fn build_coefficients(d: &MrioDataset) -> Result<CoefficientMatrix> {
    validate_dataset(d).into_result()?;
    let dims = d.dims();
    let mut a = d.intermediate_use.clone();
    let mut zero_output_columns = Vec::new();
    for (k, mut col) in a.axis_iter_mut(Axis(1)).enumerate() {
        let o = d.total_output[k];
        if o > 0.0 {
            col.mapv_inplace(|u| u / o);
        } else {
            col.fill(0.0);
            zero_output_columns.push(dims.flat_index(k)?);
        }
    }
    Ok(CoefficientMatrix {
        a,
        zero_output_columns,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Maximum accepted max-abs residual of `(I - A)·L - I`.
    pub tol: f64,
    /// Largest order for which the full inverse is materialized.
    pub dense_limit: usize,
    pub power_iterations: usize,
    pub power_rel_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            dense_limit: 6000,
            power_iterations: 200,
            power_rel_tol: 1e-6,
        }
    }
}

/// LU factors of a square matrix with partial pivoting: `P·M = L·U`, with
/// the unit lower factor and the upper factor packed into one array.
#[derive(Clone, Debug, PartialEq)]
pub struct LuFactors {
    lu: Array2<f64>,
    /// `perm[i]` is the original row moved to position `i`.
    perm: Vec<usize>,
    /// Inverse of `perm`.
    position: Vec<usize>,
}

impl LuFactors {
    pub fn factor(mut m: Array2<f64>) -> Result<Self> {
        let n = m.nrows();
        assert_eq!(n, m.ncols(), "LU needs a square matrix");
        if !m.is_standard_layout() {
            m = m.as_standard_layout().into_owned();
        }
        let scale = m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            let (p, pivot_abs) =
                (k..n)
                    .map(|i| (i, m[[i, k]].abs()))
                    .fold((k, f64::NEG_INFINITY), |best, cur| {
                        if cur.1 > best.1 {
                            cur
                        } else {
                            best
                        }
                    });
            // also rejects NaN pivots
            if !(pivot_abs > tiny) {
                return Err(Error::Singular { column: k });
            }
            if p != k {
                for c in 0..n {
                    m.swap([k, c], [p, c]);
                }
                perm.swap(k, p);
            }
            let (top, mut bottom) = m.view_mut().split_at(Axis(0), k + 1);
            let pivot = top[[k, k]];
            let tail = top.slice(s![k, k + 1..]);
            bottom
                .axis_iter_mut(Axis(0))
                .into_par_iter()
                .for_each(|mut row| {
                    let l = row[k] / pivot;
                    row[k] = l;
                    if l != 0.0 {
                        row.slice_mut(s![k + 1..]).scaled_add(-l, &tail);
                    }
                });
        }

        let mut position = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            position[p] = i;
        }
        Ok(LuFactors {
            lu: m,
            perm,
            position,
        })
    }

    pub fn dim(&self) -> usize {
        self.lu.nrows()
    }

    /// Solves `M·x = e_k` into `out`.
    pub fn solve_unit_into(&self, k: usize, out: &mut [f64]) {
        let n = self.dim();
        out.fill(0.0);
        let start = self.position[k];
        out[start] = 1.0;
        for i in start + 1..n {
            let row = &self.row(i)[start..i];
            let acc: f64 = row.iter().zip(&out[start..i]).map(|(l, y)| l * y).sum();
            out[i] = -acc;
        }
        self.back_substitute(out);
    }

    /// Solves `M·x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let row = &self.row(i)[..i];
            let acc: f64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= acc;
        }
        self.back_substitute(&mut y);
        y
    }

    fn back_substitute(&self, y: &mut [f64]) {
        let n = self.dim();
        for i in (0..n).rev() {
            let row = self.row(i);
            let acc: f64 = row[i + 1..]
                .iter()
                .zip(&y[i + 1..])
                .map(|(u, x)| u * x)
                .sum();
            y[i] = (y[i] - acc) / row[i];
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        let n = self.dim();
        &self.lu.as_slice().expect("standard layout")[i * n..(i + 1) * n]
    }

    /// Full inverse, solved column by column in parallel.
    pub fn inverse(&self) -> Array2<f64> {
        let n = self.dim();
        let mut buf = vec![0.0; n * n];
        if n > 0 {
            buf.par_chunks_mut(n)
                .enumerate()
                .for_each(|(k, col)| self.solve_unit_into(k, col));
        }
        Array2::from_shape_vec((n, n).f(), buf)
            .expect("n*n buffer")
            .as_standard_layout()
            .into_owned()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InverseRepr {
    Dense(Array2<f64>),
    Factored(LuFactors),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeontiefSystem {
    pub coefficient: CoefficientMatrix,
    pub inverse: InverseRepr,
    pub spectral_radius_estimate: f64,
    /// Max-abs residual of `(I - A)·L - I`. When only the factorization is
    /// kept this is measured on an evenly spaced sample of columns.
    pub residual_norm: f64,
}

impl LeontiefSystem {
    pub fn dim(&self) -> usize {
        self.coefficient.dim()
    }

    pub fn dense_inverse(&self) -> Option<&Array2<f64>> {
        match &self.inverse {
            InverseRepr::Dense(l) => Some(l),
            InverseRepr::Factored(_) => None,
        }
    }

    /// The inverse as a dense matrix, solving for it if only factors are kept.
    pub fn to_dense_inverse(&self) -> Array2<f64> {
        match &self.inverse {
            InverseRepr::Dense(l) => l.clone(),
            InverseRepr::Factored(lu) => lu.inverse(),
        }
    }

    /// Column `k` of the inverse: every `l[(i, ε), k]` for fixed destination `k`.
    pub fn column(&self, k: FlatIndex) -> Result<Vec<f64>> {
        let n = self.dim();
        let k = k.value();
        if k >= n {
            return Err(Error::OutOfRange {
                what: "flat",
                index: k,
                limit: n,
            });
        }
        Ok(match &self.inverse {
            InverseRepr::Dense(l) => l.column(k).to_vec(),
            InverseRepr::Factored(lu) => {
                let mut out = vec![0.0; n];
                lu.solve_unit_into(k, &mut out);
                out
            }
        })
    }

    /// Wraps an inverse computed elsewhere (e.g. read back from disk),
    /// re-checking feasibility and the residual against `cm`.
    pub fn from_inverse(
        cm: CoefficientMatrix,
        inverse: Array2<f64>,
        opts: &SolveOptions,
    ) -> Result<Self> {
        let n = cm.dim();
        if inverse.dim() != (n, n) {
            return Err(Error::Shape {
                array: "leontief_inverse".into(),
                expected: (n, n),
                found: inverse.dim(),
            });
        }
        let rho = check_feasible(&cm.a, opts)?;
        let residual = dense_residual(&cm.a, &inverse);
        check_residual(residual, opts.tol)?;
        Ok(LeontiefSystem {
            coefficient: cm,
            inverse: InverseRepr::Dense(inverse),
            spectral_radius_estimate: rho,
            residual_norm: residual,
        })
    }
}

pub fn leontief_column(ls: &LeontiefSystem, k: FlatIndex) -> Result<Vec<f64>> {
    ls.column(k)
}

/// Solves for the Leontief inverse after checking `ρ(A) < 1`.
pub fn solve_leontief(cm: CoefficientMatrix, opts: &SolveOptions) -> Result<LeontiefSystem> {
    if !(opts.tol > 0.0) {
        return Err(Error::Parameter(format!(
            "Leontief tolerance must be positive, got {}",
            opts.tol
        )));
    }
    let n = cm.dim();
    let rho = check_feasible(&cm.a, opts)?;
    debug!("spectral radius estimate {rho:.6} for order {n}");

    let mut m = cm.a.mapv(|v| -v);
    m.diag_mut().mapv_inplace(|v| v + 1.0);
    let lu = LuFactors::factor(m)?;

    let (inverse, residual) = if n <= opts.dense_limit {
        let inv = lu.inverse();
        drop(lu);
        let residual = dense_residual(&cm.a, &inv);
        (InverseRepr::Dense(inv), residual)
    } else {
        let residual = sampled_residual(&cm.a, &lu);
        info!(
            "order {n} above dense limit {}; keeping LU factors",
            opts.dense_limit
        );
        (InverseRepr::Factored(lu), residual)
    };
    check_residual(residual, opts.tol)?;
    Ok(LeontiefSystem {
        coefficient: cm,
        inverse,
        spectral_radius_estimate: rho,
        residual_norm: residual,
    })
}

fn check_feasible(a: &Array2<f64>, opts: &SolveOptions) -> Result<f64> {
    let rho = spectral_radius_estimate(a, opts.power_iterations, opts.power_rel_tol);
    let threshold = 1.0 - FEASIBILITY_MARGIN;
    if rho >= threshold || !rho.is_finite() {
        return Err(Error::Infeasible { rho, threshold });
    }
    Ok(rho)
}

fn check_residual(residual: f64, tol: f64) -> Result<()> {
    if residual <= tol {
        Ok(())
    } else {
        Err(Error::Residual { residual, tol })
    }
}

/// `max |L - A·L - I|`.
fn dense_residual(a: &Array2<f64>, inv: &Array2<f64>) -> f64 {
    let al = a.dot(inv);
    let mut worst = 0.0f64;
    for ((r, c), &l) in inv.indexed_iter() {
        let id = if r == c { 1.0 } else { 0.0 };
        let v = (l - al[[r, c]] - id).abs();
        if v.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(v);
    }
    worst
}

fn sampled_residual(a: &Array2<f64>, lu: &LuFactors) -> f64 {
    let n = lu.dim();
    let step = (n / SAMPLED_RESIDUAL_COLUMNS).max(1);
    (0..n)
        .step_by(step)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&k| {
            let mut x = vec![0.0; n];
            lu.solve_unit_into(k, &mut x);
            let ax = a.dot(&ndarray::ArrayView1::from(&x[..]));
            x.iter()
                .zip(ax.iter())
                .enumerate()
                .map(|(r, (xv, axv))| {
                    let id = if r == k { 1.0 } else { 0.0 };
                    (xv - axv - id).abs()
                })
                .fold(0.0f64, f64::max)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(0.0f64, f64::max)
}

/// Upper estimate of the spectral radius of a nonnegative matrix.
///
/// Power iteration runs on `A + I`, which shares the Perron vector of `A`
/// and is aperiodic, so the iteration converges even for cyclic `A`. The
/// Collatz-Wielandt ratios `min/max (Bv)_i / v_i` bracket `ρ(A) + 1`;
/// iteration stops once the bracket is within `rel_tol`. The result is the
/// upper end of the bracket, further capped by the max column and row sums.
pub fn spectral_radius_estimate(a: &Array2<f64>, max_iter: usize, rel_tol: f64) -> f64 {
    let n = a.nrows();
    if n == 0 {
        return 0.0;
    }
    let norm1 = a
        .axis_iter(Axis(1))
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let norm_inf = a
        .axis_iter(Axis(0))
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max);

    let mut v = vec![1.0; n];
    let mut upper = f64::INFINITY;
    for _ in 0..max_iter.max(1) {
        let w: Vec<f64> = a
            .axis_iter(Axis(0))
            .into_par_iter()
            .zip(v.par_iter())
            .map(|(row, &vi)| row.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>() + vi)
            .collect();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for (wi, vi) in w.iter().zip(&v) {
            let r = wi / vi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        upper = hi;
        if hi - lo <= rel_tol * hi {
            break;
        }
        let scale = w.iter().fold(0.0f64, |m, x| m.max(*x));
        v = w.into_iter().map(|x| x / scale).collect();
    }
    (upper - 1.0).max(0.0).min(norm1).min(norm_inf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{numbered_labels, DatasetInfo};
    use ndarray::{array, Array1};

    fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn cm(a: Array2<f64>) -> CoefficientMatrix {
        CoefficientMatrix {
            a,
            zero_output_columns: vec![],
        }
    }

    fn dataset(u: Array2<f64>, o: Array1<f64>) -> MrioDataset {
        let n = o.len();
        let (sectors, economies) = numbered_labels(n, 1);
        MrioDataset {
            sectors,
            economies,
            intermediate_use: u,
            total_output: o,
            final_demand: Array2::zeros((n, 1)),
            energy_satellite: Array2::zeros((n, 1)),
            info: DatasetInfo::default(),
        }
    }

    #[test]
    fn coefficient_is_ratio() {
        let d = dataset(array![[2.0, 0.0], [1.0, 3.0]], array![4.0, 6.0]);
        let c = build_coefficients(&d).unwrap();
        assert_eq!(c.a[[0, 0]], 0.5);
        assert_eq!(c.a[[1, 0]], 0.25);
        assert_eq!(c.a[[1, 1]], 0.5);
        assert!(c.zero_output_columns.is_empty());
    }

    #[test]
    fn zero_output_column_is_zeroed_and_flagged() {
        let d = dataset(array![[2.0, 0.0], [1.0, 0.0]], array![4.0, 0.0]);
        let c = build_coefficients(&d).unwrap();
        assert_eq!(c.a.column(1).to_vec(), vec![0.0, 0.0]);
        assert_eq!(c.zero_output_columns.len(), 1);
        assert_eq!(c.zero_output_columns[0].value(), 1);
    }

    #[test]
    fn coefficients_reject_invalid_dataset() {
        let d = dataset(array![[-2.0, 0.0], [1.0, 0.0]], array![4.0, 1.0]);
        assert!(matches!(
            build_coefficients(&d),
            Err(Error::InvalidDataset(_))
        ));
    }

    #[test]
    fn homogeneous_in_common_scaling() {
        let u = array![[2.0, 0.5, 1.0], [1.0, 3.0, 0.0], [0.2, 0.1, 0.7]];
        let o = array![10.0, 7.0, 3.0];
        let c1 = build_coefficients(&dataset(u.clone(), o.clone())).unwrap();
        let c2 = build_coefficients(&dataset(u * 1000.0, o * 1000.0)).unwrap();
        assert!(max_abs_diff(&c1.a, &c2.a) <= 1e-15);
    }

    #[test]
    fn nilpotent_inverse_is_identity_plus_a() {
        let ls =
            solve_leontief(cm(array![[0.0, 0.5], [0.0, 0.0]]), &SolveOptions::default()).unwrap();
        let l = ls.dense_inverse().unwrap();
        assert_eq!(l, &array![[1.0, 0.5], [0.0, 1.0]]);
        assert_eq!(ls.column(FlatIndex(1)).unwrap(), vec![0.5, 1.0]);
        assert!(ls.residual_norm <= 1e-15);
    }

    #[test]
    fn zero_coefficients_give_identity() {
        let ls = solve_leontief(cm(Array2::zeros((4, 4))), &SolveOptions::default()).unwrap();
        assert_eq!(ls.dense_inverse().unwrap(), &Array2::<f64>::eye(4));
        assert_eq!(ls.spectral_radius_estimate, 0.0);
        for k in 0..4 {
            let col = ls.column(FlatIndex(k)).unwrap();
            let mut e = vec![0.0; 4];
            e[k] = 1.0;
            assert_eq!(col, e);
        }
        assert!(ls.column(FlatIndex(4)).is_err());
    }

    #[test]
    fn infeasible_economy_is_rejected() {
        let err = solve_leontief(cm(array![[0.6, 0.5], [0.5, 0.6]]), &SolveOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
        // cyclic matrix with ρ = 1
        let err = solve_leontief(cm(array![[0.0, 1.0], [1.0, 0.0]]), &SolveOptions::default())
            .unwrap_err();
        assert!(matches!(err, Error::Infeasible { .. }));
    }

    #[test]
    fn singular_factorization_reported() {
        assert!(matches!(
            LuFactors::factor(array![[1.0, 2.0], [2.0, 4.0]]),
            Err(Error::Singular { column: 1 })
        ));
    }

    #[test]
    fn spectral_estimate_on_known_spectra() {
        // eigenvalues 0.5 ± 0.3
        let a = array![[0.5, 0.3], [0.3, 0.5]];
        assert!((spectral_radius_estimate(&a, 200, 1e-6) - 0.8).abs() < 1e-5);
        // periodic with unequal weights: ρ = sqrt(0.2 * 0.8)
        let a = array![[0.0, 0.2], [0.8, 0.0]];
        let rho = spectral_radius_estimate(&a, 200, 1e-6);
        assert!((0.4 - 1e-9..0.4 + 1e-4).contains(&rho), "{rho}");
    }

    #[test]
    fn lu_solve_matches_inverse() {
        let m = array![[4.0, 1.0, 0.5], [2.0, 5.0, 1.0], [0.0, 3.0, 6.0]];
        let lu = LuFactors::factor(m.clone()).unwrap();
        let inv = lu.inverse();
        let prod = m.dot(&inv);
        assert!(max_abs_diff(&prod, &Array2::eye(3)) < 1e-14);
        let b = [1.0, -2.0, 3.0];
        let x = lu.solve(&b);
        let mx = m.dot(&Array1::from(x));
        for (l, r) in mx.iter().zip(b) {
            assert!((l - r).abs() < 1e-14);
        }
    }

    #[test]
    fn factored_path_matches_dense_path() {
        let a = Array2::from_shape_fn((9, 9), |(r, c)| ((r * 5 + c * 3) % 7) as f64 / 70.0);
        let dense = solve_leontief(cm(a.clone()), &SolveOptions::default()).unwrap();
        let opts = SolveOptions {
            dense_limit: 4,
            ..SolveOptions::default()
        };
        let factored = solve_leontief(cm(a), &opts).unwrap();
        assert!(factored.dense_inverse().is_none());
        assert!(factored.residual_norm <= 1e-12);
        let d = dense.dense_inverse().unwrap();
        assert!(max_abs_diff(d, &factored.to_dense_inverse()) < 1e-14);
        for k in 0..9 {
            let col = factored.column(FlatIndex(k)).unwrap();
            for r in 0..9 {
                assert!((col[r] - d[[r, k]]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn from_inverse_checks_residual() {
        let a = array![[0.0, 0.5], [0.0, 0.0]];
        let good = array![[1.0, 0.5], [0.0, 1.0]];
        assert!(
            LeontiefSystem::from_inverse(cm(a.clone()), good, &SolveOptions::default()).is_ok()
        );
        let bad = array![[1.0, 0.4], [0.0, 1.0]];
        assert!(matches!(
            LeontiefSystem::from_inverse(cm(a), bad, &SolveOptions::default()),
            Err(Error::Residual { .. })
        ));
    }
}
