//! Multi-dimensional HITS for a multilayer network.
//!
//! Hub `x` and authority `y` score sectors, broadcasting `b` and receiving
//! `z` score economies. With `w[i, j, α, β]` the flow from `(i, α)` to
//! `(j, β)`, the scores are the fixed point of
//!
//! ```text
//! x_i = Σ_{j,α,β} (w · y_j · b_α · z_β)^γ1
//! y_j = Σ_{i,α,β} (w · x_i · b_α · z_β)^γ2
//! b_α = Σ_{i,j,β} (w · x_i · y_j · z_β)^γ3
//! z_β = Σ_{i,j,α} (w · x_i · y_j · b_α)^γ4
//! ```
//!
//! with every vector scaled to a largest entry of one. All four vectors are
//! updated from the previous iterate. Because every factor is nonnegative,
//! each term splits into `w^γ` times powers of the scores, so one iteration
//! costs a few products with the entrywise powers of `W`.

use std::fmt;
use std::str::FromStr;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::centrality::hits::{max_abs_diff, max_normalize};
use crate::error::{Error, Result};
use crate::flows::SupraNetwork;
use crate::matrix::SupraMatrix;

/// Slack allowed on `Σ γ_k = 1`.
pub const GAMMA_SUM_SLACK: f64 = 1e-12;

/// `x^g` with `0^g = 0`.
#[inline]
pub fn pow0(x: f64, g: f64) -> f64 {
    if x > 0.0 {
        x.powf(g)
    } else {
        0.0
    }
}

/// The four exponents, each in `(0, 1)` and summing to one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct Gamma([f64; 4]);

impl Gamma {
    pub fn new(g: [f64; 4]) -> Result<Self> {
        if let Some(v) = g.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
            return Err(Error::Parameter(format!(
                "each gamma must lie in (0, 1), got {v}"
            )));
        }
        let sum: f64 = g.iter().sum();
        if (sum - 1.0).abs() > GAMMA_SUM_SLACK {
            return Err(Error::Parameter(format!("gammas must sum to 1, got {sum}")));
        }
        Ok(Gamma(g))
    }

    pub fn uniform() -> Self {
        Gamma([0.25; 4])
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }
}

impl Default for Gamma {
    fn default() -> Self {
        Gamma::uniform()
    }
}

impl TryFrom<[f64; 4]> for Gamma {
    type Error = Error;
    fn try_from(g: [f64; 4]) -> Result<Self> {
        Gamma::new(g)
    }
}

impl From<Gamma> for [f64; 4] {
    fn from(g: Gamma) -> Self {
        g.0
    }
}

impl FromStr for Gamma {
    type Err = Error;

    /// Parses `g1,g2,g3,g4`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parameter(format!("bad gamma list {s:?}: {e}")))?;
        let arr: [f64; 4] = parts.try_into().map_err(|p: Vec<f64>| {
            Error::Parameter(format!("expected 4 gammas, got {}", p.len()))
        })?;
        Gamma::new(arr)
    }
}

impl fmt::Display for Gamma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.0;
        write!(f, "{a},{b},{c},{d}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdHitsOptions {
    pub gamma: Gamma,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for MdHitsOptions {
    fn default() -> Self {
        MdHitsOptions {
            gamma: Gamma::uniform(),
            tol: 1e-8,
            max_iter: 1000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MdHitsScores {
    /// Sector hub scores `x`.
    pub hub: Vec<f64>,
    /// Sector authority scores `y`.
    pub authority: Vec<f64>,
    /// Economy broadcasting scores `b`.
    pub broadcasting: Vec<f64>,
    /// Economy receiving scores `z`.
    pub receiving: Vec<f64>,
    pub gamma: Gamma,
    pub iterations: usize,
    /// Largest change of any score in the last iteration.
    pub residual: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MdHitsState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub b: Vec<f64>,
    pub z: Vec<f64>,
}

impl MdHitsState {
    pub fn ones(n: usize, l: usize) -> Self {
        MdHitsState {
            x: vec![1.0; n],
            y: vec![1.0; n],
            b: vec![1.0; l],
            z: vec![1.0; l],
        }
    }

    pub fn max_change(&self, other: &MdHitsState) -> f64 {
        max_abs_diff(&self.x, &other.x)
            .max(max_abs_diff(&self.y, &other.y))
            .max(max_abs_diff(&self.b, &other.b))
            .max(max_abs_diff(&self.z, &other.z))
    }
}

/// Entrywise powers `W^γk`, computed once per distinct exponent.
pub struct PoweredWeights {
    n: usize,
    l: usize,
    gamma: [f64; 4],
    powered: Vec<(u64, SupraMatrix)>,
}

impl PoweredWeights {
    pub fn new(w: &SupraMatrix, n: usize, l: usize, gamma: Gamma) -> Self {
        assert_eq!(w.dim(), n * l, "W must be (N·L) × (N·L)");
        let mut powered: Vec<(u64, SupraMatrix)> = Vec::new();
        for g in gamma.values() {
            if !powered.iter().any(|(bits, _)| *bits == g.to_bits()) {
                powered.push((g.to_bits(), w.map_nonzero(|v| pow0(v, g))));
            }
        }
        PoweredWeights {
            n,
            l,
            gamma: gamma.values(),
            powered,
        }
    }

    fn power(&self, k: usize) -> &SupraMatrix {
        let bits = self.gamma[k].to_bits();
        &self
            .powered
            .iter()
            .find(|(b, _)| *b == bits)
            .expect("every exponent cached")
            .1
    }

    /// `v[(i, α)] = (p_i · q_α)^g` in flat order.
    fn outer(&self, p: &[f64], q: &[f64], g: f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n * self.l);
        for &qa in q {
            let qa = pow0(qa, g);
            v.extend(p.iter().map(|&pi| pow0(pi, g) * qa));
        }
        v
    }

    /// `P_k · (y ⊗ z)^γk`, indexed by source `(i, α)`.
    fn source_sums(&self, k: usize, s: &MdHitsState) -> Vec<f64> {
        self.power(k).matvec(&self.outer(&s.y, &s.z, self.gamma[k]))
    }

    /// `P_kᵀ · (x ⊗ b)^γk`, indexed by target `(j, β)`.
    fn target_sums(&self, k: usize, s: &MdHitsState) -> Vec<f64> {
        self.power(k)
            .tmatvec(&self.outer(&s.x, &s.b, self.gamma[k]))
    }

    /// One simultaneous update of all four vectors, before normalization.
    pub fn step(&self, s: &MdHitsState) -> MdHitsState {
        let (n, l, g) = (self.n, self.l, self.gamma);
        let r1 = self.source_sums(0, s);
        let c2 = self.target_sums(1, s);
        let r3 = if g[2].to_bits() == g[0].to_bits() {
            r1.clone()
        } else {
            self.source_sums(2, s)
        };
        let c4 = if g[3].to_bits() == g[1].to_bits() {
            c2.clone()
        } else {
            self.target_sums(3, s)
        };

        let mut x = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut b = vec![0.0; l];
        let mut z = vec![0.0; l];
        for a in 0..l {
            let ba = pow0(s.b[a], g[0]);
            let za = pow0(s.z[a], g[1]);
            for i in 0..n {
                let h = a * n + i;
                x[i] += ba * r1[h];
                y[i] += za * c2[h];
                b[a] += pow0(s.x[i], g[2]) * r3[h];
                z[a] += pow0(s.y[i], g[3]) * c4[h];
            }
        }
        MdHitsState { x, y, b, z }
    }

    /// `step` followed by max-normalization of each vector.
    pub fn normalized_step(&self, s: &MdHitsState) -> MdHitsState {
        let mut next = self.step(s);
        for v in [&mut next.x, &mut next.y, &mut next.b, &mut next.z] {
            max_normalize(v);
        }
        next
    }
}

pub fn mdhits(sn: &SupraNetwork, opts: &MdHitsOptions) -> Result<MdHitsScores> {
    let dims = sn.dims();
    mdhits_matrix(&sn.w, dims.n_sectors, dims.n_economies, opts)
}

/// MD-HITS on a raw `(N·L) × (N·L)` matrix with economy-major flat indices.
pub fn mdhits_matrix(
    w: &SupraMatrix,
    n: usize,
    l: usize,
    opts: &MdHitsOptions,
) -> Result<MdHitsScores> {
    // re-validate in case the options were built without Gamma::new
    let gamma = Gamma::new(opts.gamma.values())?;
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::Parameter(
            "MD-HITS needs a positive tolerance and at least one iteration".into(),
        ));
    }
    if w.dim() != n * l {
        return Err(Error::Shape {
            array: "W".into(),
            expected: (n * l, n * l),
            found: (w.dim(), w.dim()),
        });
    }
    let mut bad = None;
    w.for_each_nonzero(|_, _, v| {
        if !(v.is_finite() && v > 0.0) && bad.is_none() {
            bad = Some(v);
        }
    });
    if let Some(v) = bad {
        return Err(Error::Parameter(format!(
            "MD-HITS needs finite nonnegative weights, found {v}"
        )));
    }

    let pw = PoweredWeights::new(w, n, l, gamma);
    let mut state = MdHitsState::ones(n, l);
    let mut residual = f64::INFINITY;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let next = pw.normalized_step(&state);
        residual = next.max_change(&state);
        state = next;
        if residual <= opts.tol {
            break;
        }
    }
    let converged = residual <= opts.tol;
    debug!("MD-HITS: {iterations} iterations, residual {residual:.3e}, converged {converged}");
    Ok(MdHitsScores {
        hub: state.x,
        authority: state.y,
        broadcasting: state.b,
        receiving: state.z,
        gamma,
        iterations,
        residual,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::numbered_labels;
    use ndarray::{array, Array2};

    fn network(w: Array2<f64>, n: usize, l: usize) -> SupraNetwork {
        let (s, e) = numbered_labels(n, l);
        SupraNetwork::new(w, s, e).unwrap()
    }

    #[test]
    fn gamma_validation() {
        assert!(Gamma::new([0.25; 4]).is_ok());
        assert!(Gamma::new([0.1, 0.2, 0.3, 0.4]).is_ok());
        assert!(Gamma::new([0.5, 0.5, 0.0, 0.0]).is_err());
        assert!(Gamma::new([0.3, 0.3, 0.3, 0.3]).is_err());
        assert!(Gamma::new([1.0, 0.1, -0.05, -0.05]).is_err());
        assert_eq!(
            "0.25,0.25,0.25,0.25".parse::<Gamma>().unwrap(),
            Gamma::uniform()
        );
        assert!("0.5,0.5".parse::<Gamma>().is_err());
        assert!("a,b,c,d".parse::<Gamma>().is_err());
        let g: Gamma = "0.1, 0.2, 0.3, 0.4".parse().unwrap();
        assert_eq!(g.to_string().parse::<Gamma>().unwrap(), g);
    }

    #[test]
    fn single_self_loop() {
        let s = mdhits(&network(array![[1.0]], 1, 1), &MdHitsOptions::default()).unwrap();
        assert!(s.converged);
        assert_eq!(s.iterations, 1);
        assert_eq!(
            (s.hub[0], s.authority[0], s.broadcasting[0], s.receiving[0]),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn zero_network() {
        let s = mdhits(
            &network(Array2::zeros((6, 6)), 3, 2),
            &MdHitsOptions::default(),
        )
        .unwrap();
        assert!(s.converged);
        for v in [&s.hub, &s.authority, &s.broadcasting, &s.receiving] {
            assert!(v.iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn scores_normalized_and_fixed() {
        let w = array![
            [0.0, 3.0, 1.0, 0.0],
            [2.0, 1.0, 0.0, 0.5],
            [0.0, 0.7, 4.0, 1.0],
            [1.2, 0.0, 0.3, 0.0]
        ];
        let sn = network(w, 2, 2);
        let opts = MdHitsOptions::default();
        let s = mdhits(&sn, &opts).unwrap();
        assert!(s.converged);
        for v in [&s.hub, &s.authority, &s.broadcasting, &s.receiving] {
            assert_eq!(v.iter().cloned().fold(0.0, f64::max), 1.0);
            assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
        }
        let pw = PoweredWeights::new(&sn.w, 2, 2, opts.gamma);
        let state = MdHitsState {
            x: s.hub.clone(),
            y: s.authority.clone(),
            b: s.broadcasting.clone(),
            z: s.receiving.clone(),
        };
        assert!(pw.normalized_step(&state).max_change(&state) <= opts.tol);
    }

    #[test]
    fn uneven_gamma_uses_all_four_powers() {
        let w = array![[0.0, 2.0], [5.0, 1.0]];
        let sn = network(w, 1, 2);
        let opts = MdHitsOptions {
            gamma: Gamma::new([0.1, 0.2, 0.3, 0.4]).unwrap(),
            ..Default::default()
        };
        let s = mdhits(&sn, &opts).unwrap();
        assert!(s.converged);
        // single sector: x and y are trivially 1
        assert_eq!(s.hub, vec![1.0]);
        assert_eq!(s.authority, vec![1.0]);
        // b_α ∝ Σ_β (w[α, β] z_β)^0.3, z_β ∝ Σ_α (w[α, β] b_α)^0.4
        let (b, z) = (&s.broadcasting, &s.receiving);
        let b0 = pow0(2.0 * z[1], 0.3);
        let b1 = pow0(5.0 * z[0], 0.3) + pow0(z[1], 0.3);
        assert!((b[0] - b0 / b0.max(b1)).abs() < 1e-7);
        let z0 = pow0(5.0 * b[1], 0.4);
        let z1 = pow0(2.0 * b[0], 0.4) + pow0(b[1], 0.4);
        assert!((z[1] - z1 / z0.max(z1)).abs() < 1e-7);
    }

    #[test]
    fn sparse_and_dense_agree() {
        let mut w = Array2::zeros((6, 6));
        w[[0, 1]] = 2.0;
        w[[1, 4]] = 1.0;
        w[[3, 2]] = 0.5;
        w[[5, 0]] = 3.0;
        let sparse = SupraMatrix::from_dense_auto(w.clone());
        assert!(sparse.is_sparse());
        let dense = SupraMatrix::Dense(w);
        let opts = MdHitsOptions::default();
        let a = mdhits_matrix(&sparse, 3, 2, &opts).unwrap();
        let b = mdhits_matrix(&dense, 3, 2, &opts).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert!(max_abs_diff(&a.hub, &b.hub) < 1e-14);
        assert!(max_abs_diff(&a.receiving, &b.receiving) < 1e-14);
    }

    #[test]
    fn invalid_options_rejected() {
        let sn = network(array![[1.0]], 1, 1);
        let opts = MdHitsOptions {
            tol: 0.0,
            ..Default::default()
        };
        assert!(mdhits(&sn, &opts).is_err());
        let opts = MdHitsOptions {
            gamma: Gamma([0.5, 0.5, 0.5, 0.5]),
            ..Default::default()
        };
        assert!(mdhits(&sn, &opts).is_err());
    }
}
