//! Independent reference implementations shared by the integration tests
//! and the acceptance harness. They follow the defining sums literally and
//! share no code with the library's numerical paths.

#![allow(dead_code)]

use eeflow_core::flows::SupraNetwork;
use eeflow_core::model::numbered_labels;
use eeflow_core::MrioDataset;
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs_matrix(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    assert_eq!(a.dim(), b.dim());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `Σ_{p=0..terms} A^p`.
pub fn neumann_inverse(a: &Array2<f64>, terms: usize) -> Array2<f64> {
    let n = a.nrows();
    let mut sum = Array2::<f64>::eye(n);
    let mut power = Array2::<f64>::eye(n);
    for _ in 0..terms {
        power = power.dot(a);
        sum += &power;
    }
    sum
}

/// `max(Σ_ε c[i,ε] · l[(i,ε),(j,α)] · f[(j,α),β], 0)`, one scalar at a time.
pub fn literal_q(
    d: &MrioDataset,
    linv: &Array2<f64>,
    i: usize,
    j: usize,
    a: usize,
    b: usize,
) -> f64 {
    let n = d.sectors.len();
    let l = d.economies.len();
    let mut intensity = 0.0;
    for eps in 0..l {
        intensity += d.energy_satellite[[i, eps]] * linv[[eps * n + i, a * n + j]];
    }
    intensity * d.final_demand[[a * n + j, b]]
}

pub fn triple_loop_w(d: &MrioDataset, linv: &Array2<f64>) -> Array2<f64> {
    let n = d.sectors.len();
    let l = d.economies.len();
    let mut w = Array2::zeros((n * l, n * l));
    for a in 0..l {
        for b in 0..l {
            for i in 0..n {
                for j in 0..n {
                    w[[a * n + i, b * n + j]] = literal_q(d, linv, i, j, a, b).max(0.0);
                }
            }
        }
    }
    w
}

fn pow0(x: f64, g: f64) -> f64 {
    if x > 0.0 {
        x.powf(g)
    } else {
        0.0
    }
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let m = v.iter().cloned().fold(0.0, f64::max);
    if m > 0.0 {
        v.iter_mut().for_each(|x| *x /= m);
    }
    v
}

pub struct Scores {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub b: Vec<f64>,
    pub z: Vec<f64>,
}

/// One MD-HITS update written as the four-index sums, each product raised
/// to its exponent before summation, then max-normalized.
pub fn quad_loop_step(w: &Array2<f64>, n: usize, l: usize, s: &Scores, g: [f64; 4]) -> Scores {
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut b = vec![0.0; l];
    let mut z = vec![0.0; l];
    for i in 0..n {
        for j in 0..n {
            for al in 0..l {
                for be in 0..l {
                    let wv = w[[al * n + i, be * n + j]];
                    x[i] += pow0(wv * s.y[j] * s.b[al] * s.z[be], g[0]);
                    y[j] += pow0(wv * s.x[i] * s.b[al] * s.z[be], g[1]);
                    b[al] += pow0(wv * s.x[i] * s.y[j] * s.z[be], g[2]);
                    z[be] += pow0(wv * s.x[i] * s.y[j] * s.b[al], g[3]);
                }
            }
        }
    }
    Scores {
        x: normalized(x),
        y: normalized(y),
        b: normalized(b),
        z: normalized(z),
    }
}

/// Spearman correlation with ranks counted pairwise:
/// `rank_i = 1 + #{a_j < a_i} + ½ #{j ≠ i : a_j = a_i}`.
pub fn naive_spearman(a: &[f64], b: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        (0..v.len())
            .map(|i| {
                let mut r = 1.0;
                for j in 0..v.len() {
                    if v[j] < v[i] {
                        r += 1.0;
                    } else if j != i && v[j] == v[i] {
                        r += 0.5;
                    }
                }
                r
            })
            .collect()
    };
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// `new[p] = old[perm[p]]` for sectors and economies, flat arrays included.
pub fn permute_dataset(d: &MrioDataset, sp: &[usize], ep: &[usize]) -> MrioDataset {
    let n = d.sectors.len();
    let l = d.economies.len();
    let old = |h: usize| ep[h / n] * n + sp[h % n];
    let nl = n * l;
    let mut out = d.clone();
    out.sectors = sp
        .iter()
        .enumerate()
        .map(|(p, &o)| {
            let mut s = d.sectors[o].clone();
            s.index = p;
            s
        })
        .collect();
    out.economies = ep
        .iter()
        .enumerate()
        .map(|(p, &o)| {
            let mut e = d.economies[o].clone();
            e.index = p;
            e
        })
        .collect();
    out.intermediate_use =
        Array2::from_shape_fn((nl, nl), |(h, k)| d.intermediate_use[[old(h), old(k)]]);
    out.total_output = Array1::from_shape_fn(nl, |h| d.total_output[old(h)]);
    out.final_demand = Array2::from_shape_fn((nl, l), |(h, b)| d.final_demand[[old(h), ep[b]]]);
    out.energy_satellite =
        Array2::from_shape_fn((n, l), |(i, e)| d.energy_satellite[[sp[i], ep[e]]]);
    out
}

pub fn permute_matrix(w: &Array2<f64>, n: usize, sp: &[usize], ep: &[usize]) -> Array2<f64> {
    let old = |h: usize| ep[h / n] * n + sp[h % n];
    Array2::from_shape_fn(w.dim(), |(h, k)| w[[old(h), old(k)]])
}

pub fn permute_vec(v: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&o| v[o]).collect()
}

pub fn random_permutation(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Nonnegative `(N·L)²` weights; each entry is zero with probability
/// `1 - density`, otherwise uniform on `(0, 5)`.
pub fn random_weights(n: usize, l: usize, density: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let nl = n * l;
    Array2::from_shape_fn((nl, nl), |_| {
        let keep: f64 = rng.gen();
        let v: f64 = rng.gen();
        if keep < density {
            5.0 * v + 1e-3
        } else {
            0.0
        }
    })
}

pub fn network(w: Array2<f64>, n: usize, l: usize) -> SupraNetwork {
    let (s, e) = numbered_labels(n, l);
    SupraNetwork::new(w, s, e).expect("valid weights")
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Angle between `x` and the dominant eigenvector of `WᵀW`, from a dense
/// symmetric eigensolver.
pub fn dominant_angle(w: &Array2<f64>, x: &[f64]) -> f64 {
    let n = w.nrows();
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| w[[r, c]]);
    let wtw = m.transpose() * &m;
    let eig = nalgebra::SymmetricEigen::new(wtw);
    let top = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap()
        .0;
    let v = eig.eigenvectors.column(top);
    let xv = nalgebra::DVector::from_column_slice(x);
    let xn = xv.norm();
    let dot = xv.dot(&v) / xn;
    let perp = (&xv / xn - v * dot).norm();
    perp.atan2(dot.abs())
}
