//! Reference computations that share no code path with the library:
//! a cyclic Jacobi eigensolver, sparse block trace norms, and truncated Fock
//! space constructions of the Gaussian states.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use nonmarkov_core::{CMatrix, Superoperator, C64};
use rand::Rng;

/// Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let total: f64 = a.iter().flatten().map(|x| x * x).sum();
        if off <= 1e-30 * total.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Eigenvalues of a Hermitian matrix through the real embedding
/// `[[Re, −Im], [Im, Re]]`, whose spectrum is that of `H` doubled.
pub fn hermitian_eigenvalues_jacobi(h: &CMatrix) -> Vec<f64> {
    let n = h.nrows();
    let mut big = vec![vec![0.0; 2 * n]; 2 * n];
    for i in 0..n {
        for j in 0..n {
            let z = 0.5 * (h[(i, j)] + h[(j, i)].conj());
            big[i][j] = z.re;
            big[i + n][j + n] = z.re;
            big[i][j + n] = -z.im;
            big[i + n][j] = z.im;
        }
    }
    let ev = jacobi_eigenvalues(big);
    // pairs are adjacent after sorting
    ev.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

pub fn trace_norm_jacobi(h: &CMatrix) -> f64 {
    hermitian_eigenvalues_jacobi(h).iter().map(|l| l.abs()).sum()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Trace norm of a sparse Hermitian matrix given as nonzero entries: split
/// into connected blocks, Jacobi on each block.
pub fn sparse_trace_norm(entries: &HashMap<(usize, usize), C64>) -> f64 {
    let mut index: HashMap<usize, usize> = HashMap::new();
    for &(r, c) in entries.keys() {
        let next = index.len();
        index.entry(r).or_insert(next);
        let next = index.len();
        index.entry(c).or_insert(next);
    }
    let mut parent: Vec<usize> = (0..index.len()).collect();
    for &(r, c) in entries.keys() {
        let (a, b) = (find(&mut parent, index[&r]), find(&mut parent, index[&c]));
        if a != b {
            parent[a] = b;
        }
    }
    let mut blocks: HashMap<usize, Vec<usize>> = HashMap::new();
    let mut keys: Vec<usize> = index.keys().copied().collect();
    keys.sort_unstable();
    for k in keys {
        let root = find(&mut parent, index[&k]);
        blocks.entry(root).or_default().push(k);
    }
    blocks
        .values()
        .map(|members| {
            let m = members.len();
            let h = CMatrix::from_fn(m, m, |i, j| {
                entries
                    .get(&(members[i], members[j]))
                    .copied()
                    .unwrap_or(C64::new(0.0, 0.0))
            });
            trace_norm_jacobi(&h)
        })
        .sum()
}

/// Two-mode squeezed vacuum amplitudes `√(1−λ²) λⁿ`, `λ = tanh r`, for `n ≤ nmax`.
pub fn tmsv_amplitudes(r: f64, nmax: usize) -> Vec<f64> {
    let lam = r.tanh();
    let norm = (1.0 - lam * lam).sqrt();
    (0..=nmax).map(|n| norm * lam.powi(n as i32)).collect()
}

/// `(⟨a†a⟩, ⟨a b⟩)` of the truncated TMSV, from the Fock vector.
pub fn tmsv_moments(r: f64, nmax: usize) -> (f64, f64) {
    let c = tmsv_amplitudes(r, nmax);
    let n: f64 = c.iter().enumerate().map(|(k, x)| k as f64 * x * x).sum();
    // a b |n,n⟩ = n |n−1,n−1⟩
    let m: f64 = (1..=nmax).map(|k| c[k - 1] * c[k] * k as f64).sum();
    (n, m)
}

/// `log₂‖ρ^{T_A}‖₁` for the truncated TMSV, by sparse brute force.
pub fn tmsv_log_negativity(r: f64, nmax: usize) -> f64 {
    let c = tmsv_amplitudes(r, nmax);
    let d = nmax + 1;
    let mut entries = HashMap::new();
    // ρ = Σ c_n c_m |n n⟩⟨m m|; transpose the first factor: |m n⟩⟨n m|
    for n in 0..d {
        for m in 0..d {
            let row = m * d + n;
            let col = n * d + m;
            *entries.entry((row, col)).or_insert(C64::new(0.0, 0.0)) += C64::new(c[n] * c[m], 0.0);
        }
    }
    sparse_trace_norm(&entries).log2()
}

/// Exact Schrödinger evolution of system (S), one bath mode (B) and ancilla
/// (A) under `ω_S a†a + ω_B b†b + g(a†b + a b†) + ω_A c†c`, from
/// `TMSV(S,A) ⊗ |0⟩_B`, truncated at `nmax` quanta per TMSV branch.
pub struct ThreeModeFock {
    pub dim: usize,
    /// amplitude of |s, b, a⟩ at index (s·dim + b)·dim + a
    pub psi: Vec<C64>,
}

impl ThreeModeFock {
    pub fn evolve(r: f64, omega_s: f64, omega_b: f64, g: f64, omega_a: f64, t: f64, nmax: usize) -> Self {
        let dim = nmax + 1;
        let c = tmsv_amplitudes(r, nmax);
        let mut psi = vec![C64::new(0.0, 0.0); dim * dim * dim];
        for n in 0..=nmax {
            // sector S + B = n, basis |k⟩_S |n−k⟩_B
            let size = n + 1;
            let h = DMatrix::<f64>::from_fn(size, size, |i, j| {
                if i == j {
                    omega_s * i as f64 + omega_b * (n - i) as f64
                } else if i == j + 1 {
                    g * ((i * (n - i + 1)) as f64).sqrt()
                } else if j == i + 1 {
                    g * ((j * (n - j + 1)) as f64).sqrt()
                } else {
                    0.0
                }
            });
            let eig = h.symmetric_eigen();
            // initial |n⟩_S|0⟩_B is basis vector k = n
            let anc_phase = C64::from_polar(1.0, -omega_a * n as f64 * t);
            for k in 0..size {
                let amp: C64 = (0..size)
                    .map(|m| {
                        C64::from_polar(1.0, -eig.eigenvalues[m] * t)
                            * eig.eigenvectors[(k, m)]
                            * eig.eigenvectors[(n, m)]
                    })
                    .sum();
                psi[(k * dim + (n - k)) * dim + n] = amp * anc_phase * c[n];
            }
        }
        Self { dim, psi }
    }

    fn idx(&self, q: [usize; 3]) -> usize {
        (q[0] * self.dim + q[1]) * self.dim + q[2]
    }

    /// `a_mode |ψ⟩`.
    fn lower(&self, v: &[C64], mode: usize) -> Vec<C64> {
        let d = self.dim;
        let mut out = vec![C64::new(0.0, 0.0); v.len()];
        for s in 0..d {
            for b in 0..d {
                for a in 0..d {
                    let q = [s, b, a];
                    if q[mode] == 0 {
                        continue;
                    }
                    let mut q2 = q;
                    q2[mode] -= 1;
                    out[self.idx(q2)] += v[self.idx(q)] * (q[mode] as f64).sqrt();
                }
            }
        }
        out
    }

    fn inner(u: &[C64], v: &[C64]) -> C64 {
        u.iter().zip(v).map(|(x, y)| x.conj() * y).sum()
    }

    /// `N_jk = ⟨a_j† a_k⟩`, `M_jk = ⟨a_j a_k⟩` over modes (S, B, A).
    pub fn moments(&self) -> (CMatrix, CMatrix) {
        let lowered: Vec<Vec<C64>> = (0..3).map(|m| self.lower(&self.psi, m)).collect();
        let n = CMatrix::from_fn(3, 3, |j, k| Self::inner(&lowered[j], &lowered[k]));
        let m = CMatrix::from_fn(3, 3, |j, k| {
            let twice = self.lower(&lowered[k], j);
            Self::inner(&self.psi, &twice)
        });
        (n, m)
    }

    /// `log₂‖ρ_SA^{T_A}‖₁` after tracing out the bath mode.
    pub fn log_negativity(&self) -> f64 {
        let d = self.dim;
        let mut entries: HashMap<(usize, usize), C64> = HashMap::new();
        for b in 0..d {
            let nz: Vec<(usize, usize, C64)> = (0..d)
                .flat_map(|s| (0..d).map(move |a| (s, a)))
                .map(|(s, a)| (s, a, self.psi[self.idx([s, b, a])]))
                .filter(|(_, _, z)| z.norm() > 0.0)
                .collect();
            for &(s, a, z) in &nz {
                for &(s2, a2, z2) in &nz {
                    // ρ[(s,a),(s2,a2)] += z conj(z2); transpose A: (s,a2),(s2,a)
                    *entries.entry((s * d + a2, s2 * d + a)).or_insert(C64::new(0.0, 0.0)) += z * z2.conj();
                }
            }
        }
        sparse_trace_norm(&entries).log2()
    }
}

/// Random CP trace-preserving map from `count` Kraus operators:
/// `K_i = A_i G^{−1/2}` with `G = Σ A_i† A_i`.
pub fn random_kraus_map<R: Rng>(rng: &mut R, dim: usize, count: usize) -> Superoperator {
    let raw: Vec<CMatrix> = (0..count)
        .map(|_| CMatrix::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let g: CMatrix = raw.iter().map(|a| a.adjoint() * a).fold(CMatrix::zeros(dim, dim), |s, x| s + x);
    let eig = g.symmetric_eigen();
    let inv_sqrt = CMatrix::from_diagonal(&eig.eigenvalues.map(|l| C64::new(1.0 / l.sqrt(), 0.0)));
    let g_inv_sqrt = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint();
    let kraus: Vec<CMatrix> = raw.iter().map(|a| a * &g_inv_sqrt).collect();
    Superoperator::from_kraus(&kraus).unwrap()
}

pub fn random_hermitian<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()).scale(0.5)
}

pub fn random_matrix<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}
