//! Linearized stiffness/mass assembly and the generalized eigenproblem
//! `K φ = ω² M φ` for the lowest natural frequencies.

use std::collections::VecDeque;
use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::DEGENERATE_LENGTH;
use crate::model::Scene;
use crate::Vec3;

pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModalError {
    #[error("spring {spring} has coincident endpoints")]
    CoincidentEndpoints { spring: usize },
    #[error("system has no free degrees of freedom")]
    NoFreeDofs,
    #[error("factorization failed at pivot {pivot}: matrix is not positive definite (unanchored structure?)")]
    Factorization { pivot: usize },
    #[error("mode {mode} did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { mode: usize, iterations: usize, residual: f64 },
    #[error("requested {requested} modes but only {available} degrees of freedom")]
    TooManyModes { requested: usize, available: usize },
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(i, j, _)| (i, j));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in triplets {
            assert!(i < n && j < n, "triplet ({i}, {j}) outside {n}x{n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[i + 1] += 1;
            cols.push(j);
            vals.push(v);
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            y[i] = self.row(i).map(|(j, a)| a * x[j]).sum();
        }
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        (0..self.n)
            .flat_map(|i| self.row(i).map(move |(j, a)| (i, j, a)))
            .map(|(i, j, a)| (a - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, a) in self.row(i) {
                d[(i, j)] = a;
            }
        }
        d
    }
}

/// Reverse Cuthill–McKee ordering of the sparsity graph. Returns `perm` with
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).filter(|&(j, _)| j != i).count()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a.row(v).map(|(j, _)| j).filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope (skyline) Cholesky factor `A = L Lᵀ` of a symmetric positive
/// definite matrix, stored by rows from each row's first nonzero.
#[derive(Clone, Debug)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    ptr: Vec<usize>,
    vals: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self, ModalError> {
        let n = a.dim();
        let first: Vec<usize> = (0..n)
            .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j <= i).min().unwrap_or(i))
            .collect();
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        for i in 0..n {
            ptr.push(ptr[i] + i - first[i] + 1);
        }
        let mut vals = vec![0.0; ptr[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    vals[ptr[i] + j - first[i]] = v;
                }
            }
        }
        let mut f = Self { first, ptr, vals };
        for i in 0..n {
            let fi = f.first[i];
            for j in fi..i {
                let fj = f.first[j];
                let k0 = fi.max(fj);
                let mut s = f.vals[f.ptr[i] + j - fi];
                for k in k0..j {
                    s -= f.vals[f.ptr[i] + k - fi] * f.vals[f.ptr[j] + k - fj];
                }
                f.vals[f.ptr[i] + j - fi] = s / f.vals[f.ptr[j] + j - fj];
            }
            let at = f.ptr[i] + i - fi;
            let diag = f.vals[at];
            let mut d = diag;
            for k in fi..i {
                let l = f.vals[f.ptr[i] + k - fi];
                d -= l * l;
            }
            if !(d > 1e-13 * diag.abs()) {
                return Err(ModalError::Factorization { pivot: i });
            }
            f.vals[at] = d.sqrt();
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    /// Stored envelope entries.
    pub fn envelope(&self) -> usize {
        self.vals.len()
    }

    fn l(&self, i: usize, k: usize) -> f64 {
        self.vals[self.ptr[i] + k - self.first[i]]
    }

    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut s = b[i];
            for k in self.first[i]..i {
                s -= self.l(i, k) * b[k];
            }
            b[i] = s / self.l(i, i);
        }
        for i in (0..n).rev() {
            b[i] /= self.l(i, i);
            let xi = b[i];
            for k in self.first[i]..i {
                b[k] -= self.l(i, k) * xi;
            }
        }
    }
}

/// Linearized stiffness and lumped mass over the free degrees of freedom.
#[derive(Clone, Debug)]
pub struct ModalSystem {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
    /// `(mass index, axis)` of each free DOF.
    pub dofs: Vec<(usize, usize)>,
}

/// Tangent stiffness of a spring: `k d̂d̂ᵀ + k (1 - l0/|l|)(I - d̂d̂ᵀ)`.
pub fn tangent_block(xi: &Vec3, xj: &Vec3, k: f64, l0: f64) -> Option<Matrix3<f64>> {
    let d = xj - xi;
    let len = d.norm();
    if len < DEGENERATE_LENGTH {
        return None;
    }
    let u = d / len;
    let dd = u * u.transpose();
    Some(dd * k + (Matrix3::identity() - dd) * (k * (1.0 - l0 / len)))
}

/// Assembles `K̂` and `M̂` linearized about positions `x`. Anchored masses are
/// removed from the system.
pub fn assemble_modal_system(scene: &Scene, x: &[Vec3]) -> Result<ModalSystem, ModalError> {
    let mut index = vec![usize::MAX; scene.masses.len()];
    let mut dofs = Vec::new();
    let mut mass = Vec::new();
    for (i, m) in scene.masses.iter().enumerate() {
        if m.fixed {
            continue;
        }
        index[i] = dofs.len();
        for axis in 0..3 {
            dofs.push((i, axis));
            mass.push(m.m);
        }
    }
    if dofs.is_empty() {
        return Err(ModalError::NoFreeDofs);
    }
    let mut trip = Vec::with_capacity(scene.springs.len() * 36);
    for (s, spring) in scene.springs.iter().enumerate() {
        let block = tangent_block(&x[spring.i], &x[spring.j], spring.k, spring.l0)
            .ok_or(ModalError::CoincidentEndpoints { spring: s })?;
        let (a, b) = (index[spring.i], index[spring.j]);
        for r in 0..3 {
            for c in 0..3 {
                let v = block[(r, c)];
                if a != usize::MAX {
                    trip.push((a + r, a + c, v));
                }
                if b != usize::MAX {
                    trip.push((b + r, b + c, v));
                }
                if a != usize::MAX && b != usize::MAX {
                    trip.push((a + r, b + c, -v));
                    trip.push((b + r, a + c, -v));
                }
            }
        }
    }
    Ok(ModalSystem {
        stiffness: CsrMatrix::from_triplets(dofs.len(), trip),
        mass,
        dofs,
    })
}

impl ModalSystem {
    pub fn dof_count(&self) -> usize {
        self.dofs.len()
    }

    /// Dense symmetric matrix `M^{-1/2} K M^{-1/2}`, whose eigenvalues are ω².
    pub fn dense_normalized(&self) -> DMatrix<f64> {
        let mut k = self.stiffness.to_dense();
        let n = k.nrows();
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] /= (self.mass[i] * self.mass[j]).sqrt();
            }
        }
        k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenOptions {
    pub shift: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            shift: 0.0,
            tol: DEFAULT_RESIDUAL_TOL,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

/// A converged eigenpair with its residual.
#[derive(Clone, Debug)]
pub struct Mode {
    /// ω² (rad²/s²).
    pub eigenvalue: f64,
    pub frequency: f64,
    /// Mass-normalized shape over the free DOFs.
    pub shape: Vec<f64>,
    /// `‖Kφ − λMφ‖ / (‖Kφ‖ + |σ| ‖Mφ‖)`.
    pub residual: f64,
}

fn permuted(a: &CsrMatrix, perm: &[usize], inv: &[usize], mass: &[f64], shift: f64) -> CsrMatrix {
    let mut trip = Vec::with_capacity(a.nnz());
    for new_i in 0..a.dim() {
        let old_i = perm[new_i];
        for (old_j, v) in a.row(old_i) {
            let v = if old_j == old_i { v - shift * mass[old_i] } else { v };
            trip.push((new_i, inv[old_j], v));
        }
    }
    CsrMatrix::from_triplets(a.dim(), trip)
}

/// Lowest `count` modes by shift-inverted subspace iteration with
/// Rayleigh–Ritz projection; converged leading modes are locked.
pub fn lowest_modes(modal: &ModalSystem, count: usize, opts: &EigenOptions) -> Result<Vec<Mode>, ModalError> {
    let n = modal.dof_count();
    if count == 0 {
        return Ok(Vec::new());
    }
    if count > n {
        return Err(ModalError::TooManyModes {
            requested: count,
            available: n,
        });
    }
    let k = &modal.stiffness;
    let m = &modal.mass;
    let perm = reverse_cuthill_mckee(k);
    let mut inv = vec![0; n];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let chol = SkylineCholesky::factor(&permuted(k, &perm, &inv, m, opts.shift))?;

    let p = n.min((2 * count).max(count + 8));
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-1.0..1.0));
    let mut locked = 0usize;
    let mut residuals = vec![f64::INFINITY; count];
    let mut theta = vec![0.0; p];
    let mut buf = vec![0.0; n];
    let mut kv = vec![0.0; n];

    for iter in 1..=opts.max_iterations {
        let mut y = x.clone();
        for c in locked..p {
            for (new, &old) in perm.iter().enumerate() {
                buf[new] = m[old] * x[(old, c)];
            }
            chol.solve(&mut buf);
            for (new, &old) in perm.iter().enumerate() {
                y[(old, c)] = buf[new];
            }
        }
        let q = y.qr().q();
        let mut kq = DMatrix::zeros(n, p);
        for c in 0..p {
            k.mul_vec(q.column(c).as_slice(), &mut kv);
            kq.column_mut(c).copy_from_slice(&kv);
        }
        let kr = q.transpose() * &kq;
        let mut mq = q.clone();
        for r in 0..n {
            for c in 0..p {
                mq[(r, c)] *= m[r];
            }
        }
        let mr = q.transpose() * &mq;
        let kr = (&kr + kr.transpose()) * 0.5;
        let mr = (&mr + mr.transpose()) * 0.5;
        let l = mr.cholesky().ok_or(ModalError::Factorization { pivot: 0 })?.l();
        let linv = l.clone().try_inverse().ok_or(ModalError::Factorization { pivot: 0 })?;
        let c = &linv * &kr * linv.transpose();
        let eig = nalgebra::SymmetricEigen::new((&c + c.transpose()) * 0.5);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let z = linv.transpose() * &eig.eigenvectors;
        let mut zs = DMatrix::zeros(p, p);
        for (dst, &src) in order.iter().enumerate() {
            zs.set_column(dst, &z.column(src));
            theta[dst] = eig.eigenvalues[src];
        }
        x = &q * zs;

        locked = 0;
        for j in 0..count {
            let phi = x.column(j);
            k.mul_vec(phi.as_slice(), &mut kv);
            let mut r2 = 0.0;
            let mut k2 = 0.0;
            let mut m2 = 0.0;
            for r in 0..n {
                let mphi = m[r] * phi[r];
                r2 += (kv[r] - theta[j] * mphi).powi(2);
                k2 += kv[r] * kv[r];
                m2 += mphi * mphi;
            }
            let denom = k2.sqrt() + opts.shift.abs() * m2.sqrt();
            residuals[j] = if denom > 0.0 { r2.sqrt() / denom } else { 0.0 };
            if residuals[j] < opts.tol && locked == j {
                locked = j + 1;
            }
        }
        if locked == count {
            return Ok((0..count)
                .map(|j| Mode {
                    eigenvalue: theta[j],
                    frequency: theta[j].max(0.0).sqrt() / (2.0 * PI),
                    shape: x.column(j).iter().copied().collect(),
                    residual: residuals[j],
                })
                .collect());
        }
        if iter == opts.max_iterations {
            break;
        }
    }
    let mode = residuals.iter().position(|&r| !(r < opts.tol)).unwrap_or(0);
    Err(ModalError::NotConverged {
        mode,
        iterations: opts.max_iterations,
        residual: residuals[mode],
    })
}

/// The `count` smallest natural frequencies (Hz), ascending.
pub fn natural_frequencies(modal: &ModalSystem, count: usize) -> Result<Vec<f64>, ModalError> {
    Ok(lowest_modes(modal, count, &EigenOptions::default())?
        .into_iter()
        .map(|m| m.frequency)
        .collect())
}

/// Solves `K u = f` over the free DOFs (static linear response).
pub fn static_solve(modal: &ModalSystem, f: &[f64]) -> Result<Vec<f64>, ModalError> {
    let k = &modal.stiffness;
    let perm = reverse_cuthill_mckee(k);
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    let chol = SkylineCholesky::factor(&permuted(k, &perm, &inv, &modal.mass, 0.0))?;
    let mut b: Vec<f64> = perm.iter().map(|&old| f[old]).collect();
    chol.solve(&mut b);
    let mut u = vec![0.0; b.len()];
    for (new, &old) in perm.iter().enumerate() {
        u[old] = b[new];
    }
    Ok(u)
}
