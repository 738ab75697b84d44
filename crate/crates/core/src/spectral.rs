//! Symmetric eigendecomposition of the interaction matrix and the signed
//! intensity vectors built from it.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ising::IsingModel;
use crate::scalar::Real;

/// Sweep cap for the cyclic Jacobi iteration.
pub const MAX_SWEEPS: usize = 100;

/// Eigenvalue sign used to add or subtract a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn of<T: Real>(lambda: T) -> Self {
        if lambda >= T::zero() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

/// Eigenpairs of `J`, stored by decreasing signed eigenvalue, plus the
/// permutation that orders them by decreasing `|λ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBundle<T> {
    n: usize,
    lambda: Vec<T>,
    vectors: Vec<Vec<T>>,
    signs: Vec<Sign>,
    order: Vec<usize>,
    sweeps: usize,
}

#[derive(Serialize)]
struct BundleDump<'a> {
    lambda: Vec<f64>,
    #[serde(rename = "Q")]
    q: Vec<Vec<f64>>,
    order: &'a [usize],
}

/// Cyclic Jacobi on a dense symmetric matrix (row-major, `n * n`).
///
/// Returns the diagonal, the accumulated rotation matrix `V` (eigenvectors in
/// columns) and the sweep count.
fn jacobi<T: Real>(mut a: Vec<T>, n: usize) -> Result<(Vec<T>, Vec<T>, usize)> {
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let norm = a.iter().map(|&x| x * x).sum::<T>().sqrt();
    let tol = T::of(1e-12).max(T::of(8.0) * T::epsilon()) * norm;
    let off = |a: &[T]| -> T {
        let mut s = T::zero();
        for p in 0..n {
            for q in 0..n {
                if p != q {
                    s += a[p * n + q] * a[p * n + q];
                }
            }
        }
        s.sqrt()
    };

    let two = T::of(2.0);
    let mut sweeps = 0;
    loop {
        let o = off(&a);
        if o <= tol {
            break;
        }
        if sweeps == MAX_SWEEPS {
            return Err(Error::NoConvergence { sweeps, off: o.as_f64() });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (two * apq);
                let t = if theta.abs() > T::of(1e150) {
                    T::one() / (two * theta)
                } else {
                    theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let np = c * akp - s * akq;
                    let nq = s * akp + c * akq;
                    a[k * n + p] = np;
                    a[p * n + k] = np;
                    a[k * n + q] = nq;
                    a[q * n + k] = nq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let diag = (0..n).map(|i| a[i * n + i]).collect();
    Ok((diag, v, sweeps))
}

/// Decomposes `J = Σ λ_n υ_n υ_nᵀ`.
///
/// Output is deterministic: eigenpairs are sorted by signed λ (descending,
/// stable on the Jacobi diagonal index), each eigenvector is flipped so its
/// largest-magnitude entry (lowest index on ties) is positive, and `order`
/// sorts by `|λ|` descending with ties kept in storage order.
pub fn eigendecompose<T: Real>(m: &IsingModel<T>) -> Result<EigenBundle<T>> {
    let n = m.n();
    let (diag, v, sweeps) = jacobi(m.data().to_vec(), n)?;

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| diag[b].partial_cmp(&diag[a]).expect("finite eigenvalues"));

    let lambda: Vec<T> = idx.iter().map(|&i| diag[i]).collect();
    let vectors: Vec<Vec<T>> = idx
        .iter()
        .map(|&c| {
            let mut col: Vec<T> = (0..n).map(|r| v[r * n + c]).collect();
            let mut big = 0;
            for (r, x) in col.iter().enumerate() {
                if x.abs() > col[big].abs() {
                    big = r;
                }
            }
            if col[big] < T::zero() {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    let signs = lambda.iter().map(|&l| Sign::of(l)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| lambda[b].abs().partial_cmp(&lambda[a].abs()).expect("finite"));

    Ok(EigenBundle { n, lambda, vectors, signs, order, sweeps })
}

impl<T: Real> EigenBundle<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn vectors(&self) -> &[Vec<T>] {
        &self.vectors
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    /// Component indices by decreasing `|λ|`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    /// Eigenvalues in `|λ|`-descending order.
    pub fn ranked_lambda(&self) -> Vec<T> {
        self.order.iter().map(|&i| self.lambda[i]).collect()
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k > self.n {
            Err(Error::invalid(format!("K = {k} exceeds n = {}", self.n)))
        } else {
            Ok(())
        }
    }

    /// Dense `Σ_{first k by |λ|} λ υ υᵀ`.
    pub fn reconstruct(&self, k: usize) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        for &c in &self.order[..k.min(n)] {
            let (l, u) = (self.lambda[c], &self.vectors[c]);
            for r in 0..n {
                let lr = l * u[r];
                for s in 0..n {
                    out[r * n + s] += lr * u[s];
                }
            }
        }
        out
    }

    /// `1 - Σ_{i≤K} |λ_(i)| / Σ_i |λ_i|` with `|λ|`-descending order.
    /// `K = 0` gives 1, `K = n` gives 0, an all-zero spectrum gives 0.
    pub fn error_ratio(&self, k: usize) -> Result<T> {
        self.check_k(k)?;
        let total: T = self.lambda.iter().map(|l| l.abs()).sum();
        if total == T::zero() {
            return Ok(T::zero());
        }
        if k == self.n {
            return Ok(T::zero());
        }
        let kept: T = self.order[..k].iter().map(|&i| self.lambda[i].abs()).sum();
        Ok((T::one() - kept / total).max(T::zero()))
    }

    /// The literal signed-sum form of the error ratio. `None` when `Σλ` is
    /// negligible against `Σ|λ|`, which is always the case for a zero
    /// diagonal (trace zero).
    pub fn error_ratio_signed(&self, k: usize) -> Result<Option<T>> {
        self.check_k(k)?;
        let total: T = self.lambda.iter().copied().sum();
        let mass: T = self.lambda.iter().map(|l| l.abs()).sum();
        if total.abs() <= T::of(1e3) * T::epsilon() * mass || total == T::zero() {
            return Ok(None);
        }
        let kept: T = self.order[..k].iter().map(|&i| self.lambda[i]).sum();
        Ok(Some(T::one() - kept / total))
    }

    /// `‖J - J_K‖_F = sqrt(Σ_{dropped} λ²)`.
    pub fn tail_frobenius(&self, k: usize) -> Result<T> {
        self.check_k(k)?;
        Ok(self.order[k..].iter().fold(T::zero(), |acc, &i| acc + self.lambda[i] * self.lambda[i]).sqrt())
    }

    /// Intensity vectors `ξ = P sqrt(|λ|) υ` for the `k` largest-`|λ|` components.
    pub fn build_ensemble(&self, k: usize, p: T) -> Result<IntensityEnsemble<T>> {
        if k == 0 || k > self.n {
            return Err(Error::invalid(format!("K = {k} outside 1..={}", self.n)));
        }
        if !(p > T::zero()) || !p.is_finite() {
            return Err(Error::invalid(format!("scale P = {p} must be positive")));
        }
        let comps = &self.order[..k];
        let xi = comps
            .iter()
            .map(|&c| {
                let a = p * self.lambda[c].abs().sqrt();
                self.vectors[c].iter().map(|&u| a * u).collect()
            })
            .collect();
        Ok(IntensityEnsemble {
            n: self.n,
            xi,
            signs: comps.iter().map(|&c| self.signs[c]).collect(),
            lambda: comps.iter().map(|&c| self.lambda[c]).collect(),
            p,
        })
    }

    /// JSON with `lambda`, `Q` (eigenvectors as columns) and `order`.
    pub fn to_json(&self) -> String {
        let n = self.n;
        let dump = BundleDump {
            lambda: self.lambda.iter().map(|l| l.as_f64()).collect(),
            q: (0..n).map(|r| (0..n).map(|c| self.vectors[c][r].as_f64()).collect()).collect(),
            order: &self.order,
        };
        serde_json::to_string(&dump).expect("bundle serializes")
    }
}

/// The `K` intensity vectors displayed frame by frame, with their signs.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityEnsemble<T> {
    n: usize,
    xi: Vec<Vec<T>>,
    signs: Vec<Sign>,
    lambda: Vec<T>,
    p: T,
}

impl<T: Real> IntensityEnsemble<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.xi.len()
    }

    pub fn xi(&self) -> &[Vec<T>] {
        &self.xi
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    /// Eigenvalues of the retained components.
    pub fn lambda(&self) -> &[T] {
        &self.lambda
    }

    pub fn scale(&self) -> T {
        self.p
    }

    /// `Σ g_n ξ_n ξ_nᵀ`, the matrix the ensemble realizes (equals `P² J_K`).
    pub fn effective_matrix(&self) -> Vec<T> {
        let n = self.n;
        let mut out = vec![T::zero(); n * n];
        for (x, g) in self.xi.iter().zip(&self.signs) {
            let g: T = g.value();
            for r in 0..n {
                for s in 0..n {
                    out[r * n + s] += g * x[r] * x[s];
                }
            }
        }
        out
    }
}
