//! Ising models, spin states, the Max-cut mapping and the exhaustive oracle.

use std::fmt;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::scalar::Real;

/// Largest instance [`brute_force_maxcut`] will enumerate.
pub const BRUTE_FORCE_MAX_N: usize = 28;

/// Tolerance for the symmetry check on loaded matrices.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Spin configuration, each entry `+1` (phase 0) or `-1` (phase π).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinState(Vec<i8>);

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if let Some(i) = spins.iter().position(|&s| s != 1 && s != -1) {
            return Err(Error::invalid(format!("spin {i} is {} (must be +1 or -1)", spins[i])));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect())
    }

    /// Spin `i` (for `i >= 1`) is down iff bit `i - 1` of `index` is set; spin 0 is up.
    pub fn from_pinned_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| if i > 0 && (index >> (i - 1)) & 1 == 1 { -1 } else { 1 }).collect())
    }

    /// Parses `0`/`1` characters (`1` = spin down).
    pub fn from_bits(bits: &str) -> Result<Self> {
        bits.chars()
            .map(|c| match c {
                '0' => Ok(1),
                '1' => Ok(-1),
                _ => Err(Error::invalid(format!("bad spin character `{c}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn get<T: Real>(&self, i: usize) -> T {
        if self.0[i] > 0 {
            T::one()
        } else {
            -T::one()
        }
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }

    /// SLM phases: 0 for spin up, π for spin down.
    pub fn phases<T: Real>(&self) -> Vec<T> {
        self.0.iter().map(|&s| if s > 0 { T::zero() } else { T::PI() }).collect()
    }

    /// Appends a spin fixed to `+1`, matching [`IsingModel::fold_external_field`].
    pub fn with_field_spin(&self) -> Self {
        let mut v = self.0.clone();
        v.push(1);
        Self(v)
    }
}

impl fmt::Display for SpinState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &s in &self.0 {
            f.write_str(if s > 0 { "0" } else { "1" })?;
        }
        Ok(())
    }
}

/// Symmetric interaction matrix with zero diagonal, stored dense row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel<T> {
    n: usize,
    j: Vec<T>,
}

#[derive(Serialize, Deserialize)]
struct JsonMatrix {
    n: usize,
    #[serde(rename = "J")]
    j: Vec<Vec<f64>>,
}

impl<T: Real> IsingModel<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, j: vec![T::zero(); n * n] }
    }

    /// Builds a model from dense rows. Rows must be square and symmetric within
    /// [`SYMMETRY_TOL`]; the result is averaged to exact symmetry and the
    /// diagonal is dropped.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::invalid("empty matrix"));
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::parse(r + 1, format!("row has {} entries, expected {n}", row.len())));
            }
        }
        let tol = T::of(SYMMETRY_TOL);
        let mut m = Self::zeros(n);
        for h in 0..n {
            for k in h + 1..n {
                let (a, b) = (rows[h][k], rows[k][h]);
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::invalid(format!("non-finite entry at ({h}, {k})")));
                }
                let scale = T::one().max(a.abs()).max(b.abs());
                if (a - b).abs() > tol * scale {
                    return Err(Error::NotSymmetric { row: h, col: k, a: a.as_f64(), b: b.as_f64() });
                }
                let v = (a + b) / T::of(2.0);
                m.j[h * n + k] = v;
                m.j[k * n + h] = v;
            }
        }
        Ok(m)
    }

    /// Max-cut model of a graph: `J[u][v] = J[v][u] = -w/2`.
    ///
    /// Each edge then contributes `-w x_u x_v` to `xᵀJx`, so
    /// `cut = Σw/2 - H/2` and maximizing the cut is minimizing `H`.
    pub fn from_graph(g: &WeightedGraph<T>) -> Self {
        let n = g.n();
        let mut m = Self::zeros(n);
        let half = T::of(0.5);
        for e in g.edges() {
            let v = -e.w * half;
            m.j[e.u * n + e.v] = v;
            m.j[e.v * n + e.u] = v;
        }
        m
    }

    /// Folds an external field into an extra spin `n` that is pinned to `+1`:
    /// `J'[i][n] = J'[n][i] = h_i / 2`.
    pub fn fold_external_field(&self, h: &[T]) -> Result<Self> {
        if h.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: h.len() });
        }
        let n1 = self.n + 1;
        let mut m = Self::zeros(n1);
        for r in 0..self.n {
            m.j[r * n1..r * n1 + self.n].copy_from_slice(self.row(r));
        }
        let half = T::of(0.5);
        for (i, &hi) in h.iter().enumerate() {
            m.j[i * n1 + self.n] = hi * half;
            m.j[self.n * n1 + i] = hi * half;
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, h: usize, k: usize) -> T {
        self.j[h * self.n + k]
    }

    pub fn row(&self, h: usize) -> &[T] {
        &self.j[h * self.n..(h + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.n).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn data(&self) -> &[T] {
        &self.j
    }

    pub fn frobenius_norm(&self) -> T {
        self.j.iter().map(|&v| v * v).sum::<T>().sqrt()
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> T {
        (0..self.n).map(|r| self.row(r).iter().map(|v| v.abs()).sum::<T>()).fold(T::zero(), T::max)
    }

    fn check_dim(&self, x: &SpinState) -> Result<()> {
        if x.len() == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.n, found: x.len() })
        }
    }

    /// `xᵀJx`, summed over all ordered pairs.
    pub fn quadratic_form(&self, x: &SpinState) -> T {
        assert_eq!(x.len(), self.n, "spin state dimension");
        let s = x.spins();
        (0..self.n)
            .map(|h| {
                let row: T = self.row(h).iter().zip(s).map(|(&j, &xk)| if xk > 0 { j } else { -j }).sum();
                if s[h] > 0 {
                    row
                } else {
                    -row
                }
            })
            .sum()
    }

    /// `H(x) = -xᵀJx`.
    pub fn hamiltonian(&self, x: &SpinState) -> Result<T> {
        self.check_dim(x)?;
        Ok(-self.quadratic_form(x))
    }

    /// `H(x with spin i flipped) - H(x) = 4 x_i Σ_j J[i][j] x_j`.
    pub fn delta_hamiltonian(&self, x: &SpinState, i: usize) -> Result<T> {
        self.check_dim(x)?;
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, len: self.n });
        }
        let field: T = self.row(i).iter().zip(x.spins()).map(|(&j, &xk)| if xk > 0 { j } else { -j }).sum();
        Ok(T::of(4.0) * x.get::<T>(i) * field)
    }

    pub fn to_json(&self) -> String {
        let m = JsonMatrix {
            n: self.n,
            j: (0..self.n).map(|r| self.row(r).iter().map(|v| v.as_f64()).collect()).collect(),
        };
        serde_json::to_string(&m).expect("matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: JsonMatrix = serde_json::from_str(text)?;
        if m.j.len() != m.n {
            return Err(Error::DimensionMismatch { expected: m.n, found: m.j.len() });
        }
        let rows: Vec<Vec<T>> = m.j.iter().map(|r| r.iter().map(|&v| T::of(v)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for r in 0..self.n {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    /// Parses `n` lines of `n` comma-separated reals.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row = line
                .split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map(T::of)
                        .map_err(|_| Error::parse(i + 1, format!("bad number `{}`", f.trim())))
                })
                .collect::<Result<Vec<T>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    /// Reads `.json` or CSV (any other extension).
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => Self::from_json(&text),
            _ => Self::from_csv(&text),
        }
    }
}

/// Cut value `Σ_{<l,k>} w (1 - x_l x_k) / 2`.
pub fn cut_value<T: Real>(g: &WeightedGraph<T>, x: &SpinState) -> Result<T> {
    if x.len() != g.n() {
        return Err(Error::DimensionMismatch { expected: g.n(), found: x.len() });
    }
    let s = x.spins();
    Ok(g.edges().iter().filter(|e| s[e.u] != s[e.v]).fold(T::zero(), |acc, e| acc + e.w))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxCut<T> {
    pub best_cut: T,
    pub best_state: SpinState,
    /// Enumeration index of `best_state` (see [`SpinState::from_pinned_index`]).
    pub index: u64,
}

/// Exhaustive Max-cut over the `2^(n-1)` states with spin 0 pinned up.
///
/// Ties go to the lowest enumeration index. The index range is split across
/// rayon workers; the reduction is order independent.
pub fn brute_force_maxcut<T: Real>(g: &WeightedGraph<T>) -> Result<MaxCut<T>> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::SizeGuard { n, max: BRUTE_FORCE_MAX_N });
    }
    // edge endpoints as bit positions in the pinned index; vertex 0 has none
    let edges: Vec<(u32, u32, T)> = g.edges().iter().map(|e| (e.u as u32, e.v as u32, e.w)).collect();
    let total: u64 = 1 << (n.max(1) - 1);
    let cut_of = |idx: u64| -> T {
        let bits = idx << 1; // bit i = spin i down
        edges.iter().filter(|&&(u, v, _)| ((bits >> u) ^ (bits >> v)) & 1 == 1).map(|&(_, _, w)| w).sum()
    };
    const CHUNK: u64 = 1 << 12;
    let chunks = total.div_ceil(CHUNK);
    let better = |a: (T, u64), b: (T, u64)| -> (T, u64) {
        if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
            b
        } else {
            a
        }
    };
    let (best_cut, index) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(total);
            let mut best = (cut_of(lo), lo);
            for idx in lo + 1..hi {
                let v = cut_of(idx);
                if v > best.0 {
                    best = (v, idx);
                }
            }
            best
        })
        .reduce_with(better)
        .expect("at least one state");
    Ok(MaxCut { best_cut, best_state: SpinState::from_pinned_index(n, index), index })
}
