//! Weighted undirected graphs: random generators, density, and rudy / JSON I/O.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::scalar::Real;

/// Undirected edge with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge<T> {
    pub u: usize,
    pub v: usize,
    pub w: T,
}

/// Simple weighted undirected graph. Edges are kept sorted by `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph<T> {
    n: usize,
    edges: Vec<Edge<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphFormat {
    Rudy,
    Json,
}

impl GraphFormat {
    /// Picks a format from a file extension; anything but `.json` is rudy.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => GraphFormat::Json,
            _ => GraphFormat::Rudy,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JsonGraph {
    n: usize,
    edges: Vec<(usize, usize, f64)>,
}

impl<T: Real> WeightedGraph<T> {
    /// Builds a graph from `(u, v, w)` triples in either orientation.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("graph needs at least one vertex"));
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for (i, (a, b, w)) in edges.into_iter().enumerate() {
            let line = i + 1;
            for x in [a, b] {
                if x >= n {
                    return Err(Error::VertexOutOfRange { line, vertex: x as i64, n });
                }
            }
            if a == b {
                return Err(Error::parse(line, format!("self-loop on vertex {a}")));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge { line, u, v });
            }
            out.push(Edge { u, v, w });
        }
        out.sort_by_key(|e| (e.u, e.v));
        Ok(Self { n, edges: out })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn total_weight(&self) -> T {
        self.edges.iter().fold(T::zero(), |acc, e| acc + e.w)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.u] += 1;
            deg[e.v] += 1;
        }
        deg
    }

    /// Graph density `2E / (n(n-1))`.
    pub fn density(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::invalid("density needs n >= 2"));
        }
        let pairs = (self.n * (self.n - 1)) as f64;
        Ok(2.0 * self.edges.len() as f64 / pairs)
    }

    /// Same structure, new weights (in edge order).
    pub fn with_weights(&self, weights: &[T]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::DimensionMismatch { expected: self.edges.len(), found: weights.len() });
        }
        let edges = self.edges.iter().zip(weights).map(|(e, &w)| Edge { u: e.u, v: e.v, w }).collect();
        Ok(Self { n: self.n, edges })
    }

    /// Random `degree`-regular graph with i.i.d. uniform weights on `[low, high)`.
    ///
    /// Uses the pairing (configuration) model; self-loops and repeated pairs
    /// are repaired by swapping endpoints with randomly chosen other pairs.
    pub fn gen_regular(n: usize, degree: usize, low: f64, high: f64, seed: u64) -> Result<Self> {
        if degree == 0 || degree >= n {
            return Err(Error::invalid(format!(
                "no simple {degree}-regular graph on {n} vertices (need 0 < degree < n)"
            )));
        }
        if !(n * degree).is_multiple_of(2) {
            return Err(Error::invalid(format!("n * degree = {} is odd", n * degree)));
        }
        check_weight_range(low, high)?;
        let mut rng = rng_from_seed(seed);
        let pairs = if degree == n - 1 { complete_pairs(n) } else { regular_pairs(n, degree, &mut rng) };
        Ok(Self::weighted(n, pairs, low, high, &mut rng))
    }

    /// Uniformly random graph with exactly `round(d * n(n-1)/2)` edges.
    pub fn gen_density(n: usize, d: f64, low: f64, high: f64, seed: u64) -> Result<Self> {
        if !(d > 0.0 && d <= 1.0) {
            return Err(Error::invalid(format!("density {d} outside (0, 1]")));
        }
        check_weight_range(low, high)?;
        let all = n * n.saturating_sub(1) / 2;
        let e = (d * all as f64).round() as usize;
        if e == 0 {
            return Err(Error::invalid(format!("density {d} on {n} vertices gives no edges")));
        }
        let mut rng = rng_from_seed(seed);
        let mut picked = index::sample(&mut rng, all, e).into_vec();
        picked.sort_unstable();
        let pairs = picked.into_iter().map(|k| pair_from_index(n, k)).collect();
        Ok(Self::weighted(n, pairs, low, high, &mut rng))
    }

    fn weighted<R: Rng + ?Sized>(n: usize, mut pairs: Vec<(usize, usize)>, low: f64, high: f64, rng: &mut R) -> Self {
        pairs.sort_unstable();
        let edges = pairs.into_iter().map(|(u, v)| Edge { u, v, w: T::of(rng.random_range(low..high)) }).collect();
        Self { n, edges }
    }

    pub fn to_rudy(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{} {}", self.n, self.edges.len()).unwrap();
        for e in &self.edges {
            writeln!(s, "{} {} {}", e.u + 1, e.v + 1, e.w).unwrap();
        }
        s
    }

    /// Parses rudy text: header `n m`, then `m` lines `u v w` with 1-indexed vertices.
    pub fn from_rudy(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "empty file"))?;
        let head: Vec<&str> = header.split_whitespace().collect();
        if head.len() != 2 {
            return Err(Error::parse(hline, "header must be `n m`"));
        }
        let n: usize = parse_field(hline, head[0], "vertex count")?;
        let m: usize = parse_field(hline, head[1], "edge count")?;
        if n == 0 {
            return Err(Error::parse(hline, "vertex count must be positive"));
        }

        let mut seen = HashSet::new();
        let mut edges = Vec::with_capacity(m);
        for (line, body) in lines {
            let f: Vec<&str> = body.split_whitespace().collect();
            if f.len() != 3 {
                return Err(Error::parse(line, "edge line must be `u v w`"));
            }
            let a: i64 = parse_field(line, f[0], "vertex")?;
            let b: i64 = parse_field(line, f[1], "vertex")?;
            let w: f64 = parse_field(line, f[2], "weight")?;
            for x in [a, b] {
                if x < 1 || x as usize > n {
                    return Err(Error::VertexOutOfRange { line, vertex: x, n });
                }
            }
            let (a, b) = (a as usize - 1, b as usize - 1);
            if a == b {
                return Err(Error::parse(line, format!("self-loop on vertex {}", a + 1)));
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if !seen.insert((u, v)) {
                return Err(Error::DuplicateEdge { line, u, v });
            }
            if edges.len() == m {
                return Err(Error::parse(line, format!("more than the {m} declared edges")));
            }
            edges.push(Edge { u, v, w: T::of(w) });
        }
        if edges.len() != m {
            return Err(Error::parse(hline, format!("header declares {m} edges, found {}", edges.len())));
        }
        edges.sort_by_key(|e| (e.u, e.v));
        Ok(Self { n, edges })
    }

    pub fn to_json(&self) -> String {
        let g = JsonGraph { n: self.n, edges: self.edges.iter().map(|e| (e.u, e.v, e.w.as_f64())).collect() };
        serde_json::to_string(&g).expect("graph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let g: JsonGraph = serde_json::from_str(text)?;
        Self::new(g.n, g.edges.into_iter().map(|(u, v, w)| (u, v, T::of(w))))
    }

    pub fn read(path: &Path, format: GraphFormat) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        match format {
            GraphFormat::Rudy => Self::from_rudy(&text),
            GraphFormat::Json => Self::from_json(&text),
        }
    }

    pub fn write(&self, path: &Path, format: GraphFormat) -> Result<()> {
        let text = match format {
            GraphFormat::Rudy => self.to_rudy(),
            GraphFormat::Json => self.to_json(),
        };
        fs::write(path, text)?;
        Ok(())
    }
}

fn parse_field<F: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<F> {
    s.parse().map_err(|_| Error::parse(line, format!("bad {what} `{s}`")))
}

fn check_weight_range(low: f64, high: f64) -> Result<()> {
    if low < high && low.is_finite() && high.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("weight range [{low}, {high}) is empty")))
    }
}

fn complete_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect()
}

/// k-th pair in row-major order over the strict upper triangle.
fn pair_from_index(n: usize, mut k: usize) -> (usize, usize) {
    let mut u = 0;
    while k >= n - 1 - u {
        k -= n - 1 - u;
        u += 1;
    }
    (u, u + 1 + k)
}

fn regular_pairs<R: Rng + ?Sized>(n: usize, degree: usize, rng: &mut R) -> Vec<(usize, usize)> {
    const REPAIR_ROUNDS: usize = 1000;
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat_n(v, degree)).collect();
    loop {
        stubs.shuffle(rng);
        let mut pairs: Vec<(usize, usize)> = stubs.chunks_exact(2).map(|c| (c[0].min(c[1]), c[0].max(c[1]))).collect();
        if repair(&mut pairs, rng, REPAIR_ROUNDS) {
            return pairs;
        }
    }
}

/// Removes self-loops and multi-edges by double-edge swaps. Returns false if
/// the budget runs out (caller reshuffles).
fn repair<R: Rng + ?Sized>(pairs: &mut [(usize, usize)], rng: &mut R, rounds: usize) -> bool {
    let m = pairs.len();
    for _ in 0..rounds {
        let bad = bad_pairs(pairs);
        let Some(&i) = bad.first() else {
            return true;
        };
        for _ in 0..m {
            let j = rng.random_range(0..m);
            if j == i {
                continue;
            }
            let (a, b) = pairs[i];
            let (c, d) = pairs[j];
            let (p, q) = if rng.random_bool(0.5) { ((a, c), (b, d)) } else { ((a, d), (b, c)) };
            if p.0 == p.1 || q.0 == q.1 {
                continue;
            }
            let p = (p.0.min(p.1), p.0.max(p.1));
            let q = (q.0.min(q.1), q.0.max(q.1));
            if p == q || pairs.iter().enumerate().any(|(k, &e)| k != i && k != j && (e == p || e == q)) {
                continue;
            }
            pairs[i] = p;
            pairs[j] = q;
            break;
        }
    }
    bad_pairs(pairs).is_empty()
}

fn bad_pairs(pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut seen = HashSet::new();
    pairs.iter().enumerate().filter(|(_, &(u, v))| u == v || !seen.insert((u, v))).map(|(i, _)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    type G = WeightedGraph<f64>;

    #[test]
    fn regular_20_5_has_50_edges() {
        let g = G::gen_regular(20, 5, 0.0, 1.0, 11).unwrap();
        assert_eq!(g.edge_count(), 50);
        assert!(g.degrees().iter().all(|&d| d == 5));
        assert!(g.edges().iter().all(|e| (0.0..1.0).contains(&e.w)));
        assert!((g.density().unwrap() - 100.0 / 380.0).abs() < 1e-15);
    }

    #[test]
    fn regular_small_cases() {
        let g = G::gen_regular(2, 1, 0.0, 1.0, 0).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!((g.edges()[0].u, g.edges()[0].v), (0, 1));

        let g = G::gen_regular(6, 5, 0.0, 1.0, 0).unwrap();
        assert_eq!(g.edge_count(), 15);
        assert_eq!(g.density().unwrap(), 1.0);
    }

    #[test]
    fn regular_rejects_impossible() {
        assert!(G::gen_regular(5, 3, 0.0, 1.0, 0).is_err());
        assert!(G::gen_regular(4, 4, 0.0, 1.0, 0).is_err());
        assert!(G::gen_regular(4, 0, 0.0, 1.0, 0).is_err());
        assert!(G::gen_regular(4, 2, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn regular_is_deterministic() {
        let a = G::gen_regular(30, 4, -1.0, 1.0, 99).unwrap();
        let b = G::gen_regular(30, 4, -1.0, 1.0, 99).unwrap();
        assert_eq!(a, b);
        let c = G::gen_regular(30, 4, -1.0, 1.0, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn regular_degrees_exhaustive() {
        for n in 3..=16 {
            for degree in 1..n {
                if n * degree % 2 == 1 {
                    continue;
                }
                for seed in 0..3 {
                    let g = G::gen_regular(n, degree, 0.0, 1.0, seed).unwrap();
                    assert!(g.degrees().iter().all(|&d| d == degree), "n={n} d={degree}");
                    assert_eq!(g.edge_count(), n * degree / 2);
                }
            }
        }
    }

    #[test]
    fn density_generator_edge_counts() {
        assert_eq!(G::gen_density(20, 1.0, 0.0, 1.0, 1).unwrap().edge_count(), 190);
        assert_eq!(G::gen_density(20, 100.0 / 190.0, 0.0, 1.0, 1).unwrap().edge_count(), 100);
        assert_eq!(G::gen_density(4, 0.5, 0.0, 1.0, 1).unwrap().edge_count(), 3);
        assert!(G::gen_density(4, 0.0, 0.0, 1.0, 1).is_err());
        assert!(G::gen_density(4, 1.5, 0.0, 1.0, 1).is_err());
        assert!(G::gen_density(4, 0.01, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn density_values() {
        let k4 = G::new(4, (0..4).flat_map(|u| (u + 1..4).map(move |v| (u, v, 1.0)))).unwrap();
        assert_eq!(k4.density().unwrap(), 1.0);
        let e = G::new(2, [(0, 1, 1.0)]).unwrap();
        assert_eq!(e.density().unwrap(), 1.0);
    }

    #[test]
    fn pair_index_covers_triangle() {
        let n = 7;
        let pairs: Vec<_> = (0..21).map(|k| pair_from_index(n, k)).collect();
        assert_eq!(pairs, complete_pairs(n));
    }

    #[test]
    fn rudy_parse() {
        let g = G::from_rudy("2 1\n1 2 0.5\n").unwrap();
        assert_eq!(g.n(), 2);
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, w: 0.5 }]);
    }

    #[test]
    fn rudy_errors_carry_line_numbers() {
        match G::from_rudy("2 1\n1 3 0.5\n") {
            Err(Error::VertexOutOfRange { line: 2, vertex: 3, n: 2 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match G::from_rudy("3 2\n1 2 1\n2 1 1\n") {
            Err(Error::DuplicateEdge { line: 3, u: 0, v: 1 }) => {}
            other => panic!("unexpected {other:?}"),
        }
        match G::from_rudy("3 1\n1 2 x\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        assert!(G::from_rudy("3 2\n1 2 1\n").is_err());
        assert!(G::from_rudy("").is_err());
    }

    #[test]
    fn rudy_and_json_round_trip() {
        let g = G::gen_regular(20, 5, 0.0, 1.0, 3).unwrap();
        assert_eq!(G::from_rudy(&g.to_rudy()).unwrap(), g);
        assert_eq!(G::from_json(&g.to_json()).unwrap(), g);
    }

    #[test]
    fn json_schema() {
        let g = G::from_json(r#"{"n": 3, "edges": [[0, 2, 1.5], [1, 0, -2]]}"#).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges()[0], Edge { u: 0, v: 1, w: -2.0 });
        assert!(G::from_json(r#"{"n": 2, "edges": [[0, 2, 1]]}"#).is_err());
    }
}
