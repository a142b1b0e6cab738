//! Mixing matrices. Entry `W[i][j]` is the weight receiver `i` gives to
//! what transmitter `j` broadcasts; storage is per column, i.e. per
//! transmitter.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::{BaseTopology, Digraph};

/// Sparse column-major mixing matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct MixingMatrix {
    n: usize,
    /// Column `j`: `(row, weight)` pairs sorted by row, diagonal included.
    cols: Vec<Vec<(usize, f64)>>,
}

impl MixingMatrix {
    pub fn identity(n: usize) -> Self {
        MixingMatrix {
            n,
            cols: (0..n).map(|j| vec![(j, 1.0)]).collect(),
        }
    }

    /// Builds from `(row, col, value)` triples; zero entries are dropped.
    pub fn from_entries(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut cols = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(Error::NodeOutOfRange { node: i.max(j), n });
            }
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Domain(format!(
                    "entry ({i}, {j}) = {v} is not a non-negative number"
                )));
            }
            if v > 0.0 {
                cols[j].push((i, v));
            }
        }
        for col in &mut cols {
            col.sort_by_key(|&(i, _)| i);
            if col.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Domain("duplicate matrix entry".into()));
            }
        }
        Ok(MixingMatrix { n, cols })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match self.cols[j].binary_search_by_key(&i, |&(r, _)| r) {
            Ok(p) => self.cols[j][p].1,
            Err(_) => 0.0,
        }
    }

    /// All nonzero entries as `(row, col, value)`, column by column.
    pub fn entries(&self) -> Vec<(usize, usize, f64)> {
        self.cols
            .iter()
            .enumerate()
            .flat_map(|(j, col)| col.iter().map(move |&(i, v)| (i, j, v)))
            .collect()
    }

    /// Links `j -> i` for every nonzero off-diagonal `W[i][j]`.
    pub fn support(&self) -> Digraph {
        let mut g = Digraph::new(self.n);
        for (i, j, _) in self.entries() {
            if i != j {
                g.add_link(j, i);
            }
        }
        g
    }

    pub fn column_sums(&self) -> Vec<f64> {
        self.cols
            .iter()
            .map(|c| c.iter().map(|&(_, v)| v).sum())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n];
        for (i, _, v) in self.entries() {
            sums[i] += v;
        }
        sums
    }

    /// Largest `|W[i][j] - W[j][i]|`.
    pub fn asymmetry(&self) -> f64 {
        self.entries()
            .into_iter()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }

    /// `W y` for one scalar per node.
    pub fn apply(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                out[i] += v * y[j];
            }
        }
        out
    }

    /// `W Y` where row `j` of `Y` is node `j`'s vector.
    pub fn mix(&self, y: &[DVector<f64>]) -> Vec<DVector<f64>> {
        let d = y.first().map_or(0, DVector::len);
        let mut out = vec![DVector::zeros(d); self.n];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, v) in col {
                out[i].axpy(v, &y[j], 1.0);
            }
        }
        out
    }

    /// Coordinate text: a line with `n`, then `i j value` per entry.
    pub fn to_coo(&self) -> String {
        let mut s = format!("{}\n", self.n);
        let mut entries = self.entries();
        entries.sort_by_key(|&(i, j, _)| (i, j));
        for (i, j, v) in entries {
            s.push_str(&format!("{i} {j} {v:e}\n"));
        }
        s
    }

    pub fn from_coo(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let parse_err = |line: usize, message: String| Error::Parse {
            line: line + 1,
            message,
        };
        let (l0, header) = lines
            .next()
            .ok_or_else(|| parse_err(0, "missing size header".into()))?;
        let n: usize = header
            .trim()
            .parse()
            .map_err(|e| parse_err(l0, format!("bad size: {e}")))?;
        let mut entries = Vec::new();
        for (ln, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(parse_err(ln, "expected `i j value`".into()));
            }
            let i = parts[0]
                .parse()
                .map_err(|e| parse_err(ln, format!("{e}")))?;
            let j = parts[1]
                .parse()
                .map_err(|e| parse_err(ln, format!("{e}")))?;
            let v = parts[2]
                .parse()
                .map_err(|e| parse_err(ln, format!("{e}")))?;
            entries.push((i, j, v));
        }
        MixingMatrix::from_entries(n, &entries)
    }
}

/// Each transmitter splits its mass equally among itself and its
/// out-neighbors: column `j` holds `d⁺(j) + 1` entries of `1/(d⁺(j) + 1)`.
/// This maximizes the smallest weight over all column-stochastic
/// matrices with the same support.
pub fn uniform_column_stochastic(g_a: &Digraph) -> MixingMatrix {
    let cols = (0..g_a.n())
        .map(|j| {
            let share = 1.0 / (g_a.out_degree(j) as f64 + 1.0);
            let mut col: Vec<(usize, f64)> =
                g_a.out_neighbors(j).iter().map(|&i| (i, share)).collect();
            col.push((j, share));
            col.sort_by_key(|&(i, _)| i);
            col
        })
        .collect();
    MixingMatrix { n: g_a.n(), cols }
}

/// Symmetric, doubly stochastic weights `1/(1 + max(deg i, deg j))` on
/// base edges, remainder on the diagonal.
pub fn metropolis_hastings(base: &BaseTopology) -> MixingMatrix {
    let g = base.graph();
    let cols = (0..g.n())
        .map(|j| {
            let mut col: Vec<(usize, f64)> = g
                .neighbors(j)
                .iter()
                .map(|&i| (i, 1.0 / (1.0 + g.degree(i).max(g.degree(j)) as f64)))
                .collect();
            let off: f64 = col.iter().map(|&(_, v)| v).sum();
            col.push((j, 1.0 - off));
            col.sort_by_key(|&(i, _)| i);
            col
        })
        .collect();
    MixingMatrix { n: g.n(), cols }
}

/// Smallest positive entry, diagonal included.
pub fn min_weight(w: &MixingMatrix) -> Result<f64> {
    w.cols
        .iter()
        .flatten()
        .map(|&(_, v)| v)
        .filter(|&v| v > 0.0)
        .min_by(f64::total_cmp)
        .ok_or(Error::AllZero)
}

const POWER_MAX_ITERS: usize = 10_000;
const POWER_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-12;

/// `max(|λ₂|, |λₙ|)` of a symmetric mixing matrix, by power iteration on
/// `W - 11ᵀ/n`. Two fixed start vectors are used (a scaled alternating
/// one and a ramp) because a symmetric start is orthogonal to the
/// antisymmetric eigenvectors of mirror-symmetric graphs.
pub fn spectral_gap_param(w: &MixingMatrix) -> Result<f64> {
    let asym = w.asymmetry();
    if asym > SYMMETRY_TOL {
        return Err(Error::AsymmetricInput(asym));
    }
    let n = w.n();
    if n < 2 {
        return Ok(0.0);
    }
    let starts = [
        (0..n)
            .map(|k| if k % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + (k + 1) as f64 / (n + 1) as f64))
            .collect::<Vec<f64>>(),
        (0..n).map(|k| k as f64).collect(),
    ];
    Ok(starts
        .into_iter()
        .map(|v| power_iteration(w, v))
        .fold(0.0, f64::max))
}

/// Dominant magnitude of `W - 11ᵀ/n` reachable from `v`.
fn power_iteration(w: &MixingMatrix, mut v: Vec<f64>) -> f64 {
    let n = w.n() as f64;
    let center = |v: &mut Vec<f64>| {
        let mean = v.iter().sum::<f64>() / n;
        v.iter_mut().for_each(|x| *x -= mean);
    };
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    center(&mut v);
    let nv = norm(&v);
    if nv == 0.0 {
        return 0.0;
    }
    v.iter_mut().for_each(|x| *x /= nv);
    let mut rho = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let mut u = w.apply(&v);
        center(&mut u);
        let nu = norm(&u);
        if nu == 0.0 {
            return 0.0;
        }
        let converged = (nu - rho).abs() <= POWER_TOL * nu;
        rho = nu;
        if converged {
            break;
        }
        v = u.into_iter().map(|x| x / nu).collect();
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle3() -> Digraph {
        Digraph::from_links(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    #[test]
    fn uniform_examples() {
        let star = Digraph::from_links(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let w = uniform_column_stochastic(&star);
        assert_eq!(w.column(0), &[(0, 0.25), (1, 0.25), (2, 0.25), (3, 0.25)]);
        assert_eq!(min_weight(&w).unwrap(), 0.25);

        let two = Digraph::from_links(3, &[(0, 1), (0, 2)]).unwrap();
        let w = uniform_column_stochastic(&two);
        assert_eq!(w.column(0).len(), 3);
        assert!(w.column(0).iter().all(|&(_, v)| v == 1.0 / 3.0));

        let w = uniform_column_stochastic(&Digraph::new(3));
        assert_eq!(w, MixingMatrix::identity(3));
        assert_eq!(min_weight(&w).unwrap(), 1.0);

        let w = uniform_column_stochastic(&cycle3());
        assert_eq!(w.column(2), &[(0, 0.5), (2, 0.5)]);
        assert_eq!(min_weight(&w).unwrap(), 0.5);
        assert_eq!(w.support(), cycle3());
    }

    #[test]
    fn metropolis_examples() {
        let k3 = BaseTopology::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let w = metropolis_hastings(&k3);
        for i in 0..3 {
            for j in 0..3 {
                assert!((w.get(i, j) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
        let pair = BaseTopology::from_edges(2, &[(0, 1)]).unwrap();
        let w = metropolis_hastings(&pair);
        assert_eq!(w.get(0, 0), 0.5);
        assert_eq!(w.get(1, 0), 0.5);
        assert_eq!(spectral_gap_param(&w).unwrap(), 0.0);

        let star = BaseTopology::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let w = metropolis_hastings(&star);
        assert_eq!(w.get(0, 1), 0.25);
        assert_eq!(w.get(1, 1), 0.75);
        for s in w.row_sums().into_iter().chain(w.column_sums()) {
            assert!((s - 1.0).abs() < 1e-12);
        }
        assert!(w.asymmetry() < 1e-12);
    }

    #[test]
    fn spectral_examples() {
        assert!((spectral_gap_param(&MixingMatrix::identity(4)).unwrap() - 1.0).abs() < 1e-12);
        let n = 4;
        let entries: Vec<_> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j, 0.25)))
            .collect();
        let avg = MixingMatrix::from_entries(n, &entries).unwrap();
        assert!(spectral_gap_param(&avg).unwrap() < 1e-15);
        assert!(matches!(
            spectral_gap_param(&uniform_column_stochastic(&cycle3())),
            Err(Error::AsymmetricInput(_))
        ));
    }

    #[test]
    fn spectral_matches_dense_eigenvalues() {
        let path = BaseTopology::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let w = metropolis_hastings(&path);
        let dense = nalgebra::DMatrix::from_fn(5, 5, |i, j| w.get(i, j));
        let mut eig: Vec<f64> = dense.symmetric_eigenvalues().iter().copied().collect();
        eig.sort_by(|a, b| b.total_cmp(a));
        let expected = eig[1].abs().max(eig[4].abs());
        assert!((spectral_gap_param(&w).unwrap() - expected).abs() < 1e-6);
    }

    #[test]
    fn all_zero_has_no_min_weight() {
        let w = MixingMatrix::from_entries(2, &[]).unwrap();
        assert!(matches!(min_weight(&w), Err(Error::AllZero)));
    }

    #[test]
    fn coo_round_trip() {
        let w = uniform_column_stochastic(&cycle3());
        let text = w.to_coo();
        assert!(text.starts_with("3\n"));
        assert_eq!(MixingMatrix::from_coo(&text).unwrap(), w);
    }
}
