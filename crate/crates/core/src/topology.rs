//! Base topology generators.

use std::path::PathBuf;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{BaseTopology, UndirectedGraph};

/// `m` cliques of `k` nodes that share node 0.
pub fn windmill(m: usize, k: usize) -> Result<BaseTopology> {
    if m < 1 || k < 2 {
        return Err(Error::Domain(format!(
            "windmill needs m >= 1 and k >= 2, got ({m}, {k})"
        )));
    }
    let n = m * (k - 1) + 1;
    let mut g = UndirectedGraph::new(n);
    for c in 0..m {
        let members: Vec<usize> = std::iter::once(0)
            .chain((0..k - 1).map(|p| 1 + c * (k - 1) + p))
            .collect();
        for (a, &u) in members.iter().enumerate() {
            for &v in &members[a + 1..] {
                g.add_edge(u, v);
            }
        }
    }
    BaseTopology::from_graph(g)
}

/// Connection attempts before [`random_geometric`] gives up.
pub const MAX_RETRIES: usize = 1000;

/// `n` points uniform in the unit square, linked when within `radius`.
/// Redraws until the graph is connected.
pub fn random_geometric(n: usize, radius: f64, seed: u64) -> Result<BaseTopology> {
    if n == 0 || !(radius > 0.0) {
        return Err(Error::Domain(
            "random geometric graph needs n > 0 and radius > 0".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_RETRIES {
        let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
        let mut g = UndirectedGraph::new(n);
        for u in 0..n {
            for v in u + 1..n {
                let (dx, dy) = (pts[u].0 - pts[v].0, pts[u].1 - pts[v].1);
                if dx * dx + dy * dy <= radius * radius {
                    g.add_edge(u, v);
                }
            }
        }
        if g.is_connected() {
            return BaseTopology::from_graph(g);
        }
    }
    Err(Error::RetriesExhausted(MAX_RETRIES))
}

/// Connected graph with each extra edge kept with probability `p`: a
/// random spanning tree first, then independent coin flips for the
/// remaining pairs.
pub fn random_connected<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<BaseTopology> {
    if n == 0 || !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(
            "random graph needs n > 0 and p in [0, 1]".into(),
        ));
    }
    let mut g = UndirectedGraph::new(n);
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    for i in 1..n {
        let parent = order[rng.random_range(0..i)];
        g.add_edge(order[i], parent);
    }
    for u in 0..n {
        for v in u + 1..n {
            if !g.has_edge(u, v) && rng.random_bool(p) {
                g.add_edge(u, v);
            }
        }
    }
    BaseTopology::from_graph(g)
}

/// Source of a base topology, parsed from forms such as `windmill:3,21`,
/// `rg:33,0.5,7` or `file:path/to/edges.txt`.
#[derive(Clone, Debug, PartialEq)]
pub enum GeneratorSpec {
    Windmill { m: usize, k: usize },
    RandomGeometric { n: usize, radius: f64, seed: u64 },
    EdgeList(PathBuf),
}

impl GeneratorSpec {
    pub fn build(&self) -> Result<BaseTopology> {
        match self {
            GeneratorSpec::Windmill { m, k } => windmill(*m, *k),
            GeneratorSpec::RandomGeometric { n, radius, seed } => {
                random_geometric(*n, *radius, *seed)
            }
            GeneratorSpec::EdgeList(path) => {
                BaseTopology::parse_edge_list(&std::fs::read_to_string(path)?)
            }
        }
    }
}

impl FromStr for GeneratorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Config(format!("generator `{s}`: {msg}"));
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| bad("expected `kind:args`"))?;
        let fields: Vec<&str> = args.split(',').map(str::trim).collect();
        let num = |i: usize| -> Result<&str> {
            fields
                .get(i)
                .copied()
                .ok_or_else(|| bad("missing argument"))
        };
        match kind.trim() {
            "windmill" => {
                if fields.len() != 2 {
                    return Err(bad("windmill takes m,k"));
                }
                Ok(GeneratorSpec::Windmill {
                    m: num(0)?.parse().map_err(|_| bad("m must be an integer"))?,
                    k: num(1)?.parse().map_err(|_| bad("k must be an integer"))?,
                })
            }
            "rg" | "random_geometric" => {
                if fields.len() != 3 {
                    return Err(bad("random geometric takes n,radius,seed"));
                }
                Ok(GeneratorSpec::RandomGeometric {
                    n: num(0)?.parse().map_err(|_| bad("n must be an integer"))?,
                    radius: num(1)?
                        .parse()
                        .map_err(|_| bad("radius must be a number"))?,
                    seed: num(2)?
                        .parse()
                        .map_err(|_| bad("seed must be an integer"))?,
                })
            }
            "file" | "edge_list" => Ok(GeneratorSpec::EdgeList(PathBuf::from(args))),
            other => Err(bad(&format!("unknown kind `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn windmill_sizes() {
        let w = windmill(3, 21).unwrap();
        assert_eq!(w.n(), 61);
        assert_eq!(w.graph().edge_count(), 3 * 21 * 20 / 2);
        let w = windmill(2, 6).unwrap();
        assert_eq!(w.n(), 11);
        assert_eq!(w.graph().edge_count(), 30);
        assert_eq!(w.graph().degree(0), 10);
        assert!(windmill(0, 3).is_err());
        assert!(windmill(2, 1).is_err());
    }

    #[test]
    fn random_geometric_is_connected_and_seeded() {
        let a = random_geometric(33, 0.5, 7).unwrap();
        let b = random_geometric(33, 0.5, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.graph().is_connected());
        assert!(matches!(
            random_geometric(30, 0.01, 1),
            Err(Error::RetriesExhausted(_))
        ));
    }

    #[test]
    fn random_connected_density() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_connected(20, 0.0, &mut rng).unwrap();
        assert_eq!(g.graph().edge_count(), 19);
        let g = random_connected(10, 1.0, &mut rng).unwrap();
        assert_eq!(g.graph().edge_count(), 45);
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "windmill:3,21".parse::<GeneratorSpec>().unwrap(),
            GeneratorSpec::Windmill { m: 3, k: 21 }
        );
        assert_eq!(
            "rg:33,0.5,7".parse::<GeneratorSpec>().unwrap(),
            GeneratorSpec::RandomGeometric {
                n: 33,
                radius: 0.5,
                seed: 7
            }
        );
        assert_eq!(
            "file:a/b.txt".parse::<GeneratorSpec>().unwrap(),
            GeneratorSpec::EdgeList("a/b.txt".into())
        );
        assert!("windmill:3".parse::<GeneratorSpec>().is_err());
        assert!("torus:4".parse::<GeneratorSpec>().is_err());
        assert!("windmill".parse::<GeneratorSpec>().is_err());
    }
}
