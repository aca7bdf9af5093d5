//! Instance generators and CSV file plumbing.
//!
//! Every generator is a pure function of its [`GenSpec`]; randomized families
//! draw from a ChaCha8 stream seeded with `spec.seed`.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use num_traits::{ToPrimitive, Zero};
use rand::distr::{Bernoulli, Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::model::{Allocation, Instance};
use crate::num::{binomial, floor_to_usize, format_rational, from_f64, int, serde_rational, Rational};

pub const DEFAULT_TOTAL: u64 = 1000;
pub const DEFAULT_ITEM_BUDGET: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    UniformPartition {
        n: usize,
        m: usize,
        total: u64,
    },
    Bernoulli {
        n: usize,
        m: usize,
        p: f64,
    },
    IntrinsicValue {
        n: usize,
        m: usize,
        alpha_max: f64,
        beta_max: f64,
    },
    ProjectivePlane {
        q: usize,
    },
    EfsDeltaLb {
        n: usize,
        #[serde(with = "serde_rational")]
        delta: Rational,
        item_budget: usize,
    },
    Disjoint {
        n: usize,
    },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::UniformPartition { .. } => "uniform_partition",
            Family::Bernoulli { .. } => "bernoulli",
            Family::IntrinsicValue { .. } => "intrinsic_value",
            Family::ProjectivePlane { .. } => "projective_plane",
            Family::EfsDeltaLb { .. } => "efs_delta_lb",
            Family::Disjoint { .. } => "disjoint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(flatten)]
    pub family: Family,
    pub seed: u64,
}

/// A generated instance and its JSON metadata sidecar.
#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: Instance,
    pub metadata: serde_json::Value,
}

pub fn generate(spec: &GenSpec) -> Result<Generated> {
    let seed = spec.seed;
    let (instance, validation) = match &spec.family {
        Family::UniformPartition { n, m, total } => (gen_uniform_partition(*n, *m, *total, seed)?, json!({})),
        Family::Bernoulli { n, m, p } => (gen_bernoulli(*n, *m, *p, seed)?, json!({})),
        Family::IntrinsicValue { n, m, alpha_max, beta_max } => {
            (gen_intrinsic_with(*n, *m, *alpha_max, *beta_max, seed)?, json!({}))
        }
        Family::ProjectivePlane { q } => {
            let inst = gen_projective_plane(*q)?;
            let check = json!({
                "points_per_line": q + 1,
                "lines_per_point": q + 1,
                "pairwise_intersection": 1,
                "passed": true,
            });
            (inst, check)
        }
        Family::EfsDeltaLb { n, delta, item_budget } => {
            let lb = gen_efs_delta_lb(*n, delta, *item_budget)?;
            let info = json!({
                "z": lb.z,
                "ell": lb.ell,
                "ell_unrounded": lb.ell_unrounded,
                "ell_rounding": "nearest (halves up), clamped to [1, n-1]",
            });
            (lb.instance, info)
        }
        Family::Disjoint { n } => (gen_disjoint(*n)?, json!({})),
    };
    let metadata = json!({
        "spec": spec,
        "n": instance.n(),
        "m": instance.m(),
        "validation": validation,
    });
    Ok(Generated { instance, metadata })
}

fn check_dims(n: usize, m: usize) -> Result<()> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("need n, m >= 1 (got n={n}, m={m})")));
    }
    Ok(())
}

/// Rows are uniform compositions of `total` into `m` nonnegative parts:
/// `m - 1` distinct bar positions among `total + m - 1` slots.
pub fn gen_uniform_partition(n: usize, m: usize, total: u64, seed: u64) -> Result<Instance> {
    check_dims(n, m)?;
    let total = usize::try_from(total).map_err(|_| Error::InvalidArgument("total too large".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let slots = total + m - 1;
    let rows = (0..n)
        .map(|_| {
            let mut bars = rand::seq::index::sample(&mut rng, slots, m - 1).into_vec();
            bars.sort_unstable();
            let mut row = Vec::with_capacity(m);
            let mut prev = 0;
            for b in bars {
                row.push(int((b - prev) as i64));
                prev = b + 1;
            }
            row.push(int((slots - prev) as i64));
            row
        })
        .collect();
    Instance::new(rows)
}

pub fn gen_bernoulli(n: usize, m: usize, p: f64, seed: u64) -> Result<Instance> {
    check_dims(n, m)?;
    let coin = Bernoulli::new(p).map_err(|_| Error::InvalidArgument(format!("p = {p} is not a probability")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| (0..m).map(|_| int(i64::from(coin.sample(&mut rng)))).collect())
        .collect();
    Instance::new(rows)
}

/// `v_ik = α_k + β_ik` with `α_k ~ U(0, 1)` and `β_ik ~ U(0, 0.3)`.
pub fn gen_intrinsic(n: usize, m: usize, seed: u64) -> Result<Instance> {
    gen_intrinsic_with(n, m, 1.0, 0.3, seed)
}

pub fn gen_intrinsic_with(n: usize, m: usize, alpha_max: f64, beta_max: f64, seed: u64) -> Result<Instance> {
    check_dims(n, m)?;
    let range = |hi: f64| {
        Uniform::new(0.0, hi).map_err(|_| Error::InvalidArgument(format!("bad uniform upper end {hi}")))
    };
    let (alpha_dist, beta_dist) = (range(alpha_max)?, range(beta_max)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alpha: Vec<f64> = (0..m).map(|_| alpha_dist.sample(&mut rng)).collect();
    let rows = (0..n)
        .map(|_| {
            alpha
                .iter()
                .map(|a| from_f64(a + beta_dist.sample(&mut rng)).expect("finite"))
                .collect()
        })
        .collect();
    Instance::new(rows)
}

pub fn gen_disjoint(n: usize) -> Result<Instance> {
    check_dims(n, n)?;
    let rows: Vec<Vec<i64>> = (0..n).map(|i| (0..n).map(|k| i64::from(i == k)).collect()).collect();
    Instance::from_integers(&rows)
}

pub fn is_prime(q: usize) -> bool {
    q >= 2 && (2..).take_while(|d| d * d <= q).all(|d| q % d != 0)
}

/// Normalized homogeneous coordinates of PG(2, q): the first nonzero entry
/// is 1. Lexicographic in `(a, b, c)` with the leading one first.
pub fn projective_points(q: usize) -> Vec<[usize; 3]> {
    let mut points = Vec::with_capacity(q * q + q + 1);
    for b in 0..q {
        for c in 0..q {
            points.push([1, b, c]);
        }
    }
    for c in 0..q {
        points.push([0, 1, c]);
    }
    points.push([0, 0, 1]);
    points
}

/// Lines as agents, points as items. Items `0..n` are the plane's points;
/// items `n..m` form the commonly valued block `U` of size `n - q - 1`.
pub fn gen_projective_plane(q: usize) -> Result<Instance> {
    if !is_prime(q) {
        return Err(Error::InvalidArgument(format!("projective plane order {q} must be prime")));
    }
    let points = projective_points(q);
    let n = points.len();
    let m = 2 * n - q - 1;
    let incidence: Vec<Vec<bool>> = points
        .iter()
        .map(|line| {
            points
                .iter()
                .map(|p| (line[0] * p[0] + line[1] * p[1] + line[2] * p[2]) % q == 0)
                .collect()
        })
        .collect();
    validate_plane(&incidence, q)?;
    let rows: Vec<Vec<i64>> = incidence
        .iter()
        .map(|row| {
            let mut r: Vec<i64> = row.iter().map(|&b| i64::from(b)).collect();
            r.resize(m, 1);
            r
        })
        .collect();
    Instance::from_integers(&rows)
}

fn validate_plane(incidence: &[Vec<bool>], q: usize) -> Result<()> {
    let n = incidence.len();
    let fail = |what: String| Err(Error::Validation(format!("projective plane of order {q}: {what}")));
    for (i, row) in incidence.iter().enumerate() {
        let count = row.iter().filter(|&&b| b).count();
        if count != q + 1 {
            return fail(format!("line {i} has {count} points"));
        }
    }
    for k in 0..n {
        let count = incidence.iter().filter(|row| row[k]).count();
        if count != q + 1 {
            return fail(format!("point {k} lies on {count} lines"));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let common = (0..n).filter(|&k| incidence[i][k] && incidence[j][k]).count();
            if common != 1 {
                return fail(format!("lines {i} and {j} meet in {common} points"));
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct EfsDeltaLb {
    pub instance: Instance,
    /// `1 + floor((n-1)/Δ)`
    pub z: usize,
    pub ell: usize,
    pub ell_unrounded: f64,
    /// Item `k` is valued exactly by the agents in `subsets[k]`.
    pub subsets: Vec<Vec<usize>>,
}

/// One binary item per `ℓ`-subset of agents, `ℓ = round(√(nZ)/2)`.
pub fn gen_efs_delta_lb(n: usize, delta: &Rational, item_budget: usize) -> Result<EfsDeltaLb> {
    if n < 2 {
        return Err(Error::InvalidArgument("the EFS-delta lower bound needs n >= 2".into()));
    }
    if delta < &int(1) {
        return Err(Error::InvalidArgument(format!("delta = {} must be >= 1", format_rational(delta))));
    }
    let hidden = floor_to_usize(&(int((n - 1) as i64) / delta)).expect("nonnegative");
    let z = hidden + 1;
    let ell_unrounded = ((n * z) as f64).sqrt() / 2.0;
    let ell = (ell_unrounded.round() as usize).clamp(1, n - 1);
    let count = binomial(n, ell);
    if count.to_usize().is_none_or(|c| c > item_budget) {
        return Err(Error::InvalidArgument(format!(
            "C({n}, {ell}) = {count} items exceeds the budget of {item_budget}"
        )));
    }
    let subsets = combinations(n, ell);
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| subsets.iter().map(|s| i64::from(s.contains(&i))).collect())
        .collect();
    Ok(EfsDeltaLb {
        instance: Instance::from_integers(&rows)?,
        z,
        ell,
        ell_unrounded,
        subsets,
    })
}

impl EfsDeltaLb {
    /// The construction's allocation for `agent` hiding `hidden`: items
    /// valued by `agent` are split `1/Z` among `agent` and the hidden agents;
    /// every other item is split `1/ℓ` among the agents valuing it.
    pub fn witness(&self, agent: usize, hidden: &[usize]) -> Allocation {
        let n = self.instance.n();
        let mut rows = vec![vec![Rational::zero(); self.subsets.len()]; n];
        let share_z = Rational::new(1.into(), (hidden.len() + 1).into());
        let share_l = Rational::new(1.into(), self.ell.into());
        for (k, s) in self.subsets.iter().enumerate() {
            if s.contains(&agent) {
                for &j in hidden.iter().chain(std::iter::once(&agent)) {
                    rows[j][k] = share_z.clone();
                }
            } else {
                for &j in s {
                    rows[j][k] = share_l.clone();
                }
            }
        }
        Allocation::new(rows).expect("rectangular")
    }

    /// `C(n-1, ℓ-1) / Z`, the value the witness gives its agent.
    pub fn witness_value(&self) -> Rational {
        let per_agent = binomial(self.instance.n() - 1, self.ell - 1);
        Rational::new(per_agent.into(), self.z.into())
    }
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut current: Vec<usize> = (0..k).collect();
    loop {
        out.push(current.clone());
        let Some(pos) = (0..k).rev().find(|&p| current[p] < n - k + p) else {
            return out;
        };
        current[pos] += 1;
        for p in pos + 1..k {
            current[p] = current[p - 1] + 1;
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<Instance> {
    Instance::read_csv(BufReader::new(File::open(path)?))
}

pub fn save_csv(inst: &Instance, path: impl AsRef<Path>) -> Result<()> {
    inst.write_csv(BufWriter::new(File::create(path)?))
}
