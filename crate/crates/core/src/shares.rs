//! PROP, CCS, EF, EFS and EFS^Δ shares.
//!
//! Every share except PROP is the optimum of an LP over (part of) an
//! allocation. Variables `x_jk` whose owner has `v_jk = 0` are left out of the
//! EF and EFS programs: such an entry only uses supply and can only raise
//! envy, so some optimum sets it to zero anyway.

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{optimal_value, solve, LinearProgram, Mode};
use crate::model::{Allocation, Bundle, Instance, ShareKind, ShareVector};
use crate::num::{binomial, floor_to_usize, format_rational, serde_rational, to_f64, Rational};

/// Largest number of hidden sets that exhaustive EFS^Δ evaluation will visit.
pub const MAX_ENUMERATION: u64 = 10_000;

fn frac(n: usize) -> Rational {
    Rational::new(BigInt::one(), BigInt::from(n))
}

pub fn prop_share(inst: &Instance, agent: usize) -> Result<Rational> {
    inst.check_agent(agent)?;
    Ok(inst.total_value(agent) * frac(inst.n()))
}

/// The compact CCS program over agent `agent`'s bundle `x`: every other agent
/// `j` must value `x` at most `u_j([m]) / n`.
pub fn ccs_lp(inst: &Instance, agent: usize) -> Result<LinearProgram> {
    inst.check_agent(agent)?;
    let (n, m) = (inst.n(), inst.m());
    let mut lp = LinearProgram::new(m);
    for k in 0..m {
        if inst.value(agent, k).is_zero() {
            lp.set_bounds(k, Some(Rational::zero()), Some(Rational::zero()));
        } else {
            lp.set_objective(k, inst.value(agent, k).clone());
            lp.set_bounds(k, Some(Rational::zero()), Some(Rational::one()));
        }
    }
    for j in (0..n).filter(|&j| j != agent) {
        let terms: Vec<_> = (0..m)
            .filter(|&k| !inst.value(j, k).is_zero() && !inst.value(agent, k).is_zero())
            .map(|k| (k, inst.value(j, k).clone()))
            .collect();
        if !terms.is_empty() {
            lp.add_constraint(terms, inst.total_value(j) * frac(n));
        }
    }
    Ok(lp)
}

pub fn ccs_share(inst: &Instance, agent: usize, mode: Mode) -> Result<(Rational, Bundle)> {
    inst.check_agent(agent)?;
    if inst.n() == 1 {
        return Ok((inst.total_value(agent), Bundle::full(inst.m())));
    }
    let lp = ccs_lp(inst, agent)?;
    let (value, point) = solve(&lp, mode)?.into_optimal("CCS")?;
    Ok((value, Bundle::new(point)?))
}

/// Gives `agent` the bundle and splits what is left of every item equally
/// among the other agents.
pub fn ccs_complete_allocation(inst: &Instance, agent: usize, bundle: &Bundle) -> Result<Allocation> {
    inst.check_agent(agent)?;
    let (n, m) = (inst.n(), inst.m());
    if bundle.len() != m {
        return Err(Error::DimensionMismatch(format!("bundle has {} items, instance has {m}", bundle.len())));
    }
    if n == 1 {
        return Allocation::new(vec![bundle.quantities().to_vec()]);
    }
    for j in (0..n).filter(|&j| j != agent) {
        if inst.utility(j, bundle)? > inst.total_value(j) * frac(n) {
            return Err(Error::InvalidArgument(format!(
                "bundle violates the CCS constraint of agent {j}"
            )));
        }
    }
    let rest: Vec<Rational> = bundle
        .quantities()
        .iter()
        .map(|x| (Rational::one() - x) * frac(n - 1))
        .collect();
    let rows = (0..n)
        .map(|j| if j == agent { bundle.quantities().to_vec() } else { rest.clone() })
        .collect();
    Allocation::new(rows)
}

fn check_shape(inst: &Instance, agent: usize, alloc: &Allocation) -> Result<()> {
    inst.check_agent(agent)?;
    if alloc.n() != inst.n() || alloc.m() != inst.m() {
        return Err(Error::DimensionMismatch(format!(
            "allocation is {}x{}, instance is {}x{}",
            alloc.n(),
            alloc.m(),
            inst.n(),
            inst.m()
        )));
    }
    Ok(())
}

/// `u_j(A_i) <= u_j(A_j')` for all `j, j' != i` (supply not checked).
pub fn satisfies_ccs_envy(inst: &Instance, agent: usize, alloc: &Allocation) -> Result<bool> {
    check_shape(inst, agent, alloc)?;
    let others: Vec<usize> = (0..inst.n()).filter(|&j| j != agent).collect();
    Ok(others.iter().all(|&j| {
        let own = alloc.utility(inst, j, agent);
        others.iter().all(|&jp| own <= alloc.utility(inst, j, jp))
    }))
}

/// `u_j(A_j') <= u_j(A_j)` for all `j != i` and all `j'` (supply not checked).
pub fn satisfies_ef_envy(inst: &Instance, agent: usize, alloc: &Allocation) -> Result<bool> {
    check_shape(inst, agent, alloc)?;
    Ok((0..inst.n()).filter(|&j| j != agent).all(|j| {
        let own = alloc.utility(inst, j, j);
        (0..inst.n()).all(|jp| alloc.utility(inst, j, jp) <= own)
    }))
}

/// `u_j(A_i) <= u_j(A_j)` for all `j != i` (supply not checked).
pub fn satisfies_efs_envy(inst: &Instance, agent: usize, alloc: &Allocation) -> Result<bool> {
    check_shape(inst, agent, alloc)?;
    Ok((0..inst.n())
        .filter(|&j| j != agent)
        .all(|j| alloc.utility(inst, j, agent) <= alloc.utility(inst, j, j)))
}

/// An LP whose variables are entries `x_jk` of an allocation.
#[derive(Debug, Clone)]
pub struct AllocationLp {
    pub lp: LinearProgram,
    /// `(agent, item)` of each variable.
    pub entries: Vec<(usize, usize)>,
    /// Agents whose bundle is forced equal to the focal agent's.
    pub copies: Vec<usize>,
    pub agent: usize,
    n: usize,
    m: usize,
}

impl AllocationLp {
    fn new(n: usize, m: usize, agent: usize, entries: Vec<(usize, usize)>, copies: Vec<usize>) -> Self {
        let mut lp = LinearProgram::new(entries.len());
        for v in 0..entries.len() {
            lp.set_bounds(v, Some(Rational::zero()), None);
        }
        AllocationLp { lp, entries, copies, agent, n, m }
    }

    fn index(&self) -> Vec<Vec<Option<usize>>> {
        let mut idx = vec![vec![None; self.m]; self.n];
        for (v, &(j, k)) in self.entries.iter().enumerate() {
            idx[j][k] = Some(v);
        }
        idx
    }

    pub fn allocation(&self, point: &[Rational]) -> Result<Allocation> {
        let mut alloc = Allocation::zeros(self.n, self.m);
        for (&(j, k), x) in self.entries.iter().zip(point) {
            alloc.rows_mut()[j][k] = x.clone();
        }
        let own = alloc.bundle(self.agent).to_vec();
        for &w in &self.copies {
            alloc.rows_mut()[w] = own.clone();
        }
        Ok(alloc)
    }
}

fn valued_entries(inst: &Instance, agents: impl Iterator<Item = usize> + Clone) -> Vec<(usize, usize)> {
    agents
        .flat_map(|j| (0..inst.m()).filter(move |&k| !inst.value(j, k).is_zero()).map(move |k| (j, k)))
        .collect()
}

/// `u_j(A_a) - u_j(A_b) <= 0` over whichever entries exist.
fn envy_row(inst: &Instance, idx: &[Vec<Option<usize>>], j: usize, a: usize, b: usize) -> Vec<(usize, Rational)> {
    let mut terms = Vec::new();
    for k in 0..inst.m() {
        let v = inst.value(j, k);
        if v.is_zero() {
            continue;
        }
        if let Some(x) = idx[a][k] {
            terms.push((x, v.clone()));
        }
        if let Some(x) = idx[b][k] {
            terms.push((x, -v.clone()));
        }
    }
    terms
}

fn set_objective(alloc_lp: &mut AllocationLp, inst: &Instance) {
    for v in 0..alloc_lp.entries.len() {
        let (j, k) = alloc_lp.entries[v];
        if j == alloc_lp.agent {
            alloc_lp.lp.set_objective(v, inst.value(j, k).clone());
        }
    }
}

/// The EFS^Δ program for a fixed hidden set `hidden`: agents in `hidden`
/// hold copies of the focal bundle, so only the remaining agents carry
/// variables and only agents outside `hidden ∪ {agent}` have envy rows. With
/// an empty hidden set this is the EFS program.
pub fn efs_delta_lp(inst: &Instance, agent: usize, hidden: &[usize]) -> Result<AllocationLp> {
    inst.check_agent(agent)?;
    let n = inst.n();
    let mut is_hidden = vec![false; n];
    for &w in hidden {
        if w >= n {
            return Err(Error::AgentOutOfRange { index: w, n });
        }
        if w == agent {
            return Err(Error::InvalidArgument("the hidden set contains the agent itself".into()));
        }
        if is_hidden[w] {
            return Err(Error::InvalidArgument(format!("agent {w} appears twice in the hidden set")));
        }
        is_hidden[w] = true;
    }
    let z = hidden.len() + 1;
    let visible = (0..n).filter(|&j| !is_hidden[j]);
    let mut alp = AllocationLp::new(n, inst.m(), agent, valued_entries(inst, visible.clone()), hidden.to_vec());
    set_objective(&mut alp, inst);
    let idx = alp.index();
    for j in visible.filter(|&j| j != agent) {
        let terms = envy_row(inst, &idx, j, agent, j);
        if !terms.is_empty() {
            alp.lp.add_constraint(terms, Rational::zero());
        }
    }
    let weight = Rational::from_integer(BigInt::from(z));
    for k in 0..inst.m() {
        let terms: Vec<_> = (0..n)
            .filter_map(|j| idx[j][k].map(|x| (x, if j == agent { weight.clone() } else { Rational::one() })))
            .collect();
        if !terms.is_empty() {
            alp.lp.add_constraint(terms, Rational::one());
        }
    }
    Ok(alp)
}

pub fn efs_lp(inst: &Instance, agent: usize) -> Result<AllocationLp> {
    efs_delta_lp(inst, agent, &[])
}

/// EF program: every agent other than `agent` must envy nobody.
pub fn ef_lp(inst: &Instance, agent: usize) -> Result<AllocationLp> {
    inst.check_agent(agent)?;
    let n = inst.n();
    let mut alp = AllocationLp::new(n, inst.m(), agent, valued_entries(inst, 0..n), Vec::new());
    set_objective(&mut alp, inst);
    let idx = alp.index();
    for j in (0..n).filter(|&j| j != agent) {
        for jp in (0..n).filter(|&jp| jp != j) {
            let terms = envy_row(inst, &idx, j, jp, j);
            if !terms.is_empty() {
                alp.lp.add_constraint(terms, Rational::zero());
            }
        }
    }
    add_supply(&mut alp, inst, &idx);
    Ok(alp)
}

/// Full-allocation CCS program over fCCS: `u_j(A_i) <= u_j(A_j')` for all
/// `j, j' != i`. Every entry is a variable since others' bundles appear on
/// the right-hand side.
pub fn ccs_full_lp(inst: &Instance, agent: usize) -> Result<AllocationLp> {
    inst.check_agent(agent)?;
    let (n, m) = (inst.n(), inst.m());
    let entries = (0..n).flat_map(|j| (0..m).map(move |k| (j, k))).collect();
    let mut alp = AllocationLp::new(n, m, agent, entries, Vec::new());
    set_objective(&mut alp, inst);
    let idx = alp.index();
    for j in (0..n).filter(|&j| j != agent) {
        for jp in (0..n).filter(|&jp| jp != agent) {
            let terms = envy_row(inst, &idx, j, agent, jp);
            if !terms.is_empty() {
                alp.lp.add_constraint(terms, Rational::zero());
            }
        }
    }
    add_supply(&mut alp, inst, &idx);
    Ok(alp)
}

fn add_supply(alp: &mut AllocationLp, inst: &Instance, idx: &[Vec<Option<usize>>]) {
    for k in 0..inst.m() {
        let terms: Vec<_> = (0..inst.n()).filter_map(|j| idx[j][k].map(|x| (x, Rational::one()))).collect();
        if !terms.is_empty() {
            alp.lp.add_constraint(terms, Rational::one());
        }
    }
}

fn solve_allocation(alp: &AllocationLp, mode: Mode, context: &str) -> Result<(Rational, Allocation)> {
    let (value, point) = solve(&alp.lp, mode)?.into_optimal(context)?;
    Ok((value, alp.allocation(&point)?))
}

fn single_agent(inst: &Instance) -> (Rational, Allocation) {
    let alloc = Allocation::new(vec![vec![Rational::one(); inst.m()]]).expect("one row");
    (inst.total_value(0), alloc)
}

/// CCS through the full-allocation program; equal to [`ccs_share`].
pub fn ccs_full_share(inst: &Instance, agent: usize, mode: Mode) -> Result<Rational> {
    inst.check_agent(agent)?;
    if inst.n() == 1 {
        return Ok(inst.total_value(agent));
    }
    optimal_value(&ccs_full_lp(inst, agent)?.lp, mode, "full CCS")
}

pub fn ef_share(inst: &Instance, agent: usize, mode: Mode) -> Result<Rational> {
    inst.check_agent(agent)?;
    if inst.n() == 1 {
        return Ok(inst.total_value(agent));
    }
    optimal_value(&ef_lp(inst, agent)?.lp, mode, "EF")
}

pub fn efs_share(inst: &Instance, agent: usize, mode: Mode) -> Result<(Rational, Allocation)> {
    inst.check_agent(agent)?;
    if inst.n() == 1 {
        return Ok(single_agent(inst));
    }
    solve_allocation(&efs_lp(inst, agent)?, mode, "EFS")
}

pub fn efs_delta_fixed(inst: &Instance, agent: usize, hidden: &[usize], mode: Mode) -> Result<Rational> {
    let alp = efs_delta_lp(inst, agent, hidden)?;
    if inst.n() == 1 {
        return Ok(inst.total_value(agent));
    }
    optimal_value(&alp.lp, mode, "EFS-delta")
}

pub fn efs_delta_fixed_allocation(
    inst: &Instance,
    agent: usize,
    hidden: &[usize],
    mode: Mode,
) -> Result<(Rational, Allocation)> {
    let alp = efs_delta_lp(inst, agent, hidden)?;
    if inst.n() == 1 {
        return Ok(single_agent(inst));
    }
    solve_allocation(&alp, mode, "EFS-delta")
}

/// Parameters of the sampled EFS^Δ estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSpec {
    #[serde(with = "serde_rational")]
    pub delta: Rational,
    pub samples: usize,
    pub seed: u64,
    /// Average over every hidden set instead of sampling when there are at
    /// most [`MAX_ENUMERATION`] of them.
    #[serde(default)]
    pub exhaustive: bool,
}

impl DeltaSpec {
    pub fn new(delta: Rational, samples: usize, seed: u64) -> Result<Self> {
        let spec = DeltaSpec { delta, samples, seed, exhaustive: false };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.delta < Rational::one() {
            return Err(Error::InvalidArgument(format!(
                "delta must be at least 1, got {}",
                format_rational(&self.delta)
            )));
        }
        if self.samples == 0 {
            return Err(Error::InvalidArgument("at least one sample is required".into()));
        }
        Ok(())
    }

    /// `floor((n - 1) / delta)`
    pub fn hidden_set_size(&self, n: usize) -> usize {
        floor_to_usize(&(Rational::from_integer(BigInt::from(n - 1)) / &self.delta)).unwrap_or(0).min(n - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    #[serde(with = "serde_rational")]
    pub mean: Rational,
    pub standard_error: f64,
    /// Number of LP values averaged.
    pub evaluations: usize,
    /// True when the mean is the exact expectation.
    pub exact: bool,
}

impl DeltaEstimate {
    fn constant(value: Rational) -> Self {
        DeltaEstimate { mean: value, standard_error: 0.0, evaluations: 1, exact: true }
    }
}

/// Uniform size-`size` subset of the agents other than `agent`; the stream
/// depends only on `(seed, agent, sample)`.
pub fn sample_hidden_set(n: usize, agent: usize, size: usize, seed: u64, sample: usize) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((agent as u64) << 32) | sample as u64);
    let mut set: Vec<usize> = rand::seq::index::sample(&mut rng, n - 1, size)
        .into_iter()
        .map(|j| if j >= agent { j + 1 } else { j })
        .collect();
    set.sort_unstable();
    set
}

/// All size-`size` subsets of `[n] \ {agent}` in lexicographic order.
pub fn hidden_sets(n: usize, agent: usize, size: usize) -> Vec<Vec<usize>> {
    let others: Vec<usize> = (0..n).filter(|&j| j != agent).collect();
    let mut out = Vec::new();
    let mut pick: Vec<usize> = (0..size).collect();
    if size > others.len() {
        return out;
    }
    loop {
        out.push(pick.iter().map(|&p| others[p]).collect());
        let Some(pos) = (0..size).rev().find(|&p| pick[p] < others.len() - size + p) else {
            break;
        };
        pick[pos] += 1;
        for p in pos + 1..size {
            pick[p] = pick[p - 1] + 1;
        }
    }
    out
}

fn summarize(values: Vec<Rational>, exact: bool) -> DeltaEstimate {
    let count = values.len();
    let mean = values.iter().fold(Rational::zero(), |a, v| a + v) / Rational::from_integer(BigInt::from(count));
    let standard_error = if exact || count < 2 {
        0.0
    } else {
        let mu = to_f64(&mean);
        let var = values.iter().map(|v| (to_f64(v) - mu).powi(2)).sum::<f64>() / (count - 1) as f64;
        (var / count as f64).sqrt()
    };
    DeltaEstimate { mean, standard_error, evaluations: count, exact }
}

pub fn efs_delta_share(inst: &Instance, agent: usize, spec: &DeltaSpec, mode: Mode) -> Result<DeltaEstimate> {
    inst.check_agent(agent)?;
    spec.validate()?;
    let n = inst.n();
    let size = spec.hidden_set_size(n);
    if size == 0 {
        return Ok(DeltaEstimate::constant(efs_delta_fixed(inst, agent, &[], mode)?));
    }
    if size == n - 1 {
        return Ok(DeltaEstimate::constant(prop_share(inst, agent)?));
    }
    let count = binomial(n - 1, size);
    if spec.exhaustive && count <= BigUint::from(MAX_ENUMERATION) {
        let values = hidden_sets(n, agent, size)
            .par_iter()
            .map(|w| efs_delta_fixed(inst, agent, w, mode))
            .collect::<Result<Vec<_>>>()?;
        return Ok(summarize(values, true));
    }
    debug_assert!(count.to_u64().is_none_or(|c| c > 1));
    let values = (0..spec.samples)
        .into_par_iter()
        .map(|s| efs_delta_fixed(inst, agent, &sample_hidden_set(n, agent, size, spec.seed, s), mode))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(values, false))
}

/// Shares of every agent. `spec` is required for EFS^Δ.
pub fn all_shares(inst: &Instance, kind: ShareKind, spec: Option<&DeltaSpec>, mode: Mode) -> Result<ShareVector> {
    let agents = 0..inst.n();
    let values = match kind {
        ShareKind::Prop => agents.map(|i| prop_share(inst, i)).collect::<Result<Vec<_>>>()?,
        ShareKind::Ccs => agents.into_par_iter().map(|i| Ok(ccs_share(inst, i, mode)?.0)).collect::<Result<_>>()?,
        ShareKind::Ef => agents.into_par_iter().map(|i| ef_share(inst, i, mode)).collect::<Result<_>>()?,
        ShareKind::Efs => agents.into_par_iter().map(|i| efs_delta_fixed(inst, i, &[], mode)).collect::<Result<_>>()?,
        ShareKind::EfsDelta => {
            let spec = spec.ok_or_else(|| Error::InvalidArgument("EFS_DELTA needs a delta specification".into()))?;
            agents
                .into_par_iter()
                .map(|i| Ok(efs_delta_share(inst, i, spec, mode)?.mean))
                .collect::<Result<_>>()?
        }
    };
    let mut sv = ShareVector::new(kind, values);
    if kind == ShareKind::EfsDelta {
        sv.delta = spec.map(|s| s.delta.clone());
    }
    Ok(sv)
}
