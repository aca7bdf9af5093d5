//! Optimal simultaneous approximation of a share vector.
//!
//! `optimal_theta` solves
//!
//! ```text
//! max θ  s.t.  Σ_k v_ik x_ik >= θ · share_i   (share_i > 0)
//!              Σ_i x_ik <= 1,  x >= 0
//! ```
//!
//! and returns the witnessing allocation. In float mode the rounded witness
//! is repaired onto the supply polytope and θ is re-derived from it exactly,
//! so the reported θ always matches the reported allocation.

use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::{solve, LinearProgram, Mode};
use crate::model::{Allocation, Instance, ShareKind, ShareVector};
use crate::num::{format_rational, parse_rational, to_f64, Rational};
use crate::shares::all_shares;

/// A nonnegative rational or `+inf`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extended {
    Finite(Rational),
    Infinite,
}

impl Extended {
    pub fn finite(&self) -> Option<&Rational> {
        match self {
            Extended::Finite(r) => Some(r),
            Extended::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Extended::Finite(r) => to_f64(r),
            Extended::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Extended {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Extended::Finite(r) => f.write_str(&format_rational(r)),
            Extended::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Extended {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Extended {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        if text == "inf" {
            return Ok(Extended::Infinite);
        }
        parse_rational(&text)
            .map(Extended::Finite)
            .ok_or_else(|| serde::de::Error::custom(format!("bad ratio {text:?}")))
    }
}

/// θ, or the marker for an all-zero share vector where every θ is feasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Theta {
    Value(Rational),
    Unconstrained,
}

impl Theta {
    pub fn value(&self) -> Option<&Rational> {
        match self {
            Theta::Value(r) => Some(r),
            Theta::Unconstrained => None,
        }
    }
}

impl fmt::Display for Theta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Theta::Value(r) => f.write_str(&format_rational(r)),
            Theta::Unconstrained => f.write_str("unconstrained"),
        }
    }
}

impl Serialize for Theta {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Theta {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        if text == "unconstrained" {
            return Ok(Theta::Unconstrained);
        }
        parse_rational(&text)
            .map(Theta::Value)
            .ok_or_else(|| serde::de::Error::custom(format!("bad theta {text:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxResult {
    pub theta: Theta,
    pub allocation: Allocation,
    pub shares: ShareVector,
    pub per_agent_ratio: Vec<Extended>,
}

impl ApproxResult {
    /// `u_i(A_i) >= θ · share_i` for every agent, exactly.
    pub fn witness_holds(&self, inst: &Instance) -> bool {
        let Some(theta) = self.theta.value() else {
            return true;
        };
        (0..inst.n()).all(|i| {
            let got = inst.utility_of(i, &self.allocation.rows()[i]);
            got >= theta * &self.shares.values[i]
        })
    }
}

pub fn welfare(inst: &Instance) -> Rational {
    (0..inst.m()).fold(Rational::zero(), |acc, k| {
        let best = (0..inst.n()).map(|i| inst.value(i, k)).max().cloned().unwrap_or_default();
        acc + best
    })
}

/// `C(I)/SW(I)` with `C` the sum of `kind` shares.
pub fn share_welfare_ratio(inst: &Instance, kind: ShareKind, mode: Mode) -> Result<Rational> {
    if !matches!(kind, ShareKind::Ccs | ShareKind::Efs) {
        return Err(Error::InvalidArgument(format!("welfare ratio is defined for CCS and EFS, not {kind}")));
    }
    let sw = welfare(inst);
    if sw.is_zero() {
        return Err(Error::InvalidArgument("social welfare is zero".into()));
    }
    Ok(all_shares(inst, kind, None, mode)?.total() / sw)
}

pub fn optimal_theta(inst: &Instance, shares: &ShareVector, mode: Mode) -> Result<ApproxResult> {
    let (n, m) = (inst.n(), inst.m());
    if shares.values.len() != n {
        return Err(Error::DimensionMismatch(format!("{} shares for {n} agents", shares.values.len())));
    }
    if let Some(i) = shares.values.iter().position(|s| s < &Rational::zero()) {
        return Err(Error::InvalidArgument(format!("share of agent {i} is negative")));
    }
    let constrained: Vec<usize> = (0..n).filter(|&i| !shares.values[i].is_zero()).collect();
    if constrained.is_empty() {
        return Ok(ApproxResult {
            theta: Theta::Unconstrained,
            allocation: Allocation::zeros(n, m),
            shares: shares.clone(),
            per_agent_ratio: vec![Extended::Infinite; n],
        });
    }

    // Only positive-value entries can help; variable 0 is θ.
    let mut entries = Vec::new();
    for i in 0..n {
        for k in 0..m {
            if !inst.value(i, k).is_zero() {
                entries.push((i, k));
            }
        }
    }
    let mut lp = LinearProgram::new(entries.len() + 1);
    lp.set_objective(0, Rational::one());
    let mut by_agent = vec![Vec::new(); n];
    let mut by_item = vec![Vec::new(); m];
    for (e, &(i, k)) in entries.iter().enumerate() {
        by_agent[i].push((e + 1, -inst.value(i, k).clone()));
        by_item[k].push((e + 1, Rational::one()));
    }
    for &i in &constrained {
        let mut terms = std::mem::take(&mut by_agent[i]);
        terms.push((0, shares.values[i].clone()));
        lp.add_constraint(terms, Rational::zero());
    }
    for terms in by_item.into_iter().filter(|t| !t.is_empty()) {
        lp.add_constraint(terms, Rational::one());
    }

    let (_, point) = solve(&lp, mode)?.into_optimal("approximation")?;
    let mut rows = vec![vec![Rational::zero(); m]; n];
    for (e, &(i, k)) in entries.iter().enumerate() {
        rows[i][k] = point[e + 1].clone();
    }
    if !mode.is_exact() {
        repair_supply(&mut rows);
    }
    let allocation = Allocation::new(rows)?;

    let per_agent_ratio: Vec<Extended> = (0..n)
        .map(|i| {
            let share = &shares.values[i];
            if share.is_zero() {
                Extended::Infinite
            } else {
                Extended::Finite(inst.utility_of(i, &allocation.rows()[i]) / share)
            }
        })
        .collect();
    let theta = constrained
        .iter()
        .filter_map(|&i| per_agent_ratio[i].finite())
        .min()
        .cloned()
        .expect("at least one constrained agent");
    Ok(ApproxResult {
        theta: Theta::Value(theta),
        allocation,
        shares: shares.clone(),
        per_agent_ratio,
    })
}

/// Scales down any item column whose total exceeds one.
fn repair_supply(rows: &mut [Vec<Rational>]) {
    let m = rows.first().map_or(0, Vec::len);
    for k in 0..m {
        let total = rows.iter().fold(Rational::zero(), |acc, r| acc + &r[k]);
        if total > Rational::one() {
            for row in rows.iter_mut() {
                row[k] = &row[k] / &total;
            }
        }
    }
}
