//! Instances, bundles, allocations and share vectors.

use std::fmt;
use std::io::{Read, Write};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{format_rational, parse_rational, serde_rational, Rational};

/// Largest item count `binarize` will materialize.
pub const MAX_BINARY_ITEMS: usize = 1 << 20;

/// `n` agents by `m` divisible items; `values[i][k]` is agent `i`'s value for
/// the whole of item `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    values: Vec<Vec<Rational>>,
}

impl Instance {
    pub fn new(values: Vec<Vec<Rational>>) -> Result<Self> {
        let n = values.len();
        if n == 0 {
            return Err(Error::InvalidInstance("at least one agent is required".into()));
        }
        let m = values[0].len();
        if m == 0 {
            return Err(Error::InvalidInstance("at least one item is required".into()));
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} has {} values, expected {m}",
                    row.len()
                )));
            }
            if let Some(k) = row.iter().position(|v| v.is_negative()) {
                return Err(Error::InvalidInstance(format!("value of agent {i} for item {k} is negative")));
            }
        }
        Ok(Instance { values })
    }

    pub fn from_integers(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(
            rows.iter()
                .map(|row| row.iter().map(|&v| Rational::from_integer(BigInt::from(v))).collect())
                .collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn m(&self) -> usize {
        self.values[0].len()
    }

    pub fn value(&self, agent: usize, item: usize) -> &Rational {
        &self.values[agent][item]
    }

    pub fn row(&self, agent: usize) -> &[Rational] {
        &self.values[agent]
    }

    pub fn values(&self) -> &[Vec<Rational>] {
        &self.values
    }

    pub fn check_agent(&self, agent: usize) -> Result<()> {
        if agent < self.n() {
            Ok(())
        } else {
            Err(Error::AgentOutOfRange { index: agent, n: self.n() })
        }
    }

    /// `u_i([m])`, the agent's value for everything.
    pub fn total_value(&self, agent: usize) -> Rational {
        self.values[agent].iter().fold(Rational::zero(), |acc, v| acc + v)
    }

    pub fn utility(&self, agent: usize, bundle: &Bundle) -> Result<Rational> {
        self.check_agent(agent)?;
        if bundle.len() != self.m() {
            return Err(Error::DimensionMismatch(format!(
                "bundle has {} items, instance has {}",
                bundle.len(),
                self.m()
            )));
        }
        Ok(self.utility_of(agent, bundle.quantities()))
    }

    /// Utility of an unchecked quantity vector.
    pub(crate) fn utility_of(&self, agent: usize, quantities: &[Rational]) -> Rational {
        self.values[agent]
            .iter()
            .zip(quantities)
            .filter(|(v, x)| !v.is_zero() && !x.is_zero())
            .fold(Rational::zero(), |acc, (v, x)| acc + v * x)
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().flatten().all(|v| v.is_zero() || v.is_one())
    }

    /// Multiplies agent `i`'s values by `factors[i]`.
    pub fn scale_agents(&self, factors: &[Rational]) -> Result<Instance> {
        if factors.len() != self.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} scale factors for {} agents",
                factors.len(),
                self.n()
            )));
        }
        if let Some(i) = factors.iter().position(|f| !f.is_positive()) {
            return Err(Error::InvalidArgument(format!("scale factor of agent {i} is not positive")));
        }
        Ok(Instance {
            values: self
                .values
                .iter()
                .zip(factors)
                .map(|(row, f)| row.iter().map(|v| v * f).collect())
                .collect(),
        })
    }

    /// Ceils `v / epsilon` to integers, then splits item `k` into
    /// `q_k = max_i ceil(v_ik / epsilon)` unit copies; agent `i` values the
    /// first `ceil(v_ik / epsilon)` copies at 1 each.
    pub fn binarize(&self, epsilon: &Rational) -> Result<Binarized> {
        if !epsilon.is_positive() {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if self.values.iter().flatten().all(|v| v.is_zero()) {
            return Err(Error::InvalidInstance("binarize needs at least one positive value".into()));
        }
        let ceiled: Vec<Vec<BigInt>> = self
            .values
            .iter()
            .map(|row| row.iter().map(|v| (v / epsilon).ceil().to_integer()).collect())
            .collect();
        let mut copies = Vec::with_capacity(self.m());
        let mut total = 0usize;
        for k in 0..self.m() {
            let q = ceiled.iter().map(|row| &row[k]).max().cloned().unwrap_or_default();
            let q = q
                .to_usize()
                .filter(|&q| q <= MAX_BINARY_ITEMS)
                .ok_or_else(|| Error::InvalidArgument("epsilon too small: too many item copies".into()))?;
            total += q;
            if total > MAX_BINARY_ITEMS {
                return Err(Error::InvalidArgument(format!(
                    "epsilon too small: more than {MAX_BINARY_ITEMS} item copies"
                )));
            }
            copies.push(q);
        }
        let mut item_source = Vec::with_capacity(total);
        let mut values = vec![Vec::with_capacity(total); self.n()];
        for (k, &q) in copies.iter().enumerate() {
            for copy in 0..q {
                item_source.push(k);
                for (i, row) in values.iter_mut().enumerate() {
                    let valued = BigInt::from(copy) < ceiled[i][k];
                    row.push(if valued { Rational::one() } else { Rational::zero() });
                }
            }
        }
        let ceiled = Instance {
            values: ceiled
                .into_iter()
                .map(|row| row.into_iter().map(Rational::from_integer).collect())
                .collect(),
        };
        Ok(Binarized {
            instance: Instance::new(values)?,
            item_source,
            ceiled,
        })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Instance> {
        let mut csv = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let m = csv.headers()?.len();
        let mut values = Vec::new();
        for (idx, record) in csv.records().enumerate() {
            let record = record?;
            let row = idx + 2;
            if record.len() != m {
                return Err(Error::Parse {
                    row,
                    column: record.len().min(m) + 1,
                    message: format!("expected {m} cells, found {}", record.len()),
                });
            }
            let parsed = record
                .iter()
                .enumerate()
                .map(|(col, cell)| {
                    let value = parse_rational(cell).ok_or_else(|| Error::Parse {
                        row,
                        column: col + 1,
                        message: format!("not a number: {cell:?}"),
                    })?;
                    if value.is_negative() {
                        return Err(Error::Parse {
                            row,
                            column: col + 1,
                            message: format!("negative value {cell}"),
                        });
                    }
                    Ok(value)
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(parsed);
        }
        Instance::new(values)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(writer);
        csv.write_record((1..=self.m()).map(|k| format!("item_{k}")))?;
        for row in &self.values {
            csv.write_record(row.iter().map(format_rational))?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }
}

/// Output of [`Instance::binarize`].
#[derive(Debug, Clone)]
pub struct Binarized {
    pub instance: Instance,
    /// Source item of each binary item.
    pub item_source: Vec<usize>,
    /// The integer instance `ceil(v / epsilon)` the copies were cut from.
    pub ceiled: Instance,
}

/// Quantities `x_k` in `[0, 1]` of each item.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Bundle(#[serde(with = "serde_rational::vec")] Vec<Rational>);

impl Bundle {
    pub fn new(quantities: Vec<Rational>) -> Result<Self> {
        if let Some(k) = quantities.iter().position(|x| x.is_negative() || *x > Rational::one()) {
            return Err(Error::InvalidArgument(format!(
                "bundle quantity of item {k} is outside [0, 1]"
            )));
        }
        Ok(Bundle(quantities))
    }

    pub fn zeros(m: usize) -> Self {
        Bundle(vec![Rational::zero(); m])
    }

    pub fn full(m: usize) -> Self {
        Bundle(vec![Rational::one(); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn quantities(&self) -> &[Rational] {
        &self.0
    }
}

/// `x_ik`: how much of item `k` agent `i` receives. Construction only checks
/// the shape; use [`is_feasible_allocation`] for the supply constraints.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Allocation(#[serde(with = "serde_rational::matrix")] Vec<Vec<Rational>>);

impl Allocation {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        if let Some(first) = rows.first() {
            if rows.iter().any(|r| r.len() != first.len()) {
                return Err(Error::DimensionMismatch("allocation rows differ in length".into()));
            }
        }
        Ok(Allocation(rows))
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Allocation(vec![vec![Rational::zero(); m]; n])
    }

    /// Every item split equally: `x_ik = 1/n`.
    pub fn proportional(n: usize, m: usize) -> Self {
        let share = Rational::new(BigInt::one(), BigInt::from(n));
        Allocation(vec![vec![share; m]; n])
    }

    pub fn n(&self) -> usize {
        self.0.len()
    }

    pub fn m(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn get(&self, agent: usize, item: usize) -> &Rational {
        &self.0[agent][item]
    }

    pub fn bundle(&self, agent: usize) -> &[Rational] {
        &self.0[agent]
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.0
    }

    pub(crate) fn rows_mut(&mut self) -> &mut [Vec<Rational>] {
        &mut self.0
    }

    /// `u_i(A_j)`
    pub fn utility(&self, inst: &Instance, agent: usize, bundle_of: usize) -> Rational {
        inst.utility_of(agent, &self.0[bundle_of])
    }
}

/// True iff every entry is in `[0, 1]` and no item is over-allocated.
pub fn is_feasible_allocation(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    if alloc.n() != inst.n() || alloc.m() != inst.m() {
        return Err(Error::DimensionMismatch(format!(
            "allocation is {}x{}, instance is {}x{}",
            alloc.n(),
            alloc.m(),
            inst.n(),
            inst.m()
        )));
    }
    let boxed = alloc.rows().iter().flatten().all(|x| !x.is_negative() && *x <= Rational::one());
    let supplied = (0..inst.m()).all(|k| {
        alloc
            .rows()
            .iter()
            .fold(Rational::zero(), |acc, row| acc + &row[k])
            <= Rational::one()
    });
    Ok(boxed && supplied)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ShareKind {
    #[serde(rename = "PROP")]
    Prop,
    #[serde(rename = "CCS")]
    Ccs,
    #[serde(rename = "EF")]
    Ef,
    #[serde(rename = "EFS")]
    Efs,
    #[serde(rename = "EFS_DELTA")]
    EfsDelta,
}

impl ShareKind {
    pub fn name(&self) -> &'static str {
        match self {
            ShareKind::Prop => "PROP",
            ShareKind::Ccs => "CCS",
            ShareKind::Ef => "EF",
            ShareKind::Efs => "EFS",
            ShareKind::EfsDelta => "EFS_DELTA",
        }
    }
}

impl fmt::Display for ShareKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ShareKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "prop" => Ok(ShareKind::Prop),
            "ccs" => Ok(ShareKind::Ccs),
            "ef" => Ok(ShareKind::Ef),
            "efs" => Ok(ShareKind::Efs),
            "efs-delta" => Ok(ShareKind::EfsDelta),
            other => Err(Error::InvalidArgument(format!("unknown share kind {other:?}"))),
        }
    }
}

/// Per-agent share values tagged with the notion that produced them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShareVector {
    pub kind: ShareKind,
    #[serde(with = "serde_rational::option", default)]
    pub delta: Option<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub values: Vec<Rational>,
}

impl ShareVector {
    pub fn new(kind: ShareKind, values: Vec<Rational>) -> Self {
        ShareVector { kind, delta: None, values }
    }

    pub fn total(&self) -> Rational {
        self.values.iter().fold(Rational::zero(), |acc, v| acc + v)
    }

    /// Shares must be nonnegative and at most each agent's total value.
    pub fn validate(&self, inst: &Instance) -> Result<()> {
        if self.values.len() != inst.n() {
            return Err(Error::DimensionMismatch(format!(
                "{} shares for {} agents",
                self.values.len(),
                inst.n()
            )));
        }
        for (i, v) in self.values.iter().enumerate() {
            if v.is_negative() || *v > inst.total_value(i) {
                return Err(Error::Validation(format!(
                    "share {} of agent {i} outside [0, u_i([m])]",
                    format_rational(v)
                )));
            }
        }
        Ok(())
    }
}
