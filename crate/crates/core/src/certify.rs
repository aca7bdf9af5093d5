//! Dual-fitting certificates for binary instances.
//!
//! A binary instance is summarized by its profile: the weight `v_S` of each
//! agent subset `S`, i.e. the fraction of (valued) items valued exactly by
//! `S`. The certificates here are explicit feasible solutions of the dual of
//! the share-sum LP over that profile; by weak duality their value `λ` bounds
//! `Σ_i share_i / SW`.
//!
//! Both constructions are parametrized by a family `{Z_i}` with `i ∈ Z_i`:
//! the `√n` certificate is the case `Z_i = {i}`.
//!
//! ```text
//! |Z_i|·β_iS + Σ_{j ∈ S \ Z_i} η_ij >= 1     i ∈ S
//! β_iS >= η_ij                              j ∉ Z_i, j ∈ S
//! Σ_i β_iS <= λ
//! ```

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::approx::welfare;
use crate::error::{Error, Result};
use crate::forge::gen_projective_plane;
use crate::lp::Mode;
use crate::model::{Instance, ShareKind};
use crate::num::{format_rational, int, inv_sqrt_lower, le_sqrt, serde_rational, to_f64, Rational};
use crate::shares::{all_shares, efs_delta_fixed};

/// Bits of precision for the rational stand-in of an irrational `γ`.
const GAMMA_BITS: u32 = 40;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetWeight {
    pub subset: Vec<usize>,
    #[serde(with = "serde_rational")]
    pub weight: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryProfile {
    pub n: usize,
    /// Sorted subsets with positive weight; weights sum to one.
    pub weights: Vec<SubsetWeight>,
    /// Items no agent values; they are discarded.
    pub dropped_items: usize,
}

impl BinaryProfile {
    pub fn support(&self) -> impl Iterator<Item = &[usize]> {
        self.weights.iter().map(|w| w.subset.as_slice())
    }

    pub fn weight(&self, subset: &[usize]) -> Rational {
        self.weights
            .iter()
            .find(|w| w.subset == subset)
            .map_or_else(Rational::zero, |w| w.weight.clone())
    }
}

pub fn to_profile(inst: &Instance) -> Result<BinaryProfile> {
    if !inst.is_binary() {
        return Err(Error::InvalidInstance("profile needs binary valuations".into()));
    }
    let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
    let mut dropped = 0;
    for k in 0..inst.m() {
        let subset: Vec<usize> = (0..inst.n()).filter(|&i| inst.value(i, k).is_one()).collect();
        if subset.is_empty() {
            dropped += 1;
        } else {
            *counts.entry(subset).or_default() += 1;
        }
    }
    if dropped > 0 {
        log::warn!("discarding {dropped} items that no agent values");
    }
    let valued = inst.m() - dropped;
    if valued == 0 {
        return Err(Error::InvalidInstance("no item is valued by any agent".into()));
    }
    let weights = counts
        .into_iter()
        .map(|(subset, b)| SubsetWeight {
            subset,
            weight: Rational::new(b.into(), valued.into()),
        })
        .collect();
    Ok(BinaryProfile { n: inst.n(), weights, dropped_items: dropped })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Variant {
    CcsSqrtN,
    EfsDelta,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetaEntry {
    pub agent: usize,
    pub subset: Vec<usize>,
    #[serde(with = "serde_rational")]
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DualCertificate {
    pub variant: Variant,
    #[serde(with = "serde_rational")]
    pub gamma: Rational,
    /// `η_ij`, meaningful for `j ∉ Z_i`; other entries are zero.
    #[serde(with = "serde_rational::matrix")]
    pub eta: Vec<Vec<Rational>>,
    /// `β_iS` for every agent and every subset in the profile's support.
    pub beta: Vec<BetaEntry>,
    #[serde(with = "serde_rational")]
    pub lambda: Rational,
    /// `Z_i`, each sorted and containing `i`.
    pub z_sets: Vec<Vec<usize>>,
}

impl DualCertificate {
    pub fn z(&self) -> usize {
        self.z_sets.first().map_or(1, Vec::len)
    }

    fn beta_map(&self) -> BTreeMap<(usize, &[usize]), &Rational> {
        self.beta.iter().map(|b| ((b.agent, b.subset.as_slice()), &b.value)).collect()
    }

    /// Whether `λ` is within the analytic bound: `2√n + 1` for the `√n`
    /// certificate, `2√(n/Z)` for the EFS^Δ one. Exact.
    pub fn lambda_within_bound(&self) -> bool {
        let n = int(self.eta.len() as i64);
        match self.variant {
            Variant::CcsSqrtN => le_sqrt(&((&self.lambda - int(1)) / int(2)), &n),
            Variant::EfsDelta => le_sqrt(&(&self.lambda / int(2)), &(n / int(self.z() as i64))),
        }
    }

    pub fn bound_f64(&self) -> f64 {
        let n = self.eta.len() as f64;
        match self.variant {
            Variant::CcsSqrtN => 2.0 * n.sqrt() + 1.0,
            Variant::EfsDelta => 2.0 * (n / self.z() as f64).sqrt(),
        }
    }

    pub fn bound_expr(&self) -> String {
        let n = self.eta.len();
        match self.variant {
            Variant::CcsSqrtN => format!("2*sqrt({n})+1"),
            Variant::EfsDelta => format!("2*sqrt({n}/{})", self.z()),
        }
    }
}

/// `Z_i = {i, i+1, ..., i+Z-1}` modulo `n`.
pub fn cyclic_z_sets(n: usize, z: usize) -> Result<Vec<Vec<usize>>> {
    if z == 0 || z > n {
        return Err(Error::InvalidArgument(format!("Z = {z} must lie in [1, {n}]")));
    }
    Ok((0..n)
        .map(|i| {
            let mut set: Vec<usize> = (0..z).map(|d| (i + d) % n).collect();
            set.sort_unstable();
            set
        })
        .collect())
}

pub fn build_dual_sqrt_n(profile: &BinaryProfile) -> DualCertificate {
    let z_sets = (0..profile.n).map(|i| vec![i]).collect();
    let mut cert = build(profile, z_sets).expect("singleton family is valid");
    cert.variant = Variant::CcsSqrtN;
    cert
}

/// The EFS^Δ certificate for a caller-supplied family `{Z_i}` of equal size.
pub fn build_dual_efs_delta(profile: &BinaryProfile, z_sets: Vec<Vec<usize>>) -> Result<DualCertificate> {
    build(profile, z_sets)
}

fn validate_family(n: usize, z_sets: &[Vec<usize>]) -> Result<usize> {
    if z_sets.len() != n {
        return Err(Error::DimensionMismatch(format!("{} sets Z_i for {n} agents", z_sets.len())));
    }
    let z = z_sets[0].len();
    for (i, set) in z_sets.iter().enumerate() {
        if set.len() != z {
            return Err(Error::InvalidArgument(format!("|Z_{i}| = {} differs from |Z_0| = {z}", set.len())));
        }
        if !set.contains(&i) || set.iter().any(|&j| j >= n) || set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "Z_{i} must be a sorted subset of the agents containing {i}"
            )));
        }
    }
    Ok(z)
}

fn build(profile: &BinaryProfile, z_sets: Vec<Vec<usize>>) -> Result<DualCertificate> {
    let n = profile.n;
    let z = validate_family(n, &z_sets)?;
    let zr = int(z as i64);
    let gamma = inv_sqrt_lower(&int((n * z) as i64), GAMMA_BITS);

    let mut eta = vec![vec![Rational::zero(); n]; n];
    for (i, row) in eta.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            if z_sets[i].binary_search(&j).is_err() {
                *e = gamma.clone();
            }
        }
    }

    let mut beta = Vec::new();
    let mut support_max = Rational::zero();
    for subset in profile.support() {
        let mut column = Rational::zero();
        for (i, zi) in z_sets.iter().enumerate() {
            let value = if subset.binary_search(&i).is_ok() {
                let outside = subset.iter().filter(|j| zi.binary_search(j).is_err()).count();
                let slack = (int(1) - &gamma * int(outside as i64)) / &zr;
                &gamma + slack.max(Rational::zero())
            } else {
                gamma.clone()
            };
            column += &value;
            beta.push(BetaEntry { agent: i, subset: subset.to_vec(), value });
        }
        support_max = support_max.max(column);
    }

    // Σ_i β_iS <= nγ + |S|·max(0, (1 - γ(|S| - Z))/Z) for every S, with
    // equality when Z = 1.
    let all_sizes = (1..=n)
        .map(|s| {
            let s_r = int(s as i64);
            let slack = (int(1) - &gamma * (&s_r - &zr)) / &zr;
            &gamma * int(n as i64) + s_r * slack.max(Rational::zero())
        })
        .max()
        .unwrap_or_default();

    Ok(DualCertificate {
        variant: Variant::EfsDelta,
        gamma,
        eta,
        beta,
        lambda: support_max.max(all_sizes),
        z_sets,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub constraint: String,
    pub agent: Option<usize>,
    pub other: Option<usize>,
    pub subset: Option<Vec<usize>>,
    pub detail: String,
}

impl Violation {
    fn new(constraint: &str, agent: Option<usize>, other: Option<usize>, subset: Option<&[usize]>, detail: String) -> Self {
        Violation {
            constraint: constraint.to_string(),
            agent,
            other,
            subset: subset.map(<[usize]>::to_vec),
            detail,
        }
    }
}

/// Checks every dual constraint on the profile's support. Returns the
/// violations found (empty means the certificate is feasible).
pub fn check_dual(profile: &BinaryProfile, cert: &DualCertificate) -> Result<Vec<Violation>> {
    let n = profile.n;
    if cert.eta.len() != n || cert.eta.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("η is not {n}x{n}")));
    }
    validate_family(n, &cert.z_sets)?;
    let beta = cert.beta_map();
    let mut violations = Vec::new();

    if !cert.gamma.is_positive() {
        violations.push(Violation::new("nonnegative", None, None, None, "γ must be positive".into()));
    }
    for (i, row) in cert.eta.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            if e.is_negative() {
                violations.push(Violation::new("nonnegative", Some(i), Some(j), None, format!("η = {}", format_rational(e))));
            }
        }
    }
    for b in &cert.beta {
        if b.value.is_negative() {
            violations.push(Violation::new("nonnegative", Some(b.agent), None, Some(&b.subset), "β < 0".into()));
        }
    }

    for subset in profile.support() {
        let mut column = Rational::zero();
        for (i, zi) in cert.z_sets.iter().enumerate() {
            let Some(&b_is) = beta.get(&(i, subset)) else {
                return Err(Error::DimensionMismatch(format!("no β for agent {i} and subset {subset:?}")));
            };
            column += b_is;
            let outside: Vec<usize> = subset.iter().copied().filter(|j| zi.binary_search(j).is_err()).collect();
            if subset.binary_search(&i).is_ok() {
                let lhs = int(zi.len() as i64) * b_is + outside.iter().fold(Rational::zero(), |acc, &j| acc + &cert.eta[i][j]);
                if lhs < Rational::one() {
                    violations.push(Violation::new(
                        "cover",
                        Some(i),
                        None,
                        Some(subset),
                        format!("|Z_i|·β + Σ η = {} < 1", format_rational(&lhs)),
                    ));
                }
            }
            for &j in &outside {
                if b_is < &cert.eta[i][j] {
                    violations.push(Violation::new(
                        "beta_ge_eta",
                        Some(i),
                        Some(j),
                        Some(subset),
                        format!("β = {} < η = {}", format_rational(b_is), format_rational(&cert.eta[i][j])),
                    ));
                }
            }
        }
        if column > cert.lambda {
            violations.push(Violation::new(
                "lambda",
                None,
                None,
                Some(subset),
                format!("Σ_i β = {} > λ", format_rational(&column)),
            ));
        }
    }
    Ok(violations)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertReport {
    pub variant: Variant,
    pub n: usize,
    pub z: usize,
    #[serde(with = "serde_rational")]
    pub gamma: Rational,
    #[serde(with = "serde_rational")]
    pub lambda: Rational,
    pub lambda_f64: f64,
    pub bound: f64,
    pub bound_expr: String,
    pub lambda_within_bound: bool,
    pub violations: Vec<Violation>,
    /// `Σ_i share_i / SW` on the instance.
    #[serde(with = "serde_rational")]
    pub ratio_lhs: Rational,
    /// `λ`, the certified upper bound on `ratio_lhs`.
    #[serde(with = "serde_rational")]
    pub ratio_rhs: Rational,
    pub weak_duality_holds: bool,
    pub passed: bool,
}

fn le_with_mode(lhs: &Rational, rhs: &Rational, mode: Mode) -> bool {
    match mode {
        Mode::Exact => lhs <= rhs,
        Mode::Float { tolerance } => to_f64(lhs) <= to_f64(rhs) * (1.0 + tolerance) + tolerance,
    }
}

fn report(profile: &BinaryProfile, cert: DualCertificate, ratio_lhs: Rational, mode: Mode) -> Result<CertReport> {
    let violations = check_dual(profile, &cert)?;
    let lambda_within_bound = cert.lambda_within_bound();
    let weak_duality_holds = le_with_mode(&ratio_lhs, &cert.lambda, mode);
    Ok(CertReport {
        variant: cert.variant,
        n: profile.n,
        z: cert.z(),
        lambda_f64: to_f64(&cert.lambda),
        bound: cert.bound_f64(),
        bound_expr: cert.bound_expr(),
        passed: violations.is_empty() && lambda_within_bound && weak_duality_holds,
        lambda_within_bound,
        violations,
        ratio_lhs,
        ratio_rhs: cert.lambda.clone(),
        weak_duality_holds,
        gamma: cert.gamma,
        lambda: cert.lambda,
    })
}

/// Builds and checks the `√n` certificate on `inst`, comparing its `λ`
/// against `Σ_i EFS_i / SW`.
pub fn certify_sqrt_n(inst: &Instance, mode: Mode) -> Result<CertReport> {
    let profile = to_profile(inst)?;
    let cert = build_dual_sqrt_n(&profile);
    let lhs = all_shares(inst, ShareKind::Efs, None, mode)?.total() / welfare(inst);
    report(&profile, cert, lhs, mode)
}

/// Builds and checks the EFS^Δ certificate for `{Z_i}` (cyclic when `None`),
/// comparing its `λ` against `Σ_i EFS^Δ_i(Z_i \ {i}) / SW`.
pub fn certify_efs_delta(inst: &Instance, z: usize, z_sets: Option<Vec<Vec<usize>>>, mode: Mode) -> Result<CertReport> {
    let profile = to_profile(inst)?;
    let z_sets = match z_sets {
        Some(sets) => sets,
        None => cyclic_z_sets(inst.n(), z)?,
    };
    let cert = build_dual_efs_delta(&profile, z_sets)?;
    if cert.z() != z {
        return Err(Error::InvalidArgument(format!("sets have size {} but Z = {z}", cert.z())));
    }
    let mut total = Rational::zero();
    for (i, zi) in cert.z_sets.iter().enumerate() {
        let hidden: Vec<usize> = zi.iter().copied().filter(|&j| j != i).collect();
        total += efs_delta_fixed(inst, i, &hidden, mode)?;
    }
    let lhs = total / welfare(inst);
    report(&profile, cert, lhs, mode)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneReport {
    pub q: usize,
    pub n: usize,
    pub m: usize,
    /// Every pairwise constraint holds with both sides equal to `1/m`.
    pub constraints_tight: bool,
    #[serde(with = "serde_rational")]
    pub objective: Rational,
    /// `n(q+1)/m`
    #[serde(with = "serde_rational")]
    pub expected: Rational,
    /// `Σ_i CCS_i / SW` from the share LPs.
    #[serde(with = "serde_rational")]
    pub ccs_ratio: Rational,
    pub ccs_ratio_at_least_objective: bool,
    pub passed: bool,
}

/// Verifies the plane's primal solution `x_{i,L_k} = 1` for the CCS-ratio
/// LP over the profile and cross-checks it against the actual CCS values.
pub fn check_plane_lower_bound(q: usize, mode: Mode) -> Result<PlaneReport> {
    let inst = gen_projective_plane(q)?;
    let profile = to_profile(&inst)?;
    let (n, m) = (inst.n(), inst.m());
    let one_over_m = Rational::new(1.into(), m.into());
    // Line sets L_k of the plane's points are the support sets other than [n].
    let lines: Vec<&[usize]> = profile.support().filter(|s| s.len() < n).collect();
    let chosen = |i: usize, s: &[usize]| s.len() < n && s.binary_search(&i).is_ok();

    let mut constraints_tight = lines.len() == n;
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            let lhs = profile
                .weights
                .iter()
                .filter(|w| w.subset.binary_search(&i).is_ok() && w.subset.binary_search(&j).is_ok())
                .filter(|w| chosen(i, &w.subset))
                .fold(Rational::zero(), |acc, w| acc + &w.weight);
            let rhs = profile
                .weights
                .iter()
                .filter(|w| w.subset.binary_search(&j).is_ok())
                .fold(Rational::zero(), |acc, w| acc + &w.weight)
                / int(n as i64);
            constraints_tight &= lhs == one_over_m && rhs == one_over_m;
        }
    }
    let objective = (0..n)
        .flat_map(|i| profile.weights.iter().filter(move |w| chosen(i, &w.subset)))
        .fold(Rational::zero(), |acc, w| acc + &w.weight);
    let expected = Rational::new((n * (q + 1)).into(), m.into());
    let ccs_ratio = all_shares(&inst, ShareKind::Ccs, None, mode)?.total() / welfare(&inst);
    let ccs_ratio_at_least_objective = le_with_mode(&expected, &ccs_ratio, mode);
    Ok(PlaneReport {
        q,
        n,
        m,
        passed: constraints_tight && objective == expected && ccs_ratio_at_least_objective,
        constraints_tight,
        objective,
        expected,
        ccs_ratio,
        ccs_ratio_at_least_objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::{gen_disjoint, gen_efs_delta_lb};
    use crate::num::ratio;

    fn binary(rows: &[Vec<i64>]) -> Instance {
        Instance::from_integers(rows).unwrap()
    }

    #[test]
    fn profiles_of_small_instances() {
        let p = to_profile(&gen_disjoint(3).unwrap()).unwrap();
        assert_eq!(p.weights.len(), 3);
        assert!(p.weights.iter().all(|w| w.weight == ratio(1, 3) && w.subset.len() == 1));

        let fano = to_profile(&gen_projective_plane(2).unwrap()).unwrap();
        assert_eq!(fano.weight(&[0, 1, 2, 3, 4, 5, 6]), ratio(4, 11));
        assert_eq!(fano.weights.len(), 8);
        assert!(fano.weights.iter().filter(|w| w.subset.len() == 3).all(|w| w.weight == ratio(1, 11)));

        let ones = to_profile(&binary(&[vec![1, 1], vec![1, 1]])).unwrap();
        assert_eq!(ones.weights, vec![SubsetWeight { subset: vec![0, 1], weight: int(1) }]);

        let dropped = to_profile(&binary(&[vec![1, 0], vec![0, 0]])).unwrap();
        assert_eq!((dropped.dropped_items, dropped.weight(&[0])), (1, int(1)));
        assert!(to_profile(&binary(&[vec![2, 0]])).is_err());
        assert!(to_profile(&binary(&[vec![0, 0]])).is_err());
    }

    #[test]
    fn single_agent_certificate() {
        let p = to_profile(&binary(&[vec![1]])).unwrap();
        let cert = build_dual_sqrt_n(&p);
        assert_eq!(cert.gamma, int(1));
        assert_eq!(cert.lambda, int(2));
        assert!(check_dual(&p, &cert).unwrap().is_empty());
        assert!(cert.lambda_within_bound());
    }

    #[test]
    fn four_agents_singleton_column() {
        let p = to_profile(&gen_disjoint(4).unwrap()).unwrap();
        let cert = build_dual_sqrt_n(&p);
        assert_eq!(cert.gamma, ratio(1, 2));
        let col: Rational = cert.beta.iter().filter(|b| b.subset == [0]).map(|b| b.value.clone()).sum();
        assert_eq!(col, int(3));
        // Over all sizes: 2 + s·max(0, 1 - (s-1)/2) peaks at s = 2 with 3.
        assert_eq!(cert.lambda, int(3));
    }

    #[test]
    fn perturbations_are_caught() {
        let inst = gen_projective_plane(2).unwrap();
        let p = to_profile(&inst).unwrap();
        let cert = build_dual_sqrt_n(&p);
        assert!(check_dual(&p, &cert).unwrap().is_empty());

        let mut bad = cert.clone();
        bad.eta[0][1] = int(5);
        let v = check_dual(&p, &bad).unwrap();
        assert!(v.iter().any(|v| v.constraint == "beta_ge_eta" && v.agent == Some(0) && v.other == Some(1)));

        let mut bad = cert.clone();
        let entry = bad.beta.iter_mut().find(|b| b.agent == 0 && b.subset.len() == 3 && b.subset.contains(&0)).unwrap();
        entry.value = Rational::zero();
        let v = check_dual(&p, &bad).unwrap();
        assert!(v.iter().any(|v| v.constraint == "cover" && v.agent == Some(0)));

        let mut bad = cert.clone();
        bad.lambda = int(1);
        assert!(check_dual(&p, &bad).unwrap().iter().any(|v| v.constraint == "lambda"));

        let mut bad = cert;
        bad.eta.pop();
        assert!(check_dual(&p, &bad).is_err());
    }

    #[test]
    fn z_one_matches_sqrt_n() {
        let inst = binary(&[vec![1, 0, 1, 1], vec![1, 1, 0, 1], vec![0, 1, 1, 1]]);
        let p = to_profile(&inst).unwrap();
        let a = build_dual_sqrt_n(&p);
        let b = build_dual_efs_delta(&p, cyclic_z_sets(3, 1).unwrap()).unwrap();
        assert_eq!((&a.eta, &a.beta, &a.lambda), (&b.eta, &b.beta, &b.lambda));
    }

    #[test]
    fn fano_weak_duality() {
        let inst = gen_projective_plane(2).unwrap();
        let report = certify_sqrt_n(&inst, Mode::Exact).unwrap();
        assert!(report.passed, "{report:?}");
        let ccs = all_shares(&inst, ShareKind::Ccs, None, Mode::Exact).unwrap().total() / welfare(&inst);
        assert!(ccs >= ratio(21, 11));
        assert!(ccs <= report.lambda);
    }

    #[test]
    fn efs_delta_certificate_on_lower_bound_instances() {
        for (n, delta) in [(6, int(2)), (7, int(3)), (8, int(2))] {
            let lb = gen_efs_delta_lb(n, &delta, 10_000).unwrap();
            let report = certify_efs_delta(&lb.instance, lb.z, None, Mode::Exact).unwrap();
            assert!(report.passed, "n={n}: {report:?}");
        }
    }

    #[test]
    fn efs_delta_rejects_uneven_family() {
        let p = to_profile(&gen_disjoint(3).unwrap()).unwrap();
        assert!(build_dual_efs_delta(&p, vec![vec![0, 1], vec![1], vec![2]]).is_err());
        assert!(build_dual_efs_delta(&p, vec![vec![1], vec![1], vec![2]]).is_err());
        assert!(cyclic_z_sets(3, 4).is_err());
    }

    #[test]
    fn nine_agents_z_three() {
        let inst = crate::forge::gen_bernoulli(9, 20, 0.5, 11).unwrap();
        let p = to_profile(&inst).unwrap();
        let sets: Vec<Vec<usize>> = (0..9).map(|i| {
            let base = 3 * (i / 3);
            vec![base, base + 1, base + 2]
        }).collect();
        let cert = build_dual_efs_delta(&p, sets).unwrap();
        assert!(check_dual(&p, &cert).unwrap().is_empty());
        assert!(cert.lambda_within_bound());
        assert!(to_f64(&cert.lambda) <= 2.0 * 3f64.sqrt());
    }

    #[test]
    fn plane_lower_bound_small_orders() {
        let r = check_plane_lower_bound(2, Mode::Exact).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.objective, ratio(21, 11));
        let r = check_plane_lower_bound(3, Mode::Exact).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.objective, ratio(52, 22));
        assert!(check_plane_lower_bound(4, Mode::Exact).is_err());
    }
}
