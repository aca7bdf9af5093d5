mod common;

use common::{binary_instance, instance, positive_factor, sqrt_n_bound_holds};
use fairshare::approx::{optimal_theta, welfare, Theta};
use fairshare::certify::{build_dual_efs_delta, build_dual_sqrt_n, check_dual, cyclic_z_sets, to_profile};
use fairshare::cover::{cover_allocate, default_parameter};
use fairshare::forge::{gen_efs_delta_lb, generate, Family, GenSpec};
use fairshare::lp::{optimal_value, solve, LinearProgram, LpStatus, Mode};
use fairshare::model::{is_feasible_allocation, Instance, ShareKind};
use fairshare::num::{floor_to_usize, int, to_f64, Rational};
use fairshare::shares::{
    all_shares, ccs_full_share, ccs_share, efs_delta_fixed, efs_delta_fixed_allocation, efs_share, ef_share,
    prop_share,
};
use num_traits::Zero;
use proptest::prelude::*;

fn exact_shares(inst: &Instance, kind: ShareKind) -> Vec<Rational> {
    all_shares(inst, kind, None, Mode::Exact).unwrap().values
}

/// A bounded, feasible LP: `0 <= x <= u`, rows with mixed-sign
/// coefficients and nonnegative right-hand sides.
fn bounded_lp() -> impl Strategy<Value = LinearProgram> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(vars, rows)| {
        (
            prop::collection::vec(-4i64..=6, vars),
            prop::collection::vec(1i64..=5, vars),
            prop::collection::vec((prop::collection::vec(-3i64..=5, vars), 0i64..=10), rows),
        )
            .prop_map(move |(objective, upper, rows)| {
                let mut lp = LinearProgram::new(vars);
                for j in 0..vars {
                    lp.set_objective(j, int(objective[j]));
                    lp.set_bounds(j, Some(int(0)), Some(int(upper[j])));
                }
                for (coefs, rhs) in rows {
                    lp.add_constraint(coefs.iter().enumerate().map(|(j, &c)| (j, int(c))).collect(), int(rhs));
                }
                lp
            })
    })
}

fn permuted(lp: &LinearProgram, cols: &[usize], rows: &[usize]) -> LinearProgram {
    // Variable j of `lp` becomes variable cols[j].
    let mut out = LinearProgram::new(lp.num_vars);
    for j in 0..lp.num_vars {
        out.set_objective(cols[j], lp.objective[j].clone());
        out.set_bounds(cols[j], lp.lower[j].clone(), lp.upper[j].clone());
    }
    for &r in rows {
        let c = &lp.constraints[r];
        out.add_constraint(c.terms.iter().map(|(j, v)| (cols[*j], v.clone())).collect(), c.rhs.clone());
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shares_scale_with_agent_factors(
        inst in instance(2..=3, 1..=4, 5),
        factors in prop::collection::vec(positive_factor(), 3),
    ) {
        let factors = &factors[..inst.n()];
        let scaled = inst.scale_agents(factors).unwrap();
        for kind in [ShareKind::Prop, ShareKind::Ccs, ShareKind::Ef, ShareKind::Efs] {
            let base = exact_shares(&inst, kind);
            let after = exact_shares(&scaled, kind);
            for i in 0..inst.n() {
                prop_assert_eq!(&after[i], &(&base[i] * &factors[i]), "{} agent {}", kind, i);
            }
        }
    }

    #[test]
    fn binarized_welfare_counts_ceiled_maxima(inst in instance(1..=3, 1..=3, 4), eps in positive_factor()) {
        let eps = eps / int(2);
        let bin = inst.binarize(&eps);
        prop_assume!(bin.is_ok());
        let bin = bin.unwrap();
        let expected: Rational = (0..inst.m())
            .map(|k| (0..inst.n()).map(|i| (inst.value(i, k) / &eps).ceil()).max().unwrap())
            .sum();
        prop_assert_eq!(welfare(&bin.instance), expected);
    }

    #[test]
    fn binarizing_never_lowers_efs(inst in instance(2..=3, 1..=3, 3)) {
        let bin = inst.binarize(&int(1)).unwrap();
        let on_binary = exact_shares(&bin.instance, ShareKind::Efs);
        let on_ceiled = exact_shares(&bin.ceiled, ShareKind::Efs);
        for i in 0..inst.n() {
            prop_assert!(on_binary[i] >= on_ceiled[i]);
        }
    }

    #[test]
    fn exact_optimum_is_feasible_and_permutation_invariant(
        lp in bounded_lp(),
        seed in any::<u64>(),
    ) {
        let sol = solve(&lp, Mode::Exact).unwrap();
        // x = 0 is feasible since every rhs is nonnegative; the box bounds it.
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let value = sol.objective_value.clone().unwrap();
        let point = sol.point.unwrap();
        prop_assert!(lp.is_feasible(&point));
        prop_assert_eq!(lp.objective_value(&point), value.clone());

        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
        let mut cols: Vec<usize> = (0..lp.num_vars).collect();
        let mut rows: Vec<usize> = (0..lp.constraints.len()).collect();
        rand::seq::SliceRandom::shuffle(&mut cols[..], &mut rng);
        rand::seq::SliceRandom::shuffle(&mut rows[..], &mut rng);
        let shuffled = solve(&permuted(&lp, &cols, &rows), Mode::Exact).unwrap();
        prop_assert_eq!(shuffled.objective_value.unwrap(), value);
    }

    #[test]
    fn float_matches_exact(lp in bounded_lp()) {
        let exact = to_f64(&optimal_value(&lp, Mode::Exact, "exact").unwrap());
        let float = to_f64(&optimal_value(&lp, Mode::Float { tolerance: 1e-9 }, "float").unwrap());
        prop_assert!((exact - float).abs() <= 1e-6 * exact.abs().max(1.0), "{} vs {}", exact, float);
    }

    #[test]
    fn shares_are_ordered_and_bounded(inst in instance(2..=4, 1..=5, 6)) {
        let prop = exact_shares(&inst, ShareKind::Prop);
        let ccs = exact_shares(&inst, ShareKind::Ccs);
        let ef = exact_shares(&inst, ShareKind::Ef);
        let efs = exact_shares(&inst, ShareKind::Efs);
        for i in 0..inst.n() {
            prop_assert!(prop[i] <= ccs[i] && ccs[i] <= ef[i] && ef[i] <= efs[i], "agent {}", i);
            prop_assert!(efs[i] <= inst.total_value(i));
        }
    }

    #[test]
    fn compact_ccs_equals_full_allocation_lp(inst in instance(2..=4, 1..=4, 5)) {
        for i in 0..inst.n() {
            let (compact, _) = ccs_share(&inst, i, Mode::Exact).unwrap();
            prop_assert_eq!(compact, ccs_full_share(&inst, i, Mode::Exact).unwrap());
        }
    }

    #[test]
    fn hidden_sets_shrink_the_share(inst in instance(3..=5, 1..=4, 5), picks in prop::collection::vec(any::<bool>(), 5)) {
        let n = inst.n();
        let agent = 0;
        let others: Vec<usize> = (1..n).collect();
        let small: Vec<usize> = others.iter().copied().zip(&picks).filter(|(_, &p)| p).map(|(j, _)| j).collect();
        let large: Vec<usize> = others.iter().copied().filter(|j| small.contains(j) || *j == n - 1).collect();
        let v_small = efs_delta_fixed(&inst, agent, &small, Mode::Exact).unwrap();
        let v_large = efs_delta_fixed(&inst, agent, &large, Mode::Exact).unwrap();
        prop_assert!(v_large <= v_small);
        for (w, v) in [(&small, &v_small), (&large, &v_large)] {
            let cap = inst.total_value(agent) / int(1 + w.len() as i64);
            prop_assert!(v <= &cap);
        }
    }

    #[test]
    fn theta_witness_and_welfare_bound(inst in instance(2..=4, 1..=5, 6)) {
        for kind in [ShareKind::Prop, ShareKind::Ccs, ShareKind::Efs] {
            let shares = all_shares(&inst, kind, None, Mode::Exact).unwrap();
            let result = optimal_theta(&inst, &shares, Mode::Exact).unwrap();
            prop_assert!(result.witness_holds(&inst));
            prop_assert!(is_feasible_allocation(&inst, &result.allocation).unwrap());
            let total = shares.total();
            if let Theta::Value(theta) = &result.theta {
                if !total.is_zero() {
                    prop_assert!(theta <= &(welfare(&inst) / &total));
                }
                if kind == ShareKind::Efs {
                    prop_assert!(sqrt_n_bound_holds(theta, inst.n()));
                }
            }
        }
    }

    #[test]
    fn cover_is_feasible_and_meets_safe_bound(inst in instance(2..=6, 1..=8, 9)) {
        let report = cover_allocate(&inst, None, None, Mode::Exact).unwrap();
        prop_assert!(is_feasible_allocation(&inst, &report.allocation).unwrap());
        prop_assert!(report.summary.supply_feasible);
        prop_assert!(report.summary.safe_bound_holds && report.summary.bound_9m23_holds);

        let (n, m) = (inst.n(), inst.m());
        let (a, b) = (&report.cover.a, &report.cover.b);
        prop_assert_eq!(a, &default_parameter(m));
        let slack = ((a * b).recip() + (a + b) * int(m as i64)) / int(n as i64);
        for (i, g) in report.agents.iter().enumerate() {
            let ccs_prime = &g.ccs_value / inst.total_value(i);
            prop_assert!(ccs_prime <= &g.alg_normalized * int(3) + &slack, "agent {}", i);
        }

        let cover = &report.cover;
        prop_assert!(Rational::from_integer(cover.cover_agents.len().into()) <= b.recip());
        let mut seen = vec![false; m];
        for set in &cover.cover_sets {
            for &k in set {
                prop_assert!(!seen[k], "item {} covered twice", k);
                seen[k] = true;
            }
        }
    }

    #[test]
    fn generators_are_deterministic(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=8) {
        for family in [
            Family::UniformPartition { n, m, total: 100 },
            Family::Bernoulli { n, m, p: 0.4 },
            Family::IntrinsicValue { n, m, alpha_max: 1.0, beta_max: 0.3 },
        ] {
            let spec = GenSpec { family, seed };
            prop_assert_eq!(generate(&spec).unwrap().instance, generate(&spec).unwrap().instance);
        }
    }

    #[test]
    fn certificates_pass_their_checker_and_bound_efs(inst in binary_instance(2..=5, 1..=6)) {
        let profile = to_profile(&inst).unwrap();
        let cert = build_dual_sqrt_n(&profile);
        prop_assert!(check_dual(&profile, &cert).unwrap().is_empty());
        prop_assert!(cert.lambda_within_bound());
        let ratio = all_shares(&inst, ShareKind::Efs, None, Mode::Exact).unwrap().total() / welfare(&inst);
        prop_assert!(ratio <= cert.lambda);

        let z1 = build_dual_efs_delta(&profile, cyclic_z_sets(inst.n(), 1).unwrap()).unwrap();
        prop_assert_eq!(&z1.eta, &cert.eta);
        prop_assert_eq!(&z1.beta, &cert.beta);
        prop_assert_eq!(&z1.lambda, &cert.lambda);

        for z in 2..=inst.n() {
            let c = build_dual_efs_delta(&profile, cyclic_z_sets(inst.n(), z).unwrap()).unwrap();
            prop_assert!(check_dual(&profile, &c).unwrap().is_empty(), "Z = {}", z);
            prop_assert!(c.lambda_within_bound(), "Z = {}", z);
        }
    }
}

#[test]
fn lower_bound_witness_is_feasible_for_small_n() {
    for n in 2..=6 {
        for delta in [int(1), int(2), Rational::new(5.into(), 2.into()), int(n as i64)] {
            let lb = gen_efs_delta_lb(n, &delta, 1000).unwrap();
            let hidden: Vec<usize> = (1..lb.z).collect();
            let witness = lb.witness(0, &hidden);
            assert!(is_feasible_allocation(&lb.instance, &witness).unwrap());
            assert_eq!(witness.utility(&lb.instance, 0, 0), lb.witness_value());
            let value = efs_delta_fixed(&lb.instance, 0, &hidden, Mode::Exact).unwrap();
            assert!(value >= lb.witness_value(), "n={n} delta={delta}");
            let hidden_size = floor_to_usize(&(int(n as i64 - 1) / &delta)).unwrap();
            assert_eq!(lb.z, hidden_size + 1);
        }
    }
}

#[test]
fn efs_delta_allocation_and_share_agree() {
    let inst = Instance::from_integers(&[vec![3, 1, 0, 2], vec![1, 4, 2, 0], vec![0, 2, 5, 1], vec![2, 0, 1, 3]]).unwrap();
    let (value, alloc) = efs_delta_fixed_allocation(&inst, 1, &[2], Mode::Exact).unwrap();
    assert_eq!(value, efs_delta_fixed(&inst, 1, &[2], Mode::Exact).unwrap());
    assert!(is_feasible_allocation(&inst, &alloc).unwrap());
    assert_eq!(alloc.utility(&inst, 1, 1), value);
    assert!(value <= efs_share(&inst, 1, Mode::Exact).unwrap().0);
    assert!(ef_share(&inst, 1, Mode::Exact).unwrap() >= prop_share(&inst, 1).unwrap());
}
