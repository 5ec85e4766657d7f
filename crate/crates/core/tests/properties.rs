mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use common::{cert_of_tuple, Gen, Instance, Shape, DESK};
use spki_core::codec::{encode_certificate, parse_certificate};
use spki_core::engine::{derivable, tuples_with_provenance, Closure, ClosureConfig, Provenance, RuleSet};
use spki_core::semantics::{
    build_completeness_witness, eval_formula, is_consistent, least_above, minimal_interpretation, ClosedModel,
    Interpretation, Layer, Level, Run, Universe,
};
use spki_core::{Certificate, Formula, Key, PrincipalExpr, Tuple};

const PREFIXED: Shape = Shape { prefix_tags: true, ..DESK };

fn universe(inst: &Instance, formulas: &[Formula]) -> Universe {
    let all = inst.all();
    let mut u = Universe::from_instance(all.iter(), formulas.iter());
    u.keys.extend(inst.keys.iter().cloned());
    u.names.extend(inst.names.iter().cloned());
    u.actions.extend(inst.actions.iter().cloned());
    u
}

/// A layer with random bindings and grants over the universe.
fn random_layer(rng: &mut common::Rng8, u: &Universe) -> Layer {
    let keys: Vec<&Key> = u.keys.iter().collect();
    let names: Vec<_> = u.names.iter().collect();
    let actions: Vec<_> = u.actions.iter().collect();
    let mut layer = Layer::default();
    for _ in 0..rng.gen_range(0..12) {
        let (k, k2) = (*keys.choose(rng).unwrap(), *keys.choose(rng).unwrap());
        if rng.gen_bool(0.6) || actions.is_empty() {
            layer.bind(k, names.choose(rng).unwrap(), k2);
        } else {
            let level = if rng.gen_bool(0.5) { Level::Permit } else { Level::Delegate };
            layer.raise(k, k2, actions.choose(rng).unwrap(), level);
        }
    }
    layer
}

fn random_interp(rng: &mut common::Rng8, u: &Universe) -> Interpretation {
    let segments: BTreeMap<u64, Layer> =
        (0..rng.gen_range(1..4)).map(|_| (rng.gen_range(0..=u.horizon), random_layer(rng, u))).collect();
    Interpretation::from_segments(u, segments)
}

fn random_expr(rng: &mut common::Rng8, u: &Universe, len: usize) -> PrincipalExpr {
    let keys: Vec<&Key> = u.keys.iter().collect();
    let names: Vec<_> = u.names.iter().collect();
    let leaf = |rng: &mut common::Rng8, first: bool| -> PrincipalExpr {
        if first || rng.gen_bool(0.2) {
            (*keys.choose(rng).unwrap()).clone().into()
        } else {
            (*names.choose(rng).unwrap()).clone().into()
        }
    };
    let first = rng.gen_bool(0.5);
    let mut e = leaf(rng, first);
    for _ in 1..len {
        e = PrincipalExpr::dot(e, leaf(rng, false));
    }
    e
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn composition_is_associative(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, DESK);
        let u = universe(&inst, &[]);
        let layer = random_layer(&mut rng, &u);
        let (p1, p2, p3) = (random_expr(&mut rng, &u, 2), random_expr(&mut rng, &u, 1), random_expr(&mut rng, &u, 2));
        let right = PrincipalExpr::dot(p1.clone(), PrincipalExpr::dot(p2.clone(), p3.clone()));
        let left = PrincipalExpr::dot(PrincipalExpr::dot(p1, p2), p3);
        for k in &u.keys {
            prop_assert_eq!(layer.intension(&right, k), layer.intension(&left, k));
            prop_assert_eq!(layer.intension(&right, k), layer.intension(&right.normalize(), k));
        }
    }

    #[test]
    fn fully_qualified_names_ignore_the_key(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, DESK);
        let u = universe(&inst, &[]);
        let layer = random_layer(&mut rng, &u);
        let mut g = Gen::new(&mut rng, DESK);
        let p = g.subject().to_expr();
        let first = u.keys.first().unwrap();
        for k in &u.keys {
            prop_assert_eq!(layer.intension(&p, k), layer.intension(&p, first));
        }
    }

    /// Consistency checked directly agrees with `Issued ∧ Valid → φ_c`
    /// holding everywhere for every certificate of the run.
    #[test]
    fn consistency_matches_certificate_formulas(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, PREFIXED);
        let run = Run::new(common::random_run_events(&mut rng, &inst, DESK.max_time)).unwrap();
        let u = universe(&inst, &[]);
        let interp = if rng.gen_bool(0.3) {
            least_above(&run, &random_interp(&mut rng, &u))
        } else {
            random_interp(&mut rng, &u)
        };
        let mut by_formula = true;
        for (c, _) in run.issued().filter(|(c, _)| !c.is_crl()) {
            let phi = Formula::implies(
                Formula::and(Formula::Issued(c.clone()), Formula::Valid(c.clone())),
                c.formula().unwrap(),
            );
            // Issue times can lie past the horizon, which only tracks
            // validity endpoints.
            for t in 0..=u.horizon.max(DESK.max_time) + 1 {
                for k in &u.keys {
                    by_formula &= eval_formula(&run, &interp, k, t, &phi);
                }
            }
        }
        prop_assert_eq!(is_consistent(&run, &interp), by_formula);
    }

    #[test]
    fn minimum_is_consistent_and_below_random_consistent(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, PREFIXED);
        let run = Run::new(common::random_run_events(&mut rng, &inst, DESK.max_time)).unwrap();
        let u = universe(&inst, &[]);
        let min = minimal_interpretation(&run, &u);
        prop_assert!(is_consistent(&run, &min));
        let other = least_above(&run, &random_interp(&mut rng, &u));
        prop_assert!(is_consistent(&run, &other));
        prop_assert!(spki_core::semantics::interp_leq(&min, &other));
    }

    #[test]
    fn rule_sets_are_nested(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, DESK);
        let inputs = tuples_with_provenance(&inst.certs, &inst.crls);
        let cfg = ClosureConfig::default();
        let rs0 = Closure::build(inputs.clone(), RuleSet::Rs0, &cfg, None).unwrap();
        let rs1 = Closure::build(inputs.clone(), RuleSet::Rs1, &cfg, None).unwrap();
        for t in rs0.tuples().filter(|t| !matches!(t, Tuple::Bind3(_))) {
            prop_assert!(rs1.prove(t, RuleSet::Rs1).unwrap().is_some(), "{} not in RS1", t);
        }
        for t in rs1.tuples().filter(|t| !matches!(t, Tuple::Bind3(_))) {
            prop_assert!(rs1.prove(t, RuleSet::Rs2).unwrap().is_some(), "{} not in RS2", t);
        }
    }

    #[test]
    fn every_derivation_replays(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, PREFIXED);
        let inputs = tuples_with_provenance(&inst.certs, &inst.crls);
        let closure = Closure::build(inputs, RuleSet::Rs2, &ClosureConfig::default(), None).unwrap();
        for i in 0..closure.len() {
            let d = closure.derivation(i);
            prop_assert_eq!(d.conclusion(), Some(closure.tuple(i)));
            prop_assert!(d.replay().is_ok(), "{}", d);
        }
    }

    /// A 3-tuple and a 4-tuple meeting at its subject combine.
    #[test]
    fn three_tuples_rewrite_four_tuples(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, DESK);
        let inputs = tuples_with_provenance(&inst.certs, &inst.crls);
        let closure = Closure::build(inputs, RuleSet::Rs1, &ClosureConfig::default(), None).unwrap();
        let bound = closure.bound();
        let members: Vec<Tuple> = closure.tuples().cloned().collect();
        for t in &members {
            let Tuple::Name4(n) = t else { continue };
            for b in closure.bind3_reach(&n.subject) {
                let v = b.validity.intersect(&n.validity);
                if v.is_empty() || b.rhs.leaf_count() > bound {
                    continue;
                }
                let group = closure.name4_group(&n.issuer, &n.name, &b.rhs);
                prop_assert!(
                    group.iter().any(|&i| closure.tuple(i).validity().includes(&v)),
                    "{} with {} -> {}", t, b.rhs, v
                );
            }
        }
    }

    #[test]
    fn three_tuples_extend_by_names(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, DESK);
        let inputs = tuples_with_provenance(&inst.certs, &inst.crls);
        let closure = Closure::build(inputs, RuleSet::Rs1, &ClosureConfig::default(), None).unwrap();
        let bound = closure.bound();
        for p in closure.bind3_seeds().clone() {
            for b in closure.bind3_reach(&p) {
                for n in &inst.names {
                    let (lhs, rhs) = (b.lhs.child(n.clone()), b.rhs.child(n.clone()));
                    if lhs.leaf_count() > bound || rhs.leaf_count() > bound {
                        continue;
                    }
                    let reach = closure.bind3_reach(&lhs);
                    prop_assert!(
                        reach.iter().any(|c| c.rhs == rhs && c.validity.includes(&b.validity)),
                        "{} -> {} does not extend by {}", b.lhs, b.rhs, n
                    );
                }
            }
        }
    }

    /// Soundness with pattern tags, which the acceptance distribution omits.
    #[test]
    fn closure_tuples_hold_with_prefix_tags(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let inst = common::instance(&mut rng, PREFIXED);
        let inputs = tuples_with_provenance(&inst.certs, &inst.crls);
        let closure = Closure::build(inputs, RuleSet::Rs2, &ClosureConfig::default(), None).unwrap();
        let phis: Vec<Formula> = closure.tuples().filter_map(cert_of_tuple).map(|c| c.formula().unwrap()).collect();
        let model = ClosedModel::new(&inst.certs, &inst.crls, &universe(&inst, &phis)).unwrap();
        for phi in &phis {
            prop_assert!(model.check(phi).is_entailed(), "{}", phi);
        }
    }

    #[test]
    fn witnesses_refute_with_prefix_tags(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut g = Gen::new(&mut rng, PREFIXED);
        let inst = g.instance();
        let c = g.cert();
        let cfg = ClosureConfig::default();
        let target = c.to_tuple().unwrap();
        let inputs = tuples_with_provenance(&inst.certs, &inst.crls);
        let derivable_rs2 = derivable(inputs, &target, RuleSet::Rs2, &cfg).unwrap().is_some();
        let size: usize = inst.certs.iter().map(Certificate::size).sum::<usize>() + c.size();
        let supply = (0..=size).map(|i| Key::new(format!("k-w{i}")).unwrap()).collect();
        let w = build_completeness_witness(&inst.certs, &inst.crls, &c, &supply, &cfg).unwrap();
        prop_assert_eq!(w.is_none(), derivable_rs2);
    }

    #[test]
    fn random_certificates_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let mut g = Gen::new(&mut rng, PREFIXED);
        let c = if g.rng.gen_bool(0.3) {
            let inner: Vec<Certificate> = (0..3).map(|_| g.cert()).collect();
            g.crl(&inner)
        } else {
            g.cert()
        };
        prop_assert_eq!(parse_certificate(&encode_certificate(&c)).unwrap(), c);
    }
}

#[test]
fn given_tuples_are_closure_members() {
    let mut rng = common::rng(7);
    for _ in 0..50 {
        let inst = common::instance(&mut rng, DESK);
        let ts: Vec<(Tuple, Provenance)> = tuples_with_provenance(&inst.certs, &inst.crls);
        let closure = Closure::build(ts.clone(), RuleSet::Rs0, &ClosureConfig::default(), None).unwrap();
        assert!(ts.iter().all(|(t, _)| closure.contains(t)));
    }
}
