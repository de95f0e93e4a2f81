use coalfix::gen::{self, FormulaShape};
use coalfix::lattice::{Predicate, Table};
use coalfix::models::{quotient_by_indices, Model, ModelKind};
use coalfix::semantics::{
    check_invariance, eval_initial, eval_least, interpret_modal, EvalOptions, LeastSystem,
};
use coalfix::syntax::{InstanceId, Modality};
use proptest::prelude::*;
use rand::Rng;

fn kind_strategy() -> impl Strategy<Value = ModelKind> {
    prop_oneof![
        Just(ModelKind::Kripke),
        Just(ModelKind::Labeled),
        Just(ModelKind::Prob)
    ]
}

fn instance_for(kind: ModelKind, pick: usize) -> InstanceId {
    let ids: Vec<InstanceId> = InstanceId::ALL
        .into_iter()
        .filter(|i| i.supports(kind))
        .collect();
    ids[pick % ids.len()]
}

fn random_predicate(rng: &mut gen::GenRng, model: &Model) -> Predicate {
    let n = model.len();
    if model.is_quantitative() {
        Predicate::values((0..n).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap()
    } else {
        Predicate::from_states(n, (0..n).filter(|_| rng.gen_bool(0.5)))
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_equals_initial_on_set_models(seed in any::<u64>(), labeled in any::<bool>(), pick in 0usize..3) {
        let mut rng = gen::rng(seed);
        let kind = if labeled { ModelKind::Labeled } else { ModelKind::Kripke };
        let n = rng.gen_range(1..=6);
        let m = gen::model(&mut rng, kind, n);
        let f = gen::formula(&mut rng, &FormulaShape::for_model(instance_for(kind, pick), &m));
        let a = eval_least(&m, &f).unwrap().value;
        let b = eval_initial(&m, &f).unwrap().value;
        prop_assert_eq!(a, b, "{}", f);
    }

    #[test]
    fn least_close_to_initial_on_prob_models(seed in any::<u64>()) {
        let mut rng = gen::rng(seed);
        let n = rng.gen_range(1..=6);
        let m = gen::model(&mut rng, ModelKind::Prob, n);
        let f = gen::formula(&mut rng, &FormulaShape::for_model(InstanceId::Quant, &m));
        let a = eval_least(&m, &f).unwrap().value;
        let b = eval_initial(&m, &f).unwrap().value;
        prop_assert!(a.distance(&b).unwrap() < 1e-6, "{}: {} vs {}", f, a, b);
    }

    #[test]
    fn solution_is_a_fixpoint_below_every_iterate_from_top(seed in any::<u64>(), kind in kind_strategy(), pick in 0usize..3) {
        let mut rng = gen::rng(seed);
        let n = rng.gen_range(1..=6);
        let m = gen::model(&mut rng, kind, n);
        let mut shape = FormulaShape::for_model(instance_for(kind, pick), &m);
        shape.negation = false;
        shape.flat = false;
        let f = gen::formula(&mut rng, &shape);
        let sys = LeastSystem::new(&m, &f, &EvalOptions::default()).unwrap();
        let sol = sys.solve().unwrap().table;
        let again = sys.apply(&sol).unwrap();
        prop_assert!(sol.distance(&again).unwrap() < 1e-6);
        // top is a post-fixpoint and so is each iterate below it
        let mut post = Table::top(sys.context(), sol.shared_keys());
        for _ in 0..4 {
            let below = sol.values().iter().zip(post.values()).all(|(a, b)| {
                (0..a.width()).all(|i| a.at(i) <= b.at(i) + 1e-6)
            });
            prop_assert!(below, "{}", f);
            post = sys.apply(&post).unwrap();
        }
    }

    #[test]
    fn modal_liftings_are_monotone(seed in any::<u64>(), kind in kind_strategy()) {
        let mut rng = gen::rng(seed);
        let n = rng.gen_range(1..=6);
        let m = gen::model(&mut rng, kind, n);
        let small = random_predicate(&mut rng, &m);
        let extra = random_predicate(&mut rng, &m);
        let big = small.join(&extra).unwrap();
        let modalities: Vec<Modality> = match &m {
            Model::Kripke(_) => vec![Modality::Dia, Modality::Box],
            Model::Labeled(l) => {
                let mut v = vec![Modality::Dia, Modality::Box];
                for a in l.labels() {
                    v.push(Modality::DiaLabel(a.clone()));
                    v.push(Modality::BoxLabel(a.clone()));
                }
                v
            }
            Model::Prob(_) => vec![Modality::Dia],
        };
        for md in &modalities {
            let lo = interpret_modal(&m, md, std::slice::from_ref(&small)).unwrap();
            let hi = interpret_modal(&m, md, std::slice::from_ref(&big)).unwrap();
            prop_assert!((0..n).all(|i| lo.at(i) <= hi.at(i) + 1e-12), "{:?}: {} vs {}", md, lo, hi);
        }
    }

    #[test]
    fn quotients_preserve_every_closure_value(seed in any::<u64>(), kind in kind_strategy(), pick in 0usize..3) {
        let mut rng = gen::rng(seed);
        let n = rng.gen_range(1..=4);
        let base = gen::model(&mut rng, kind, n);
        let (big, blocks) = gen::blow_up(&mut rng, &base, 3);
        let (quotient, map) = quotient_by_indices(&big, &blocks).unwrap();
        let mut shape = FormulaShape::for_model(instance_for(kind, pick), &big);
        shape.negation = shape.instance.is_set_based();
        let f = gen::formula(&mut rng, &shape);
        let report = check_invariance(&big, &quotient, &map, &f, &EvalOptions::default()).unwrap();
        prop_assert!(report.holds(), "{}: {:?}", f, report.violation);
    }
}
