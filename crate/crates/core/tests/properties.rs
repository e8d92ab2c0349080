use proptest::prelude::*;
use rosarch_core::eval::{compare_models, compute_metrics, evaluate, ElementKind, ElementSets};
use rosarch_core::model::Remapping;
use rosarch_core::names::{apply_remappings, resolve_name};
use rosarch_core::Diagnostics;

fn segment() -> impl Strategy<Value = String> {
    "[a-z][a-z0-9_]{0,6}"
}

fn namespace() -> impl Strategy<Value = String> {
    prop::collection::vec(segment(), 0..3).prop_map(|s| format!("/{}", s.join("/")))
}

fn relative() -> impl Strategy<Value = String> {
    prop::collection::vec(segment(), 1..4).prop_map(|s| s.join("/"))
}

fn sets() -> impl Strategy<Value = ElementSets> {
    let kind = prop::sample::select(ElementKind::ALL.to_vec());
    let key = prop::collection::vec(prop::sample::select(vec!["x", "y", "z"]), 1..3);
    prop::collection::vec((kind, key), 0..40).prop_map(|items| {
        let mut s = ElementSets::default();
        for (k, key) in items {
            s.add(k, key);
        }
        s
    })
}

proptest! {
    #[test]
    fn relative_names_join_the_namespace(ns in namespace(), name in relative(), node in segment()) {
        let r = resolve_name(&name, &ns, &node).unwrap();
        let expected = if ns == "/" { format!("/{name}") } else { format!("{ns}/{name}") };
        prop_assert_eq!(&r.absolute, &expected);
        prop_assert_eq!(resolve_name(&r.absolute, "/elsewhere", &node).unwrap().absolute, expected);
    }

    #[test]
    fn private_names_sit_under_the_node(ns in namespace(), name in relative(), node in segment()) {
        let r = resolve_name(&format!("~/{name}"), &ns, &node).unwrap();
        let base = if ns == "/" { String::new() } else { ns.clone() };
        prop_assert_eq!(r.absolute, format!("{base}/{node}/{name}"));
    }

    #[test]
    fn remapping_is_a_single_pass(ns in namespace(), a in segment(), b in segment(), c in segment(), node in segment()) {
        prop_assume!(a != b);
        let rules = vec![Remapping::new(a.clone(), b.clone()), Remapping::new(b.clone(), c)];
        let from = resolve_name(&a, &ns, &node).unwrap();
        let to = resolve_name(&b, &ns, &node).unwrap();
        let got = apply_remappings(&from, &rules, "prop", &mut Diagnostics::new());
        prop_assert_eq!(got.absolute, to.absolute);
    }

    #[test]
    fn self_comparison_is_perfect(s in sets()) {
        for (kind, c) in compare_models(&s, &s) {
            prop_assert_eq!(c.fp + c.fn_, 0);
            prop_assert_eq!(c.tp, s.count(kind));
            prop_assert_eq!(compute_metrics(c).f1, 1.0);
        }
    }

    #[test]
    fn swapping_sides_swaps_errors(a in sets(), b in sets()) {
        let ab = compare_models(&a, &b);
        let ba = compare_models(&b, &a);
        prop_assert_eq!(ab.len(), ba.len());
        for (kind, c) in &ab {
            let d = ba[kind];
            prop_assert_eq!((c.tp, c.fp, c.fn_), (d.tp, d.fn_, d.fp));
            let (m, n) = (compute_metrics(*c), compute_metrics(d));
            prop_assert!((m.f1 - n.f1).abs() < 1e-12);
        }
    }

    #[test]
    fn macro_values_stay_within_bounds(a in sets(), b in sets()) {
        let report = evaluate(&a, &b);
        for level in &report.macro_average {
            let f1s: Vec<f64> = report.per_element.iter().filter(|k| k.level == level.level).map(|k| k.metrics.f1).collect();
            let lo = f1s.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(level.metrics.f1 >= lo - 1e-12 && level.metrics.f1 <= hi + 1e-12);
            prop_assert!((0.0..=1.0).contains(&level.metrics.precision));
        }
    }
}
