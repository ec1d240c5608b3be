use proptest::prelude::*;
use wiretap_csi::{Alphabet, JointPmf};

fn joint(names: &[&str], sizes: &[usize], weights: &[f64]) -> JointPmf {
    let vars = names
        .iter()
        .zip(sizes)
        .map(|(n, &k)| Alphabet::new(*n, k).unwrap())
        .collect();
    let total: f64 = weights.iter().sum();
    JointPmf::new(vars, weights.iter().map(|w| w / total).collect()).unwrap()
}

/// Weights with a fair share of exact zeros, so structural zeros get exercised.
fn weights(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![1 => Just(0.0), 4 => 0.001f64..1.0], len)
        .prop_filter("not all zero", |w| w.iter().sum::<f64>() > 0.0)
}

fn row(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, len).prop_map(|w| {
        let t: f64 = w.iter().sum();
        w.into_iter().map(|x| x / t).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn chain_rule(w in weights(16)) {
        let p = joint(&["A", "B", "C", "D"], &[2, 2, 2, 2], &w);
        let lhs = p.mutual_information(&["A"], &["B", "C"]).unwrap().0;
        let rhs = p.mutual_information(&["A"], &["C"]).unwrap().0
            + p.conditional_mutual_information(&["A"], &["B"], &["C"]).unwrap().0;
        prop_assert!((lhs - rhs).abs() <= 1e-10, "{lhs} vs {rhs}");

        let lhs = p.entropy(&["A", "B", "D"]).unwrap().0;
        let rhs = p.entropy(&["D"]).unwrap().0
            + p.conditional_entropy(&["A", "B"], &["D"]).unwrap().0;
        prop_assert!((lhs - rhs).abs() <= 1e-10);
    }

    #[test]
    fn nonnegativity_and_ceiling(w in weights(24)) {
        let p = joint(&["A", "B", "C"], &[3, 2, 4], &w);
        for (v, k) in [("A", 3.0f64), ("B", 2.0), ("C", 4.0)] {
            let h = p.entropy(&[v]).unwrap().0;
            prop_assert!(h >= 0.0);
            prop_assert!(h <= k.log2() + 1e-10);
        }
        prop_assert!(p.conditional_entropy(&["A"], &["B", "C"]).unwrap().0 >= 0.0);
        prop_assert!(p.mutual_information(&["A"], &["C"]).unwrap().0 >= 0.0);
        prop_assert!(p.conditional_mutual_information(&["A"], &["C"], &["B"]).unwrap().0 >= 0.0);
    }

    #[test]
    fn data_processing(pa in row(3), pb in prop::collection::vec(row(3), 3),
                       pc in prop::collection::vec(row(2), 3)) {
        let vars = vec![
            Alphabet::new("A", 3).unwrap(),
            Alphabet::new("B", 3).unwrap(),
            Alphabet::new("C", 2).unwrap(),
        ];
        let p = JointPmf::from_fn(vars, |i| pa[i[0]] * pb[i[0]][i[1]] * pc[i[1]][i[2]]).unwrap();
        let iac = p.mutual_information(&["A"], &["C"]).unwrap().0;
        let iab = p.mutual_information(&["A"], &["B"]).unwrap().0;
        prop_assert!(iac <= iab + 1e-10, "{iac} > {iab}");
        // the chain is Markov, so I(A;C|B) vanishes
        let cmi = p.conditional_mutual_information(&["A"], &["C"], &["B"]).unwrap().0;
        prop_assert!(cmi.abs() <= 1e-10);
    }

    #[test]
    fn marginal_consistency(w in weights(24)) {
        let p = joint(&["A", "B", "C"], &[2, 3, 4], &w);
        for keep in [&["A"][..], &["C", "A"], &["B", "C"]] {
            let direct = p.entropy(keep).unwrap().0;
            let via = p.marginalize(keep).unwrap().entropy(keep).unwrap().0;
            prop_assert!((direct - via).abs() <= 1e-12);
        }
    }
}

#[test]
fn identical_copies_share_all_information() {
    let p = joint(&["A", "B"], &[2, 2], &[0.3, 0.0, 0.0, 0.7]);
    let h = p.entropy(&["A"]).unwrap().0;
    assert!((p.mutual_information(&["A"], &["B"]).unwrap().0 - h).abs() < 1e-15);
    assert_eq!(p.conditional_entropy(&["A"], &["B"]).unwrap().0, 0.0);
}
