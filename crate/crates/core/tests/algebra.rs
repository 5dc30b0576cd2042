use proptest::prelude::*;
use seamqec::circuit::{bell_reduce, channel_pauli_terms, NoiseChannel};
use seamqec::pauli::{conjugate_through_gate, CliffordOp, Pauli, PauliString};

const N: usize = 5;

fn letter() -> impl Strategy<Value = Option<Pauli>> {
    prop_oneof![Just(None), Just(Some(Pauli::X)), Just(Some(Pauli::Y)), Just(Some(Pauli::Z))]
}

fn pauli_string() -> impl Strategy<Value = PauliString> {
    (proptest::collection::vec(letter(), N), any::<bool>()).prop_map(|(ls, neg)| {
        let terms: Vec<(usize, Pauli)> = ls.iter().enumerate().filter_map(|(q, l)| l.map(|l| (q, l))).collect();
        let p = PauliString::from_terms(N, &terms);
        if neg {
            p.negated()
        } else {
            p
        }
    })
}

fn unitary_gate() -> impl Strategy<Value = CliffordOp> {
    prop_oneof![
        (0..N).prop_map(CliffordOp::H),
        (0..N, 1..N).prop_map(|(c, k)| CliffordOp::Cnot(c, (c + k) % N)),
    ]
}

proptest! {
    #[test]
    fn product_is_self_inverse(a in pauli_string()) {
        prop_assert!(a.mul(&a).is_identity());
        prop_assert!(!a.unsigned().mul(&a.unsigned()).is_negative());
    }

    #[test]
    fn letters_multiply_associatively(a in pauli_string(), b in pauli_string(), c in pauli_string()) {
        prop_assert_eq!(a.mul(&b).mul(&c).unsigned(), a.mul(&b.mul(&c)).unsigned());
    }

    #[test]
    fn sign_flip_under_swap_iff_anticommuting(a in pauli_string(), b in pauli_string()) {
        prop_assert_eq!(a.commutes(&b), b.commutes(&a));
        prop_assert_eq!(a.mul(&b).unsigned(), b.mul(&a).unsigned());
        let same_sign = a.mul(&b).is_negative() == b.mul(&a).is_negative();
        prop_assert_eq!(same_sign, a.commutes(&b));
    }

    #[test]
    fn conjugation_preserves_commutation(a in pauli_string(), b in pauli_string(), g in unitary_gate()) {
        let (ga, gb) = (conjugate_through_gate(&a, g).pauli, conjugate_through_gate(&b, g).pauli);
        prop_assert_eq!(ga.commutes(&gb), a.commutes(&b));
        prop_assert_eq!(ga.weight() == 0, a.weight() == 0);
    }

    #[test]
    fn conjugation_is_a_homomorphism(a in pauli_string(), b in pauli_string(), g in unitary_gate()) {
        let lhs = conjugate_through_gate(&a.mul(&b), g).pauli;
        let rhs = conjugate_through_gate(&a, g).pauli.mul(&conjugate_through_gate(&b, g).pauli);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn cnot_is_an_involution(a in pauli_string(), c in 0..N, k in 1..N) {
        let g = CliffordOp::Cnot(c, (c + k) % N);
        let twice = conjugate_through_gate(&conjugate_through_gate(&a, g).pauli, g).pauli;
        prop_assert_eq!(twice, a);
    }

    #[test]
    fn channel_terms_sum_to_channel_probability(p in 0.0f64..0.999, which in 0usize..4) {
        let ch = [NoiseChannel::Depol1(p), NoiseChannel::Depol2(p), NoiseChannel::ErrX(p), NoiseChannel::BellDepol2(p)][which];
        let terms = channel_pauli_terms(ch).unwrap();
        let total: f64 = terms.iter().map(|t| t.1).sum();
        prop_assert!((total - p).abs() <= 1e-15 * p.max(1e-300) * terms.len() as f64);
        prop_assert!(terms.iter().all(|t| !t.0.is_identity()));
    }

    #[test]
    fn bell_view_masses(p in 0.0f64..0.999) {
        let raw = channel_pauli_terms(NoiseChannel::BellDepol2(p)).unwrap();
        prop_assert_eq!(raw.len(), 15);
        let stabilizers: Vec<PauliString> = ["II", "XX", "ZZ", "YY"].iter().map(|s| PauliString::parse_dense(s).unwrap()).collect();
        let mut mass = std::collections::BTreeMap::new();
        for (t, q) in &raw {
            match bell_reduce(t) {
                Some(r) => {
                    let rest = t.mul(&PauliString::single(2, 0, r)).unsigned();
                    prop_assert!(stabilizers.contains(&rest), "{} reduced to {:?}", t, r);
                    *mass.entry(r).or_insert(0.0) += q;
                }
                None => prop_assert!(stabilizers.contains(&t.unsigned())),
            }
        }
        prop_assert_eq!(mass.len(), 3);
        for m in mass.values() {
            prop_assert!((m - 4.0 * p / 15.0).abs() <= 1e-16);
        }
    }
}

#[test]
fn standard_conjugation_rules() {
    let x0 = PauliString::parse_dense("XI").unwrap();
    assert_eq!(conjugate_through_gate(&x0, CliffordOp::Cnot(0, 1)).pauli, PauliString::parse_dense("XX").unwrap());
    let z1 = PauliString::parse_dense("IZ").unwrap();
    assert_eq!(conjugate_through_gate(&z1, CliffordOp::Cnot(0, 1)).pauli, PauliString::parse_dense("ZZ").unwrap());
    assert_eq!(conjugate_through_gate(&x0, CliffordOp::H(0)).pauli, PauliString::parse_dense("ZI").unwrap());
}

#[test]
fn channel_examples() {
    let t = channel_pauli_terms(NoiseChannel::Depol1(0.3)).unwrap();
    assert!(t.iter().all(|x| (x.1 - 0.1).abs() < 1e-15));
    let t = channel_pauli_terms(NoiseChannel::Depol2(0.15)).unwrap();
    assert_eq!(t.len(), 15);
    assert!(t.iter().all(|x| (x.1 - 0.01).abs() < 1e-15));
    let r = seamqec::circuit::bell_reduced_terms(0.15).unwrap();
    assert_eq!(r.len(), 3);
    assert!(r.iter().all(|x| (x.1 - 0.04).abs() < 1e-15));
}
