use askwell_hv::validate::append_noise_variable;
use askwell_hv::{compute_joint, generate_synthetic_net, hv_score, mutual_information, NetKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn kind() -> impl Strategy<Value = NetKind> {
    prop::sample::select(NetKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_is_normalized(k in kind(), size in 2usize..10, seed in any::<u64>()) {
        let net = generate_synthetic_net(k, size, seed).unwrap();
        let joint = compute_joint(&net).unwrap();
        prop_assert!((joint.total_mass() - 1.0).abs() < 1e-9);
        prop_assert!(joint.probabilities().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn mi_is_bounded_and_monotone(k in kind(), size in 3usize..9, seed in any::<u64>(), mask in any::<u32>()) {
        let net = generate_synthetic_net(k, size, seed).unwrap();
        let joint = compute_joint(&net).unwrap();
        let pool = net.candidate_names();
        let subset: Vec<String> = pool.iter().enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0).map(|(_, n)| n.clone()).collect();
        let mi = mutual_information(&joint, net.target(), &subset).unwrap();
        let h_t = joint.entropy(&[net.target()]).unwrap();
        let h_s = joint.entropy(&subset).unwrap();
        prop_assert!(mi >= 0.0);
        prop_assert!(mi <= h_t.min(h_s) + 1e-9);
        for extra in pool.iter().filter(|n| !subset.contains(n)) {
            let mut bigger = subset.clone();
            bigger.push(extra.clone());
            let mi2 = mutual_information(&joint, net.target(), &bigger).unwrap();
            prop_assert!(mi2 >= mi - 1e-9);
        }
    }

    #[test]
    fn independent_variable_dilutes_hv(k in kind(), size in 2usize..8, seed in any::<u64>()) {
        let net = generate_synthetic_net(k, size, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noisy = append_noise_variable(&net, &mut rng).unwrap();
        let pool = net.candidate_names();
        let base = hv_score(&compute_joint(&net).unwrap(), net.target(), &pool).unwrap();
        let mut extended_set = pool.clone();
        extended_set.push(noisy.variables().last().unwrap().name.clone());
        let extended = hv_score(&compute_joint(&noisy).unwrap(), net.target(), &extended_set).unwrap();
        prop_assert!((extended.mi - base.mi).abs() < 1e-9);
        if base.hv > 0.0 {
            prop_assert!(extended.hv < base.hv);
        }
    }

    #[test]
    fn data_processing_on_chains(size in 3usize..10, seed in any::<u64>()) {
        let net = generate_synthetic_net(NetKind::Chain, size, seed).unwrap();
        let joint = compute_joint(&net).unwrap();
        let names = net.candidate_names();
        for w in names.windows(2) {
            let far = mutual_information(&joint, net.target(), &[&w[0]]).unwrap();
            let near = mutual_information(&joint, net.target(), &[&w[1]]).unwrap();
            prop_assert!(far <= near + 1e-9);
        }
    }
}
