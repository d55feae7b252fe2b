use proptest::prelude::*;

use tt_krylov::datagen::{tensor_from_bytes, tensor_to_bytes};
use tt_krylov::decompose::{decompose, tt_svd};
use tt_krylov::linalg::{economy_qr, gaussian_matrix, orthogonality_residual, truncated_svd, Truncation};
use tt_krylov::metrics::{psnr, relative_error};
use tt_krylov::{DenseTensor, Method, RngSeed, SketchConfig, TruncationSpec, TtTensor};

fn random_tensor(dims: &[usize], seed: u64) -> DenseTensor {
    let len = dims.iter().product();
    DenseTensor::new(dims.to_vec(), gaussian_matrix(len, 1, RngSeed(seed)).as_slice().to_vec())
        .unwrap()
}

fn dims_strategy(max_order: usize, max_dim: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_dim, 1..=max_order)
}

/// Feasible ranks: each step's unfolding is (r_{n-1} I_n) x ∏_{k>n} I_k.
fn feasible_ranks(dims: &[usize], picks: &[usize]) -> Vec<usize> {
    let mut ranks = Vec::new();
    let mut prev = 1;
    for n in 0..dims.len() - 1 {
        let cap = (prev * dims[n]).min(dims[n + 1..].iter().product());
        let r = 1 + picks[n] % cap;
        ranks.push(r);
        prev = r;
    }
    ranks
}

fn method_strategy() -> impl Strategy<Value = Method> {
    prop::sample::select(Method::ALL.to_vec())
}

proptest! {
    #[test]
    fn reshape_and_matricize_keep_entries(dims in dims_strategy(4, 5), seed in any::<u64>()) {
        let t = random_tensor(&dims, seed);
        let flat = t.reshape(&[t.len()]).unwrap();
        prop_assert_eq!(flat.values(), t.values());
        let back = flat.reshape(&dims).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert!(t.matricize(0).is_err());
        prop_assert!(t.matricize(dims.len()).is_err());
        for split in 1..dims.len() {
            let m = t.matricize(split).unwrap();
            prop_assert_eq!(m.nrows(), dims[..split].iter().product::<usize>());
            prop_assert_eq!(m.as_slice(), t.values());
            prop_assert!((m.norm() - t.frobenius_norm()).abs() <= 1e-12 * (1.0 + m.norm()));
        }
    }

    #[test]
    fn dense_bytes_round_trip(dims in dims_strategy(4, 4), values in prop::collection::vec(any::<f64>(), 256)) {
        let len: usize = dims.iter().product();
        let t = DenseTensor::new(dims, values[..len].to_vec()).unwrap();
        let back = tensor_from_bytes(&tensor_to_bytes(&t)).unwrap();
        prop_assert_eq!(back.dims(), t.dims());
        for (a, b) in back.values().iter().zip(t.values()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_bytes_are_rejected(dims in dims_strategy(3, 4), seed in any::<u64>(), cut in 1usize..8) {
        let bytes = tensor_to_bytes(&random_tensor(&dims, seed));
        prop_assert!(tensor_from_bytes(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn tt_bytes_round_trip(dims in dims_strategy(4, 4), picks in prop::collection::vec(0usize..6, 3), seed in any::<u64>()) {
        let mut full = vec![1];
        for n in 0..dims.len() - 1 {
            full.push(1 + picks[n]);
        }
        full.push(1);
        let cores: Vec<_> = (0..dims.len())
            .map(|n| random_tensor(&[full[n], dims[n], full[n + 1]], seed.wrapping_add(n as u64)))
            .collect();
        let tt = TtTensor::new(cores).unwrap();
        let back = TtTensor::from_bytes(&tt.to_bytes()).unwrap();
        prop_assert_eq!(&back, &tt);
        prop_assert_eq!(tt.ranks(), full);
    }

    #[test]
    fn mode_products_compose(dims in dims_strategy(3, 4), j in 1usize..4, k in 1usize..4, seed in any::<u64>()) {
        let t = random_tensor(&dims, seed);
        let mode = (seed as usize) % dims.len();
        let a = gaussian_matrix(j, dims[mode], RngSeed(seed).derive(1));
        let b = gaussian_matrix(k, j, RngSeed(seed).derive(2));
        let lhs = t.mode_n_product(&a, mode).unwrap().mode_n_product(&b, mode).unwrap();
        let rhs = t.mode_n_product(&(&b * &a), mode).unwrap();
        prop_assert_eq!(lhs.dims(), rhs.dims());
        let scale = 1.0 + rhs.frobenius_norm();
        prop_assert!(lhs.sub(&rhs).unwrap().frobenius_norm() <= 1e-12 * scale);

        if dims.len() > 1 {
            let other = (mode + 1) % dims.len();
            let c = gaussian_matrix(2, dims[other], RngSeed(seed).derive(3));
            let x = t.mode_n_product(&a, mode).unwrap().mode_n_product(&c, other).unwrap();
            let y = t.mode_n_product(&c, other).unwrap().mode_n_product(&a, mode).unwrap();
            prop_assert!(x.sub(&y).unwrap().frobenius_norm() <= 1e-12 * (1.0 + x.frobenius_norm()));
        }
    }

    #[test]
    fn economy_qr_factors(m in 1usize..12, n in 1usize..12, seed in any::<u64>()) {
        let a = gaussian_matrix(m, n, RngSeed(seed));
        let (q, r) = economy_qr(&a);
        let k = m.min(n);
        prop_assert_eq!((q.nrows(), q.ncols(), r.nrows(), r.ncols()), (m, k, k, n));
        prop_assert!(orthogonality_residual(&q) <= 1e-12);
        for j in 0..n {
            for i in j + 1..k {
                prop_assert_eq!(r[(i, j)], 0.0);
            }
        }
        prop_assert!((&q * &r - &a).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn delta_truncation_picks_smallest_rank(m in 1usize..9, n in 1usize..9, frac in 0.0f64..1.0, seed in any::<u64>()) {
        let a = gaussian_matrix(m, n, RngSeed(seed));
        let delta = frac * a.norm();
        let full = truncated_svd(&a, Truncation::Rank(m.min(n))).unwrap();
        let cut = truncated_svd(&a, Truncation::Delta(delta)).unwrap();
        let r = cut.rank();
        prop_assert!(r >= 1);
        let tail = |j: usize| full.s[j..].iter().map(|s| s * s).sum::<f64>().sqrt();
        prop_assert!(r == 1 || tail(r) <= delta);
        prop_assert!(r == 1 || tail(r - 1) > delta);
        let err = (cut.reconstruct() - &a).norm();
        prop_assert!((err - tail(r)).abs() <= 1e-10 * (1.0 + a.norm()));
        prop_assert!(full.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn psnr_follows_relative_error(dims in dims_strategy(3, 5), seed in any::<u64>(), eps in 1e-6f64..1.0) {
        let a = random_tensor(&dims, seed);
        let ahat = a.sub(&random_tensor(&dims, seed ^ 1).scale(eps)).unwrap();
        let rel = relative_error(&a, &ahat).unwrap();
        let err = rel * a.frobenius_norm();
        let peak = ahat.max_abs();
        let want = 10.0 * ((a.len() as f64) * peak * peak / (err * err)).log10();
        prop_assert!((psnr(&a, &ahat).unwrap() - want).abs() <= 1e-9 * (1.0 + want.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn decompositions_keep_their_contracts(
        dims in prop::collection::vec(2usize..6, 2..=4),
        picks in prop::collection::vec(0usize..6, 3),
        method in method_strategy(),
        p in 0usize..4,
        q in 1usize..3,
        seed in any::<u64>(),
    ) {
        let t = random_tensor(&dims, seed);
        let ranks = feasible_ranks(&dims, &picks);
        let cfg = SketchConfig::new(ranks.clone()).with_oversampling(p).with_depth(q).with_seed(seed);
        let (tt, trace) = decompose(method, &t, &cfg).unwrap();
        let mut want = vec![1];
        want.extend_from_slice(&ranks);
        want.push(1);
        prop_assert_eq!(tt.ranks(), want);
        prop_assert_eq!(tt.dims(), dims.clone());
        prop_assert_eq!(trace.steps.len(), dims.len() - 1);
        let report = tt.validate();
        prop_assert!(report.structurally_valid());
        prop_assert!(report.left_orthogonal(1e-10));
        let err_sq = t.sub(&tt.reconstruct().unwrap()).unwrap().frobenius_norm().powi(2);
        let norm_sq = t.frobenius_norm().powi(2);
        prop_assert!((err_sq - trace.residual_sum_sq()).abs() <= 1e-8 * err_sq + 1e-24 * norm_sq);
        prop_assert!(err_sq <= norm_sq * (1.0 + 1e-12));
    }

    #[test]
    fn full_rank_svd_is_exact(dims in prop::collection::vec(1usize..5, 1..=4), seed in any::<u64>()) {
        let t = random_tensor(&dims, seed);
        let mut ranks = Vec::new();
        let mut prev = 1;
        for n in 0..dims.len() - 1 {
            prev = (prev * dims[n]).min(dims[n + 1..].iter().product());
            ranks.push(prev);
        }
        let (tt, _) = tt_svd(&t, &TruncationSpec::Ranks(ranks)).unwrap();
        prop_assert!(relative_error(&t, &tt.reconstruct().unwrap()).unwrap() <= 1e-10);
    }

    #[test]
    fn epsilon_mode_meets_accuracy(dims in prop::collection::vec(2usize..6, 2..=4), eps in 0.0f64..0.8, seed in any::<u64>()) {
        let t = random_tensor(&dims, seed);
        let (tt, _) = tt_svd(&t, &TruncationSpec::Epsilon(eps)).unwrap();
        prop_assert!(relative_error(&t, &tt.reconstruct().unwrap()).unwrap() <= eps + 1e-12);
    }
}
