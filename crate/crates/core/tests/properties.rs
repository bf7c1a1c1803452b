use std::collections::BTreeSet;

use approx::assert_abs_diff_eq;
use hstc::bands::{select_bands, BandRanking};
use hstc::data::{extract_patch, split_pixels, HyperCube, LabelMap, Model, ModelFile};
use hstc::fnn::{sigmoid, DenseFnnModel, Rank1FnnModel};
use hstc::linear::TensorLrModel;
use hstc::preprocess::InputTransform;
use hstc::tensor::{
    cp_inner_product, cp_inner_product_via, devectorize, fold, khatri_rao, kronecker, matricize, vec_index,
    vectorize,
};
use hstc::train::softmax;
use hstc::{CpFactors, DenseTensor};
use ndarray::Array2;
use proptest::prelude::*;

fn shape_strategy(max_modes: usize, max_dim: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1..=max_dim, 1..=max_modes)
}

fn tensor_strategy(max_modes: usize, max_dim: usize) -> impl Strategy<Value = DenseTensor> {
    shape_strategy(max_modes, max_dim).prop_flat_map(|shape| {
        let len: usize = shape.iter().product();
        prop::collection::vec(-2.0..2.0f64, len).prop_map(move |data| DenseTensor::new(shape.clone(), data).unwrap())
    })
}

fn matrix_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Array2<f64>> {
    prop::collection::vec(-2.0..2.0f64, rows * cols)
        .prop_map(move |v| Array2::from_shape_vec((rows, cols), v).unwrap())
}

fn factors_strategy(shape: Vec<usize>, rank: usize) -> impl Strategy<Value = CpFactors> {
    shape
        .into_iter()
        .map(|p| matrix_strategy(p, rank))
        .collect::<Vec<_>>()
        .prop_map(|f| CpFactors::new(f).unwrap())
}

/// A tensor together with rank-`rank` factors of matching shape.
fn instance(max_modes: usize, max_dim: usize, rank: usize) -> impl Strategy<Value = (CpFactors, DenseTensor)> {
    shape_strategy(max_modes, max_dim).prop_flat_map(move |shape| {
        let len: usize = shape.iter().product();
        let x = prop::collection::vec(-2.0..2.0f64, len);
        (factors_strategy(shape.clone(), rank), x)
            .prop_map(move |(f, x)| (f, DenseTensor::new(shape.clone(), x).unwrap()))
    })
}

fn kron_vec(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

proptest! {
    #[test]
    fn vectorize_round_trips(t in tensor_strategy(4, 5)) {
        let v = vectorize(&t);
        prop_assert_eq!(devectorize(t.shape(), v).unwrap(), t);
    }

    #[test]
    fn fold_inverts_matricize(t in tensor_strategy(4, 4), mode in 0usize..4) {
        let mode = mode % t.ndim();
        let m = matricize(&t, mode).unwrap();
        prop_assert_eq!(m.nrows(), t.shape()[mode]);
        prop_assert_eq!(fold(&m, mode, t.shape()).unwrap(), t);
    }

    #[test]
    fn vec_index_is_one_based_storage_offset(t in tensor_strategy(4, 5), pick in any::<prop::sample::Index>()) {
        let offset = pick.index(t.len());
        let multi: Vec<usize> = t.multi_index(offset).into_iter().map(|i| i + 1).collect();
        prop_assert_eq!(vec_index(&multi, t.shape()).unwrap(), offset + 1);
    }

    #[test]
    fn kronecker_matches_ndarray(a in matrix_strategy(2, 3), b in matrix_strategy(3, 2)) {
        let ours = kronecker(&a, &b);
        let theirs = ndarray::linalg::kron(&a, &b);
        prop_assert_eq!(ours, theirs);
    }

    #[test]
    fn kronecker_mixed_product(a in matrix_strategy(2, 3), b in matrix_strategy(2, 2), c in matrix_strategy(3, 2), d in matrix_strategy(2, 3)) {
        let lhs = kronecker(&a, &b).dot(&kronecker(&c, &d));
        let rhs = kronecker(&a.dot(&c), &b.dot(&d));
        for (x, y) in lhs.iter().zip(rhs.iter()) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn khatri_rao_columns_are_kronecker_products(a in matrix_strategy(3, 2), b in matrix_strategy(4, 2)) {
        let kr = khatri_rao(&a, &b).unwrap();
        for j in 0..2 {
            let col = kron_vec(&a.column(j).to_vec(), &b.column(j).to_vec());
            prop_assert_eq!(kr.column(j).to_vec(), col);
        }
    }

    #[test]
    fn cp_inner_product_is_mode_independent((f, x) in instance(4, 4, 2)) {
        for k in 0..2 {
            let v = cp_inner_product(&f, k, &x).unwrap();
            let mut kron = vec![1.0];
            for l in (0..f.ndim()).rev() {
                kron = kron_vec(&kron, &f.column(l, k));
            }
            let naive: f64 = kron.iter().zip(x.as_slice()).map(|(a, b)| a * b).sum();
            prop_assert!((v - naive).abs() <= 1e-10 * naive.abs().max(1.0));
            for l in 0..f.ndim() {
                let w = cp_inner_product_via(&f, k, &x, l).unwrap();
                prop_assert!((v - w).abs() <= 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn rescaling_keeps_probabilities((f, x) in instance(3, 4, 3), balance in any::<bool>()) {
        let shape = f.shape();
        let m = TensorLrModel::new(f.clone(), shape.clone(), InputTransform::default()).unwrap();
        let mut g = f;
        if balance { g.balance_columns() } else { g.normalize_columns() }
        let n = TensorLrModel::new(g, shape, InputTransform::default()).unwrap();
        let (p, q) = (m.predict_proba(&x).unwrap(), n.predict_proba(&x).unwrap());
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_are_normalized((f, x) in instance(3, 4, 4), scale in 0.1..300.0f64) {
        let mut x = x;
        x.as_mut_slice().iter_mut().for_each(|v| *v *= scale);
        let m = TensorLrModel::new(f.clone(), f.shape(), InputTransform::default()).unwrap();
        let p = m.predict_proba(&x).unwrap();
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn softmax_is_shift_invariant(z in prop::collection::vec(-50.0..50.0f64, 2..8), c in -100.0..100.0f64) {
        let shifted: Vec<f64> = z.iter().map(|v| v + c).collect();
        let (p, q) = (softmax(&z), softmax(&shifted));
        for (a, b) in p.iter().zip(&q) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert_eq!(hstc::train::argmax(&p), hstc::train::argmax(&q));
    }

    #[test]
    fn sigmoid_symmetry(x in -700.0..700.0f64) {
        prop_assert!((sigmoid(x) + sigmoid(-x) - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn rank1_fnn_matches_kronecker_expanded_dense((f, x) in instance(3, 3, 4), v in matrix_strategy(4, 3)) {
        let shape = f.shape();
        let rows: Vec<f64> = (0..4)
            .flat_map(|i| {
                let mut kron = vec![1.0];
                for l in (0..f.ndim()).rev() {
                    kron = kron_vec(&kron, &f.column(l, i));
                }
                kron
            })
            .collect();
        let p: usize = shape.iter().product();
        let dense = DenseFnnModel::new(Array2::from_shape_vec((4, p), rows).unwrap(), v.clone(), shape.clone(), InputTransform::default()).unwrap();
        let r1 = Rank1FnnModel::new(f, v, shape, InputTransform::default()).unwrap();
        let (a, b) = (r1.forward(&x).unwrap(), dense.forward(&x).unwrap());
        for (u, w) in a.iter().zip(&b) {
            prop_assert!((u - w).abs() < 1e-10);
        }
        let u = r1.hidden_activations(&x).unwrap();
        for l in 0..x.ndim() {
            let via = r1.hidden_activations_via(&x, l).unwrap();
            for (p, q) in u.iter().zip(&via) {
                prop_assert!((p - q).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn band_ranking_scale_invariant(scores in prop::collection::vec(0.0..5.0f64, 1..20), c in 0.01..100.0f64) {
        let r = BandRanking::from_scores(scores.clone(), "t");
        let s = BandRanking::from_scores(scores.iter().map(|v| v * c).collect(), "t");
        prop_assert_eq!(&r.order, &s.order);
        let set: BTreeSet<usize> = r.order.iter().copied().collect();
        prop_assert_eq!(set.len(), scores.len());
        for w in r.order.windows(2) {
            prop_assert!(scores[w[0]] >= scores[w[1]]);
        }
    }

    #[test]
    fn full_band_selection_is_invertible(t in tensor_strategy(3, 4), seed in any::<u64>()) {
        let bands = *t.shape().last().unwrap();
        let scores: Vec<f64> = (0..bands).map(|b| ((b as u64 * 7919 + seed) % 13) as f64).collect();
        let r = BandRanking::from_scores(scores, "t");
        let sel = select_bands(&t, &r, bands).unwrap();
        let plane = t.len() / bands;
        let mut back = vec![0.0; t.len()];
        for (rank, &b) in r.order.iter().enumerate() {
            back[b * plane..(b + 1) * plane].copy_from_slice(&sel.as_slice()[rank * plane..(rank + 1) * plane]);
        }
        prop_assert_eq!(back.as_slice(), t.as_slice());
    }

    #[test]
    fn patches_are_centred_and_interior_unpadded(h in 1usize..9, w in 1usize..9, r in 0usize..9, c in 0usize..9, half in 0usize..3) {
        let (r, c) = (r % h, c % w);
        let window = 2 * half + 1;
        let cube = HyperCube::from_fn(h, w, 2, |i| 1.0 + (i[0] * 10 + i[1]) as f64 + 0.5 * i[2] as f64);
        let p = extract_patch(&cube, r, c, window).unwrap();
        for b in 0..2 {
            prop_assert_eq!(p.get(&[half, half, b]), cube.get(r, c, b));
        }
        let interior = r >= half && c >= half && r + half < h && c + half < w;
        if interior {
            prop_assert!(p.as_slice().iter().all(|&v| v != 0.0));
        }
    }

    #[test]
    fn split_is_disjoint_and_complete(ids in prop::collection::vec(0u16..4, 30..80), n in 1usize..12, seed in any::<u64>()) {
        let width = 10;
        let height = ids.len() / width;
        let ids = ids[..height * width].to_vec();
        prop_assume!(ids.iter().any(|&i| i > 0));
        let labels = LabelMap::new(height, width, ids).unwrap();
        let plan = split_pixels(&labels, n, seed).unwrap();
        let train: BTreeSet<_> = plan.train.iter().map(|p| (p.row, p.col)).collect();
        let test: BTreeSet<_> = plan.test.iter().map(|p| (p.row, p.col)).collect();
        prop_assert!(train.is_disjoint(&test));
        let all: BTreeSet<_> = labels.labeled_pixels().map(|p| (p.row, p.col)).collect();
        prop_assert_eq!(train.union(&test).copied().collect::<BTreeSet<_>>(), all);
        prop_assert_eq!(split_pixels(&labels, n, seed).unwrap(), plan);
    }

    #[test]
    fn model_file_round_trip((f, x) in instance(3, 3, 3), augment in any::<bool>()) {
        let shape = f.shape();
        let t = InputTransform { scaling: None, augment_ones: augment };
        let weights = if augment {
            let mut fs = f.factors().to_vec();
            let last = fs.len() - 1;
            let extra = Array2::from_elem((1, 3), 0.25);
            fs[last] = ndarray::concatenate![ndarray::Axis(0), fs[last].view(), extra.view()];
            CpFactors::new(fs).unwrap()
        } else {
            f
        };
        let file = ModelFile::new(Model::TensorLr(TensorLrModel::new(weights, shape, t).unwrap()));
        let back = ModelFile::from_json(&file.to_json()).unwrap();
        let (p, q) = (file.model.predict_proba(&x).unwrap(), back.model.predict_proba(&x).unwrap());
        for (a, b) in p.iter().zip(&q) {
            assert_abs_diff_eq!(*a, *b, epsilon = 1e-12);
        }
    }
}
