//! Seeded generators for planted-signal problems with known answers.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::{HyperCube, LabelMap, PatchDataset};
use crate::error::{Error, Result};
use crate::tensor::{cp_inner_product, outer_product, CpFactors, DenseTensor};

fn gaussian_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> DenseTensor {
    DenseTensor::from_fn(shape, |_| rng.sample(StandardNormal))
}

fn unit_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// Random rank-1 components with unit-norm columns, one per class.
pub fn random_unit_factors(rng: &mut ChaCha8Rng, shape: &[usize], rank: usize) -> CpFactors {
    let factors = shape
        .iter()
        .map(|&p| {
            let mut m = Array2::zeros((p, rank));
            for k in 0..rank {
                for (r, v) in unit_vector(rng, p).into_iter().enumerate() {
                    m[[r, k]] = v;
                }
            }
            m
        })
        .collect();
    CpFactors::new(factors).expect("shapes are consistent")
}

/// Class-conditional Gaussian samples `X = signal · M_y + E` where each
/// class mean `M_k` is a planted rank-1 tensor of unit Frobenius norm and
/// `E` has i.i.d. standard normal entries. Classes are drawn uniformly.
///
/// The training set holds exactly `train_per_class` samples of each class;
/// the test set is `test` draws with uniformly random classes.
#[derive(Debug, Clone)]
pub struct PlantedRank1 {
    pub truth: CpFactors,
    pub train: PatchDataset,
    pub test: PatchDataset,
}

pub fn planted_rank1(
    shape: &[usize],
    classes: usize,
    signal: f64,
    train_per_class: usize,
    test: usize,
    seed: u64,
) -> Result<PlantedRank1> {
    if classes < 2 {
        return Err(Error::Config("a planted problem needs at least 2 classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let truth = random_unit_factors(&mut rng, shape, classes);
    let means: Vec<DenseTensor> = (0..classes)
        .map(|k| outer_product(&truth.component(k)).expect("non-empty shape"))
        .collect();
    let sample = |rng: &mut ChaCha8Rng, y: usize| {
        let mut x = gaussian_tensor(rng, shape);
        for (v, m) in x.as_mut_slice().iter_mut().zip(means[y].as_slice()) {
            *v += signal * m;
        }
        x
    };

    let ys: Vec<usize> = (0..classes * train_per_class).map(|i| i % classes).collect();
    let xs = ys.iter().map(|&y| sample(&mut rng, y)).collect();
    let train = PatchDataset::new(shape.to_vec(), classes, xs, ys)?;
    let ys: Vec<usize> = (0..test).map(|_| rng.random_range(0..classes)).collect();
    let xs = ys.iter().map(|&y| sample(&mut rng, y)).collect();
    let test = PatchDataset::new(shape.to_vec(), classes, xs, ys)?;
    Ok(PlantedRank1 { truth, train, test })
}

/// Two-class parity task. Two planted rank-1 tensors `A`, `B` share every
/// factor except the last, whose columns are orthonormal. A sample is
/// `X = z_a A + z_b B + noise · E` with `z_a, z_b` and the entries of `E`
/// standard normal; with `s_a = ⟨A, X⟩` and `s_b = ⟨B, X⟩` the class is
/// `[s_a > 0] xor [s_b > 0]`. Samples with `min(|s_a|, |s_b|) < margin` are
/// rejected.
///
/// No linear function of `X` does better than chance on this task, while
/// rank-1 hidden units can form any combination `α s_a + β s_b`.
#[derive(Debug, Clone)]
pub struct ParityTask {
    /// Columns 0 and 1 are the two planted projections.
    pub truth: CpFactors,
    pub train: PatchDataset,
    pub test: PatchDataset,
}

pub fn parity_task(
    shape: &[usize],
    noise: f64,
    margin: f64,
    train_per_class: usize,
    test: usize,
    seed: u64,
) -> Result<ParityTask> {
    let last = *shape.last().ok_or_else(|| Error::Shape("empty shape".into()))?;
    if last < 2 {
        return Err(Error::Shape("the last mode needs at least 2 entries".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shared = random_unit_factors(&mut rng, &shape[..shape.len() - 1], 1);
    let a = unit_vector(&mut rng, last);
    let mut b = unit_vector(&mut rng, last);
    let ab: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    b.iter_mut().zip(&a).for_each(|(y, x)| *y -= ab * x);
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    b.iter_mut().for_each(|y| *y /= nb);

    let mut factors: Vec<Array2<f64>> = shared
        .factors()
        .iter()
        .map(|f| ndarray::concatenate![ndarray::Axis(1), f.view(), f.view()])
        .collect();
    let mut spectral = Array2::zeros((last, 2));
    for r in 0..last {
        spectral[[r, 0]] = a[r];
        spectral[[r, 1]] = b[r];
    }
    factors.push(spectral);
    let truth = CpFactors::new(factors)?;

    let planted_a = outer_product(&truth.component(0))?;
    let planted_b = outer_product(&truth.component(1))?;
    let draw = |rng: &mut ChaCha8Rng| loop {
        let za: f64 = rng.sample(StandardNormal);
        let zb: f64 = rng.sample(StandardNormal);
        let mut x = gaussian_tensor(rng, shape);
        for ((v, a), b) in x.as_mut_slice().iter_mut().zip(planted_a.as_slice()).zip(planted_b.as_slice()) {
            *v = noise * *v + za * a + zb * b;
        }
        let sa = cp_inner_product(&truth, 0, &x).expect("shape matches");
        let sb = cp_inner_product(&truth, 1, &x).expect("shape matches");
        if sa.abs().min(sb.abs()) >= margin {
            return (x, usize::from((sa > 0.0) != (sb > 0.0)));
        }
    };

    let mut counts = [0; 2];
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    while xs.len() < 2 * train_per_class {
        let (x, y) = draw(&mut rng);
        if counts[y] < train_per_class {
            counts[y] += 1;
            xs.push(x);
            ys.push(y);
        }
    }
    let train = PatchDataset::new(shape.to_vec(), 2, xs, ys)?;
    let (xs, ys): (Vec<_>, Vec<_>) = (0..test).map(|_| draw(&mut rng)).unzip();
    let test = PatchDataset::new(shape.to_vec(), 2, xs, ys)?;
    Ok(ParityTask { truth, train, test })
}

/// A labeled cube in which only `informative` bands (zero-based) depend
/// on the class.
///
/// The label map is made of `block × block` squares, each with a uniformly
/// drawn class in `1..=classes`. Every informative band carries a
/// class-specific mean of magnitude up to `signal` plus unit Gaussian
/// noise; every other band is unit Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct BandCubeSpec {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub classes: usize,
    pub informative: Vec<usize>,
    pub block: usize,
    pub signal: f64,
}

impl Default for BandCubeSpec {
    fn default() -> Self {
        Self {
            height: 40,
            width: 40,
            bands: 16,
            classes: 3,
            informative: vec![1, 4],
            block: 4,
            signal: 2.0,
        }
    }
}

pub fn planted_band_cube(spec: &BandCubeSpec, seed: u64) -> Result<(HyperCube, LabelMap)> {
    if spec.classes < 2 || spec.classes > u16::MAX as usize {
        return Err(Error::Config("classes must lie in 2..=65535".into()));
    }
    if spec.block == 0 || spec.height == 0 || spec.width == 0 {
        return Err(Error::Config("cube and block sizes must be positive".into()));
    }
    if let Some(&b) = spec.informative.iter().find(|&&b| b >= spec.bands) {
        return Err(Error::Bounds {
            mode: 3,
            index: b + 1,
            extent: spec.bands,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Class means spread evenly on a circle in the informative subspace
    // (first two informative bands), further informative bands alternate.
    let means: Vec<Vec<f64>> = (0..spec.classes)
        .map(|c| {
            let theta = 2.0 * std::f64::consts::PI * c as f64 / spec.classes as f64;
            (0..spec.informative.len())
                .map(|j| spec.signal * if j % 2 == 0 { theta.cos() } else { theta.sin() })
                .collect()
        })
        .collect();

    let (bh, bw) = (spec.height.div_ceil(spec.block), spec.width.div_ceil(spec.block));
    let block_class: Vec<u16> = (0..bh * bw)
        .map(|_| rng.random_range(1..=spec.classes as u16))
        .collect();
    let ids: Vec<u16> = (0..spec.height * spec.width)
        .map(|i| {
            let (r, c) = (i / spec.width, i % spec.width);
            block_class[(r / spec.block) * bw + c / spec.block]
        })
        .collect();
    let labels = LabelMap::new(spec.height, spec.width, ids)?;

    let mut cube = DenseTensor::zeros(&[spec.height, spec.width, spec.bands]);
    for b in 0..spec.bands {
        let slot = spec.informative.iter().position(|&i| i == b);
        for r in 0..spec.height {
            for c in 0..spec.width {
                let noise: f64 = rng.sample(StandardNormal);
                let mean = match slot {
                    Some(j) => means[labels.get(r, c) as usize - 1][j],
                    None => 0.0,
                };
                cube.set(&[r, c, b], mean + noise);
            }
        }
    }
    Ok((HyperCube::new(cube)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_rank1_is_balanced_and_seeded() {
        let p = planted_rank1(&[3, 3, 4], 3, 2.0, 7, 20, 5).unwrap();
        assert_eq!(p.train.len(), 21);
        for c in 0..3 {
            assert_eq!(p.train.labels().iter().filter(|&&l| l == c).count(), 7);
        }
        assert_eq!(p.test.len(), 20);
        let q = planted_rank1(&[3, 3, 4], 3, 2.0, 7, 20, 5).unwrap();
        assert_eq!(p.train, q.train);
        assert_eq!(p.test, q.test);
    }

    #[test]
    fn parity_labels_follow_the_projections() {
        let t = parity_task(&[3, 3, 5], 1.0, 0.2, 10, 30, 1).unwrap();
        let spectral = t.truth.factor(2);
        let dot: f64 = spectral.column(0).dot(&spectral.column(1));
        assert!(dot.abs() < 1e-12);
        for i in 0..t.test.len() {
            let x = t.test.patch(i);
            let sa = cp_inner_product(&t.truth, 0, x).unwrap();
            let sb = cp_inner_product(&t.truth, 1, x).unwrap();
            assert!(sa.abs() >= 0.2 && sb.abs() >= 0.2);
            assert_eq!(t.test.label(i), usize::from((sa > 0.0) != (sb > 0.0)));
        }
    }

    #[test]
    fn band_cube_noise_bands_ignore_class() {
        let spec = BandCubeSpec::default();
        let (cube, labels) = planted_band_cube(&spec, 3).unwrap();
        assert_eq!(cube.bands(), 16);
        assert_eq!(labels.num_classes(), 3);
        let class_mean = |band: usize, class: u16| {
            let (mut s, mut n) = (0.0, 0.0);
            for r in 0..spec.height {
                for c in 0..spec.width {
                    if labels.get(r, c) == class {
                        s += cube.get(r, c, band);
                        n += 1.0;
                    }
                }
            }
            s / n
        };
        assert!((class_mean(1, 1) - 2.0).abs() < 0.3);
        assert!(class_mean(0, 1).abs() < 0.3);
    }
}
