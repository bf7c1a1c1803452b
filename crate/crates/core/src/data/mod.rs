//! Hyperspectral cubes, label maps, patch datasets and the per-class split.

mod cube_file;
mod model_file;

pub use cube_file::{cube_paths, load_cube, load_labels, save_cube, save_labels, CubeHeader, CUBE_MAGIC};
pub use model_file::{load_model, save_model, Model, ModelFile, Provenance, MODEL_FORMAT_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

/// An `H × W × B` image cube. Mode 1 is the row, mode 2 the column and
/// mode 3 the spectral band.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    values: DenseTensor,
}

impl HyperCube {
    pub fn new(values: DenseTensor) -> Result<Self> {
        if values.ndim() != 3 {
            return Err(Error::Shape(format!(
                "a cube has 3 modes, got shape {:?}",
                values.shape()
            )));
        }
        if !values.is_finite() {
            return Err(Error::Input("cube contains non-finite values".into()));
        }
        Ok(Self { values })
    }

    pub fn from_fn(height: usize, width: usize, bands: usize, f: impl FnMut(&[usize]) -> f64) -> Self {
        Self {
            values: DenseTensor::from_fn(&[height, width, bands], f),
        }
    }

    pub fn height(&self) -> usize {
        self.values.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.values.shape()[1]
    }

    pub fn bands(&self) -> usize {
        self.values.shape()[2]
    }

    pub fn values(&self) -> &DenseTensor {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize, band: usize) -> f64 {
        self.values.get(&[row, col, band])
    }
}

/// Class ids per pixel, row-major; 0 marks an unlabeled pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    ids: Vec<u16>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize, ids: Vec<u16>) -> Result<Self> {
        if ids.len() != height * width {
            return Err(Error::Shape(format!(
                "{} label ids for a {}x{} image",
                ids.len(),
                height,
                width
            )));
        }
        Ok(Self { height, width, ids })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn get(&self, row: usize, col: usize) -> u16 {
        self.ids[row * self.width + col]
    }

    pub fn ids(&self) -> &[u16] {
        &self.ids
    }

    /// Largest class id present.
    pub fn num_classes(&self) -> usize {
        self.ids.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn labeled_pixels(&self) -> impl Iterator<Item = Pixel> + '_ {
        self.ids.iter().enumerate().filter(|(_, &id)| id > 0).map(|(i, &id)| Pixel {
            row: i / self.width,
            col: i % self.width,
            class: id as usize,
        })
    }

    fn check_matches(&self, cube: &HyperCube) -> Result<()> {
        if (self.height, self.width) != (cube.height(), cube.width()) {
            return Err(Error::Shape(format!(
                "label map is {}x{} but the cube is {}x{}",
                self.height,
                self.width,
                cube.height(),
                cube.width()
            )));
        }
        Ok(())
    }
}

/// A labeled pixel; `class` is the one-based id from the label map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
    pub class: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Split {
    Train,
    Test,
    #[default]
    Unspecified,
}

/// Labeled tensor samples of a common shape with one-hot targets over
/// `num_classes` classes. Labels are stored as zero-based class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchDataset {
    shape: Vec<usize>,
    num_classes: usize,
    patches: Vec<DenseTensor>,
    labels: Vec<usize>,
    pixels: Vec<Option<(usize, usize)>>,
    split: Split,
}

impl PatchDataset {
    pub fn new(
        shape: Vec<usize>,
        num_classes: usize,
        patches: Vec<DenseTensor>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        if num_classes == 0 {
            return Err(Error::Input("a dataset needs at least one class".into()));
        }
        if patches.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} patches but {} labels",
                patches.len(),
                labels.len()
            )));
        }
        if let Some(i) = patches.iter().position(|p| p.shape() != shape.as_slice()) {
            return Err(Error::Shape(format!(
                "patch {} has shape {:?}, expected {:?}",
                i,
                patches[i].shape(),
                shape
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::Input(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        let pixels = vec![None; patches.len()];
        Ok(Self {
            shape,
            num_classes,
            patches,
            labels,
            pixels,
            split: Split::Unspecified,
        })
    }

    /// Extracts one `s × s × B` patch per pixel; pixel class ids become
    /// zero-based labels.
    pub fn from_pixels(
        cube: &HyperCube,
        num_classes: usize,
        pixels: &[Pixel],
        window: usize,
        split: Split,
    ) -> Result<Self> {
        let shape = vec![window, window, cube.bands()];
        let mut patches = Vec::with_capacity(pixels.len());
        let mut labels = Vec::with_capacity(pixels.len());
        for p in pixels {
            if p.class == 0 || p.class > num_classes {
                return Err(Error::Input(format!(
                    "pixel ({}, {}) has class id {} outside 1..={}",
                    p.row, p.col, p.class, num_classes
                )));
            }
            patches.push(extract_patch(cube, p.row, p.col, window)?);
            labels.push(p.class - 1);
        }
        let mut ds = Self::new(shape, num_classes, patches, labels)?;
        ds.pixels = pixels.iter().map(|p| Some((p.row, p.col))).collect();
        ds.split = split;
        Ok(ds)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn patches(&self) -> &[DenseTensor] {
        &self.patches
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn patch(&self, i: usize) -> &DenseTensor {
        &self.patches[i]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// One-hot target vector of sample `i`.
    pub fn target(&self, i: usize) -> Vec<f64> {
        let mut t = vec![0.0; self.num_classes];
        t[self.labels[i]] = 1.0;
        t
    }

    pub fn pixels(&self) -> &[Option<(usize, usize)>] {
        &self.pixels
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn with_split(mut self, split: Split) -> Self {
        self.split = split;
        self
    }

    /// Number of distinct classes that actually occur.
    pub fn classes_present(&self) -> usize {
        let mut seen = vec![false; self.num_classes];
        for &l in &self.labels {
            seen[l] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Applies `f` to every patch, keeping labels and metadata.
    pub fn map_patches(&self, mut f: impl FnMut(&DenseTensor) -> Result<DenseTensor>) -> Result<Self> {
        let patches = self.patches.iter().map(&mut f).collect::<Result<Vec<_>>>()?;
        let shape = match patches.first() {
            Some(p) => p.shape().to_vec(),
            None => self.shape.clone(),
        };
        let mut ds = Self::new(shape, self.num_classes, patches, self.labels.clone())?;
        ds.pixels = self.pixels.clone();
        ds.split = self.split;
        Ok(ds)
    }

    /// The samples at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            shape: self.shape.clone(),
            num_classes: self.num_classes,
            patches: indices.iter().map(|&i| self.patches[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            pixels: indices.iter().map(|&i| self.pixels[i]).collect(),
            split: self.split,
        }
    }
}

/// The `s × s × B` window centred at `(row, col)`; positions outside the
/// image are zero.
pub fn extract_patch(cube: &HyperCube, row: usize, col: usize, window: usize) -> Result<DenseTensor> {
    if window == 0 || window.is_multiple_of(2) {
        return Err(Error::Config(format!(
            "patch size must be a positive odd number, got {window}"
        )));
    }
    if row >= cube.height() {
        return Err(Error::Bounds {
            mode: 1,
            index: row + 1,
            extent: cube.height(),
        });
    }
    if col >= cube.width() {
        return Err(Error::Bounds {
            mode: 2,
            index: col + 1,
            extent: cube.width(),
        });
    }
    let half = (window / 2) as isize;
    let (h, w) = (cube.height() as isize, cube.width() as isize);
    Ok(DenseTensor::from_fn(&[window, window, cube.bands()], |i| {
        let r = row as isize + i[0] as isize - half;
        let c = col as isize + i[1] as isize - half;
        if r < 0 || c < 0 || r >= h || c >= w {
            0.0
        } else {
            cube.get(r as usize, c as usize, i[2])
        }
    }))
}

/// Training and test pixels of a per-class split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitPlan {
    pub num_classes: usize,
    pub train: Vec<Pixel>,
    pub test: Vec<Pixel>,
}

/// Number of training samples drawn from a class with `available` labeled
/// pixels: `n_per_class` when the class is large enough, otherwise half of
/// the class (rounded down).
pub fn train_count(available: usize, n_per_class: usize) -> usize {
    if available < n_per_class {
        available / 2
    } else {
        n_per_class
    }
}

/// Draws the training pixels of every class uniformly without replacement
/// (partial Fisher-Yates over the class's pixels in row-major order, one
/// `ChaCha8Rng` seeded from `seed` shared across classes in ascending class
/// order). Every other labeled pixel goes to the test set.
pub fn split_pixels(labels: &LabelMap, n_per_class: usize, seed: u64) -> Result<SplitPlan> {
    if n_per_class == 0 {
        return Err(Error::Config("samples per class must be at least 1".into()));
    }
    let num_classes = labels.num_classes();
    let mut by_class: Vec<Vec<Pixel>> = vec![Vec::new(); num_classes];
    for p in labels.labeled_pixels() {
        by_class[p.class - 1].push(p);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (c, mut pixels) in by_class.into_iter().enumerate() {
        if pixels.is_empty() {
            log::warn!("class {} has no labeled pixels and is skipped", c + 1);
            continue;
        }
        let k = train_count(pixels.len(), n_per_class);
        for i in 0..k {
            let j = rng.random_range(i..pixels.len());
            pixels.swap(i, j);
        }
        let mut chosen = pixels[..k].to_vec();
        let mut rest = pixels[k..].to_vec();
        chosen.sort_unstable_by_key(|p| (p.row, p.col));
        rest.sort_unstable_by_key(|p| (p.row, p.col));
        train.extend(chosen);
        test.extend(rest);
    }
    Ok(SplitPlan {
        num_classes,
        train,
        test,
    })
}

/// Splits the labeled pixels per class and extracts `window`-sized patches
/// for both sides.
pub fn split_per_class(
    cube: &HyperCube,
    labels: &LabelMap,
    n_per_class: usize,
    seed: u64,
    window: usize,
) -> Result<(PatchDataset, PatchDataset)> {
    labels.check_matches(cube)?;
    let plan = split_pixels(labels, n_per_class, seed)?;
    let train = PatchDataset::from_pixels(cube, plan.num_classes, &plan.train, window, Split::Train)?;
    let test = PatchDataset::from_pixels(cube, plan.num_classes, &plan.test, window, Split::Test)?;
    Ok((train, test))
}

/// Checks that a label map fits a cube.
pub fn check_labels(cube: &HyperCube, labels: &LabelMap) -> Result<()> {
    labels.check_matches(cube)
}
